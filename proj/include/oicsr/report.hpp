// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_REPORT_HPP
#define OICSR_REPORT_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace oicsr {

/// One row of prune_report.csv. Iteration 0 describes the unpruned model.
struct PruneReportRow {
  std::size_t iteration = 0;
  double target_ratio = 0.0;
  double achieved_ratio = 0.0;
  std::vector<std::size_t> capped_pairs;
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
  double accuracy_before_fine_tune = 0.0;
  double accuracy_after_fine_tune = 0.0;
};

/// Columns: iteration,target_ratio,achieved_ratio,capped_pairs,flops,params,
/// acc_before_ft,acc_after_ft. capped_pairs is ';'-separated.
void write_prune_report_header(std::ostream& os);
void write_prune_report_row(std::ostream& os, const PruneReportRow& row);
std::vector<PruneReportRow> read_prune_report(std::istream& is);

/// Energies as written by write_energy_csv (last column).
std::vector<double> read_energy_column(std::istream& is);

inline constexpr std::size_t kHistogramBins = 10;

struct SeriesReport {
  std::string name;
  std::vector<PruneReportRow> rows;
  std::vector<double> energies;
  /// Counts of energy / max energy over kHistogramBins equal bins of [0, 1].
  std::vector<std::size_t> histogram;
};

struct Report {
  std::vector<SeriesReport> series;
};

/// Reads prune_report.csv and energy.csv from every run directory. All
/// missing files are listed in one DataError.
Report build_report(const std::vector<std::filesystem::path>& runs);

std::vector<std::size_t> energy_histogram(const std::vector<double>& energies, std::size_t bins = kHistogramBins);

/// Columns: series,iteration,pruned_flops_ratio,acc_before_ft,acc_after_ft
void write_curve_csv(std::ostream& os, const Report& report);
/// Columns: series,bin_lo,bin_hi,count
void write_histogram_csv(std::ostream& os, const Report& report);
void write_curve_svg(std::ostream& os, const Report& report);
void write_histogram_svg(std::ostream& os, const Report& report);

}  // namespace oicsr

#endif  // OICSR_REPORT_HPP
