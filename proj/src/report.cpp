// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "oicsr/errors.hpp"
#include "oicsr/format.hpp"

namespace oicsr {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_prune_report_header(std::ostream& os) {
  os << "iteration,target_ratio,achieved_ratio,capped_pairs,flops,params,acc_before_ft,acc_after_ft\n";
}

void write_prune_report_row(std::ostream& os, const PruneReportRow& row) {
  os << row.iteration << ',' << format_double(row.target_ratio) << ',' << format_double(row.achieved_ratio) << ',';
  for (std::size_t i = 0; i < row.capped_pairs.size(); ++i) os << (i ? ";" : "") << row.capped_pairs[i];
  os << ',' << row.flops << ',' << row.params << ',' << format_double(row.accuracy_before_fine_tune) << ','
     << format_double(row.accuracy_after_fine_tune) << '\n';
}

std::vector<PruneReportRow> read_prune_report(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "iteration,target_ratio,achieved_ratio,capped_pairs,flops,params,acc_before_ft,acc_after_ft") {
    throw DataError("prune report: unexpected header '" + line + "'");
  }
  std::vector<PruneReportRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 8) throw DataError("prune report: expected 8 columns in '" + line + "'");
    try {
      PruneReportRow row;
      row.iteration = std::stoul(cells[0]);
      row.target_ratio = std::stod(cells[1]);
      row.achieved_ratio = std::stod(cells[2]);
      std::stringstream capped(cells[3]);
      std::string item;
      while (std::getline(capped, item, ';')) {
        if (!item.empty()) row.capped_pairs.push_back(std::stoul(item));
      }
      row.flops = std::stoull(cells[4]);
      row.params = std::stoull(cells[5]);
      row.accuracy_before_fine_tune = std::stod(cells[6]);
      row.accuracy_after_fine_tune = std::stod(cells[7]);
      rows.push_back(std::move(row));
    } catch (const std::logic_error&) {
      throw DataError("prune report: malformed number in '" + line + "'");
    }
  }
  return rows;
}

std::vector<double> read_energy_column(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "pair_id,out_layer,in_layer,channel,energy") {
    throw DataError("energy dump: unexpected header '" + line + "'");
  }
  std::vector<double> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 5) throw DataError("energy dump: expected 5 columns in '" + line + "'");
    try {
      out.push_back(std::stod(cells[4]));
    } catch (const std::logic_error&) {
      throw DataError("energy dump: malformed energy in '" + line + "'");
    }
  }
  return out;
}

std::vector<std::size_t> energy_histogram(const std::vector<double>& energies, std::size_t bins) {
  std::vector<std::size_t> counts(bins, 0);
  if (energies.empty()) return counts;
  const double mx = *std::max_element(energies.begin(), energies.end());
  for (double e : energies) {
    std::size_t bin = 0;
    if (mx > 0.0) bin = std::min(bins - 1, static_cast<std::size_t>(e / mx * static_cast<double>(bins)));
    ++counts[bin];
  }
  return counts;
}

Report build_report(const std::vector<std::filesystem::path>& runs) {
  std::vector<std::string> missing;
  for (const auto& dir : runs) {
    for (const char* name : {"prune_report.csv", "energy.csv"}) {
      if (!std::filesystem::is_regular_file(dir / name)) missing.push_back((dir / name).string());
    }
  }
  if (!missing.empty()) {
    std::string msg = "report inputs missing:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw DataError(msg);
  }
  Report report;
  for (const auto& dir : runs) {
    SeriesReport s;
    s.name = std::filesystem::path(dir).lexically_normal().filename().string();
    if (s.name.empty()) s.name = std::filesystem::path(dir).lexically_normal().parent_path().filename().string();
    std::ifstream pr(dir / "prune_report.csv");
    s.rows = read_prune_report(pr);
    std::ifstream en(dir / "energy.csv");
    s.energies = read_energy_column(en);
    s.histogram = energy_histogram(s.energies);
    report.series.push_back(std::move(s));
  }
  return report;
}

void write_curve_csv(std::ostream& os, const Report& report) {
  os << "series,iteration,pruned_flops_ratio,acc_before_ft,acc_after_ft\n";
  for (const auto& s : report.series) {
    for (const auto& r : s.rows) {
      os << s.name << ',' << r.iteration << ',' << format_double(r.achieved_ratio) << ','
         << format_double(r.accuracy_before_fine_tune) << ',' << format_double(r.accuracy_after_fine_tune) << '\n';
    }
  }
}

void write_histogram_csv(std::ostream& os, const Report& report) {
  os << "series,bin_lo,bin_hi,count\n";
  for (const auto& s : report.series) {
    const auto bins = static_cast<double>(s.histogram.size());
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
      os << s.name << ',' << format_double(static_cast<double>(b) / bins) << ','
         << format_double(static_cast<double>(b + 1) / bins) << ',' << s.histogram[b] << '\n';
    }
  }
}

namespace {

constexpr double kWidth = 480, kHeight = 320, kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;

double px(double x) { return kLeft + x * (kWidth - kLeft - kRight); }
double py(double y) { return kHeight - kBottom - y * (kHeight - kTop - kBottom); }

void svg_frame(std::ostream& os, const std::string& title, const std::string& xlabel, const std::string& ylabel,
               double y_max, const std::string& y_fmt_suffix) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title << "</text>\n";
  os << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(0)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0) << "\" y2=\"" << py(1)
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double f = t / 5.0;
    os << "<text x=\"" << fixed(px(f)) << "\" y=\"" << fixed(py(0) + 15) << "\" text-anchor=\"middle\">"
       << fixed(f, 1) << "</text>\n";
    os << "<text x=\"" << fixed(px(0) - 6) << "\" y=\"" << fixed(py(f) + 4) << "\" text-anchor=\"end\">"
       << fixed(f * y_max, y_max >= 10 ? 0 : 2) << y_fmt_suffix << "</text>\n";
  }
  os << "<text x=\"" << fixed(px(0.5)) << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">" << xlabel
     << "</text>\n";
  os << "<text x=\"14\" y=\"" << fixed(py(0.5)) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
     << fixed(py(0.5)) << ")\">" << ylabel << "</text>\n";
}

void svg_legend(std::ostream& os, const Report& report) {
  for (std::size_t i = 0; i < report.series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    const double y = kTop + 14.0 * static_cast<double>(i);
    os << "<rect x=\"" << fixed(kWidth - 140) << "\" y=\"" << fixed(y) << "\" width=\"10\" height=\"10\" fill=\""
       << color << "\"/>\n";
    os << "<text x=\"" << fixed(kWidth - 126) << "\" y=\"" << fixed(y + 9) << "\">" << report.series[i].name
       << "</text>\n";
  }
}

}  // namespace

void write_curve_svg(std::ostream& os, const Report& report) {
  svg_frame(os, "Accuracy before fine-tuning vs pruned FLOPs", "pruned FLOPs ratio", "accuracy", 1.0, "");
  for (std::size_t i = 0; i < report.series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < report.series[i].rows.size(); ++k) {
      const auto& r = report.series[i].rows[k];
      os << (k ? " " : "") << fixed(px(r.achieved_ratio)) << ',' << fixed(py(r.accuracy_before_fine_tune));
    }
    os << "\"/>\n";
    for (const auto& r : report.series[i].rows) {
      os << "<circle cx=\"" << fixed(px(r.achieved_ratio)) << "\" cy=\"" << fixed(py(r.accuracy_before_fine_tune))
         << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
  }
  svg_legend(os, report);
  os << "</svg>\n";
}

void write_histogram_svg(std::ostream& os, const Report& report) {
  std::size_t max_count = 1;
  for (const auto& s : report.series) {
    for (auto c : s.histogram) max_count = std::max(max_count, c);
  }
  svg_frame(os, "Out-in-channel energy distribution", "energy / max energy", "groups",
            static_cast<double>(max_count), "");
  const std::size_t n_series = std::max<std::size_t>(1, report.series.size());
  for (std::size_t i = 0; i < report.series.size(); ++i) {
    const auto& s = report.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    const double bin_w = 1.0 / static_cast<double>(s.histogram.size());
    const double bar_w = bin_w / static_cast<double>(n_series);
    for (std::size_t b = 0; b < s.histogram.size(); ++b) {
      const double x0 = static_cast<double>(b) * bin_w + static_cast<double>(i) * bar_w;
      const double h = static_cast<double>(s.histogram[b]) / static_cast<double>(max_count);
      os << "<rect x=\"" << fixed(px(x0)) << "\" y=\"" << fixed(py(h)) << "\" width=\""
         << fixed(px(x0 + bar_w) - px(x0)) << "\" height=\"" << fixed(py(0) - py(h)) << "\" fill=\"" << color
         << "\"/>\n";
    }
  }
  svg_legend(os, report);
  os << "</svg>\n";
}

}  // namespace oicsr
