// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_IMPORTANCE_HPP
#define OICSR_IMPORTANCE_HPP

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "oicsr/model.hpp"
#include "oicsr/regularizers.hpp"

namespace oicsr {

enum class Criterion { out_channel, out_in_channel, scale_magnitude };

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view text);
/// The scoring rule that goes with a regularizer: out-channel energy for l2
/// and separated_gl, out-in-channel energy for oicsr_gl, |gamma| for l1_scale.
Criterion default_criterion(RegularizerKind kind);

struct OutInChannelGroup {
  std::size_t pair_id = 0;
  std::size_t channel = 0;
  double energy = 0.0;

  friend bool operator==(const OutInChannelGroup&, const OutInChannelGroup&) = default;
};

double energy_out_channel(const Model& model, std::size_t pair_id, std::size_t channel);
double energy_out_in_channel(const Model& model, std::size_t pair_id, std::size_t channel);

/// One entry per (pair, channel), in (pair, channel) order.
std::vector<OutInChannelGroup> score_all(const Model& model, Criterion criterion);

/// Ascending energy; ties broken by ascending (pair_id, channel).
void sort_by_energy(std::vector<OutInChannelGroup>& groups);

/// Smallest number of groups whose energies add up to at least `fraction`
/// of the total.
std::size_t groups_holding_fraction(std::vector<double> energies, double fraction);

/// CSV: pair_id,out_layer,in_layer,channel,energy
void write_energy_csv(std::ostream& os, const Model& model, const std::vector<OutInChannelGroup>& groups);

}  // namespace oicsr

#endif  // OICSR_IMPORTANCE_HPP
