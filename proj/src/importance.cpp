// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/importance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "oicsr/errors.hpp"
#include "oicsr/format.hpp"

namespace oicsr {

std::string_view to_string(Criterion c) {
  switch (c) {
    case Criterion::out_channel: return "out_channel";
    case Criterion::out_in_channel: return "out_in_channel";
    case Criterion::scale_magnitude: return "scale_magnitude";
  }
  return "?";
}

Criterion parse_criterion(std::string_view text) {
  if (text == "out_channel") return Criterion::out_channel;
  if (text == "out_in_channel") return Criterion::out_in_channel;
  if (text == "scale_magnitude") return Criterion::scale_magnitude;
  throw ConfigError("unknown criterion '" + std::string(text) +
                    "' (expected out_channel, out_in_channel or scale_magnitude)");
}

Criterion default_criterion(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::oicsr_gl: return Criterion::out_in_channel;
    case RegularizerKind::l1_scale: return Criterion::scale_magnitude;
    default: return Criterion::out_channel;
  }
}

double energy_out_channel(const Model& model, std::size_t pair_id, std::size_t channel) {
  const auto slice = model.out_channel_slice(pair_id, channel);
  return squared_norm(model.layers()[slice.layer].weight.data(), slice);
}

double energy_out_in_channel(const Model& model, std::size_t pair_id, std::size_t channel) {
  const auto in = model.in_channel_slice(pair_id, channel);
  return energy_out_channel(model, pair_id, channel) + squared_norm(model.layers()[in.layer].weight.data(), in);
}

namespace {

// |gamma| of the first intervening scale_shift, summed over the channel's
// block when the scale_shift sits after a flatten.
double scale_energy(const Model& model, std::size_t pair_id, std::size_t channel) {
  const auto& pair = model.pairs()[pair_id];
  for (auto idx : pair.intervening) {
    const auto& layer = model.layers()[idx];
    if (layer.spec.kind != LayerKind::scale_shift) continue;
    const std::size_t block = layer.gamma.size() / pair.channel_count;
    double acc = 0.0;
    for (std::size_t j = 0; j < block; ++j) acc += std::abs(layer.gamma[channel * block + j]);
    return acc;
  }
  throw ConfigError("scale_magnitude criterion: pair " + std::to_string(pair_id) +
                    " has no scale_shift layer between its conv/dense layers");
}

}  // namespace

std::vector<OutInChannelGroup> score_all(const Model& model, Criterion criterion) {
  std::function<double(std::size_t, std::size_t)> energy;
  switch (criterion) {
    case Criterion::out_channel:
      energy = [&](std::size_t p, std::size_t i) { return energy_out_channel(model, p, i); };
      break;
    case Criterion::out_in_channel:
      energy = [&](std::size_t p, std::size_t i) { return energy_out_in_channel(model, p, i); };
      break;
    case Criterion::scale_magnitude:
      energy = [&](std::size_t p, std::size_t i) { return scale_energy(model, p, i); };
      break;
  }
  std::vector<OutInChannelGroup> out;
  for (std::size_t p = 0; p < model.pairs().size(); ++p) {
    for (std::size_t i = 0; i < model.pairs()[p].channel_count; ++i) out.push_back({p, i, energy(p, i)});
  }
  return out;
}

void sort_by_energy(std::vector<OutInChannelGroup>& groups) {
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    if (a.pair_id != b.pair_id) return a.pair_id < b.pair_id;
    return a.channel < b.channel;
  });
}

std::size_t groups_holding_fraction(std::vector<double> energies, double fraction) {
  std::sort(energies.begin(), energies.end(), std::greater<>());
  double total = 0.0;
  for (double e : energies) total += e;
  if (total <= 0.0) return 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < energies.size(); ++k) {
    acc += energies[k];
    if (acc >= fraction * total) return k + 1;
  }
  return energies.size();
}

void write_energy_csv(std::ostream& os, const Model& model, const std::vector<OutInChannelGroup>& groups) {
  os << "pair_id,out_layer,in_layer,channel,energy\n";
  for (const auto& g : groups) {
    const auto& pair = model.pairs().at(g.pair_id);
    os << g.pair_id << ',' << pair.out_layer << ',' << pair.in_layer << ',' << g.channel << ','
       << format_double(g.energy) << '\n';
  }
}

}  // namespace oicsr
