// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/pruner.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "oicsr/errors.hpp"
#include "oicsr/format.hpp"

namespace oicsr {

FlopsReport count_flops(const Model& model) {
  const std::vector<std::size_t> none(model.pairs().size(), 0);
  return simulate_flops(model, none);
}

FlopsReport simulate_flops(const Model& model, std::span<const std::size_t> removed) {
  const auto& layers = model.layers();
  const auto& pairs = model.pairs();
  if (removed.size() != pairs.size()) {
    throw InputError("simulate_flops: expected " + std::to_string(pairs.size()) + " removal counts, got " +
                     std::to_string(removed.size()));
  }
  std::vector<std::size_t> out_removed(layers.size(), 0);
  std::vector<std::size_t> in_removed(layers.size(), 0);
  std::vector<std::size_t> state_removed(layers.size(), 0);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& pair = pairs[p];
    if (removed[p] > pair.channel_count) {
      throw InputError("simulate_flops: cannot remove " + std::to_string(removed[p]) + " of " +
                       std::to_string(pair.channel_count) + " channels of pair " + std::to_string(p));
    }
    out_removed[pair.out_layer] += removed[p];
    in_removed[pair.in_layer] += removed[p] * pair.in_multiplicity;
    for (auto idx : pair.intervening) {
      if (layers[idx].spec.kind == LayerKind::scale_shift) {
        state_removed[idx] += removed[p] * (layers[idx].gamma.size() / pair.channel_count);
      }
    }
  }

  FlopsReport report;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& layer = layers[li];
    LayerCost cost{li, 0, 0};
    if (layer.is_weighted()) {
      const std::uint64_t oc = layer.out_channels() - out_removed[li];
      const std::uint64_t ic = layer.in_channels() - in_removed[li];
      std::uint64_t per_output = ic;
      std::uint64_t positions = 1;
      if (layer.spec.kind == LayerKind::conv2d) {
        per_output *= layer.spec.kernel * layer.spec.kernel;
        const auto& out_shape = model.geometry()[li].out_shape;
        positions = out_shape[1] * out_shape[2];
      }
      cost.flops = 2 * oc * per_output * positions;
      cost.params = oc * per_output + (layer.bias.empty() ? 0 : oc);
    } else if (layer.spec.kind == LayerKind::scale_shift) {
      cost.params = 2 * (layer.gamma.size() - state_removed[li]);
    }
    report.total_flops += cost.flops;
    report.total_params += cost.params;
    report.per_layer.push_back(cost);
  }
  return report;
}

std::size_t per_iteration_cap(std::size_t channel_count) { return channel_count / 2; }

namespace {

void check_exhaustive(const Model& model, const std::vector<OutInChannelGroup>& scores) {
  std::vector<std::vector<bool>> seen;
  std::size_t expected = 0;
  for (const auto& pair : model.pairs()) {
    seen.emplace_back(pair.channel_count, false);
    expected += pair.channel_count;
  }
  for (const auto& g : scores) {
    if (g.pair_id >= seen.size() || g.channel >= seen[g.pair_id].size()) {
      throw InputError("score (" + std::to_string(g.pair_id) + ", " + std::to_string(g.channel) +
                       ") does not name a group of this model");
    }
    if (seen[g.pair_id][g.channel]) {
      throw InputError("score (" + std::to_string(g.pair_id) + ", " + std::to_string(g.channel) + ") repeated");
    }
    seen[g.pair_id][g.channel] = true;
  }
  if (scores.size() != expected) {
    throw InputError("scores must cover all " + std::to_string(expected) + " groups, got " +
                     std::to_string(scores.size()));
  }
}

std::vector<std::size_t> channel_counts(const Model& model) {
  std::vector<std::size_t> counts;
  for (const auto& pair : model.pairs()) counts.push_back(pair.channel_count);
  return counts;
}

}  // namespace

PruningPlan select_prune_set(const Model& model, std::vector<OutInChannelGroup> scores, double target_ratio,
                             std::uint64_t original_flops, std::size_t iteration) {
  if (!(target_ratio >= 0.0 && target_ratio < 1.0)) {
    throw InputError("target FLOPs ratio must lie in [0, 1), got " + format_double(target_ratio));
  }
  check_exhaustive(model, scores);
  sort_by_energy(scores);

  PruningPlan plan;
  plan.iteration = iteration;
  plan.target_ratio = target_ratio;
  plan.pair_channel_counts = channel_counts(model);

  std::vector<std::size_t> removed(model.pairs().size(), 0);
  std::vector<bool> capped(model.pairs().size(), false);
  FlopsReport current = simulate_flops(model, removed);
  const double budget = (1.0 - target_ratio) * static_cast<double>(original_flops);

  if (target_ratio > 0.0) {
    for (const auto& group : scores) {
      if (static_cast<double>(current.total_flops) < budget) break;
      const std::size_t cap = per_iteration_cap(model.pairs()[group.pair_id].channel_count);
      if (removed[group.pair_id] >= cap) {
        capped[group.pair_id] = true;
        continue;
      }
      ++removed[group.pair_id];
      plan.removals.push_back(group);
      current = simulate_flops(model, removed);
    }
  }

  for (std::size_t p = 0; p < capped.size(); ++p) {
    if (capped[p]) plan.capped_pairs.push_back(p);
  }
  plan.predicted_flops = current.total_flops;
  plan.predicted_params = current.total_params;
  plan.achieved_flops_ratio =
      original_flops == 0
          ? 0.0
          : std::clamp(1.0 - static_cast<double>(current.total_flops) / static_cast<double>(original_flops), 0.0, 1.0);
  return plan;
}

namespace {

// Keeps the listed indices of axis 1 of `t`, treating axis 1 as `channels`
// blocks of equal size.
Tensor keep_axis_blocks(const Tensor& t, std::size_t axis, std::size_t channels,
                        const std::vector<std::size_t>& keep) {
  const auto& shape = t.shape();
  std::size_t outer = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  const std::size_t axis_len = shape[axis];
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t block = axis_len / channels;  // entries of `axis` per channel
  const std::size_t chunk = block * inner;

  std::vector<double> data;
  data.reserve(outer * keep.size() * chunk);
  for (std::size_t o = 0; o < outer; ++o) {
    const double* base = t.data().data() + o * axis_len * inner;
    for (auto c : keep) data.insert(data.end(), base + c * chunk, base + (c + 1) * chunk);
  }
  Shape new_shape = shape;
  new_shape[axis] = keep.size() * block;
  return Tensor(std::move(new_shape), std::move(data));
}

}  // namespace

Model apply_surgery(const Model& model, const PruningPlan& plan) {
  const auto& pairs = model.pairs();
  if (!plan.pair_channel_counts.empty() && plan.pair_channel_counts != channel_counts(model)) {
    throw SurgeryError("stale plan: it was made for different channel counts than the model has");
  }
  std::vector<std::vector<bool>> drop;
  for (const auto& pair : pairs) drop.emplace_back(pair.channel_count, false);
  for (const auto& g : plan.removals) {
    if (g.pair_id >= pairs.size() || g.channel >= pairs[g.pair_id].channel_count) {
      throw SurgeryError("plan removes (" + std::to_string(g.pair_id) + ", " + std::to_string(g.channel) +
                         ") which does not exist in the model");
    }
    if (drop[g.pair_id][g.channel]) {
      throw SurgeryError("plan removes (" + std::to_string(g.pair_id) + ", " + std::to_string(g.channel) +
                         ") twice");
    }
    drop[g.pair_id][g.channel] = true;
  }

  std::vector<Layer> layers = model.layers();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto& pair = pairs[p];
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < pair.channel_count; ++i) {
      if (!drop[p][i]) keep.push_back(i);
    }
    if (keep.size() == pair.channel_count) continue;
    if (keep.empty()) throw SurgeryError("plan removes every channel of pair " + std::to_string(p));

    auto& out = layers[pair.out_layer];
    out.weight = keep_axis_blocks(out.weight, 0, pair.channel_count, keep);
    if (!out.bias.empty()) out.bias = keep_axis_blocks(out.bias, 0, pair.channel_count, keep);
    auto& in = layers[pair.in_layer];
    in.weight = keep_axis_blocks(in.weight, 1, pair.channel_count, keep);
    for (auto idx : pair.intervening) {
      auto& mid = layers[idx];
      if (mid.spec.kind != LayerKind::scale_shift) continue;
      mid.gamma = keep_axis_blocks(mid.gamma, 0, pair.channel_count, keep);
      mid.beta = keep_axis_blocks(mid.beta, 0, pair.channel_count, keep);
    }
  }
  return Model::from_layers(model.input_shape(), std::move(layers));
}

void zero_groups(Model& model, std::span<const OutInChannelGroup> groups) {
  auto& layers = model.mutable_layers();
  for (const auto& g : groups) {
    const auto& pair = model.pairs().at(g.pair_id);
    const auto out = model.out_channel_slice(g.pair_id, g.channel);
    const auto in = model.in_channel_slice(g.pair_id, g.channel);
    out.for_each_index([&](std::size_t k) { layers[out.layer].weight[k] = 0.0; });
    in.for_each_index([&](std::size_t k) { layers[in.layer].weight[k] = 0.0; });
    if (!layers[pair.out_layer].bias.empty()) layers[pair.out_layer].bias[g.channel] = 0.0;
    for (auto idx : pair.intervening) {
      auto& mid = layers[idx];
      if (mid.spec.kind != LayerKind::scale_shift) continue;
      const std::size_t block = mid.gamma.size() / pair.channel_count;
      for (std::size_t j = 0; j < block; ++j) {
        mid.gamma[g.channel * block + j] = 0.0;
        mid.beta[g.channel * block + j] = 0.0;
      }
    }
  }
}

PruneResult prune_loop(Model model, const PruneSchedule& schedule, const PruneHooks& hooks,
                       std::optional<std::uint64_t> original_flops) {
  double prev = 0.0;
  for (double r : schedule.ratios) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("pruning ratios must lie in [0, 1), got " + format_double(r));
    if (r < prev) throw ConfigError("pruning ratios must be nondecreasing");
    prev = r;
  }
  const std::uint64_t original = original_flops.value_or(count_flops(model).total_flops);

  PruneResult result;
  for (std::size_t t = 0; t < schedule.ratios.size(); ++t) {
    IterationReport report;
    report.plan = select_prune_set(model, score_all(model, schedule.criterion), schedule.ratios[t], original, t + 1);
    if (!report.plan.capped_pairs.empty() && report.plan.achieved_flops_ratio < schedule.ratios[t] && hooks.warn) {
      hooks.warn("iteration " + std::to_string(t + 1) + ": target " + format_double(schedule.ratios[t]) +
                 " unreachable under the per-pair cap, reached " + format_double(report.plan.achieved_flops_ratio));
    }
    model = apply_surgery(model, report.plan);
    report.flops = count_flops(model);
    if (hooks.evaluate) report.accuracy_before_fine_tune = hooks.evaluate(model);
    if (hooks.fine_tune) hooks.fine_tune(model, t + 1);
    report.accuracy_after_fine_tune = hooks.evaluate ? hooks.evaluate(model) : 0.0;
    result.iterations.push_back(std::move(report));
  }
  result.model = std::move(model);
  return result;
}

void write_flops_csv(std::ostream& os, const Model& model, const FlopsReport& report) {
  os << kFlopsConvention << '\n';
  os << "layer,kind,flops,params\n";
  for (const auto& c : report.per_layer) {
    os << c.layer << ',' << to_string(model.layers().at(c.layer).spec.kind) << ',' << c.flops << ',' << c.params
       << '\n';
  }
  os << "total,," << report.total_flops << ',' << report.total_params << '\n';
}

void write_plan_csv(std::ostream& os, std::span<const PruningPlan> plans) {
  os << "iteration,pair_id,channel,energy\n";
  for (const auto& plan : plans) {
    for (const auto& g : plan.removals) {
      os << plan.iteration << ',' << g.pair_id << ',' << g.channel << ',' << format_double(g.energy) << '\n';
    }
  }
}

std::vector<PruningPlan> read_plan_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "iteration,pair_id,channel,energy") {
    throw DataError("plan file: missing header 'iteration,pair_id,channel,energy'");
  }
  std::map<std::size_t, PruningPlan> by_iteration;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string it, pair, ch, energy;
    if (!std::getline(row, it, ',') || !std::getline(row, pair, ',') || !std::getline(row, ch, ',') ||
        !std::getline(row, energy)) {
      throw DataError("plan file line " + std::to_string(line_no) + ": expected 4 columns");
    }
    try {
      const std::size_t t = std::stoul(it);
      auto& plan = by_iteration[t];
      plan.iteration = t;
      plan.removals.push_back({std::stoul(pair), std::stoul(ch), std::stod(energy)});
    } catch (const std::logic_error&) {
      throw DataError("plan file line " + std::to_string(line_no) + ": malformed number");
    }
  }
  std::vector<PruningPlan> out;
  for (auto& [t, plan] : by_iteration) out.push_back(std::move(plan));
  return out;
}

}  // namespace oicsr
