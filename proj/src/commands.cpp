// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "oicsr/checkpoint.hpp"
#include "oicsr/errors.hpp"
#include "oicsr/format.hpp"
#include "oicsr/importance.hpp"
#include "oicsr/pruner.hpp"
#include "oicsr/report.hpp"

namespace oicsr {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void prepare_out_dir(const CommandOptions& opts) {
  if (opts.out.empty()) throw ConfigError("--out DIR is required");
  std::error_code ec;
  std::filesystem::create_directories(opts.out, ec);
  if (ec) throw IoError("cannot create " + opts.out.string() + ": " + ec.message());
}

void write_energy(const std::filesystem::path& path, const Model& model) {
  auto out = open_out(path);
  write_energy_csv(out, model, model.pairs().empty() ? std::vector<OutInChannelGroup>{}
                                                     : score_all(model, Criterion::out_in_channel));
}

bool same_topology(const Architecture& a, const Architecture& b) {
  if (a.input_shape != b.input_shape || a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    const auto& x = a.layers[i];
    const auto& y = b.layers[i];
    if (x.kind != y.kind || x.kernel != y.kernel || x.stride != y.stride || x.padding != y.padding ||
        x.bias != y.bias) {
      return false;
    }
  }
  // The classifier keeps its width; every other channel count may have shrunk.
  return a.layers.empty() || a.layers.back().out_channels == b.layers.back().out_channels;
}

}  // namespace

ExperimentConfig resolve_config(const CommandOptions& opts) {
  if (opts.config.empty()) throw ConfigError("--config PATH is required");
  ConfigValues values = read_config_file(opts.config);
  apply_overrides(values, opts.overrides);
  if (opts.seed) values["train.seed"] = std::to_string(*opts.seed);
  return to_experiment(values);
}

void cmd_train(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  prepare_out_dir(opts);
  const auto [train_set, eval_set] = load_datasets(cfg.data);

  Model model = Model::build(cfg.architecture, cfg.run.seed);
  CheckpointMeta meta;
  meta.run_config = to_json(cfg.run);
  meta.original_flops = count_flops(model).total_flops;

  auto metrics = open_out(opts.out / "metrics.csv");
  write_metrics_header(metrics);
  train(model, train_set, &eval_set, cfg.run, [&](const EpochMetrics& m) {
    write_metrics_row(metrics, m);
    log << "epoch " << m.epoch << " loss " << format_double(m.loss) << " reg " << format_double(m.reg)
        << " eval_acc " << format_double(m.eval_acc) << '\n';
  });
  metrics.close();

  save_checkpoint(model, meta, opts.out / "model.ckpt");
  write_energy(opts.out / "energy.csv", model);
}

void cmd_prune(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  if (opts.checkpoint.empty()) throw ConfigError("--checkpoint PATH is required");
  prepare_out_dir(opts);
  auto loaded = load_checkpoint(opts.checkpoint);
  if (!same_topology(cfg.architecture, loaded.model.architecture())) {
    throw ConfigError("checkpoint architecture does not match config key 'model.layers'");
  }
  const auto [train_set, eval_set] = load_datasets(cfg.data);
  const std::uint64_t original =
      loaded.meta.original_flops ? loaded.meta.original_flops : count_flops(loaded.model).total_flops;

  auto ft_metrics = open_out(opts.out / "finetune_metrics.csv");
  ft_metrics << "iteration,";
  write_metrics_header(ft_metrics);

  PruneSchedule schedule{cfg.run.prune_ratios, cfg.run.effective_criterion()};
  PruneHooks hooks;
  hooks.evaluate = [&eval_set = eval_set](const Model& m) { return evaluate(m, eval_set); };
  hooks.fine_tune = [&](Model& m, std::size_t t) {
    fine_tune(m, train_set, &eval_set, cfg.run, cfg.run.fine_tune_epochs, cfg.run.seed + 1000 * t,
              [&](const EpochMetrics& em) {
                ft_metrics << t << ',';
                write_metrics_row(ft_metrics, em);
              });
  };
  hooks.warn = [&log](const std::string& msg) { log << "warning: " << msg << '\n'; };

  const double base_acc = evaluate(loaded.model, eval_set);
  const FlopsReport base_flops = count_flops(loaded.model);
  {
    auto out = open_out(opts.out / "flops_iter0.csv");
    write_flops_csv(out, loaded.model, base_flops);
  }
  PruneResult result = prune_loop(loaded.model, schedule, hooks, original);
  ft_metrics.close();

  auto report = open_out(opts.out / "prune_report.csv");
  write_prune_report_header(report);
  write_prune_report_row(report, PruneReportRow{0, 0.0, 1.0 - static_cast<double>(base_flops.total_flops) /
                                                            static_cast<double>(original),
                                                {}, base_flops.total_flops, base_flops.total_params, base_acc,
                                                base_acc});
  std::vector<PruningPlan> plans;
  for (const auto& it : result.iterations) {
    write_prune_report_row(report, PruneReportRow{it.plan.iteration, it.plan.target_ratio,
                                                  it.plan.achieved_flops_ratio, it.plan.capped_pairs,
                                                  it.flops.total_flops, it.flops.total_params,
                                                  it.accuracy_before_fine_tune, it.accuracy_after_fine_tune});
    auto flops_out = open_out(opts.out / ("flops_iter" + std::to_string(it.plan.iteration) + ".csv"));
    write_flops_csv(flops_out, result.model, it.flops);
    log << "iteration " << it.plan.iteration << " target " << format_double(it.plan.target_ratio) << " achieved "
        << format_double(it.plan.achieved_flops_ratio) << " removed " << it.plan.removals.size()
        << " acc " << format_double(it.accuracy_before_fine_tune) << " -> "
        << format_double(it.accuracy_after_fine_tune) << '\n';
    plans.push_back(it.plan);
  }
  report.close();
  {
    auto out = open_out(opts.out / "plans.csv");
    write_plan_csv(out, plans);
  }

  CheckpointMeta meta = loaded.meta;
  meta.original_flops = original;
  meta.history.insert(meta.history.end(), plans.begin(), plans.end());
  save_checkpoint(result.model, meta, opts.out / "pruned.ckpt");
  write_energy(opts.out / "energy_pruned.csv", result.model);
}

double cmd_eval(const CommandOptions& opts, std::ostream& log) {
  const ExperimentConfig cfg = resolve_config(opts);
  if (opts.checkpoint.empty()) throw ConfigError("--checkpoint PATH is required");
  const auto loaded = load_checkpoint(opts.checkpoint);
  const auto [train_set, eval_set] = load_datasets(cfg.data);
  const double acc = evaluate(loaded.model, eval_set);
  const auto flops = count_flops(loaded.model);
  log << "eval_acc " << format_double(acc) << "\nflops " << flops.total_flops << "\nparams " << flops.total_params
      << '\n';
  return acc;
}

void cmd_report(const CommandOptions& opts, std::ostream& log) {
  if (opts.runs.empty()) throw ConfigError("report needs at least one --run DIR");
  prepare_out_dir(opts);
  const auto report = build_report(opts.runs);
  {
    auto out = open_out(opts.out / "accuracy_vs_flops.csv");
    write_curve_csv(out, report);
  }
  {
    auto out = open_out(opts.out / "energy_histogram.csv");
    write_histogram_csv(out, report);
  }
  {
    auto out = open_out(opts.out / "accuracy_vs_flops.svg");
    write_curve_svg(out, report);
  }
  {
    auto out = open_out(opts.out / "energy_histogram.svg");
    write_histogram_svg(out, report);
  }
  log << "report written for " << report.series.size() << " run(s)\n";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return kExitUsage;
  return kExitRuntime;
}

}  // namespace oicsr
