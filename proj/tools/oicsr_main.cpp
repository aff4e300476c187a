// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0
//
// Command-line driver: train, prune, eval, report.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oicsr/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Out-in-channel sparsity training and channel pruning"};
  app.require_subcommand(1);

  oicsr::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string config, out, checkpoint;
  std::vector<std::string> runs;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Config file ([model], [data], [train], [prune])")->required();
    cmd->add_option("--override", opts.overrides, "KEY=VALUE, repeatable");
    cmd->add_option("--seed", seed, "Overrides train.seed");
  };

  auto* train = app.add_subcommand("train", "Train from scratch with the configured regularizer");
  add_common(train);
  train->add_option("--out", out, "Output directory")->required();

  auto* prune = app.add_subcommand("prune", "Iterative global greedy pruning with fine-tuning");
  add_common(prune);
  prune->add_option("--checkpoint", checkpoint, "Trained checkpoint")->required();
  prune->add_option("--out", out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Accuracy of a checkpoint on the eval split");
  add_common(eval);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required();

  auto* report = app.add_subcommand("report", "Merge run directories into CSV and SVG reports");
  report->add_option("--run", runs, "Run directory, repeatable")->required();
  report->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? oicsr::kExitOk : oicsr::kExitUsage;
  }

  opts.config = config;
  opts.out = out;
  opts.checkpoint = checkpoint;
  for (const auto& r : runs) opts.runs.emplace_back(r);
  for (auto* cmd : {train, prune, eval}) {
    if (cmd->parsed() && cmd->count("--seed") > 0) opts.seed = seed;
  }

  try {
    if (train->parsed()) oicsr::cmd_train(opts, std::cout);
    if (prune->parsed()) oicsr::cmd_prune(opts, std::cout);
    if (eval->parsed()) oicsr::cmd_eval(opts, std::cout);
    if (report->parsed()) oicsr::cmd_report(opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return oicsr::exit_code_for(e);
  }
  return oicsr::kExitOk;
}
