// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/config.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "oicsr/errors.hpp"
#include "oicsr/importance.hpp"
#include "oicsr/regularizers.hpp"

namespace oicsr {

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "model.input",         "model.layers",        "data.source",        "data.task",
      "data.train_size",     "data.eval_size",      "data.seed",          "data.train_images",
      "data.train_labels",   "data.eval_images",    "data.eval_labels",   "train.lr",
      "train.momentum",      "train.weight_decay",  "train.lambda_s",     "train.regularizer",
      "train.batch_size",    "train.epochs",        "train.lr_schedule",  "train.seed",
      "prune.iterations",    "prune.ratios",        "prune.criterion",    "prune.fine_tune_epochs",
      "prune.fine_tune_lr"};
  return keys;
}

namespace {

bool known_key(const std::string& key) {
  const auto& keys = config_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

ConfigValues from_ptree(const boost::property_tree::ptree& tree) {
  ConfigValues values;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      if (!known_key(full)) throw ConfigError("unknown config key '" + full + "'");
      values[full] = value.get_value<std::string>();
    }
  }
  return values;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size() || !std::isfinite(out)) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + raw + "'");
  }
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (v.empty() || used != v.size() || v[0] == '-') {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + raw + "'");
  }
  return out;
}

}  // namespace

ConfigValues parse_config_text(const std::string& text) {
  std::istringstream in(text);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  return from_ptree(tree);
}

ConfigValues read_config_file(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.message());
  }
  return from_ptree(tree);
}

void apply_overrides(ConfigValues& values, const std::vector<std::string>& overrides) {
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + item + "' must be KEY=VALUE");
    std::string key = trim(item.substr(0, eq));
    const std::string value = trim(item.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      std::vector<std::string> matches;
      for (const auto& k : config_keys()) {
        if (k.substr(k.find('.') + 1) == key) matches.push_back(k);
      }
      if (matches.empty()) throw ConfigError("unknown config key '" + key + "' in override");
      if (matches.size() > 1) {
        throw ConfigError("override key '" + key + "' is ambiguous; use " + matches[0] + " or " + matches[1]);
      }
      key = matches[0];
    }
    if (!known_key(key)) throw ConfigError("unknown config key '" + key + "' in override");
    values[key] = value;
  }
}

ExperimentConfig to_experiment(const ConfigValues& values) {
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
  auto require = [&](const std::string& key) {
    auto v = get(key);
    if (!v || trim(*v).empty()) throw ConfigError("missing required config key '" + key + "'");
    return trim(*v);
  };

  ExperimentConfig cfg;
  try {
    cfg.architecture.input_shape = parse_shape(require("model.input"));
  } catch (const ConstructionError& e) {
    throw ConfigError(std::string("config key 'model.input': ") + e.what());
  }
  try {
    cfg.architecture.layers = parse_layers(require("model.layers"));
  } catch (const ConstructionError& e) {
    throw ConfigError(std::string("config key 'model.layers': ") + e.what());
  }

  auto& data = cfg.data;
  data.source = require("data.source");
  if (data.source == "synthetic") {
    data.task = parse_task(require("data.task"));
    if (auto v = get("data.train_size")) data.train_size = to_count("data.train_size", *v);
    if (auto v = get("data.eval_size")) data.eval_size = to_count("data.eval_size", *v);
    if (auto v = get("data.seed")) data.seed = to_count("data.seed", *v);
  } else if (data.source == "idx") {
    data.train_images = require("data.train_images");
    data.train_labels = require("data.train_labels");
    data.eval_images = require("data.eval_images");
    data.eval_labels = require("data.eval_labels");
  } else {
    throw ConfigError("config key 'data.source' must be 'synthetic' or 'idx', got '" + data.source + "'");
  }

  auto& run = cfg.run;
  if (auto v = get("train.lr")) run.lr = to_double("train.lr", *v);
  if (auto v = get("train.momentum")) run.momentum = to_double("train.momentum", *v);
  if (auto v = get("train.weight_decay")) run.weight_decay = to_double("train.weight_decay", *v);
  if (auto v = get("train.lambda_s")) run.lambda_s = to_double("train.lambda_s", *v);
  if (auto v = get("train.regularizer")) run.regularizer = parse_regularizer(trim(*v));
  if (auto v = get("train.batch_size")) run.batch_size = to_count("train.batch_size", *v);
  if (auto v = get("train.epochs")) run.epochs = to_count("train.epochs", *v);
  if (auto v = get("train.seed")) run.seed = to_count("train.seed", *v);
  if (auto v = get("train.lr_schedule")) {
    for (const auto& item : split_list(*v)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) {
        throw ConfigError("config key 'train.lr_schedule' expects EPOCH:MULTIPLIER items, got '" + item + "'");
      }
      run.lr_schedule.emplace_back(to_count("train.lr_schedule", item.substr(0, colon)),
                                   to_double("train.lr_schedule", item.substr(colon + 1)));
    }
  }
  if (auto v = get("prune.ratios")) {
    for (const auto& item : split_list(*v)) run.prune_ratios.push_back(to_double("prune.ratios", item));
  }
  cfg.prune_iterations = run.prune_ratios.size();
  if (auto v = get("prune.iterations")) {
    cfg.prune_iterations = to_count("prune.iterations", *v);
    if (cfg.prune_iterations != run.prune_ratios.size()) {
      throw ConfigError("config key 'prune.iterations' is " + std::to_string(cfg.prune_iterations) +
                        " but 'prune.ratios' lists " + std::to_string(run.prune_ratios.size()) + " targets");
    }
  }
  if (auto v = get("prune.criterion")) {
    const auto c = trim(*v);
    if (c != "auto") run.criterion = parse_criterion(c);
  }
  if (auto v = get("prune.fine_tune_epochs")) run.fine_tune_epochs = to_count("prune.fine_tune_epochs", *v);
  if (auto v = get("prune.fine_tune_lr")) run.fine_tune_lr = to_double("prune.fine_tune_lr", *v);
  validate(run);

  // Catch shape and compatibility problems before any data is loaded.
  Model probe;
  try {
    probe = Model::build(cfg.architecture, 0);
  } catch (const ConstructionError& e) {
    throw ConfigError(std::string("config key 'model.layers': ") + e.what());
  }
  try {
    (void)structured_value_grad(probe, run.regularizer);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key 'train.regularizer': ") + e.what());
  }
  try {
    (void)score_all(probe, run.effective_criterion());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key 'prune.criterion': ") + e.what());
  }
  return cfg;
}

std::pair<Dataset, Dataset> load_datasets(const DataConfig& data) {
  if (data.source == "idx") {
    return {load_idx(data.train_images, data.train_labels, Split::train),
            load_idx(data.eval_images, data.eval_labels, Split::eval)};
  }
  // Distinct streams for the two splits.
  return {gen_synthetic(data.task, data.train_size, data.seed, Split::train),
          gen_synthetic(data.task, data.eval_size, data.seed + 0x9e3779b97f4a7c15ULL, Split::eval)};
}

}  // namespace oicsr
