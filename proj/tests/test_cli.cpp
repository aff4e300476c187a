// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

class Workspace {
 public:
  Workspace() : root_(fs::temp_directory_path() / ("oicsr_cli_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(root_);
  }
  ~Workspace() { fs::remove_all(root_); }
  [[nodiscard]] const fs::path& root() const { return root_; }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(root_ / name) << text;
    return root_ / name;
  }

  Run cli(const std::string& args) const {
    const fs::path log = root_ / "cli.log";
    const std::string cmd = std::string("\"") + OICSR_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
  }

 private:
  fs::path root_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const std::string kConfig = R"([model]
input = 2
layers = dense:8, relu, dense:6, relu, dense:2

[data]
source = synthetic
task = two_moons
train_size = 60
eval_size = 30

[train]
lr = 0.05
epochs = 3
batch_size = 16

[prune]
ratios = 0.3, 0.5
fine_tune_epochs = 1
)";

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("train, prune, eval and report run end to end") {
  Workspace ws;
  const auto cfg = ws.write("c.ini", kConfig);
  const auto run = ws.root() / "run";
  REQUIRE(ws.cli("train --config " + q(cfg) + " --out " + q(run)).code == 0);
  for (const char* f : {"model.ckpt", "metrics.csv", "energy.csv"}) CHECK(fs::exists(run / f));
  REQUIRE(ws.cli("prune --config " + q(cfg) + " --checkpoint " + q(run / "model.ckpt") + " --out " + q(run)).code ==
          0);
  for (const char* f : {"pruned.ckpt", "prune_report.csv", "plans.csv", "flops_iter0.csv", "flops_iter2.csv",
                        "finetune_metrics.csv", "energy_pruned.csv"}) {
    CHECK(fs::exists(run / f));
  }
  const auto eval = ws.cli("eval --config " + q(cfg) + " --checkpoint " + q(run / "pruned.ckpt"));
  CHECK(eval.code == 0);
  CHECK(eval.output.find("eval_acc") != std::string::npos);
  const auto report = ws.root() / "report";
  REQUIRE(ws.cli("report --run " + q(run) + " --out " + q(report)).code == 0);
  for (const char* f : {"accuracy_vs_flops.csv", "accuracy_vs_flops.svg", "energy_histogram.csv",
                        "energy_histogram.svg"}) {
    CHECK(fs::exists(report / f));
  }
}

TEST_CASE("same seed, same bytes; different seed, different weights") {
  Workspace ws;
  const auto cfg = ws.write("c.ini", kConfig);
  REQUIRE(ws.cli("train --config " + q(cfg) + " --seed 5 --out " + q(ws.root() / "a")).code == 0);
  REQUIRE(ws.cli("train --config " + q(cfg) + " --seed 5 --out " + q(ws.root() / "b")).code == 0);
  REQUIRE(ws.cli("train --config " + q(cfg) + " --seed 6 --out " + q(ws.root() / "c")).code == 0);
  for (const char* f : {"model.ckpt", "metrics.csv", "energy.csv"}) {
    CHECK(slurp(ws.root() / "a" / f) == slurp(ws.root() / "b" / f));
  }
  CHECK(slurp(ws.root() / "a" / "model.ckpt") != slurp(ws.root() / "c" / "model.ckpt"));
}

TEST_CASE("lambda_s override of zero gives an all-zero reg column") {
  Workspace ws;
  const auto cfg = ws.write("c.ini", kConfig);
  REQUIRE(ws.cli("train --config " + q(cfg) + " --override lambda_s=0 --out " + q(ws.root() / "r")).code == 0);
  std::istringstream lines(slurp(ws.root() / "r" / "metrics.csv"));
  std::string line;
  std::getline(lines, line);
  CHECK(line == "epoch,loss,reg,train_acc,eval_acc,energy_sum,dead_groups");
  int rows = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 7);
    CHECK(cells[2] == "0");
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("configuration problems exit with status 2 and name the key") {
  Workspace ws;
  std::string text = kConfig;
  text.replace(text.find("[train]\n"), 8, "[train]\nmomentun = 0.5\n");
  const auto bad_key = ws.write("bad.ini", text);
  auto r = ws.cli("train --config " + q(bad_key) + " --out " + q(ws.root() / "x"));
  CHECK(r.code == 2);
  CHECK(r.output.find("momentun") != std::string::npos);

  const auto cfg = ws.write("c.ini", kConfig);
  r = ws.cli("train --config " + q(cfg) + " --override data.source=idx --out " + q(ws.root() / "x"));
  CHECK(r.code == 2);
  CHECK(r.output.find("data.train_images") != std::string::npos);

  r = ws.cli("train --config " + q(cfg) + " --override train.lr=-1 --out " + q(ws.root() / "x"));
  CHECK(r.code == 2);
  CHECK(r.output.find("train.lr") != std::string::npos);

  CHECK(ws.cli("train --out x").code == 2);
  CHECK(ws.cli("").code == 2);
  CHECK(ws.cli("train --config " + q(ws.root() / "absent.ini") + " --out x").code == 2);
}

TEST_CASE("runtime failures exit with status 1") {
  Workspace ws;
  const auto cfg = ws.write("c.ini", kConfig);
  auto r = ws.cli("eval --config " + q(cfg) + " --checkpoint " + q(ws.root() / "none.ckpt"));
  CHECK(r.code == 1);
  r = ws.cli("report --run " + q(ws.root() / "empty") + " --out " + q(ws.root() / "rep"));
  CHECK(r.code == 1);
  CHECK(r.output.find("prune_report.csv") != std::string::npos);
  CHECK(r.output.find("energy.csv") != std::string::npos);
}
