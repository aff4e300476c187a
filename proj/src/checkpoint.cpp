// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "oicsr/errors.hpp"

namespace oicsr {

namespace {

constexpr const char* kMagicLine = "oicsr-checkpoint";

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double get_f64(std::string_view in, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t{static_cast<unsigned char>(in[offset + i])} << (8 * i);
  return std::bit_cast<double>(bits);
}

const char* role_name(int role) {
  static constexpr const char* names[] = {"weight", "bias", "gamma", "beta"};
  return names[role];
}

std::vector<Tensor*> layer_params(Layer& l) { return {&l.weight, &l.bias, &l.gamma, &l.beta}; }

// Reads "<key> <value>\n" starting at pos.
std::string read_line(const std::string& bytes, std::size_t& pos) {
  const auto end = bytes.find('\n', pos);
  if (end == std::string::npos) throw CheckpointCorruptError("checkpoint truncated inside its text header");
  std::string line = bytes.substr(pos, end - pos);
  pos = end + 1;
  return line;
}

std::uint64_t keyed_number(const std::string& line, const std::string& key) {
  if (line.rfind(key + " ", 0) != 0) throw CheckpointCorruptError("checkpoint: expected '" + key + "' line");
  const std::string value = line.substr(key.size() + 1);
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (value.empty() || used != value.size()) throw CheckpointCorruptError("checkpoint: malformed '" + key + "' value");
  return v;
}

}  // namespace

nlohmann::json plan_to_json(const PruningPlan& plan) {
  nlohmann::json removals = nlohmann::json::array();
  for (const auto& g : plan.removals) removals.push_back({g.pair_id, g.channel, g.energy});
  return {{"iteration", plan.iteration},
          {"target_ratio", plan.target_ratio},
          {"achieved_flops_ratio", plan.achieved_flops_ratio},
          {"predicted_flops", plan.predicted_flops},
          {"predicted_params", plan.predicted_params},
          {"capped_pairs", plan.capped_pairs},
          {"pair_channel_counts", plan.pair_channel_counts},
          {"removals", removals}};
}

PruningPlan plan_from_json(const nlohmann::json& j) {
  PruningPlan plan;
  plan.iteration = j.at("iteration").get<std::size_t>();
  plan.target_ratio = j.at("target_ratio").get<double>();
  plan.achieved_flops_ratio = j.at("achieved_flops_ratio").get<double>();
  plan.predicted_flops = j.at("predicted_flops").get<std::uint64_t>();
  plan.predicted_params = j.at("predicted_params").get<std::uint64_t>();
  plan.capped_pairs = j.at("capped_pairs").get<std::vector<std::size_t>>();
  plan.pair_channel_counts = j.at("pair_channel_counts").get<std::vector<std::size_t>>();
  for (const auto& r : j.at("removals")) {
    plan.removals.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>(), r.at(2).get<double>()});
  }
  return plan;
}

std::string serialize_checkpoint(const Model& model, const CheckpointMeta& meta) {
  Model copy = model;
  std::string payload;
  nlohmann::json sizes = nlohmann::json::array();
  for (std::size_t li = 0; li < copy.layers().size(); ++li) {
    auto params = layer_params(copy.mutable_layers()[li]);
    for (int role = 0; role < 4; ++role) {
      if (params[role]->empty()) continue;
      sizes.push_back({li, role_name(role), params[role]->size()});
      for (double v : params[role]->data()) put_f64(payload, v);
    }
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : model.pairs()) {
    pairs.push_back({{"out_layer", p.out_layer},
                     {"in_layer", p.in_layer},
                     {"channel_count", p.channel_count},
                     {"in_multiplicity", p.in_multiplicity},
                     {"intervening", p.intervening}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const auto& plan : meta.history) history.push_back(plan_to_json(plan));

  const nlohmann::json header = {{"input_shape", format_shape(model.input_shape())},
                                 {"layers", format_layers(model.architecture().layers)},
                                 {"param_sizes", sizes},
                                 {"pairs", pairs},
                                 {"run_config", meta.run_config},
                                 {"history", history},
                                 {"original_flops", meta.original_flops}};
  const std::string header_text = header.dump(2) + "\n";

  std::ostringstream os;
  os << kMagicLine << '\n'
     << "version " << kCheckpointVersion << '\n'
     << "header-bytes " << header_text.size() << '\n'
     << header_text << "payload-bytes " << payload.size() << '\n';
  std::string out = os.str();
  out += payload;
  out += "\nfnv1a64 " + hex64(fnv1a64(out)) + "\n";
  return out;
}

LoadedCheckpoint parse_checkpoint(const std::string& bytes) {
  std::size_t pos = 0;
  if (read_line(bytes, pos) != kMagicLine) throw CheckpointCorruptError("not an oicsr checkpoint (bad magic line)");
  const auto version = keyed_number(read_line(bytes, pos), "version");
  if (version != static_cast<std::uint64_t>(kCheckpointVersion)) {
    throw CheckpointVersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = keyed_number(read_line(bytes, pos), "header-bytes");
  if (bytes.size() - pos < header_len) throw CheckpointCorruptError("checkpoint truncated inside its JSON header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointCorruptError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  pos += header_len;
  const auto payload_len = keyed_number(read_line(bytes, pos), "payload-bytes");
  if (bytes.size() - pos < payload_len) throw CheckpointCorruptError("checkpoint truncated inside its payload");
  const std::string_view payload(bytes.data() + pos, payload_len);
  pos += payload_len;
  const std::string trailer = bytes.substr(pos);
  if (trailer != "\nfnv1a64 " + hex64(fnv1a64(std::string_view(bytes.data(), pos))) + "\n") {
    throw CheckpointCorruptError("checkpoint checksum missing or wrong");
  }

  try {
    Architecture arch;
    arch.input_shape = parse_shape(header.at("input_shape").get<std::string>());
    arch.layers = parse_layers(header.at("layers").get<std::string>());
    Model model = Model::build(arch, 0);

    std::size_t offset = 0;
    std::size_t entry = 0;
    const auto& sizes = header.at("param_sizes");
    for (std::size_t li = 0; li < model.layers().size(); ++li) {
      auto params = layer_params(model.mutable_layers()[li]);
      for (int role = 0; role < 4; ++role) {
        if (params[role]->empty()) continue;
        if (entry >= sizes.size()) throw CheckpointCorruptError("checkpoint lists fewer parameters than its layers");
        const auto& s = sizes[entry++];
        if (s.at(0).get<std::size_t>() != li || s.at(1).get<std::string>() != role_name(role) ||
            s.at(2).get<std::size_t>() != params[role]->size()) {
          throw CheckpointCorruptError("checkpoint parameter table disagrees with its architecture at layer " +
                                       std::to_string(li));
        }
        if (offset + 8 * params[role]->size() > payload.size()) {
          throw CheckpointCorruptError("checkpoint payload too short");
        }
        for (auto& v : params[role]->data()) {
          v = get_f64(payload, offset);
          offset += 8;
        }
      }
    }
    if (entry != sizes.size() || offset != payload.size()) {
      throw CheckpointCorruptError("checkpoint payload length disagrees with its parameter table");
    }
    model.refresh();

    const auto& pairs = header.at("pairs");
    if (pairs.size() != model.pairs().size()) throw CheckpointCorruptError("checkpoint pair metadata disagrees");
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& derived = model.pairs()[p];
      if (pairs[p].at("out_layer").get<std::size_t>() != derived.out_layer ||
          pairs[p].at("in_layer").get<std::size_t>() != derived.in_layer ||
          pairs[p].at("channel_count").get<std::size_t>() != derived.channel_count ||
          pairs[p].at("in_multiplicity").get<std::size_t>() != derived.in_multiplicity ||
          pairs[p].at("intervening").get<std::vector<std::size_t>>() != derived.intervening) {
        throw CheckpointCorruptError("checkpoint pair " + std::to_string(p) + " disagrees with its architecture");
      }
    }

    LoadedCheckpoint out{std::move(model), {}};
    out.meta.run_config = header.at("run_config");
    for (const auto& plan : header.at("history")) out.meta.history.push_back(plan_from_json(plan));
    out.meta.original_flops = header.at("original_flops").get<std::uint64_t>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointCorruptError(std::string("checkpoint header is missing fields: ") + e.what());
  } catch (const ConstructionError& e) {
    throw CheckpointCorruptError(std::string("checkpoint architecture is invalid: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model, meta);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace oicsr
