// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>

#include "oicsr/errors.hpp"

namespace oicsr {

std::string_view to_string(SyntheticTask task) {
  switch (task) {
    case SyntheticTask::two_moons: return "two_moons";
    case SyntheticTask::gaussian_blobs: return "gaussian_blobs";
    case SyntheticTask::striped_images: return "striped_images";
  }
  return "?";
}

SyntheticTask parse_task(std::string_view text) {
  if (text == "two_moons") return SyntheticTask::two_moons;
  if (text == "gaussian_blobs") return SyntheticTask::gaussian_blobs;
  if (text == "striped_images") return SyntheticTask::striped_images;
  throw ConfigError("unknown synthetic task '" + std::string(text) + "'");
}

std::size_t num_classes(SyntheticTask task) {
  switch (task) {
    case SyntheticTask::two_moons: return 2;
    case SyntheticTask::gaussian_blobs: return 3;
    case SyntheticTask::striped_images: return 4;
  }
  return 0;
}

Shape Dataset::sample_shape() const {
  const auto& s = inputs.shape();
  return Shape(s.begin() + 1, s.end());
}

Tensor Dataset::gather_inputs(std::span<const std::size_t> rows) const {
  const std::size_t per = inputs.size() / inputs.dim(0);
  std::vector<double> data;
  data.reserve(rows.size() * per);
  for (auto r : rows) {
    if (r >= size()) throw InputError("row " + std::to_string(r) + " out of range");
    const double* base = inputs.data().data() + r * per;
    data.insert(data.end(), base, base + per);
  }
  Shape shape{rows.size()};
  const auto sample = sample_shape();
  shape.insert(shape.end(), sample.begin(), sample.end());
  return Tensor(std::move(shape), std::move(data));
}

std::vector<int> Dataset::gather_labels(std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels.at(r));
  return out;
}

void validate(const Dataset& ds) {
  if (ds.labels.empty()) throw DataError("dataset is empty");
  if (ds.inputs.empty() || ds.inputs.dim(0) != ds.labels.size()) {
    throw DataError("dataset has " + std::to_string(ds.labels.size()) + " labels but inputs of shape " +
                    shape_string(ds.inputs.shape()));
  }
  for (int y : ds.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= ds.num_classes) {
      throw DataError("label " + std::to_string(y) + " outside [0, " + std::to_string(ds.num_classes) + ")");
    }
  }
}

namespace {

constexpr std::size_t kImageSide = 12;

void two_moons_sample(std::mt19937_64& rng, int label, double* out) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 0.1);
  const double t = angle(rng);
  if (label == 0) {
    out[0] = std::cos(t);
    out[1] = std::sin(t);
  } else {
    out[0] = 1.0 - std::cos(t);
    out[1] = 0.5 - std::sin(t);
  }
  out[0] += noise(rng);
  out[1] += noise(rng);
}

void blob_sample(std::mt19937_64& rng, int label, double* out) {
  static constexpr double centers[3][2] = {{-3.0, 0.0}, {3.0, 0.0}, {0.0, 4.0}};
  std::normal_distribution<double> noise(0.0, 0.5);
  out[0] = centers[label][0] + noise(rng);
  out[1] = centers[label][1] + noise(rng);
}

void stripe_sample(std::mt19937_64& rng, int label, double* out) {
  std::uniform_int_distribution<int> period_dist(3, 5);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 0.35);
  const double period = period_dist(rng);
  const double phase = phase_dist(rng);
  for (std::size_t y = 0; y < kImageSide; ++y) {
    for (std::size_t x = 0; x < kImageSide; ++x) {
      double coord = 0.0;
      switch (label) {
        case 0: coord = static_cast<double>(y); break;
        case 1: coord = static_cast<double>(x); break;
        case 2: coord = static_cast<double>(x + y) / std::numbers::sqrt2; break;
        default: coord = (static_cast<double>(x) - static_cast<double>(y)) / std::numbers::sqrt2; break;
      }
      const double v = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * coord / period + phase);
      out[y * kImageSide + x] = v + noise(rng);
    }
  }
}

}  // namespace

Dataset gen_synthetic(SyntheticTask task, std::size_t n, std::uint64_t seed, Split split) {
  const std::size_t classes = num_classes(task);
  if (n < classes) {
    throw InputError("synthetic task " + std::string(to_string(task)) + " needs n >= " + std::to_string(classes));
  }
  Shape shape = task == SyntheticTask::striped_images ? Shape{n, 1, kImageSide, kImageSide} : Shape{n, 2};
  Tensor inputs(shape);
  const std::size_t per = inputs.size() / n;
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.num_classes = classes;
  ds.split = split;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % classes);
    ds.labels[i] = label;
    double* row = inputs.data().data() + i * per;
    switch (task) {
      case SyntheticTask::two_moons: two_moons_sample(rng, label, row); break;
      case SyntheticTask::gaussian_blobs: blob_sample(rng, label, row); break;
      case SyntheticTask::striped_images: stripe_sample(rng, label, row); break;
    }
  }
  ds.inputs = std::move(inputs);
  return ds;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string hex(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s.push_back(digits[(v >> shift) & 0xF]);
  return s;
}

}  // namespace

Tensor parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw TruncatedFileError("IDX image file shorter than its 16-byte header");
  const auto magic = read_be32(bytes, 0);
  if (magic != kImageMagic) throw BadMagicError("IDX image file has magic " + hex(magic) + ", expected 0x00000803");
  const std::size_t count = read_be32(bytes, 4);
  const std::size_t rows = read_be32(bytes, 8);
  const std::size_t cols = read_be32(bytes, 12);
  if (count == 0 || rows == 0 || cols == 0) throw DataError("IDX image file declares an empty dimension");
  const std::size_t need = 16 + count * rows * cols;
  if (bytes.size() < need) {
    throw TruncatedFileError("IDX image file has " + std::to_string(bytes.size()) + " bytes, header promises " +
                             std::to_string(need));
  }
  Tensor images({count, 1, rows, cols});
  for (std::size_t i = 0; i < images.size(); ++i) images[i] = static_cast<double>(bytes[16 + i]) / 255.0;
  return images;
}

std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw TruncatedFileError("IDX label file shorter than its 8-byte header");
  const auto magic = read_be32(bytes, 0);
  if (magic != kLabelMagic) throw BadMagicError("IDX label file has magic " + hex(magic) + ", expected 0x00000801");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() < 8 + count) {
    throw TruncatedFileError("IDX label file has " + std::to_string(bytes.size()) + " bytes, header promises " +
                             std::to_string(8 + count));
  }
  return std::vector<int>(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count));
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, Split split) {
  Dataset ds;
  ds.inputs = parse_idx_images(read_file(images));
  ds.labels = parse_idx_labels(read_file(labels));
  ds.split = split;
  if (ds.inputs.dim(0) != ds.labels.size()) {
    throw CountMismatchError(images.string() + " holds " + std::to_string(ds.inputs.dim(0)) + " images but " +
                             labels.string() + " holds " + std::to_string(ds.labels.size()) + " labels");
  }
  ds.num_classes = static_cast<std::size_t>(*std::max_element(ds.labels.begin(), ds.labels.end())) + 1;
  return ds;
}

}  // namespace oicsr
