// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_DATASET_HPP
#define OICSR_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "oicsr/tensor.hpp"

namespace oicsr {

enum class Split { train, eval };

enum class SyntheticTask { two_moons, gaussian_blobs, striped_images };

std::string_view to_string(SyntheticTask task);
SyntheticTask parse_task(std::string_view text);

struct Dataset {
  Tensor inputs;            // N x sample shape
  std::vector<int> labels;  // N entries, each < num_classes
  std::size_t num_classes = 0;
  Split split = Split::train;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  [[nodiscard]] Shape sample_shape() const;
  /// Gathers the given rows into a batch tensor.
  [[nodiscard]] Tensor gather_inputs(std::span<const std::size_t> rows) const;
  [[nodiscard]] std::vector<int> gather_labels(std::span<const std::size_t> rows) const;
};

/// Checks the Dataset invariants; throws DataError.
void validate(const Dataset& ds);

/// two_moons: 2 features, 2 classes. gaussian_blobs: 2 features, 3 well
/// separated classes. striped_images: 1x12x12 images, 4 classes (horizontal,
/// vertical, diagonal and anti-diagonal stripes with random period, phase
/// and pixel noise). Labels are assigned round-robin, so classes are
/// balanced within one sample.
Dataset gen_synthetic(SyntheticTask task, std::size_t n, std::uint64_t seed, Split split = Split::train);
std::size_t num_classes(SyntheticTask task);

/// Reads an IDX image file (magic 0x00000803) and label file (magic
/// 0x00000801). Pixels are scaled by 1/255; images become N x 1 x H x W.
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 Split split = Split::train);

/// Byte-level parsers behind load_idx.
Tensor parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<int> parse_idx_labels(std::span<const std::uint8_t> bytes);

}  // namespace oicsr

#endif  // OICSR_DATASET_HPP
