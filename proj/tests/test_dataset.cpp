// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include <set>
#include <vector>

#include "doctest.h"
#include "oicsr/dataset.hpp"
#include "oicsr/errors.hpp"

using namespace oicsr;

namespace {
const std::string fixtures = OICSR_FIXTURE_DIR;
}

TEST_CASE("synthetic tasks have the documented shapes and balanced labels") {
  struct Case {
    SyntheticTask task;
    Shape sample;
    std::size_t classes;
  };
  for (const auto& c : {Case{SyntheticTask::two_moons, {2}, 2}, Case{SyntheticTask::gaussian_blobs, {2}, 3},
                        Case{SyntheticTask::striped_images, {1, 12, 12}, 4}}) {
    const auto ds = gen_synthetic(c.task, 120, 3);
    CHECK(ds.sample_shape() == c.sample);
    CHECK(ds.num_classes == c.classes);
    CHECK(num_classes(c.task) == c.classes);
    CHECK(ds.size() == 120);
    std::vector<std::size_t> counts(c.classes, 0);
    for (int y : ds.labels) ++counts[static_cast<std::size_t>(y)];
    for (auto n : counts) CHECK(n == 120 / c.classes);
    validate(ds);
  }
}

TEST_CASE("synthetic generation is seeded") {
  const auto a = gen_synthetic(SyntheticTask::striped_images, 16, 9);
  const auto b = gen_synthetic(SyntheticTask::striped_images, 16, 9);
  const auto c = gen_synthetic(SyntheticTask::striped_images, 16, 10);
  CHECK(a.inputs == b.inputs);
  CHECK_FALSE(a.inputs == c.inputs);
  CHECK(parse_task("two_moons") == SyntheticTask::two_moons);
  CHECK_THROWS_AS(parse_task("spirals"), ConfigError);
  CHECK_THROWS_AS(gen_synthetic(SyntheticTask::gaussian_blobs, 2, 1), InputError);
}

TEST_CASE("gather picks rows") {
  const auto ds = gen_synthetic(SyntheticTask::gaussian_blobs, 9, 2);
  const std::vector<std::size_t> rows{4, 0};
  const Tensor x = ds.gather_inputs(rows);
  CHECK(x.shape() == Shape{2, 2});
  CHECK(x[0] == ds.inputs[8]);
  CHECK(x[3] == ds.inputs[1]);
  CHECK(ds.gather_labels(rows) == std::vector<int>{ds.labels[4], ds.labels[0]});
}

TEST_CASE("IDX files load with scaling and labels") {
  const auto ds = load_idx(fixtures + "/images_3x2x2.idx", fixtures + "/labels_3.idx");
  CHECK(ds.inputs.shape() == Shape{3, 1, 2, 2});
  CHECK(ds.inputs[0] == 0.0);
  CHECK(ds.inputs[1] == 1.0);
  CHECK(ds.inputs[2] == doctest::Approx(0.2));
  CHECK(ds.labels == std::vector<int>{1, 0, 2});
  CHECK(ds.num_classes == 3);
}

TEST_CASE("IDX errors are typed") {
  CHECK_THROWS_AS(load_idx(fixtures + "/images_bad_magic.idx", fixtures + "/labels_3.idx"), BadMagicError);
  CHECK_THROWS_AS(load_idx(fixtures + "/images_truncated.idx", fixtures + "/labels_3.idx"), TruncatedFileError);
  CHECK_THROWS_AS(load_idx(fixtures + "/images_3x2x2.idx", fixtures + "/labels_2.idx"), CountMismatchError);
  CHECK_THROWS_AS(load_idx(fixtures + "/missing.idx", fixtures + "/labels_3.idx"), IoError);
  const std::vector<std::uint8_t> short_header{0, 0, 8, 1, 0};
  CHECK_THROWS_AS(parse_idx_labels(short_header), TruncatedFileError);
  const std::vector<std::uint8_t> image_magic_as_labels{0, 0, 8, 3, 0, 0, 0, 0};
  CHECK_THROWS_AS(parse_idx_labels(image_magic_as_labels), BadMagicError);
  // every typed error is a DataError
  CHECK_THROWS_AS(load_idx(fixtures + "/images_bad_magic.idx", fixtures + "/labels_3.idx"), DataError);
}

TEST_CASE("validate rejects inconsistent datasets") {
  Dataset ds = gen_synthetic(SyntheticTask::two_moons, 10, 1);
  ds.labels[3] = 5;
  CHECK_THROWS_AS(validate(ds), DataError);
  ds.labels.pop_back();
  CHECK_THROWS_AS(validate(ds), DataError);
}
