// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "doctest.h"
#include "oicsr/errors.hpp"
#include "oicsr/format.hpp"
#include "oicsr/tensor.hpp"

using namespace oicsr;

TEST_CASE("construction and shape checks") {
  const Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.rank() == 2);
  CHECK(t.dim(1) == 3);
  CHECK(t[5] == 1.5);
  CHECK_THROWS_AS(Tensor({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS((void)t.dim(2), ShapeError);
  CHECK(Tensor().empty());
  CHECK(shape_size({2, 3, 4}) == 24);
  CHECK(shape_string({2, 3}) == "[2x3]");
}

TEST_CASE("reshape keeps data") {
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor r = t.reshaped({3, 2});
  CHECK(r.shape() == Shape{3, 2});
  CHECK(r.values() == t.values());
  CHECK_THROWS_AS((void)t.reshaped({4}), ShapeError);
}

TEST_CASE("gradient buffers") {
  Tensor t({3});
  CHECK_FALSE(t.has_grad());
  t.ensure_grad()[1] = 2.0;
  CHECK(t.has_grad());
  CHECK(t.grad()[1] == 2.0);
  t.zero_grad();
  CHECK(t.grad()[1] == 0.0);
  t.clear_grad();
  CHECK_FALSE(t.has_grad());
  Tensor a({1}, {1.0}), b({1}, {1.0});
  b.ensure_grad();
  CHECK(a == b);
}

TEST_CASE("doubles print in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1e-20) == "1e-20");
  CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}
