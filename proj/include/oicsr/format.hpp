// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_FORMAT_HPP
#define OICSR_FORMAT_HPP

#include <string>

namespace oicsr {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace oicsr

#endif  // OICSR_FORMAT_HPP
