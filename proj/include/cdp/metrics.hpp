// Copyright 2026 The cdpbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <stdexcept>

#include "cdp/image.hpp"

namespace cdp {

/// Pearson correlation of the flattened pixel vectors. Throws on shape
/// mismatch and on constant inputs, which indicate a pipeline bug rather
/// than a data point.
inline double normalized_correlation(const Image& a, const Image& b) {
  require_same_shape(a, b, "normalized_correlation");
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw std::invalid_argument("normalized_correlation: degenerate constant image");
  return sab / (std::sqrt(saa) * std::sqrt(sbb));
}

/// Number of disagreeing positions between two binary images.
inline int hamming_distance(const Image& a, const Image& b) {
  require_same_shape(a, b, "hamming_distance");
  if (!a.is_binary() || !b.is_binary())
    throw std::invalid_argument("hamming_distance: inputs must be binary");
  int count = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) ++count;
  return count;
}

}  // namespace cdp
