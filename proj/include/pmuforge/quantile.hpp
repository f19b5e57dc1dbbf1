// Copyright 2026 The pmuforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>
#include <vector>

#include "pmuforge/linalg.hpp"

namespace pmuforge {

/// {0.05, 0.10, ..., 0.95}.
std::vector<double> default_quantile_levels();

/// Linear interpolation between order statistics at position level * (n - 1).
/// `sorted` must be ascending and non-empty; level is clamped to [0, 1].
double empirical_quantile(std::span<const double> sorted, double level);

/// Mean over dimensions and levels of |q_real(l) - q_fake(l)|. When
/// `grad_fake` is non-null it receives d(loss)/d(fake) (a subgradient at
/// ties). Throws ValidationError for empty batches, mismatched widths or an
/// empty / out-of-range level set.
double quantile_loss(const Matrix& real, const Matrix& fake, std::span<const double> levels,
                     Matrix* grad_fake = nullptr);

}  // namespace pmuforge
