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

#include "pmuforge/factor_model.hpp"
#include "pmuforge/rng.hpp"

namespace pmuforge::models::detail {

Matrix sample_copula(const CopulaParams& p, Index n, Rng& rng);
Matrix sample_gmm(const GmmParams& p, Index n, Rng& rng);
Matrix sample_adversarial(const AdversarialParams& p, Index n, Rng& rng);

void check_samples(const Matrix& samples, const char* who);

}  // namespace pmuforge::models::detail
