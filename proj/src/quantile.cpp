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

#include "pmuforge/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pmuforge/errors.hpp"

namespace pmuforge {

namespace {

struct Position {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

Position locate(std::size_t n, double level) {
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(n - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return {lo, hi, pos - static_cast<double>(lo)};
}

std::vector<std::size_t> argsort(const Matrix& m, Index col) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(m.rows()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return m(static_cast<Index>(a), col) < m(static_cast<Index>(b), col);
  });
  return idx;
}

}  // namespace

std::vector<double> default_quantile_levels() {
  std::vector<double> levels;
  for (int i = 1; i <= 19; ++i) levels.push_back(0.05 * i);
  return levels;
}

double empirical_quantile(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw ValidationError("empirical_quantile: empty sample");
  const Position p = locate(sorted.size(), level);
  return sorted[p.lo] + p.frac * (sorted[p.hi] - sorted[p.lo]);
}

double quantile_loss(const Matrix& real, const Matrix& fake, std::span<const double> levels, Matrix* grad_fake) {
  if (levels.empty()) throw ValidationError("quantile_loss: empty level set");
  for (const double l : levels) {
    if (!(l > 0.0 && l < 1.0)) throw ValidationError("quantile_loss: levels must lie in (0, 1)");
  }
  if (real.rows() < 1 || fake.rows() < 1) throw ValidationError("quantile_loss: empty batch");
  if (real.cols() != fake.cols()) throw ValidationError("quantile_loss: batches differ in dimensionality");

  const Index k = real.cols();
  const auto nr = static_cast<std::size_t>(real.rows());
  const auto nf = static_cast<std::size_t>(fake.rows());
  const double weight = 1.0 / (static_cast<double>(k) * static_cast<double>(levels.size()));
  if (grad_fake != nullptr) *grad_fake = Matrix::Zero(fake.rows(), k);

  double total = 0.0;
  for (Index d = 0; d < k; ++d) {
    const auto ir = argsort(real, d);
    const auto jf = argsort(fake, d);
    auto rv = [&](std::size_t i) { return real(static_cast<Index>(ir[i]), d); };
    auto fv = [&](std::size_t i) { return fake(static_cast<Index>(jf[i]), d); };
    for (const double level : levels) {
      const Position pr = locate(nr, level);
      const Position pf = locate(nf, level);
      double gap = 0.0;
      if (nr == nf) {
        // differencing order statistics first keeps location shifts exact
        const double d_lo = rv(pr.lo) - fv(pf.lo);
        const double d_hi = rv(pr.hi) - fv(pf.hi);
        gap = d_lo + pr.frac * (d_hi - d_lo);
      } else {
        const double qr = rv(pr.lo) + pr.frac * (rv(pr.hi) - rv(pr.lo));
        const double qf = fv(pf.lo) + pf.frac * (fv(pf.hi) - fv(pf.lo));
        gap = qr - qf;
      }
      total += std::abs(gap);
      if (grad_fake != nullptr && gap != 0.0) {
        // d|q_r - q_f| / dq_f = -sign(gap); q_f = (1 - frac) f_lo + frac f_hi
        const double s = gap > 0.0 ? -weight : weight;
        (*grad_fake)(static_cast<Index>(jf[pf.lo]), d) += s * (1.0 - pf.frac);
        (*grad_fake)(static_cast<Index>(jf[pf.hi]), d) += s * pf.frac;
      }
    }
  }
  return total / (static_cast<double>(k) * static_cast<double>(levels.size()));
}

}  // namespace pmuforge
