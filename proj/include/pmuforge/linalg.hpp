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

// Row-oriented dense linear algebra. Signature bases are stored as k x T
// matrices whose rows are the signatures, so every projection and
// expansion is a sequence of contiguous dot/axpy kernel calls.

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace pmuforge {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline std::span<const double> row_span(const Matrix& m, Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(Matrix& m, Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

namespace linalg {

/// x * basis^T: coefficients of every row of `x` against every basis row.
Matrix project_rows(const Matrix& x, const Matrix& basis);

/// coeffs * basis: re-expands coefficient rows on a row basis.
Matrix expand_rows(const Matrix& coeffs, const Matrix& basis);

/// x * x^T, symmetric.
Matrix gram_rows(const Matrix& x);

struct TruncatedSvd {
  Matrix basis;             // k x cols, orthonormal rows (right singular vectors)
  Vector singular_values;   // length k, descending
};

/// Top-k right singular vectors of `x` through the eigendecomposition of the
/// smaller Gram matrix. Wide inputs whose k-th singular value is below 1e-4
/// of the largest fall back to a divide-and-conquer SVD.
/// Signs follow normalize_signs().
TruncatedSvd top_right_singular_vectors(const Matrix& x, Index k);

/// Flips each row so its largest-magnitude entry is positive. Entries within a
/// relative 1e-9 of the largest count as ties and resolve to the earliest index.
void normalize_signs(Matrix& rows);

struct RowQr {
  Matrix q;                     // k x T, orthonormal rows
  Matrix r;                     // k x k upper triangular, m = r^T * q
  std::vector<Index> dependent; // rows with |r_jj| below tolerance
};

/// Gram-Schmidt with one full reorthogonalization pass (CGS2) over the rows
/// of `m`: m^T = Q R with Q orthonormal columns. Rows whose remaining norm
/// falls below `relative_tol * ||m||_F` are reported as dependent; their q
/// rows are left at zero.
RowQr orthonormalize_rows(const Matrix& m, double relative_tol);

/// max_ij |(a a^T - I)_ij|.
double orthonormality_defect(const Matrix& rows);

/// Largest principal angle (radians) between span(b) and span(a) for
/// orthonormal row bases, computed from the sine so that tiny angles keep
/// full relative precision.
double max_principal_angle(const Matrix& a, const Matrix& b);

}  // namespace linalg
}  // namespace pmuforge
