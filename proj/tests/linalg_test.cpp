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

#include <gtest/gtest.h>

#include <cmath>

#include "pmuforge/linalg.hpp"
#include "test_util.hpp"

namespace pmuforge::linalg {
namespace {

using testing::random_matrix;

Matrix orthonormal_rows(Index k, Index t, Rng& rng) { return orthonormalize_rows(random_matrix(k, t, rng), 1e-12).q; }

TEST(Linalg, ProjectAndExpand) {
  Rng rng(1);
  const Matrix basis = orthonormal_rows(3, 20, rng);
  const Matrix coeffs = random_matrix(5, 3, rng);
  const Matrix x = expand_rows(coeffs, basis);
  EXPECT_LT((project_rows(x, basis) - coeffs).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((gram_rows(x) - x * x.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Linalg, NormalizeSignsLargestEntryPositive) {
  Matrix m(2, 3);
  m << 0.1, -0.9, 0.2,  //
      0.5, -0.5, 0.1;   // tie: earliest index wins
  normalize_signs(m);
  EXPECT_GT(m(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(m(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(m(1, 1), -0.5);
}

TEST(Linalg, TopSingularVectorsTallAndWideAgree) {
  Rng rng(2);
  const Matrix basis = orthonormal_rows(2, 8, rng);
  Matrix coeffs(30, 2);
  for (Index i = 0; i < 30; ++i) {
    coeffs(i, 0) = 5.0 * standard_normal(rng);
    coeffs(i, 1) = standard_normal(rng);
  }
  const Matrix tall = expand_rows(coeffs, basis);  // 30 x 8
  const Matrix wide = tall.topRows(4);             // 4 x 8
  const TruncatedSvd a = top_right_singular_vectors(tall, 2);
  const TruncatedSvd b = top_right_singular_vectors(wide, 2);
  EXPECT_LT(max_principal_angle(a.basis, basis), 1e-10);
  EXPECT_LT(max_principal_angle(b.basis, basis), 1e-10);
  EXPECT_LT(orthonormality_defect(a.basis), 1e-12);
  EXPECT_GE(a.singular_values[0], a.singular_values[1]);
}

TEST(Linalg, SingularValuesMatchEigenSvd) {
  Rng rng(3);
  const Matrix x = random_matrix(12, 7, rng);
  const TruncatedSvd s = top_right_singular_vectors(x, 7);
  Eigen::JacobiSVD<Eigen::MatrixXd> ref{Eigen::MatrixXd(x)};
  for (Index i = 0; i < 7; ++i) EXPECT_NEAR(s.singular_values[i], ref.singularValues()[i], 1e-10);
}

TEST(Linalg, WidePathsMatchSvdAndHandleRankDeficiency) {
  Rng rng(4);
  // well conditioned: Gram route
  const Matrix x = random_matrix(9, 50, rng);
  const TruncatedSvd s = top_right_singular_vectors(x, 5);
  Eigen::JacobiSVD<Eigen::MatrixXd> ref{Eigen::MatrixXd(x), Eigen::ComputeThinV};
  for (Index i = 0; i < 5; ++i) EXPECT_NEAR(s.singular_values[i], ref.singularValues()[i], 1e-10);
  const Matrix v = ref.matrixV().leftCols(5).transpose();
  EXPECT_LT(max_principal_angle(s.basis, v), 1e-10);
  EXPECT_LT(orthonormality_defect(s.basis), 1e-12);
  // rank 2 asked for 4: the SVD route still returns orthonormal rows
  const Matrix low = expand_rows(random_matrix(9, 2, rng), orthonormal_rows(2, 50, rng));
  const TruncatedSvd d = top_right_singular_vectors(low, 4);
  EXPECT_LT(orthonormality_defect(d.basis), 1e-12);
  EXPECT_LT(d.singular_values[3], 1e-12 * d.singular_values[0]);
  EXPECT_LT(max_principal_angle(d.basis.topRows(2), top_right_singular_vectors(low, 2).basis), 1e-10);
}

TEST(Linalg, RowQrReproducesInput) {
  Rng rng(4);
  const Matrix m = random_matrix(5, 40, rng);
  const RowQr qr = orthonormalize_rows(m, 1e-10);
  EXPECT_TRUE(qr.dependent.empty());
  EXPECT_LT(orthonormality_defect(qr.q), 1e-14 * 40);
  EXPECT_LT((qr.r.transpose() * qr.q - m).norm() / m.norm(), 1e-14);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < i; ++j) EXPECT_EQ(qr.r(i, j), 0.0);
  }
}

TEST(Linalg, RowQrFlagsDependentRows) {
  Rng rng(5);
  Matrix m = random_matrix(3, 10, rng);
  m.row(2) = 2.0 * m.row(0) - m.row(1);
  const RowQr qr = orthonormalize_rows(m, 1e-10);
  ASSERT_EQ(qr.dependent.size(), 1u);
  EXPECT_EQ(qr.dependent[0], 2);
}

TEST(Linalg, PrincipalAngleKnownValue) {
  Matrix a(1, 2), b(1, 2);
  a << 1, 0;
  const double theta = 0.3;
  b << std::cos(theta), std::sin(theta);
  EXPECT_NEAR(max_principal_angle(a, b), theta, 1e-12);
  EXPECT_NEAR(max_principal_angle(a, a), 0.0, 1e-15);
  Matrix tiny(1, 2);
  tiny << std::cos(1e-9), std::sin(1e-9);
  EXPECT_NEAR(max_principal_angle(a, tiny), 1e-9, 1e-15);
}

}  // namespace
}  // namespace pmuforge::linalg
