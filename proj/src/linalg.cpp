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

#include "pmuforge/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "pmuforge/errors.hpp"
#include "pmuforge/kernels.hpp"

namespace pmuforge::linalg {

Matrix project_rows(const Matrix& x, const Matrix& basis) {
  if (x.cols() != basis.cols()) throw ValidationError("project_rows: column count mismatch");
  Matrix out(x.rows(), basis.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const auto xi = row_span(x, i);
    for (Index j = 0; j < basis.rows(); ++j) out(i, j) = kernels::dot(xi, row_span(basis, j));
  }
  return out;
}

Matrix expand_rows(const Matrix& coeffs, const Matrix& basis) {
  if (coeffs.cols() != basis.rows()) throw ValidationError("expand_rows: rank mismatch");
  Matrix out = Matrix::Zero(coeffs.rows(), basis.cols());
  for (Index i = 0; i < coeffs.rows(); ++i) {
    auto oi = row_span(out, i);
    for (Index j = 0; j < basis.rows(); ++j) kernels::axpy(coeffs(i, j), row_span(basis, j), oi);
  }
  return out;
}

Matrix gram_rows(const Matrix& x) {
  Matrix g(x.rows(), x.rows());
  for (Index i = 0; i < x.rows(); ++i) {
    const auto xi = row_span(x, i);
    for (Index j = 0; j <= i; ++j) {
      const double v = kernels::dot(xi, row_span(x, j));
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

void normalize_signs(Matrix& rows) {
  // entries within a few ulps of the largest magnitude count as ties, so the
  // choice does not depend on rounding inside the SVD
  constexpr double kTieTolerance = 1e-9;
  for (Index i = 0; i < rows.rows(); ++i) {
    if (rows.cols() == 0) continue;
    const double peak = rows.row(i).cwiseAbs().maxCoeff();
    Index best = 0;
    while (std::abs(rows(i, best)) < peak * (1.0 - kTieTolerance)) ++best;
    if (rows(i, best) < 0.0) rows.row(i) *= -1.0;
  }
}

TruncatedSvd top_right_singular_vectors(const Matrix& x, Index k) {
  const Index max_rank = std::min(x.rows(), x.cols());
  if (k < 0 || k > max_rank) {
    throw ValidationError("requested rank " + std::to_string(k) + " exceeds min dimension " +
                          std::to_string(max_rank));
  }
  TruncatedSvd out;
  out.basis.resize(k, x.cols());
  out.singular_values.resize(k);
  if (k == 0) return out;

  if (x.rows() > x.cols()) {
    const Matrix xt = x.transpose();
    const Matrix g = gram_rows(xt);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed to converge");
    const Index n = g.rows();
    for (Index j = 0; j < k; ++j) {
      const Index src = n - 1 - j;
      out.basis.row(j) = eig.eigenvectors().col(src).transpose();
      out.singular_values(j) = std::sqrt(std::max(0.0, eig.eigenvalues()(src)));
    }
    normalize_signs(out.basis);
    return out;
  }

  // Wide: eigenvectors u_j of x x^T give v_j = x^T u_j / sigma_j. Squaring
  // costs accuracy in proportion to (sigma_0 / sigma_k)^2, so poorly
  // conditioned requests go to the SVD instead.
  constexpr double kGramConditionLimit = 1e-4;
  const Matrix g = gram_rows(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition failed to converge");
  const Index n = g.rows();
  const double top = std::sqrt(std::max(0.0, eig.eigenvalues()(n - 1)));
  const double kth = std::sqrt(std::max(0.0, eig.eigenvalues()(n - k)));
  if (top > 0.0 && kth >= kGramConditionLimit * top) {
    Matrix v(k, x.cols());
    for (Index j = 0; j < k; ++j) {
      const Index src = n - 1 - j;
      const double sigma = std::sqrt(eig.eigenvalues()(src));
      v.row(j) = (eig.eigenvectors().col(src).transpose() * x) / sigma;
      out.singular_values(j) = sigma;
    }
    // one CGS2 sweep removes the rounding left by the squared problem
    out.basis = orthonormalize_rows(v, 1e-10).q;
  } else {
    const Eigen::MatrixXd dense = x;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinV);
    for (Index j = 0; j < k; ++j) {
      out.basis.row(j) = svd.matrixV().col(j).transpose();
      out.singular_values(j) = svd.singularValues()(j);
    }
  }
  normalize_signs(out.basis);
  return out;
}

RowQr orthonormalize_rows(const Matrix& m, double relative_tol) {
  const Index k = m.rows();
  const double threshold = relative_tol * m.norm();
  RowQr out;
  out.q = Matrix::Zero(k, m.cols());
  out.r = Matrix::Zero(k, k);
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  std::vector<double> coeff(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) {
    std::copy_n(m.data() + j * m.cols(), m.cols(), v.begin());
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < j; ++i) coeff[i] = kernels::dot(row_span(out.q, i), v);
      for (Index i = 0; i < j; ++i) {
        kernels::axpy(-coeff[i], row_span(out.q, i), v);
        out.r(i, j) += coeff[i];
      }
    }
    const double norm = std::sqrt(kernels::dot(v, v));
    out.r(j, j) = norm;
    if (!(norm >= threshold) || norm == 0.0) {
      out.dependent.push_back(j);
      continue;
    }
    auto qj = row_span(out.q, j);
    for (std::size_t t = 0; t < v.size(); ++t) qj[t] = v[t] / norm;
  }
  return out;
}

double orthonormality_defect(const Matrix& rows) {
  if (rows.rows() == 0) return 0.0;
  const Matrix g = gram_rows(rows);
  return (g - Matrix::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

double max_principal_angle(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ValidationError("max_principal_angle: dimension mismatch");
  if (b.rows() == 0) return 0.0;
  const Matrix coeffs = project_rows(b, a);
  Matrix residual = b - expand_rows(coeffs, a);
  const Matrix g = gram_rows(residual);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  const double largest = std::max(0.0, eig.eigenvalues().maxCoeff());
  return std::asin(std::min(1.0, std::sqrt(largest)));
}

}  // namespace pmuforge::linalg
