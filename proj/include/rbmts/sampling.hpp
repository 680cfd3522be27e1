#pragma once
// Teacher-pattern samplers: correlated binary patterns via the arcsine
// construction, correlated Gaussian patterns, and projected Wishart
// correlation matrices.

#include "rbmts/core.hpp"

#include <cmath>

namespace rbmts {

namespace detail {
// Square root factor L with L L^T = A for a symmetric PSD matrix, tolerating the
// numerical boundary: Cholesky first, eigendecomposition with clamping as fallback.
inline Matrix psd_sqrt_factor(const Matrix& a, const char* what, bool* degenerate = nullptr) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) {
    if (degenerate) *degenerate = false;
    return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  Vector ev = es.eigenvalues();
  const double scale = std::max({std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()), 1.0});
  if (ev.minCoeff() < -1e-10 * scale)
    throw NonPSDTransformedCovariance(std::string(what) + ": eigenvalue " +
                                      std::to_string(ev.minCoeff()));
  if (degenerate) *degenerate = true;
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}
}  // namespace detail

// Binary +-1 patterns whose column covariance converges to Q: each column is
// sign(x) with x ~ Normal(0, sin((pi/2) Q)). Perfect correlation (c = 1) makes
// the transformed matrix singular; the eigendecomposition fallback handles it.
inline PatternMatrix sample_binary_arcsine(const Matrix& Q, int n, Rng& rng) {
  const int p = static_cast<int>(Q.rows());
  if (Q.cols() != p) throw DimensionMismatch("covariance must be square");
  Matrix transformed = (Q.array() * (M_PI / 2.0)).sin().matrix();
  Matrix l = detail::psd_sqrt_factor(transformed, "arcsine-transformed covariance");
  PatternMatrix out;
  out.binary = true;
  out.values.resize(p, n);
  Vector g(p);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < p; ++i) g(i) = rng.normal();
    Vector x = l * g;
    for (int i = 0; i < p; ++i) out.values(i, j) = x(i) >= 0.0 ? 1.0 : -1.0;
  }
  return out;
}

// Real-valued patterns with column covariance exactly Q (Gaussian draws).
inline PatternMatrix sample_gaussian_patterns(const Matrix& Q, int n, Rng& rng) {
  const int p = static_cast<int>(Q.rows());
  if (Q.cols() != p) throw DimensionMismatch("covariance must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
  const double scale = std::max({std::abs(es.eigenvalues().minCoeff()),
                                 std::abs(es.eigenvalues().maxCoeff()), 1.0});
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw NonPSDCovariance("pattern covariance has eigenvalue " +
                           std::to_string(es.eigenvalues().minCoeff()));
  Matrix l = detail::psd_sqrt_factor(Q, "pattern covariance");
  PatternMatrix out;
  out.binary = false;
  out.values.resize(p, n);
  Vector g(p);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < p; ++i) g(i) = rng.normal();
    out.values.col(j) = l * g;
  }
  return out;
}

// Random correlation matrix: Q = diag(B)^{-1/2} B diag(B)^{-1/2} with
// B = A A^T, A's columns i.i.d. Normal(0, uniform(c)). d = 0 requests D = P.
inline Matrix sample_projected_wishart(double c, int p, int d, Rng& rng) {
  return detail::projected_wishart(c, p, d > 0 ? d : p, rng);
}

}  // namespace rbmts
