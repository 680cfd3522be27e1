#pragma once
// Linear stability of the paramagnetic solution: the recall onset sits where
// the largest eigenvalue of S = Q R crosses 1/([beta* beta]^2 alpha), with R
// the teacher hidden-unit correlation matrix. Uniform correlations admit a
// closed-form largest eigenvalue; random correlations are summarized over
// projected-Wishart draws.

#include "rbmts/core.hpp"
#include "rbmts/sampling.hpp"
#include "rbmts/spin_averages.hpp"

#include <cmath>

namespace rbmts {

struct StabilityReport {
  Matrix R;           // teacher hidden-unit correlations
  Matrix S;           // Q R
  double lambda_max;  // largest eigenvalue of S
  double alpha_crit;  // 1 / ([beta* beta]^2 lambda_max)
};

// Largest eigenvalue of S = Q R via the symmetric similarity form
// Q^{1/2} R Q^{1/2} (same spectrum, robust symmetric eigensolve).
inline StabilityReport critical_load(const Matrix& Q, double beta_star, double beta) {
  if (!(beta_star > 0.0) || !(beta > 0.0))
    throw ParameterOutOfRange("inverse temperatures must be positive");
  if (Q.rows() != Q.cols()) throw DimensionMismatch("covariance must be square");
  const int p_star = static_cast<int>(Q.rows());
  check_enumeration_cap(p_star, "critical_load");

  StabilityReport rep;
  rep.R = curie_weiss_moments(beta_star, Q, p_star);
  rep.S = Q * rep.R;

  Eigen::SelfAdjointEigenSolver<Matrix> q_eig(Q);
  if (q_eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, q_eig.eigenvalues().maxCoeff()))
    throw NonPSDCovariance("covariance has a negative eigenvalue");
  Matrix root = q_eig.eigenvectors() *
                q_eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                q_eig.eigenvectors().transpose();
  Matrix sym = root * rep.R * root;
  Matrix symm = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> s_eig(symm);
  rep.lambda_max = s_eig.eigenvalues().maxCoeff();

  const double gain = beta_star * beta;
  rep.alpha_crit = 1.0 / (gain * gain * rep.lambda_max);
  return rep;
}

// Closed-form largest eigenvalue for uniform correlations:
//   lambda_max = (P*-1)^2 c d + (P*-1)(c + d) + 1
// with d the uniform off-diagonal teacher correlation (d = tanh([beta*]^2 c)
// when P* = 2). d must be nonnegative; the enumeration delivers it directly.
inline StabilityReport critical_load_uniform(double c, double beta_star, double beta,
                                             int p_star) {
  if (c < 0.0 || c > 1.0) throw ParameterOutOfRange("uniform correlation must lie in [0, 1]");
  if (p_star < 1) throw ParameterOutOfRange("need at least one teacher pattern");
  if (!(beta_star > 0.0) || !(beta > 0.0))
    throw ParameterOutOfRange("inverse temperatures must be positive");
  check_enumeration_cap(p_star, "critical_load_uniform");

  StabilityReport rep;
  Matrix Q = uniform_correlation_matrix(c, p_star);
  rep.R = curie_weiss_moments(beta_star, Q, p_star);
  rep.S = Q * rep.R;
  const double d = p_star > 1 ? rep.R(0, 1) : 0.0;
  if (d < 0.0) throw ParameterOutOfRange("teacher correlation came out negative");
  const double pm1 = p_star - 1;
  rep.lambda_max = pm1 * pm1 * c * d + pm1 * (c + d) + 1.0;
  const double gain = beta_star * beta;
  rep.alpha_crit = 1.0 / (gain * gain * rep.lambda_max);
  return rep;
}

struct WishartCriticalStatistics {
  double alpha_crit_mean;     // arithmetic mean over draws
  double lambda_max_harmonic; // harmonic mean over draws
  double alpha_crit_se;       // standard error of the arithmetic mean
  int n_draws;
};

// Seeded ensemble statistics of the critical load over projected-Wishart
// correlation matrices.
inline WishartCriticalStatistics wishart_critical_statistics(double c, int p_star,
                                                             double beta_star, double beta,
                                                             int n_draws, Rng& rng) {
  if (n_draws < 1) throw ParameterOutOfRange("need at least one draw");
  double sum = 0.0, sum_sq = 0.0, inv_sum = 0.0;
  for (int i = 0; i < n_draws; ++i) {
    Rng draw_rng = rng.split(static_cast<uint64_t>(i));
    Matrix Q = sample_projected_wishart(c, p_star, p_star, draw_rng);
    auto rep = critical_load(Q, beta_star, beta);
    sum += rep.alpha_crit;
    sum_sq += rep.alpha_crit * rep.alpha_crit;
    inv_sum += 1.0 / rep.lambda_max;
  }
  WishartCriticalStatistics out;
  out.n_draws = n_draws;
  out.alpha_crit_mean = sum / n_draws;
  const double var = std::max(0.0, sum_sq / n_draws - out.alpha_crit_mean * out.alpha_crit_mean);
  out.alpha_crit_se = n_draws > 1 ? std::sqrt(var / (n_draws - 1)) : 0.0;
  out.lambda_max_harmonic = n_draws / inv_sum;
  return out;
}

}  // namespace rbmts
