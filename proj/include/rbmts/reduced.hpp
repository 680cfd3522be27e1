#pragma once
// Scalar fixed-point systems under the permutation-symmetric ansatz: the
// recall branch for binary and Gaussian student priors, the spurious
// spin-glass branch, and the matched-temperature specializations where the
// Mattis and spin-glass overlaps coincide. One-dimensional Gaussian
// expectations use Gauss-Hermite quadrature.

#include "rbmts/core.hpp"

#include <cmath>

namespace rbmts {

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature for E[f(z)], z ~ Normal(0, 1)
// ---------------------------------------------------------------------------
struct GaussHermiteRule {
  Vector nodes;    // abscissae already scaled by sqrt(2)
  Vector weights;  // normalized to unit mass
};

// Golub-Welsch eigensolve of the Hermite Jacobi matrix; the substitution
// z = sqrt(2) t turns the physicists' weight exp(-t^2) into a standard normal.
inline GaussHermiteRule make_gauss_hermite(int n) {
  if (n < 1) throw ParameterOutOfRange("quadrature needs at least one node");
  Matrix j = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) j(k, k - 1) = j(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(j);
  GaussHermiteRule r;
  r.nodes = std::sqrt(2.0) * es.eigenvalues();
  r.weights = es.eigenvectors().row(0).transpose().array().square();
  r.weights /= r.weights.sum();
  return r;
}

inline const GaussHermiteRule& gauss_hermite_rule() {
  static const GaussHermiteRule rule = make_gauss_hermite(61);
  return rule;
}

template <typename F>
inline double expect_z(const GaussHermiteRule& r, F&& f) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < r.nodes.size(); ++i) acc += r.weights(i) * f(r.nodes(i));
  return acc;
}

// ---------------------------------------------------------------------------
// Damped scalar iteration
// ---------------------------------------------------------------------------
struct ReducedConfig {
  double damping = 0.5;
  double tolerance = 1e-10;
  long max_iters = 100000;
  double init_m = 0.5;  // warm start; ~1e-3 probes the small-overlap basin
  double init_q = 0.5;
  double init_g = 0.5;
  int quadrature_nodes = 61;
};

namespace detail {
inline void check_reduced_args(double beta, double alpha) {
  if (!(beta > 0.0)) throw ParameterOutOfRange("inverse temperature must be positive");
  if (!(alpha >= 0.0)) throw ParameterOutOfRange("load must be nonnegative");
}
inline double sqrt0(double x) { return std::sqrt(std::max(0.0, x)); }
}  // namespace detail

// ---------------------------------------------------------------------------
// Binary recall branch:
//   m_hat = beta* beta alpha E_z tanh(beta* beta m + beta sqrt(q) z)
//   q_hat = beta^2   alpha E_z tanh^2(beta^2  m + beta sqrt(q) z)
//   m     = E_z tanh (m_hat + sqrt(q_hat) z)
//   q     = E_z tanh^2(m_hat + sqrt(q_hat) z)
// The beta^2 vs beta* beta field arguments differ between the conjugate lines;
// they are implemented exactly as displayed, and the matched-temperature
// system below provides the independent cross-check.
// ---------------------------------------------------------------------------
struct BinaryPsbSolution {
  double m = 0, q = 0, m_hat = 0, q_hat = 0;
  bool converged = false;
  long iterations = 0;
  double residual = 0;
};

inline BinaryPsbSolution solve_binary_psb(double beta_star, double beta, double alpha,
                                          const ReducedConfig& cfg = {}) {
  detail::check_reduced_args(beta, alpha);
  if (!(beta_star > 0.0)) throw ParameterOutOfRange("inverse temperature must be positive");
  const GaussHermiteRule rule = make_gauss_hermite(cfg.quadrature_nodes);
  const double d = cfg.damping;
  double m = cfg.init_m, q = cfg.init_q, mh = 0.0, qh = 0.0;
  BinaryPsbSolution out;
  for (long it = 1; it <= cfg.max_iters; ++it) {
    const double sq = detail::sqrt0(q);
    const double mh_t =
        beta_star * beta * alpha *
        expect_z(rule, [&](double z) { return std::tanh(beta_star * beta * m + beta * sq * z); });
    const double qh_t = beta * beta * alpha * expect_z(rule, [&](double z) {
                          const double t = std::tanh(beta * beta * m + beta * sq * z);
                          return t * t;
                        });
    const double mh_n = (1 - d) * mh + d * mh_t;
    const double qh_n = (1 - d) * qh + d * qh_t;
    const double sqh = detail::sqrt0(qh_n);
    const double m_t = expect_z(rule, [&](double z) { return std::tanh(mh_n + sqh * z); });
    const double q_t = expect_z(rule, [&](double z) {
      const double t = std::tanh(mh_n + sqh * z);
      return t * t;
    });
    out.residual = std::max({std::abs(mh_t - mh), std::abs(qh_t - qh), std::abs(m_t - m),
                             std::abs(q_t - q)});
    mh = mh_n;
    qh = qh_n;
    m = (1 - d) * m + d * m_t;
    q = (1 - d) * q + d * q_t;
    out.iterations = it;
    if (out.residual < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.m = m;
  out.q = q;
  out.m_hat = mh;
  out.q_hat = qh;
  return out;
}

// ---------------------------------------------------------------------------
// Spurious spin-glass branch (no teacher alignment):
//   g_hat = beta^2 alpha E_z tanh^2(beta sqrt(g) z),  g = E_z tanh^2(sqrt(g_hat) z)
// ---------------------------------------------------------------------------
struct SpuriousSolution {
  double g = 0, g_hat = 0;
  bool converged = false;
  long iterations = 0;
  double residual = 0;
};

inline SpuriousSolution solve_spurious(double beta, double alpha, const ReducedConfig& cfg = {}) {
  detail::check_reduced_args(beta, alpha);
  const GaussHermiteRule rule = make_gauss_hermite(cfg.quadrature_nodes);
  const double d = cfg.damping;
  double g = cfg.init_g, gh = 0.0;
  SpuriousSolution out;
  for (long it = 1; it <= cfg.max_iters; ++it) {
    const double sg = detail::sqrt0(g);
    const double gh_t = beta * beta * alpha * expect_z(rule, [&](double z) {
                          const double t = std::tanh(beta * sg * z);
                          return t * t;
                        });
    const double gh_n = (1 - d) * gh + d * gh_t;
    const double sgh = detail::sqrt0(gh_n);
    const double g_t = expect_z(rule, [&](double z) {
      const double t = std::tanh(sgh * z);
      return t * t;
    });
    out.residual = std::max(std::abs(gh_t - gh), std::abs(g_t - g));
    gh = gh_n;
    g = (1 - d) * g + d * g_t;
    out.iterations = it;
    if (out.residual < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.g = g;
  out.g_hat = gh;
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian-prior recall + spurious branch: same conjugate block as the binary
// system; the pattern-side averages close in rational form,
//   m = m_hat/(1+q_hat),  q = m_hat^2/(1+q_hat)^2 + q_hat/(1+q_hat)^2,
//   g = g_hat/(1+g_hat)^2.
// ---------------------------------------------------------------------------
struct GaussianPsbSolution {
  double m = 0, q = 0, g = 0, m_hat = 0, q_hat = 0, g_hat = 0;
  bool converged = false;
  long iterations = 0;
  double residual = 0;
};

inline GaussianPsbSolution solve_gaussian_psb(double beta_star, double beta, double alpha,
                                              const ReducedConfig& cfg = {}) {
  detail::check_reduced_args(beta, alpha);
  if (!(beta_star > 0.0)) throw ParameterOutOfRange("inverse temperature must be positive");
  const GaussHermiteRule rule = make_gauss_hermite(cfg.quadrature_nodes);
  const double d = cfg.damping;
  double m = cfg.init_m, q = cfg.init_q, g = cfg.init_g;
  double mh = 0.0, qh = 0.0, gh = 0.0;
  GaussianPsbSolution out;
  for (long it = 1; it <= cfg.max_iters; ++it) {
    const double sq = detail::sqrt0(q), sg = detail::sqrt0(g);
    const double mh_t =
        beta_star * beta * alpha *
        expect_z(rule, [&](double z) { return std::tanh(beta_star * beta * m + beta * sq * z); });
    const double qh_t = beta * beta * alpha * expect_z(rule, [&](double z) {
                          const double t = std::tanh(beta * beta * m + beta * sq * z);
                          return t * t;
                        });
    const double gh_t = beta * beta * alpha * expect_z(rule, [&](double z) {
                          const double t = std::tanh(beta * sg * z);
                          return t * t;
                        });
    const double mh_n = (1 - d) * mh + d * mh_t;
    const double qh_n = (1 - d) * qh + d * qh_t;
    const double gh_n = (1 - d) * gh + d * gh_t;
    const double m_t = mh_n / (1.0 + qh_n);
    const double q_t = (mh_n * mh_n + qh_n) / ((1.0 + qh_n) * (1.0 + qh_n));
    const double g_t = gh_n / ((1.0 + gh_n) * (1.0 + gh_n));
    out.residual = std::max({std::abs(mh_t - mh), std::abs(qh_t - qh), std::abs(gh_t - gh),
                             std::abs(m_t - m), std::abs(q_t - q), std::abs(g_t - g)});
    mh = mh_n;
    qh = qh_n;
    gh = gh_n;
    m = (1 - d) * m + d * m_t;
    q = (1 - d) * q + d * q_t;
    g = (1 - d) * g + d * g_t;
    out.iterations = it;
    if (out.residual < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.m = m;
  out.q = q;
  out.g = g;
  out.m_hat = mh;
  out.q_hat = qh;
  out.g_hat = gh;
  return out;
}

// ---------------------------------------------------------------------------
// Matched-temperature (beta = beta*) specializations: the recall branch
// collapses to two scalars with q = m enforced by the field structure.
// ---------------------------------------------------------------------------
struct NishimoriSolution {
  double m = 0, m_hat = 0;
  bool converged = false;
  long iterations = 0;
  double residual = 0;
};

inline NishimoriSolution solve_binary_matched(double beta, double alpha,
                                              const ReducedConfig& cfg = {}) {
  detail::check_reduced_args(beta, alpha);
  const GaussHermiteRule rule = make_gauss_hermite(cfg.quadrature_nodes);
  const double d = cfg.damping;
  double m = cfg.init_m, mh = 0.0;
  NishimoriSolution out;
  for (long it = 1; it <= cfg.max_iters; ++it) {
    const double sm = detail::sqrt0(m);
    const double mh_t =
        beta * beta * alpha *
        expect_z(rule, [&](double z) { return std::tanh(beta * beta * m + beta * sm * z); });
    const double mh_n = (1 - d) * mh + d * mh_t;
    const double smh = detail::sqrt0(mh_n);
    const double m_t = expect_z(rule, [&](double z) { return std::tanh(mh_n + smh * z); });
    out.residual = std::max(std::abs(mh_t - mh), std::abs(m_t - m));
    mh = mh_n;
    m = (1 - d) * m + d * m_t;
    out.iterations = it;
    if (out.residual < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.m = m;
  out.m_hat = mh;
  return out;
}

inline NishimoriSolution solve_gaussian_matched(double beta, double alpha,
                                                const ReducedConfig& cfg = {}) {
  detail::check_reduced_args(beta, alpha);
  const GaussHermiteRule rule = make_gauss_hermite(cfg.quadrature_nodes);
  const double d = cfg.damping;
  double m = cfg.init_m, mh = 0.0;
  NishimoriSolution out;
  for (long it = 1; it <= cfg.max_iters; ++it) {
    const double sm = detail::sqrt0(m);
    const double mh_t =
        beta * beta * alpha *
        expect_z(rule, [&](double z) { return std::tanh(beta * beta * m + beta * sm * z); });
    const double mh_n = (1 - d) * mh + d * mh_t;
    const double m_t = mh_n / (1.0 + mh_n);
    out.residual = std::max(std::abs(mh_t - mh), std::abs(m_t - m));
    mh = mh_n;
    m = (1 - d) * m + d * m_t;
    out.iterations = it;
    if (out.residual < cfg.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.m = m;
  out.m_hat = mh;
  return out;
}

}  // namespace rbmts
