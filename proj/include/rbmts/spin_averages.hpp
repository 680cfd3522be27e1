#pragma once
// Effective Hamiltonians and their thermal averages: exhaustive enumeration
// over binary spin states (complex-safe) and the Gaussian-pattern closed
// forms. Everything downstream of the saddle-point equations funnels through
// the kernels in this header.

#include "rbmts/core.hpp"

#include <cmath>
#include <vector>

namespace rbmts {

// ---------------------------------------------------------------------------
// Effective field matrix A(q): elementwise complex sqrt of
//   2 q_{uv} - delta_{uv} * sum_eta q_{u,eta}.
// Radicands go negative for legitimate states; complex arithmetic is used
// throughout and only final expectations take real parts.
// ---------------------------------------------------------------------------
inline CMatrix effective_field_matrix(const Matrix& q) {
  const int p = static_cast<int>(q.rows());
  Vector row_sum = q.rowwise().sum();
  CMatrix a(p, p);
  for (int u = 0; u < p; ++u)
    for (int v = 0; v < p; ++v) {
      const double radicand = 2.0 * q(u, v) - (u == v ? row_sum(u) : 0.0);
      a(u, v) = std::sqrt(Complex(radicand, 0.0));
    }
  return a;
}

// Noise contraction c_u = sum_v A_{uv} (z_{uv} + z_{vu}) / 2. For symmetric q
// this equals the symmetric-coupling form A_{uv} z_{uv} (xi_u + xi_v)/2 summed
// over pairs, identically in z.
inline CVector effective_fields(const CMatrix& a, const Matrix& z) {
  Matrix w = 0.5 * (z + z.transpose());
  return (a.array() * w.cast<Complex>().array()).rowwise().sum();
}

// ---------------------------------------------------------------------------
// Enumeration kernel
// ---------------------------------------------------------------------------
// Per-state quadratic energies (1/2) xi^T B xi for xi in {-1,+1}^p, state s
// encoded bitwise (bit u set => xi_u = +1).
inline Vector quadratic_state_energies(const Matrix& b, double scale = 1.0) {
  const int p = static_cast<int>(b.rows());
  check_enumeration_cap(p, "quadratic_state_energies");
  const size_t n = size_t{1} << p;
  Vector e(static_cast<Eigen::Index>(n));
  Vector xi(p);
  for (size_t s = 0; s < n; ++s) {
    for (int u = 0; u < p; ++u) xi(u) = (s >> u) & 1 ? 1.0 : -1.0;
    e(static_cast<Eigen::Index>(s)) = 0.5 * scale * xi.dot(b * xi);
  }
  return e;
}

template <typename Scal>
struct GibbsMoments {
  Eigen::Vector<Scal, Eigen::Dynamic> mean;                   // <xi>
  Eigen::Matrix<Scal, Eigen::Dynamic, Eigen::Dynamic> second; // <xi xi^T>, unit diagonal
  double log_abs_z = 0.0;  // log |sum_xi exp(E(xi))| over the counting measure
};

// Gibbs moments of exp(base(xi) + t . xi) summed over all states. base holds
// the per-state quadratic part; t may be real or complex. Factorized field
// weights keep the inner loop at O(2^p * p) plus the O(2^p * p^2) second-moment
// accumulation.
template <typename Scal>
inline void enumerate_gibbs_into(const Vector& base,
                                 const Eigen::Vector<Scal, Eigen::Dynamic>& t,
                                 GibbsMoments<Scal>& out) {
  const int p = static_cast<int>(t.size());
  const size_t n = size_t{1} << p;
  if (base.size() != static_cast<Eigen::Index>(n))
    throw DimensionMismatch("state-energy table does not match field dimension");
  double t_abs = 0.0;
  for (int u = 0; u < p; ++u) {
    const double re = std::real(Scal(t(u)));
    if (!std::isfinite(re) || !std::isfinite(std::imag(Scal(t(u)))))
      throw NonFiniteEnergy("non-finite linear field");
    t_abs += std::abs(re);
  }
  const double shift = base.maxCoeff() + t_abs;  // every weight magnitude <= 1
  if (!std::isfinite(shift)) throw NonFiniteEnergy("non-finite quadratic energy");

  Eigen::Vector<Scal, Eigen::Dynamic> plus(p), minus(p);
  for (int u = 0; u < p; ++u) {
    plus(u) = std::exp(Scal(t(u)));
    minus(u) = Scal(1.0) / plus(u);
  }
  out.mean.setZero(p);
  out.second.setZero(p, p);
  Scal z_total = Scal(0);
  for (size_t s = 0; s < n; ++s) {
    Scal w = Scal(std::exp(base(static_cast<Eigen::Index>(s)) - shift));
    for (int u = 0; u < p; ++u) w *= ((s >> u) & 1) ? plus(u) : minus(u);
    z_total += w;
    for (int u = 0; u < p; ++u) {
      const double xu = ((s >> u) & 1) ? 1.0 : -1.0;
      const Scal wu = w * xu;
      out.mean(u) += wu;
      for (int v = u + 1; v < p; ++v) {
        const double xv = ((s >> v) & 1) ? 1.0 : -1.0;
        out.second(u, v) += wu * xv;
      }
    }
  }
  const double z_abs = std::abs(z_total);
  if (!(z_abs > 0.0) || !std::isfinite(z_abs))
    throw NonFiniteEnergy("vanishing or non-finite partition sum");
  out.mean /= z_total;
  for (int u = 0; u < p; ++u) {
    out.second(u, u) = Scal(1.0);  // xi_u^2 = 1 identically
    for (int v = u + 1; v < p; ++v) {
      out.second(u, v) /= z_total;
      out.second(v, u) = out.second(u, v);
    }
  }
  out.log_abs_z = shift + std::log(z_abs);
}

template <typename Scal>
inline GibbsMoments<Scal> enumerate_gibbs(const Vector& base,
                                          const Eigen::Vector<Scal, Eigen::Dynamic>& t) {
  GibbsMoments<Scal> out;
  enumerate_gibbs_into(base, t, out);
  return out;
}

// ---------------------------------------------------------------------------
// The generic pairwise Hamiltonian
//   L_{l1,l2}(xi; xi*, z) = (1/2) l2^2 xi^T (s - q) xi
//                         + l1 l2 (m^T xi*) . xi
//                         + l2 c(z) . xi,   c = rowsum(A(q) .* (z+z^T)/2)
// with the order-parameter-dependent pieces precomputed once.
// ---------------------------------------------------------------------------
struct ThermalMoments {
  CVector mean;
  CMatrix second;
  double log_abs_z = 0.0;
};

class LContext {
 public:
  LContext(const Matrix& m, const Matrix& s, const Matrix& q, double l1, double l2)
      : m_(m), l1_(l1), l2_(l2), a_(effective_field_matrix(q)) {
    if (s.rows() != q.rows() || s.cols() != q.cols() || s.rows() != m.cols())
      throw DimensionMismatch("order-parameter shapes disagree in L");
    base_ = quadratic_state_energies(s - q, l2 * l2);
    a_is_real_ = (a_.imag().array().abs().maxCoeff() == 0.0);
  }

  int p() const { return static_cast<int>(m_.cols()); }
  const CMatrix& field_matrix() const { return a_; }

  void moments_into(const Vector& xi_star, const Matrix& z, ThermalMoments& out) const {
    if (xi_star.size() != m_.rows()) throw DimensionMismatch("source-pattern size mismatch");
    if (z.rows() != m_.cols() || z.cols() != m_.cols())
      throw DimensionMismatch("noise matrix size mismatch");
    Vector drive = l1_ * l2_ * (m_.transpose() * xi_star);
    CVector c = effective_fields(a_, z);
    if (a_is_real_) {
      Vector t = drive + l2_ * c.real();
      enumerate_gibbs_into(base_, t, real_scratch_);
      out.mean = real_scratch_.mean.cast<Complex>();
      out.second = real_scratch_.second.cast<Complex>();
      out.log_abs_z = real_scratch_.log_abs_z;
    } else {
      CVector t = drive.cast<Complex>() + l2_ * c;
      enumerate_gibbs_into(base_, t, cplx_scratch_);
      out.mean = cplx_scratch_.mean;
      out.second = cplx_scratch_.second;
      out.log_abs_z = cplx_scratch_.log_abs_z;
    }
  }

  ThermalMoments moments(const Vector& xi_star, const Matrix& z) const {
    ThermalMoments out;
    moments_into(xi_star, z, out);
    return out;
  }

 private:
  Matrix m_;
  double l1_, l2_;
  CMatrix a_;
  Vector base_;
  bool a_is_real_ = false;
  mutable GibbsMoments<double> real_scratch_;     // a solve is single-threaded;
  mutable GibbsMoments<Complex> cplx_scratch_;    // contexts are not shared
};

// Thermal averages over the data-side Hamiltonian (teacher/student hidden
// units against the overlap structure).
inline ThermalMoments hidden_moments_L_O(const OrderParameterState& st, const Hyperparameters& h,
                                         const Vector& tau_star, const Matrix& z) {
  return LContext(st.m, st.s, st.q, h.beta_star, h.beta).moments(tau_star, z);
}

// Thermal averages over the conjugate-side Hamiltonian for binary patterns.
inline ThermalMoments pattern_moments_binary(const Matrix& m_hat, const Matrix& s_hat,
                                             const Matrix& q_hat, const Vector& xi_star,
                                             const Matrix& z) {
  return LContext(m_hat, s_hat, q_hat, 1.0, 1.0).moments(xi_star, z);
}

// ---------------------------------------------------------------------------
// Hidden-unit reference measures (quadratic Hamiltonians without noise)
// ---------------------------------------------------------------------------
struct QuadraticMoments {
  Matrix second;     // <tau tau^T>
  double log_z = 0;  // log sum_tau exp(H) (counting measure)
};

// <tau tau^T> under exp((1/2) beta^2 tau^T s tau).
inline QuadraticMoments hidden_moments_M(const Matrix& s, double beta) {
  const int p = static_cast<int>(s.rows());
  check_enumeration_cap(p, "hidden_moments_M");
  Vector base = quadratic_state_energies(s, beta * beta);
  Eigen::Vector<double, Eigen::Dynamic> t = Vector::Zero(p);
  auto g = enumerate_gibbs(base, t);
  return {g.second, g.log_abs_z};
}

// Teacher hidden-unit correlation matrix R under the teacher measure.
inline Matrix curie_weiss_moments(double beta_star, const Matrix& Q, int p_star) {
  if (Q.rows() != p_star || Q.cols() != p_star)
    throw DimensionMismatch("covariance side does not match p_star");
  return hidden_moments_M(Q, beta_star).second;
}

// ---------------------------------------------------------------------------
// Weighted spin ensembles for outer averages
// ---------------------------------------------------------------------------
struct SpinEnsemble {
  Matrix states;   // (#states x p) of +-1
  Vector weights;  // normalized
  int count() const { return static_cast<int>(states.rows()); }
};

// All 2^p states with weights proportional to exp((1/2) beta^2 tau^T Q tau):
// the exact outer measure for teacher hidden units.
inline SpinEnsemble teacher_ensemble(double beta_star, const Matrix& Q) {
  const int p = static_cast<int>(Q.rows());
  check_enumeration_cap(p, "teacher_ensemble");
  const size_t n = size_t{1} << p;
  SpinEnsemble e;
  e.states.resize(static_cast<Eigen::Index>(n), p);
  for (size_t s = 0; s < n; ++s)
    for (int u = 0; u < p; ++u)
      e.states(static_cast<Eigen::Index>(s), u) = ((s >> u) & 1) ? 1.0 : -1.0;
  Vector energy = quadratic_state_energies(Q, beta_star * beta_star);
  Vector w = (energy.array() - energy.maxCoeff()).exp();
  e.weights = w / w.sum();
  return e;
}

// Sign-vector distribution of one column of a correlated binary pattern
// matrix: orthant masses of Normal(0, sin(pi/2 Q)). Exact in closed form for
// p <= 2; Monte Carlo with a fixed internal seed above that (cached by the
// caller per Q).
inline SpinEnsemble binary_source_ensemble(const Matrix& Q, int mc_samples = 1000000,
                                           uint64_t mc_seed = 0x0f1e2d3c4b5a6978ULL) {
  const int p = static_cast<int>(Q.rows());
  check_enumeration_cap(p, "binary_source_ensemble");
  const size_t n = size_t{1} << p;
  SpinEnsemble e;
  e.states.resize(static_cast<Eigen::Index>(n), p);
  for (size_t s = 0; s < n; ++s)
    for (int u = 0; u < p; ++u)
      e.states(static_cast<Eigen::Index>(s), u) = ((s >> u) & 1) ? 1.0 : -1.0;
  e.weights.resize(static_cast<Eigen::Index>(n));
  if (p == 1) {
    e.weights.setConstant(0.5);
    return e;
  }
  if (p == 2) {
    // Quadrant masses of a centered bivariate normal with correlation rho:
    // agreeing signs carry 1/4 + asin(rho)/(2 pi) each.
    const double rho = std::sin(M_PI / 2.0 * Q(0, 1));
    const double agree = 0.25 + std::asin(std::min(1.0, std::max(-1.0, rho))) / (2.0 * M_PI);
    const double differ = 0.25 - std::asin(std::min(1.0, std::max(-1.0, rho))) / (2.0 * M_PI);
    for (Eigen::Index s = 0; s < 4; ++s) {
      const bool same = e.states(s, 0) == e.states(s, 1);
      e.weights(s) = same ? agree : differ;
    }
    e.weights /= e.weights.sum();
    return e;
  }
  // Monte Carlo orthant masses of the transformed Gaussian.
  Matrix transformed = (Q.array() * (M_PI / 2.0)).sin().matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> es(transformed);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw NonPSDTransformedCovariance("arcsine-transformed covariance is indefinite");
  Matrix l = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Rng rng(mc_seed);
  Eigen::VectorXd counts = Vector::Zero(static_cast<Eigen::Index>(n));
  Vector g(p);
  for (int i = 0; i < mc_samples; ++i) {
    for (int u = 0; u < p; ++u) g(u) = rng.normal();
    Vector x = l * g;
    size_t s = 0;
    for (int u = 0; u < p; ++u)
      if (x(u) >= 0.0) s |= size_t{1} << u;
    counts(static_cast<Eigen::Index>(s)) += 1.0;
  }
  e.weights = counts / counts.sum();
  return e;
}

// ---------------------------------------------------------------------------
// Gaussian-pattern closed forms
// ---------------------------------------------------------------------------
struct GaussianMoments {
  CVector mean;       // <xi>, complex when the noise couples imaginary fields
  Matrix covariance;  // <xi xi^T> - <xi><xi>^T = G^{-1}
};

namespace detail {
inline Eigen::LDLT<Matrix> precision_factor(const Matrix& q_hat, const Matrix& s_hat) {
  Matrix g = Matrix::Identity(q_hat.rows(), q_hat.cols()) + q_hat - s_hat;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw SingularPrecision("pattern precision matrix is singular or ill-conditioned");
  return Eigen::LDLT<Matrix>(g);
}
}  // namespace detail

// Exact posterior mean/covariance of Gaussian patterns under the conjugate
// Hamiltonian: mean = G^{-1} [m_hat^T xi* + c(z)], covariance = G^{-1}, with
// G = I + q_hat - s_hat.
inline GaussianMoments pattern_moments_gaussian(const Matrix& m_hat, const Matrix& s_hat,
                                                const Matrix& q_hat, const Vector& xi_star,
                                                const Matrix& z) {
  auto ldlt = detail::precision_factor(q_hat, s_hat);
  CVector b = (m_hat.transpose() * xi_star).cast<Complex>() +
              effective_fields(effective_field_matrix(q_hat), z);
  GaussianMoments out;
  out.mean = ldlt.solve(b.real()).cast<Complex>() +
             Complex(0, 1) * ldlt.solve(b.imag()).cast<Complex>();
  out.covariance = ldlt.solve(Matrix::Identity(q_hat.rows(), q_hat.cols()));
  return out;
}

struct GaussianAveraged {
  Matrix m, q, s;
};

// Fully averaged order-parameter update for Gaussian patterns:
//   m = Q m_hat G^{-1}
//   q = G^{-1} (m_hat^T Q m_hat + q_hat) G^{-1}
//   s = G^{-1} + q
// using E_z[c c^T] = q_hat exactly.
inline GaussianAveraged averaged_gaussian_pattern_equations(const Matrix& m_hat,
                                                            const Matrix& s_hat,
                                                            const Matrix& q_hat,
                                                            const Matrix& Q) {
  auto ldlt = detail::precision_factor(q_hat, s_hat);
  const Matrix g_inv = ldlt.solve(Matrix::Identity(q_hat.rows(), q_hat.cols()));
  GaussianAveraged out;
  out.m = Q * m_hat * g_inv;
  Matrix mid = m_hat.transpose() * Q * m_hat + q_hat;
  out.q = g_inv * mid * g_inv;
  out.q = 0.5 * (out.q + out.q.transpose()).eval();
  out.s = g_inv + out.q;
  return out;
}

}  // namespace rbmts
