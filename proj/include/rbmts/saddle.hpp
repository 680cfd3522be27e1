#pragma once
// Damped stochastic fixed-point solver for the coupled order-parameter and
// conjugate equations. The conjugate block averages enumerated hidden-unit
// moments over the teacher ensemble; the order-parameter block averages
// pattern moments over the sign-source ensemble (binary prior) or uses the
// exact Gaussian closed form. Noise integrals run over antithetic, jointly
// whitened Monte Carlo samples, and every thermal average is complex-safe
// with the real part taken only after averaging.

#include "rbmts/core.hpp"
#include "rbmts/spin_averages.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <type_traits>
#include <utility>
#include <vector>

namespace rbmts {

// Trailing iterates averaged into the reported state when the iteration stops
// on the iteration cap: the plateau jitters at the Monte Carlo noise floor, so
// a window mean is the honest point estimate. A run that meets the tolerance
// reports its final iterate instead (averaging a geometric transient would
// drag the estimate away from the fixed point it just reached).
inline constexpr int kReportWindow = 50;

struct SolverConfig {
  double dt_conjugate = 1.0;       // damping step for the conjugate block, in (0, 1]
  double dt_order = 0.1;           // damping step for the order-parameter block, in (0, 1]
  int n_gaussian_samples = 10000;  // antithetic noise samples per iteration (even, >= 4)
  double tolerance = 1e-6;         // stop once the max-abs per-iteration change falls below
  int max_iters = 10000;
  uint64_t seed = 0;
  // Optional swap projection: after every step, average the state with its
  // image under exchange of two student indices (1-based). Holds the
  // iteration on the branch where those two students are interchangeable.
  std::optional<std::pair<int, int>> symmetrize_pair;
};

struct SolveResult {
  OrderParameterState state;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_trace;  // max-abs change per iteration
  double imaginary_leakage = 0.0;      // max |Im| seen in reporting-window averages
  double mc_standard_error = 0.0;      // largest entrywise std over the reporting window
};

// ---------------------------------------------------------------------------
// Antithetic whitened noise samples
// ---------------------------------------------------------------------------
// Draw n/2 independent p*p Gaussian matrices, whiten the flattened vectors so
// the pooled sample covariance is exactly the identity, and emit them in
// {y, -y} pairs so every per-entry sample mean is exactly zero. The pooled
// covariance has rank at most n/2, so n/2 >= p^2 is required for the
// whitening factor to exist; one fresh redraw is attempted before erroring.
inline std::vector<Matrix> whitened_gaussian_samples(int n, int p, Rng& rng) {
  if (n < 4 || n % 2 != 0) throw ParameterOutOfRange("sample count must be even and >= 4");
  if (p < 1) throw ParameterOutOfRange("noise matrix side must be >= 1");
  const int d = p * p;
  const int half = n / 2;
  for (int attempt = 0; attempt < 2; ++attempt) {
    Matrix x(half, d);
    for (int i = 0; i < half; ++i)
      for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    Matrix cov = (2.0 / static_cast<double>(n)) * (x.transpose() * x);
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success) continue;
    Matrix l = llt.matrixL();
    const double lo = l.diagonal().cwiseAbs().minCoeff();
    const double hi = l.diagonal().cwiseAbs().maxCoeff();
    // an exactly rank-deficient pooled covariance leaves a roundoff-sized
    // pivot (~1e-8 after the square root) that LLT may not flag itself
    if (!(lo > 1e-6 * hi)) continue;
    Matrix y = l.triangularView<Eigen::Lower>().solve(x.transpose());  // d x half
    std::vector<Matrix> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < half; ++i) {
      Eigen::Map<const Matrix> zm(y.col(i).data(), p, p);
      out.emplace_back(zm);
      out.emplace_back(-zm);
    }
    return out;
  }
  throw SingularSampleCovariance(
      "pooled sample covariance is rank-deficient after one redraw (need n/2 >= p^2)");
}

// ---------------------------------------------------------------------------
// Initial states
// ---------------------------------------------------------------------------
struct InitialStateSpec {
  enum class Kind { Paramagnetic, NearDiagonal, OffDiagonal, Random };
  Kind kind = Kind::Paramagnetic;
  double m0 = 0.0;
  double eps = 0.0;
  double scale = 0.0;
  std::pair<int, int> pair{0, 0};  // 1-based (teacher row, student column) of the extra entry
  uint64_t seed = 0x5eedULL;
};

inline InitialStateSpec paramagnetic_init() { return {}; }

inline InitialStateSpec near_diagonal_init(double m0, double eps) {
  InitialStateSpec s;
  s.kind = InitialStateSpec::Kind::NearDiagonal;
  s.m0 = m0;
  s.eps = eps;
  return s;
}

inline InitialStateSpec off_diagonal_init(double m0, double eps, int row, int col) {
  InitialStateSpec s;
  s.kind = InitialStateSpec::Kind::OffDiagonal;
  s.m0 = m0;
  s.eps = eps;
  s.pair = {row, col};
  return s;
}

inline InitialStateSpec random_init(double scale, uint64_t seed = 0x5eedULL) {
  InitialStateSpec s;
  s.kind = InitialStateSpec::Kind::Random;
  s.scale = scale;
  s.seed = seed;
  return s;
}

inline OrderParameterState initial_state(const InitialStateSpec& spec, int p_star, int p) {
  if (p_star < 1 || p < 1) throw ParameterOutOfRange("state dimensions must be >= 1");
  check_enumeration_cap(std::max(p_star, p), "initial_state");
  OrderParameterState st = zero_state(p_star, p);
  switch (spec.kind) {
    case InitialStateSpec::Kind::Paramagnetic:
      return st;
    case InitialStateSpec::Kind::NearDiagonal:
    case InitialStateSpec::Kind::OffDiagonal: {
      if (!(spec.m0 > 0.0)) throw ParameterOutOfRange("m0 must be > 0");
      if (spec.eps < 0.0 || !(spec.eps < spec.m0))
        throw ParameterOutOfRange("eps must satisfy 0 <= eps < m0");
      st.m.setConstant(spec.eps);
      for (int i = 0; i < std::min(p_star, p); ++i) st.m(i, i) = spec.m0;
      st.q.diagonal().setConstant(spec.m0);
      if (spec.kind == InitialStateSpec::Kind::OffDiagonal) {
        const auto [row, col] = spec.pair;
        if (row < 1 || row > p_star || col < 1 || col > p)
          throw ParameterOutOfRange("off-diagonal entry is outside the overlap matrix");
        if (row == col) throw ParameterOutOfRange("the extra entry must be off-diagonal");
        st.m(row - 1, col - 1) = spec.m0;
        // Seed a positive overlap between the two students now sharing a
        // teacher, so the iteration starts inside that branch's basin.
        if (row <= p) {
          st.q(row - 1, col - 1) = 0.5 * spec.m0;
          st.q(col - 1, row - 1) = 0.5 * spec.m0;
        }
      }
      return st;
    }
    case InitialStateSpec::Kind::Random: {
      if (!(spec.scale > 0.0)) throw ParameterOutOfRange("scale must be > 0");
      Rng rng(spec.seed);
      for (int i = 0; i < p_star; ++i)
        for (int j = 0; j < p; ++j) st.m(i, j) = spec.scale * rng.normal();
      Matrix g(p, p);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) g(i, j) = rng.normal();
      st.q = (spec.scale * spec.scale / static_cast<double>(p)) * (g * g.transpose());
      st.s = st.q;
      st.s.diagonal().setOnes();
      return st;
    }
  }
  throw ParameterOutOfRange("unknown initial-state kind");
}

// ---------------------------------------------------------------------------
// Student-index relabeling
// ---------------------------------------------------------------------------
// Entry (i, j) of the result takes entry (perm[i], perm[j]) of the input for
// the student-indexed matrices, and column j takes column perm[j] for m-like
// matrices; perm is 0-based.
inline OrderParameterState permute_students(const OrderParameterState& st,
                                            const std::vector<int>& perm) {
  const int p = st.p();
  if (static_cast<int>(perm.size()) != p)
    throw DimensionMismatch("permutation length does not match student count");
  std::vector<bool> seen(static_cast<size_t>(p), false);
  for (int v : perm) {
    if (v < 0 || v >= p || seen[static_cast<size_t>(v)])
      throw ParameterOutOfRange("not a permutation of the student indices");
    seen[static_cast<size_t>(v)] = true;
  }
  OrderParameterState out = st;
  for (int j = 0; j < p; ++j) {
    out.m.col(j) = st.m.col(perm[static_cast<size_t>(j)]);
    out.m_hat.col(j) = st.m_hat.col(perm[static_cast<size_t>(j)]);
  }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      const int pi = perm[static_cast<size_t>(i)], pj = perm[static_cast<size_t>(j)];
      out.s(i, j) = st.s(pi, pj);
      out.q(i, j) = st.q(pi, pj);
      out.s_hat(i, j) = st.s_hat(pi, pj);
      out.q_hat(i, j) = st.q_hat(pi, pj);
    }
  return out;
}

inline OrderParameterState swap_students(const OrderParameterState& st, int a, int b) {
  std::vector<int> perm(static_cast<size_t>(st.p()));
  for (int i = 0; i < st.p(); ++i) perm[static_cast<size_t>(i)] = i;
  std::swap(perm[static_cast<size_t>(a)], perm[static_cast<size_t>(b)]);
  return permute_students(st, perm);
}

// ---------------------------------------------------------------------------
// Ensemble-averaged thermal moments
// ---------------------------------------------------------------------------
// For the pairwise Hamiltonian built from (m-like, s-like, q-like) with
// couplings (l1, l2), averages the enumerated thermal moments over an outer
// spin ensemble and a list of noise matrices:
//   first(g, u)        = E_outer E_z [ x*_g <x_u> ]
//   second(u, v)       = E_outer E_z [ <x_u x_v> ]          (unit diagonal)
//   mean_product(u, v) = E_outer E_z [ <x_u> <x_v> ]        (complex product)
//   log_abs_z          = E_outer E_z [ log |Z| ]            (counting measure)
// The real part is taken after all averaging; imag_leak records the largest
// imaginary magnitude that was discarded.
struct EnsembleThermalAverages {
  Matrix first;
  Matrix second;
  Matrix mean_product;
  double log_abs_z = 0.0;
  double imag_leak = 0.0;
};

namespace detail {

template <typename Scal>
inline void ensemble_thermal_averages_typed(
    const Vector& base, const Matrix& drive, const SpinEnsemble& outer,
    const Eigen::Matrix<Scal, Eigen::Dynamic, Eigen::Dynamic>& a, double l2,
    const std::vector<Matrix>& zs, bool want_logz, EnsembleThermalAverages& out) {
  using VecS = Eigen::Vector<Scal, Eigen::Dynamic>;
  using MatS = Eigen::Matrix<Scal, Eigen::Dynamic, Eigen::Dynamic>;
  const int p = static_cast<int>(drive.cols());
  const int k_count = static_cast<int>(drive.rows());
  const size_t n_states = size_t{1} << p;
  if (outer.count() != k_count) throw DimensionMismatch("outer ensemble size mismatch");
  if (zs.empty()) throw ParameterOutOfRange("noise sample list is empty");

  const double base_max = base.maxCoeff();
  if (!std::isfinite(base_max)) throw NonFiniteEnergy("non-finite quadratic energy");
  Vector base_w = (base.array() - base_max).exp();

  Matrix exp_plus = drive.array().exp();
  Matrix exp_minus = (-drive.array()).exp();
  if (!exp_plus.allFinite() || !exp_minus.allFinite())
    throw NonFiniteEnergy("drive weight overflow");

  std::vector<VecS> mean_sum(static_cast<size_t>(k_count), VecS::Zero(p));
  std::vector<MatS> second_sum(static_cast<size_t>(k_count), MatS::Zero(p, p));
  std::vector<MatS> prod_sum(static_cast<size_t>(k_count), MatS::Zero(p, p));
  Vector logz_sum = Vector::Zero(k_count);

  VecS c(p), g_plus(p), g_minus(p), f_plus(p), f_minus(p), mean_loc(p), mk(p);
  MatS sec_loc(p, p);

  for (const Matrix& z : zs) {
    if (z.rows() != p || z.cols() != p) throw DimensionMismatch("noise matrix size mismatch");
    for (int u = 0; u < p; ++u) {
      Scal acc{};
      for (int v = 0; v < p; ++v) acc += a(u, v) * Scal(0.5 * (z(u, v) + z(v, u)));
      c(u) = Scal(l2) * acc;
    }
    for (int u = 0; u < p; ++u) {
      g_plus(u) = std::exp(c(u));
      g_minus(u) = Scal(1.0) / g_plus(u);
    }
    for (int k = 0; k < k_count; ++k) {
      for (int u = 0; u < p; ++u) {
        f_plus(u) = Scal(exp_plus(k, u)) * g_plus(u);
        f_minus(u) = Scal(exp_minus(k, u)) * g_minus(u);
      }
      Scal z_total{};
      mean_loc.setZero();
      sec_loc.setZero();
      for (size_t st = 0; st < n_states; ++st) {
        Scal w = Scal(base_w(static_cast<Eigen::Index>(st)));
        for (int u = 0; u < p; ++u) w *= ((st >> u) & 1) ? f_plus(u) : f_minus(u);
        z_total += w;
        for (int u = 0; u < p; ++u) {
          const Scal wu = ((st >> u) & 1) ? w : Scal(-w);
          mean_loc(u) += wu;
          for (int v = u + 1; v < p; ++v) sec_loc(u, v) += ((st >> v) & 1) ? wu : Scal(-wu);
        }
      }
      const double zt_abs = std::abs(z_total);
      if (!(zt_abs > 0.0) || !std::isfinite(zt_abs))
        throw NonFiniteEnergy("vanishing or non-finite partition sum");
      mk = mean_loc / z_total;
      mean_sum[static_cast<size_t>(k)] += mk;
      for (int u = 0; u < p; ++u)
        for (int v = u + 1; v < p; ++v)
          second_sum[static_cast<size_t>(k)](u, v) += sec_loc(u, v) / z_total;
      prod_sum[static_cast<size_t>(k)].noalias() += mk * mk.transpose();
      if (want_logz) logz_sum(k) += base_max + std::log(zt_abs);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(zs.size());
  const Eigen::Index star_dim = outer.states.cols();
  MatS first_c = MatS::Zero(star_dim, p);
  MatS second_c = MatS::Zero(p, p);
  MatS prod_c = MatS::Zero(p, p);
  double logz = 0.0;
  for (int k = 0; k < k_count; ++k) {
    const double wk = outer.weights(k) * inv_n;
    first_c.noalias() += wk * (outer.states.row(k).transpose().template cast<Scal>() *
                               mean_sum[static_cast<size_t>(k)].transpose());
    second_c += wk * second_sum[static_cast<size_t>(k)];
    prod_c += wk * prod_sum[static_cast<size_t>(k)];
    if (want_logz) logz += outer.weights(k) * inv_n * logz_sum(k);
  }
  for (int u = 0; u < p; ++u) {
    second_c(u, u) = Scal(1.0);  // x_u^2 = 1 identically for spin states
    for (int v = u + 1; v < p; ++v) second_c(v, u) = second_c(u, v);
  }
  out.log_abs_z = logz;
  if constexpr (std::is_same_v<Scal, double>) {
    out.first = first_c;
    out.second = second_c;
    out.mean_product = prod_c;
    out.imag_leak = 0.0;
  } else {
    double leak = first_c.imag().cwiseAbs().maxCoeff();
    leak = std::max(leak, second_c.imag().cwiseAbs().maxCoeff());
    leak = std::max(leak, prod_c.imag().cwiseAbs().maxCoeff());
    out.first = first_c.real();
    out.second = second_c.real();
    out.mean_product = prod_c.real();
    out.imag_leak = leak;
  }
}

}  // namespace detail

inline EnsembleThermalAverages ensemble_thermal_averages(const Matrix& m_like,
                                                         const Matrix& s_like,
                                                         const Matrix& q_like, double l1,
                                                         double l2, const SpinEnsemble& outer,
                                                         const std::vector<Matrix>& zs,
                                                         bool want_logz = false) {
  const int p = static_cast<int>(m_like.cols());
  if (s_like.rows() != p || s_like.cols() != p || q_like.rows() != p || q_like.cols() != p)
    throw DimensionMismatch("order-parameter shapes disagree");
  if (outer.states.cols() != m_like.rows())
    throw DimensionMismatch("outer ensemble dimension does not match the drive matrix");
  check_enumeration_cap(p, "ensemble_thermal_averages");
  Vector base = quadratic_state_energies(s_like - q_like, l2 * l2);
  Matrix drive = (l1 * l2) * (outer.states * m_like);  // row k: l1 l2 m^T x*_k
  CMatrix a = effective_field_matrix(q_like);
  EnsembleThermalAverages out;
  if (a.imag().cwiseAbs().maxCoeff() == 0.0) {
    Matrix ar = a.real();
    detail::ensemble_thermal_averages_typed<double>(base, drive, outer, ar, l2, zs, want_logz,
                                                    out);
  } else {
    detail::ensemble_thermal_averages_typed<Complex>(base, drive, outer, a, l2, zs, want_logz,
                                                     out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Iteration
// ---------------------------------------------------------------------------
// Precomputed outer ensembles: the hidden-unit source ensemble weighting the
// conjugate block, and the pattern-side sign ensemble weighting the order
// block for binary-pattern students (Gaussian-pattern students use the closed
// form, which needs only the covariance).
struct SaddleContext {
  SpinEnsemble teacher;
  SpinEnsemble source;
};

inline SaddleContext make_saddle_context(const Hyperparameters& h, const Matrix& Q) {
  if (Q.rows() != h.p_star || Q.cols() != h.p_star)
    throw DimensionMismatch("covariance side does not match p_star");
  SaddleContext ctx;
  ctx.teacher = teacher_ensemble(h.beta_star, Q);
  if (h.student_prior == StudentPrior::BinaryUniform) {
    if (h.teacher_prior != TeacherPrior::BinaryArcsine)
      throw ParameterOutOfRange(
          "binary-pattern students require binary teacher patterns for the source average");
    ctx.source = binary_source_ensemble(Q);
  }
  return ctx;
}

// One damped step: the conjugate block is refreshed first from the current
// order parameters, then the order parameters from the just-updated
// conjugates. With both damping steps at 1 the result is the raw fixed-point
// map. The noise samples are shared by both blocks; rng is reserved for
// future stochastic outer averages (all current ones are enumerated exactly).
inline OrderParameterState iterate_step(const OrderParameterState& st, const Hyperparameters& h,
                                        const Matrix& Q, const SaddleContext& ctx,
                                        const SolverConfig& cfg,
                                        const std::vector<Matrix>& samples, Rng& rng,
                                        int iteration = 0, double* imag_leak = nullptr) {
  (void)rng;
  try {
    auto hidden = ensemble_thermal_averages(st.m, st.s, st.q, h.beta_star, h.beta, ctx.teacher,
                                            samples, false);
    const double scale_m = h.beta_star * h.beta * h.alpha;
    const double scale_sq = h.beta * h.beta * h.alpha;
    Matrix mh_target = scale_m * hidden.first;
    Matrix sh_target = scale_sq * (hidden.second - hidden_moments_M(st.s, h.beta).second);
    sh_target.diagonal().setZero();
    Matrix qh_target = scale_sq * hidden.mean_product;

    OrderParameterState nx = st;
    nx.m_hat += cfg.dt_conjugate * (mh_target - st.m_hat);
    nx.s_hat += cfg.dt_conjugate * (sh_target - st.s_hat);
    nx.q_hat += cfg.dt_conjugate * (qh_target - st.q_hat);
    nx.s_hat.diagonal().setZero();
    nx.q_hat = 0.5 * (nx.q_hat + nx.q_hat.transpose()).eval();

    double leak = hidden.imag_leak;
    Matrix m_target, s_target, q_target;
    if (h.student_prior == StudentPrior::BinaryUniform) {
      auto pattern = ensemble_thermal_averages(nx.m_hat, nx.s_hat, nx.q_hat, 1.0, 1.0,
                                               ctx.source, samples, false);
      m_target = std::move(pattern.first);
      s_target = std::move(pattern.second);
      q_target = std::move(pattern.mean_product);
      leak = std::max(leak, pattern.imag_leak);
    } else {
      auto pattern = averaged_gaussian_pattern_equations(nx.m_hat, nx.s_hat, nx.q_hat, Q);
      m_target = std::move(pattern.m);
      s_target = std::move(pattern.s);
      q_target = std::move(pattern.q);
    }
    nx.m += cfg.dt_order * (m_target - st.m);
    nx.s += cfg.dt_order * (s_target - st.s);
    nx.q += cfg.dt_order * (q_target - st.q);
    nx.q = 0.5 * (nx.q + nx.q.transpose()).eval();

    if (imag_leak) *imag_leak = leak;
    if (!nx.m.allFinite() || !nx.s.allFinite() || !nx.q.allFinite() || !nx.m_hat.allFinite() ||
        !nx.s_hat.allFinite() || !nx.q_hat.allFinite())
      throw NonFiniteUpdate(iteration);
    return nx;
  } catch (const NonFiniteEnergy&) {
    throw NonFiniteUpdate(iteration);
  }
}

// ---------------------------------------------------------------------------
// Solve
// ---------------------------------------------------------------------------
inline void check_solver_config(const SolverConfig& cfg, int p) {
  if (!(cfg.dt_conjugate > 0.0) || cfg.dt_conjugate > 1.0 || !(cfg.dt_order > 0.0) ||
      cfg.dt_order > 1.0)
    throw ParameterOutOfRange("damping steps must lie in (0, 1]");
  if (cfg.n_gaussian_samples < 4 || cfg.n_gaussian_samples % 2 != 0)
    throw ParameterOutOfRange("n_gaussian_samples must be even and >= 4");
  if (!(cfg.tolerance > 0.0)) throw ParameterOutOfRange("tolerance must be > 0");
  if (cfg.max_iters < 1) throw ParameterOutOfRange("max_iters must be >= 1");
  if (cfg.symmetrize_pair) {
    const auto [a, b] = *cfg.symmetrize_pair;
    if (a < 1 || b < 1 || a > p || b > p || a == b)
      throw ParameterOutOfRange("symmetrize_pair must name two distinct student indices");
  }
}

namespace detail {

inline constexpr std::array<Matrix OrderParameterState::*, 6> kStateFields = {
    &OrderParameterState::m,     &OrderParameterState::s,     &OrderParameterState::q,
    &OrderParameterState::m_hat, &OrderParameterState::s_hat, &OrderParameterState::q_hat};

inline double state_max_abs_change(const OrderParameterState& a, const OrderParameterState& b) {
  double r = 0.0;
  for (auto f : kStateFields) r = std::max(r, ((a.*f) - (b.*f)).cwiseAbs().maxCoeff());
  return r;
}

inline OrderParameterState window_mean(const std::deque<OrderParameterState>& window) {
  OrderParameterState avg = window.front();
  for (size_t i = 1; i < window.size(); ++i)
    for (auto f : kStateFields) (avg.*f) += (window[i].*f);
  const double inv = 1.0 / static_cast<double>(window.size());
  for (auto f : kStateFields) (avg.*f) *= inv;
  return avg;
}

inline double window_max_std(const std::deque<OrderParameterState>& window,
                             const OrderParameterState& mean) {
  if (window.size() < 2) return 0.0;
  double worst = 0.0;
  for (auto f : kStateFields) {
    Matrix acc = Matrix::Zero((mean.*f).rows(), (mean.*f).cols());
    for (const auto& st : window) acc += ((st.*f) - (mean.*f)).cwiseAbs2();
    worst = std::max(worst, (acc / static_cast<double>(window.size() - 1)).maxCoeff());
  }
  return std::sqrt(worst);
}

}  // namespace detail

// Damped iteration with fresh whitened noise each step (seed derived
// deterministically from cfg.seed and the iteration index). Stops at the
// first iteration whose max-abs change over all six matrices is within
// tolerance, else at max_iters with converged=false and the reported state
// averaged over the trailing window.
inline SolveResult solve(const Hyperparameters& h, const Matrix& Q, const SolverConfig& cfg,
                         const OrderParameterState& init) {
  check_solver_config(cfg, h.p);
  if (init.p_star() != h.p_star || init.p() != h.p)
    throw DimensionMismatch("initial state does not match the hyperparameter dimensions");
  const SaddleContext ctx = make_saddle_context(h, Q);
  OrderParameterState state = make_state(init.m, init.s, init.q, init.m_hat, init.s_hat,
                                         init.q_hat);
  SolveResult res;
  res.residual_trace.reserve(static_cast<size_t>(std::min(cfg.max_iters, 1 << 20)));
  std::deque<OrderParameterState> window;
  std::deque<double> leak_window;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    Rng zrng(derive_seed(cfg.seed, static_cast<uint64_t>(iter)));
    const auto samples = whitened_gaussian_samples(cfg.n_gaussian_samples, h.p, zrng);
    double leak = 0.0;
    OrderParameterState next = iterate_step(state, h, Q, ctx, cfg, samples, zrng, iter, &leak);
    if (cfg.symmetrize_pair) {
      const auto sw = swap_students(next, cfg.symmetrize_pair->first - 1,
                                    cfg.symmetrize_pair->second - 1);
      for (auto f : detail::kStateFields) (next.*f) = 0.5 * ((next.*f) + (sw.*f));
    }
    const double residual = detail::state_max_abs_change(next, state);
    res.residual_trace.push_back(residual);
    state = std::move(next);
    window.push_back(state);
    leak_window.push_back(leak);
    if (static_cast<int>(window.size()) > kReportWindow) {
      window.pop_front();
      leak_window.pop_front();
    }
    res.iterations = iter;
    if (residual <= cfg.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.imaginary_leakage = *std::max_element(leak_window.begin(), leak_window.end());
  const OrderParameterState mean = detail::window_mean(window);
  res.mc_standard_error = detail::window_max_std(window, mean);
  res.state = res.converged ? state : mean;
  return res;
}

}  // namespace rbmts
