#pragma once
// Finite-size Monte Carlo ground truth for the pattern-inference problem:
// block-Gibbs data generation from a planted model, posterior sampling of
// student patterns (single-flip Metropolis for binary priors, underdamped
// Langevin with contrastive divergence for Gaussian priors), overlap traces,
// and the magnitude-pruning ("winning ticket") experiment. The posterior
// weight uses the same small-P quadratic normalizer as the infinite-size
// theory, so simulation and prediction share one model of the data term.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rbmts/sampling.hpp"
#include "rbmts/spin_averages.hpp"

namespace rbmts {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------
struct LangevinConfig {
  double step_size = 1e-3;  // initial integration step
  double decay = 1.0;       // per-epoch geometric multiplier on the step
  double friction = 1.0;
  int cd_steps = 1;         // alternating Gibbs steps for the negative phase
  double guard = 100.0;     // max |entry| before the trajectory counts as diverged
  // Per-hidden-row noise streams; empty means derived from the training rng.
  // Relabeling rows while relabeling these seeds relabels the trajectory.
  std::vector<uint64_t> row_seeds;
};

struct ExternalField {
  double lambda = 0.05;
  // assignment[nu] = teacher row the student row nu is pulled toward; -1 leaves
  // the row unbiased. Empty means row nu -> teacher row nu where both exist.
  std::vector<int> assignment;
};

struct SimulationConfig {
  int gibbs_sweeps = 200;  // block-Gibbs burn-in per data chain
  int mc_sweeps = 1000;    // training epochs
  int summary_window = 0;  // trailing epochs summarized; 0 = final half
  std::optional<ExternalField> external_field;
  LangevinConfig langevin;
  uint64_t seed = 1;
};

inline constexpr int kMaxSimulationN = 2048;

// ---------------------------------------------------------------------------
// Overlap measurement and traces
// ---------------------------------------------------------------------------
// Teacher-row by student-row inner products over N.
inline Matrix measure_overlaps(const PatternMatrix& xi, const PatternMatrix& xi_star) {
  if (xi.n() != xi_star.n())
    throw DimensionMismatch("patterns live in different visible dimensions");
  return xi_star.values * xi.values.transpose() / static_cast<double>(xi.n());
}

// Per-teacher best-matched student overlap magnitude, averaged over teachers;
// the scalar recall summary used by the pruning experiment.
inline double recall_magnetization(const Matrix& overlaps) {
  if (overlaps.size() == 0) return 0.0;
  return overlaps.array().abs().rowwise().maxCoeff().mean();
}

struct OverlapTrace {
  std::vector<Matrix> m;           // one teacher-by-student matrix per epoch (entry 0 = init)
  std::vector<double> acceptance;  // per-epoch acceptance rate (Metropolis runs)
  std::vector<double> step_size;   // per-epoch integration step (Langevin runs)
  Matrix window_mean;              // entrywise mean over the trailing window
  Matrix window_std;               // entrywise standard deviation over the window
  int window = 0;
};

struct TrainResult {
  OverlapTrace trace;
  PatternMatrix xi;
};

namespace detail {

inline void summarize_trace(OverlapTrace& tr, int requested_window) {
  const int len = static_cast<int>(tr.m.size());
  if (len == 0) return;
  int w = requested_window > 0 ? std::min(requested_window, len) : std::max(1, len / 2);
  tr.window = w;
  const int rows = static_cast<int>(tr.m.front().rows());
  const int cols = static_cast<int>(tr.m.front().cols());
  Matrix mean = Matrix::Zero(rows, cols);
  for (int t = len - w; t < len; ++t) mean += tr.m[t];
  mean /= static_cast<double>(w);
  Matrix var = Matrix::Zero(rows, cols);
  for (int t = len - w; t < len; ++t) var += (tr.m[t] - mean).cwiseProduct(tr.m[t] - mean);
  var /= static_cast<double>(w);
  tr.window_mean = mean;
  tr.window_std = var.cwiseSqrt();
}

// Disjoint tag namespaces so one master rng can be split for every role
// without stream collisions.
inline constexpr uint64_t kTagDataChain = 0x01ull << 56;
inline constexpr uint64_t kTagProposals = 0x02ull << 56;
inline constexpr uint64_t kTagHiddenRow = 0x03ull << 56;
inline constexpr uint64_t kTagVisible = 0x04ull << 56;
inline constexpr uint64_t kTagLotteryPoint = 0x05ull << 56;

inline double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - M_LN2;
}

// P(unit = +1 | field b) for +-1 units with energy -b*unit.
inline double plus_probability(double b) { return 0.5 * (1.0 + std::tanh(b)); }

inline void check_simulation_sizes(int n, int m) {
  if (n < 1) throw ParameterOutOfRange("visible dimension must be positive");
  if (n > kMaxSimulationN)
    throw ParameterOutOfRange("visible dimension exceeds the supported size " +
                              std::to_string(kMaxSimulationN));
  if (m < 0) throw ParameterOutOfRange("sample count must be nonnegative");
}

// lambda-scaled teacher rows the student rows are pulled toward (zero rows
// where unassigned). Shared by both trainers.
inline Matrix field_target_matrix(const std::optional<ExternalField>& field, int p,
                                  const PatternMatrix& teacher, int n) {
  Matrix target = Matrix::Zero(p, n);
  if (!field) return target;
  if (!(field->lambda >= 0.0))
    throw ParameterOutOfRange("external field strength must be nonnegative");
  std::vector<int> assign = field->assignment;
  if (assign.empty()) {
    assign.assign(static_cast<size_t>(p), -1);
    for (int nu = 0; nu < std::min(p, teacher.count()); ++nu) assign[nu] = nu;
  }
  if (static_cast<int>(assign.size()) != p)
    throw DimensionMismatch("external-field assignment must name every student row");
  for (int nu = 0; nu < p; ++nu) {
    if (assign[nu] < 0) continue;
    if (assign[nu] >= teacher.count())
      throw ParameterOutOfRange("external-field assignment names a missing teacher row");
    if (teacher.n() != n) throw DimensionMismatch("external-field teacher dimension mismatch");
    target.row(nu) = field->lambda * teacher.values.row(assign[nu]);
  }
  return target;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Teacher data generation
// ---------------------------------------------------------------------------
namespace detail {

// One block-Gibbs chain: alternate hidden | visible and visible | hidden,
// each conditional an independent +-1 draw from its local field.
inline void teacher_gibbs_chain(const Matrix& xi_star, double beta_star, int sweeps,
                                Vector& sigma, Vector& tau, Rng& rng) {
  const int n = static_cast<int>(xi_star.cols());
  const int p_star = static_cast<int>(xi_star.rows());
  const double scale = beta_star / std::sqrt(static_cast<double>(n));
  for (int t = 0; t < sweeps; ++t) {
    const Vector hidden_field = scale * (xi_star * sigma);
    for (int mu = 0; mu < p_star; ++mu)
      tau(mu) = rng.uniform() < plus_probability(hidden_field(mu)) ? 1.0 : -1.0;
    const Vector visible_field = scale * (xi_star.transpose() * tau);
    for (int i = 0; i < n; ++i)
      sigma(i) = rng.uniform() < plus_probability(visible_field(i)) ? 1.0 : -1.0;
  }
}

}  // namespace detail

// M independent burned-in block-Gibbs chains, one sample each, so the rows
// are i.i.d. draws from the planted marginal.
inline Dataset generate_teacher_data(const PatternMatrix& xi_star, double beta_star, int m, int n,
                                     const SimulationConfig& cfg, Rng& rng) {
  detail::check_simulation_sizes(n, m);
  if (xi_star.n() != n) throw DimensionMismatch("teacher patterns do not match the dimension");
  if (xi_star.count() < 1) throw ParameterOutOfRange("need at least one teacher pattern");
  if (!(beta_star >= 0.0)) throw ParameterOutOfRange("teacher temperature must be nonnegative");
  if (cfg.gibbs_sweeps < 0) throw ParameterOutOfRange("burn-in cannot be negative");

  Dataset out;
  out.samples.resize(m, n);
  out.teacher = xi_star;
  out.beta_star = beta_star;
  out.teacher_seed = rng.seed();
  out.gibbs_burn_in = cfg.gibbs_sweeps;
  Vector sigma(n), tau(xi_star.count());
  for (int a = 0; a < m; ++a) {
    Rng chain = rng.split(detail::kTagDataChain + static_cast<uint64_t>(a));
    for (int i = 0; i < n; ++i) sigma(i) = chain.uniform() < 0.5 ? 1.0 : -1.0;
    for (int mu = 0; mu < tau.size(); ++mu) tau(mu) = chain.uniform() < 0.5 ? 1.0 : -1.0;
    detail::teacher_gibbs_chain(xi_star.values, beta_star, cfg.gibbs_sweeps, sigma, tau, chain);
    out.samples.row(a) = sigma.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Posterior log weight (up to a pattern-independent constant)
// ---------------------------------------------------------------------------
// Data term sum_a sum_mu log cosh(beta xi^mu . sigma^a / sqrt(N)), minus M
// times the small-P quadratic normalizer log Ztilde(xi) with
// Ztilde = 2^-P sum_tau exp((beta^2/2) tau^T (xi xi^T / N) tau), plus the
// log prior (uniform binary: 0; standard Gaussian: -|xi|^2/2).
inline double posterior_log_weight(const PatternMatrix& xi, const Dataset& data, double beta,
                                   StudentPrior prior) {
  const int p = xi.count();
  const int n = xi.n();
  check_enumeration_cap(p, "posterior_log_weight");
  if (n != data.n()) throw DimensionMismatch("patterns do not match the data dimension");
  if (!(beta >= 0.0)) throw ParameterOutOfRange("inference temperature must be nonnegative");

  const double root_n = std::sqrt(static_cast<double>(n));
  double total = 0.0;
  if (data.m() > 0) {
    const Matrix fields = xi.values * data.samples.transpose() / root_n;  // P x M
    for (int a = 0; a < data.m(); ++a)
      for (int mu = 0; mu < p; ++mu) total += detail::log_cosh(beta * fields(mu, a));
    const Matrix gram = xi.values * xi.values.transpose() / static_cast<double>(n);
    const double log_z_tilde = hidden_moments_M(gram, beta).log_z - p * M_LN2;
    total -= data.m() * log_z_tilde;
  }
  if (prior == StudentPrior::StandardGaussian) total -= 0.5 * xi.values.squaredNorm();
  return total;
}

// ---------------------------------------------------------------------------
// Binary student: single-flip Metropolis with incremental caches
// ---------------------------------------------------------------------------
namespace detail {

// Mutable Metropolis state over binary patterns. delta_log_weight(mu, i)
// evaluates a proposed sign flip from the caches in O(M + 2^P); apply(mu, i)
// must follow a delta call with the same site and commits the flip.
struct MetropolisState {
  double beta = 1.0;
  int p = 1, n = 1, m_count = 0;
  const Matrix* data = nullptr;  // M x N
  Matrix xi;                     // P x N
  Matrix fields;                 // M x P: data . xi^mu / sqrt(N)
  Matrix gram;                   // P x P: xi xi^T / N
  Matrix taus;                   // 2^P x P enumerated hidden states
  Vector tau_e;                  // (beta^2/2) tau^T gram tau per state
  Matrix field_target;           // P x N, lambda-scaled bias rows
  mutable Vector tau_e_delta;    // scratch: energy shifts for the pending flip

  void init(const Matrix& data_in, double beta_in, Matrix xi_in, Matrix field_target_in) {
    data = &data_in;
    beta = beta_in;
    xi = std::move(xi_in);
    p = static_cast<int>(xi.rows());
    n = static_cast<int>(xi.cols());
    m_count = static_cast<int>(data_in.rows());
    field_target = std::move(field_target_in);
    const double root_n = std::sqrt(static_cast<double>(n));
    fields = data_in * xi.transpose() / root_n;
    gram = xi * xi.transpose() / static_cast<double>(n);
    const int states = 1 << p;
    taus.resize(states, p);
    for (int s = 0; s < states; ++s)
      for (int mu = 0; mu < p; ++mu) taus(s, mu) = (s >> mu) & 1 ? 1.0 : -1.0;
    tau_e.resize(states);
    refresh_tau_energies();
    tau_e_delta.resize(states);
  }

  void refresh_tau_energies() {
    for (int s = 0; s < tau_e.size(); ++s) {
      const auto t = taus.row(s);
      tau_e(s) = 0.5 * beta * beta * (t * gram * t.transpose())(0, 0);
    }
  }

  static double log_sum_exp(const Vector& e) {
    const double top = e.maxCoeff();
    return top + std::log((e.array() - top).exp().sum());
  }

  double delta_log_weight(int mu, int i) const {
    const double d = -2.0 * xi(mu, i);
    double delta = d * field_target(mu, i);
    if (m_count > 0) {
      const double root_n = std::sqrt(static_cast<double>(n));
      const double step = d / root_n;
      for (int a = 0; a < m_count; ++a) {
        const double f = fields(a, mu);
        delta += log_cosh(beta * (f + step * (*data)(a, i))) - log_cosh(beta * f);
      }
      if (p > 1) {
        // Only row/column mu of the Gram matrix moves; its diagonal is fixed.
        const Vector tw = taus * xi.col(i);
        const double bd = beta * beta * d / static_cast<double>(n);
        for (int s = 0; s < tau_e.size(); ++s) {
          const double tmu = taus(s, mu);
          tau_e_delta(s) = bd * tmu * (tw(s) - tmu * xi(mu, i));
        }
        delta -= m_count * (log_sum_exp(tau_e + tau_e_delta) - log_sum_exp(tau_e));
      }
    }
    return delta;
  }

  void apply(int mu, int i) {
    const double d = -2.0 * xi(mu, i);
    if (m_count > 0) {
      const double root_n = std::sqrt(static_cast<double>(n));
      fields.col(mu) += (d / root_n) * data->col(i);
      if (p > 1) {
        for (int nu = 0; nu < p; ++nu) {
          if (nu == mu) continue;
          const double dg = d * xi(nu, i) / static_cast<double>(n);
          gram(mu, nu) += dg;
          gram(nu, mu) += dg;
        }
        tau_e += tau_e_delta;
      }
    }
    xi(mu, i) = -xi(mu, i);
  }
};

}  // namespace detail

// Diagnostic snapshot of the incremental caches after training, for
// validating them against a from-scratch recomputation.
struct BinaryTrainDiagnostics {
  Matrix fields;
  Matrix gram;
  Vector tau_energies;
  long accepted = 0;
};

// Random-scan single-flip Metropolis on the posterior log weight. One epoch
// proposes N*P flips; overlaps against the generating patterns are recorded
// per epoch, entry 0 being the initial state.
inline TrainResult train_student_binary(const Dataset& data, double beta, int p,
                                        const PatternMatrix& init, const SimulationConfig& cfg,
                                        Rng& rng, BinaryTrainDiagnostics* diagnostics = nullptr) {
  check_enumeration_cap(p, "train_student_binary");
  detail::check_simulation_sizes(data.n(), data.m());
  if (cfg.mc_sweeps < 0) throw ParameterOutOfRange("epoch count cannot be negative");
  if (!(beta >= 0.0)) throw ParameterOutOfRange("inference temperature must be nonnegative");
  if (init.count() != p || init.n() != data.n())
    throw DimensionMismatch("initial patterns must be P rows of the data dimension");
  if (!init.binary || !(init.values.array().abs() == 1.0).all())
    throw ParameterOutOfRange("binary training needs +-1 initial patterns");

  detail::MetropolisState st;
  st.init(data.samples, beta, init.values,
          detail::field_target_matrix(cfg.external_field, p, data.teacher, data.n()));

  Rng proposals = rng.split(detail::kTagProposals);
  const int n = data.n();
  const long per_epoch = static_cast<long>(n) * p;
  TrainResult out;
  out.trace.m.reserve(cfg.mc_sweeps + 1);
  PatternMatrix current{st.xi, true};
  out.trace.m.push_back(measure_overlaps(current, data.teacher));
  out.trace.acceptance.push_back(0.0);
  long accepted_total = 0;
  for (int epoch = 0; epoch < cfg.mc_sweeps; ++epoch) {
    long accepted = 0;
    for (long t = 0; t < per_epoch; ++t) {
      const int mu = p == 1 ? 0 : proposals.uniform_int(p);
      const int i = proposals.uniform_int(n);
      const double dw = st.delta_log_weight(mu, i);
      if (dw >= 0.0 || proposals.uniform() < std::exp(dw)) {
        st.apply(mu, i);
        ++accepted;
      }
    }
    accepted_total += accepted;
    current.values = st.xi;
    out.trace.m.push_back(measure_overlaps(current, data.teacher));
    out.trace.acceptance.push_back(static_cast<double>(accepted) /
                                   static_cast<double>(per_epoch));
  }
  detail::summarize_trace(out.trace, cfg.summary_window);
  out.xi = PatternMatrix{st.xi, true};
  if (diagnostics) {
    diagnostics->fields = st.fields;
    diagnostics->gram = st.gram;
    diagnostics->tau_energies = st.tau_e;
    diagnostics->accepted = accepted_total;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian student: underdamped Langevin with CD-k negative phase
// ---------------------------------------------------------------------------
namespace detail {

// Exact gradient of the data log-cosh term w.r.t. the patterns.
inline Matrix positive_phase_gradient(const Matrix& xi, const Matrix& data, double beta) {
  const double scale = beta / std::sqrt(static_cast<double>(data.cols()));
  const Matrix fields = scale * (data * xi.transpose());  // M x P
  return scale * (fields.array().tanh().matrix().transpose() * data);
}

// CD-k estimate of M * grad log Z: alternate hidden and visible Gibbs steps
// from the data, then take the Rao-Blackwellized hidden response at the final
// visible states. Hidden draws come from per-row streams so relabeling rows
// (with their streams) relabels the estimate.
inline Matrix cd_negative_phase(const Matrix& xi, const Matrix& data, double beta, int k,
                                Rng& visible_rng, std::vector<Rng>& row_rngs) {
  const int m = static_cast<int>(data.rows());
  const int n = static_cast<int>(data.cols());
  const int p = static_cast<int>(xi.rows());
  const double scale = beta / std::sqrt(static_cast<double>(n));
  Matrix sigma = data;
  Matrix tau(m, p);
  for (int step = 0; step < k; ++step) {
    const Matrix hidden_fields = scale * (sigma * xi.transpose());  // M x P
    for (int nu = 0; nu < p; ++nu)
      for (int a = 0; a < m; ++a)
        tau(a, nu) = row_rngs[nu].uniform() < plus_probability(hidden_fields(a, nu)) ? 1.0 : -1.0;
    const Matrix visible_fields = scale * (tau * xi);  // M x N
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < m; ++a)
        sigma(a, i) = visible_rng.uniform() < plus_probability(visible_fields(a, i)) ? 1.0 : -1.0;
  }
  const Matrix final_fields = scale * (sigma * xi.transpose());
  return scale * (final_fields.array().tanh().matrix().transpose() * sigma);
}

}  // namespace detail

// Underdamped Langevin dynamics on the posterior over real-valued patterns:
// velocity damped by the friction, driven by the data gradient minus the
// CD-k negative phase minus the prior pull, with noise at unit temperature.
// The step follows a geometric schedule. Throws DivergedTrajectory when any
// entry leaves the guard box.
inline TrainResult train_student_gaussian(const Dataset& data, double beta, int p,
                                          const PatternMatrix& init, const SimulationConfig& cfg,
                                          Rng& rng) {
  detail::check_simulation_sizes(data.n(), data.m());
  if (p < 1) throw ParameterOutOfRange("need at least one student pattern");
  if (cfg.mc_sweeps < 0) throw ParameterOutOfRange("epoch count cannot be negative");
  if (!(beta >= 0.0)) throw ParameterOutOfRange("inference temperature must be nonnegative");
  if (init.count() != p || init.n() != data.n())
    throw DimensionMismatch("initial patterns must be P rows of the data dimension");
  const LangevinConfig& lv = cfg.langevin;
  if (!(lv.step_size > 0.0)) throw ParameterOutOfRange("step size must be positive");
  if (!(lv.decay > 0.0) || lv.decay > 1.0)
    throw ParameterOutOfRange("step decay must lie in (0, 1]");
  if (!(lv.friction >= 0.0)) throw ParameterOutOfRange("friction must be nonnegative");
  if (lv.friction * lv.step_size >= 1.0)
    throw ParameterOutOfRange("friction times step must stay below 1");
  if (lv.cd_steps < 1) throw ParameterOutOfRange("need at least one negative-phase step");
  if (!(lv.guard > 0.0)) throw ParameterOutOfRange("divergence guard must be positive");
  if (!lv.row_seeds.empty() && static_cast<int>(lv.row_seeds.size()) != p)
    throw DimensionMismatch("per-row seeds must name every student row");

  const int n = data.n();
  std::vector<Rng> row_rngs;
  row_rngs.reserve(p);
  for (int nu = 0; nu < p; ++nu)
    row_rngs.push_back(lv.row_seeds.empty()
                           ? rng.split(detail::kTagHiddenRow + static_cast<uint64_t>(nu))
                           : Rng(lv.row_seeds[static_cast<size_t>(nu)]));
  Rng visible_rng = rng.split(detail::kTagVisible);

  const Matrix field_target =
      detail::field_target_matrix(cfg.external_field, p, data.teacher, n);
  Matrix xi = init.values;
  Matrix velocity = Matrix::Zero(p, n);
  TrainResult out;
  out.trace.m.reserve(cfg.mc_sweeps + 1);
  PatternMatrix current{xi, false};
  out.trace.m.push_back(measure_overlaps(current, data.teacher));
  out.trace.step_size.push_back(lv.step_size);

  double dt = lv.step_size;
  for (int epoch = 0; epoch < cfg.mc_sweeps; ++epoch) {
    Matrix grad = -xi + field_target;
    if (data.m() > 0 && beta > 0.0) {
      grad += detail::positive_phase_gradient(xi, data.samples, beta);
      grad -= detail::cd_negative_phase(xi, data.samples, beta, lv.cd_steps, visible_rng,
                                        row_rngs);
    }
    const double noise_scale = std::sqrt(2.0 * lv.friction * dt);
    for (int nu = 0; nu < p; ++nu)
      for (int i = 0; i < n; ++i)
        velocity(nu, i) = (1.0 - lv.friction * dt) * velocity(nu, i) + dt * grad(nu, i) +
                          noise_scale * row_rngs[nu].normal();
    xi += dt * velocity;
    if (!(xi.array().abs().maxCoeff() <= lv.guard))
      throw DivergedTrajectory("pattern norm left the guard box at epoch " +
                               std::to_string(epoch));
    current.values = xi;
    out.trace.m.push_back(measure_overlaps(current, data.teacher));
    out.trace.step_size.push_back(dt);
    dt *= lv.decay;
  }
  detail::summarize_trace(out.trace, cfg.summary_window);
  out.xi = PatternMatrix{xi, false};
  return out;
}

// ---------------------------------------------------------------------------
// Magnitude pruning and the winning-ticket experiment
// ---------------------------------------------------------------------------
// Keeps the initial rows whose trained counterparts grew the largest norms,
// ordered by descending trained norm; ties break toward the lower row index.
inline PatternMatrix magnitude_prune(const PatternMatrix& xi_trained,
                                     const PatternMatrix& xi_initial, int keep) {
  if (xi_trained.count() != xi_initial.count() || xi_trained.n() != xi_initial.n())
    throw DimensionMismatch("trained and initial patterns must match in shape");
  if (keep < 0 || keep > xi_initial.count())
    throw ParameterOutOfRange("keep count must lie within the pattern count");
  std::vector<int> order(static_cast<size_t>(xi_trained.count()));
  for (size_t r = 0; r < order.size(); ++r) order[r] = static_cast<int>(r);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return xi_trained.values.row(a).squaredNorm() > xi_trained.values.row(b).squaredNorm();
  });
  PatternMatrix out;
  out.binary = xi_initial.binary;
  out.values.resize(keep, xi_initial.n());
  for (int r = 0; r < keep; ++r) out.values.row(r) = xi_initial.values.row(order[r]);
  return out;
}

struct LotteryConfig {
  int n = 512;
  int p_star = 4;
  int p_large = 8;  // width of the overparameterized student
  int keep = 4;     // rows surviving the prune; also the control width
  double beta_star = 4.0;
  double beta = 4.0;
  std::vector<double> alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  SimulationConfig sim;
};

struct LotteryResult {
  std::vector<double> alphas;
  // Scalar recall per epoch (entry 0 = init), one row per load point.
  std::vector<std::vector<double>> m_control;  // fresh i.i.d. init (A)
  std::vector<std::vector<double>> m_ticket;   // pruned init (B)
  // Per-epoch median and mean absolute deviation of ticket minus control
  // across the load grid.
  std::vector<double> median_lead;
  std::vector<double> mad_lead;
};

// The four-step pruning protocol: train a wide student, keep the initial rows
// whose trained rows grew the largest norms, then race that ticket against a
// fresh i.i.d. control on the same data, per load point.
inline LotteryResult run_lottery_experiment(const LotteryConfig& cfg, Rng& rng) {
  if (cfg.keep < 1 || cfg.keep > cfg.p_large)
    throw ParameterOutOfRange("keep count must lie within the wide student");
  if (cfg.p_star < 1) throw ParameterOutOfRange("need at least one teacher pattern");
  if (cfg.alphas.empty()) throw ParameterOutOfRange("need at least one load point");
  for (double a : cfg.alphas)
    if (!(a >= 0.0)) throw ParameterOutOfRange("load points must be nonnegative");

  const Matrix q = Matrix::Identity(cfg.p_star, cfg.p_star);
  LotteryResult out;
  out.alphas = cfg.alphas;
  const size_t epochs = static_cast<size_t>(cfg.sim.mc_sweeps) + 1;
  for (size_t j = 0; j < cfg.alphas.size(); ++j) {
    Rng point = rng.split(detail::kTagLotteryPoint + static_cast<uint64_t>(j));
    Rng teacher_rng = point.split(1);
    const PatternMatrix xi_star = sample_gaussian_patterns(q, cfg.n, teacher_rng);
    const int m = static_cast<int>(std::lround(cfg.alphas[j] * cfg.n));
    Rng data_rng = point.split(2);
    const Dataset data =
        generate_teacher_data(xi_star, cfg.beta_star, m, cfg.n, cfg.sim, data_rng);

    Rng init_rng = point.split(3);
    const Matrix iw = Matrix::Identity(cfg.p_large, cfg.p_large);
    const PatternMatrix wide_init = sample_gaussian_patterns(iw, cfg.n, init_rng);
    Rng wide_rng = point.split(4);
    const TrainResult wide =
        train_student_gaussian(data, cfg.beta, cfg.p_large, wide_init, cfg.sim, wide_rng);
    const PatternMatrix ticket_init = magnitude_prune(wide.xi, wide_init, cfg.keep);

    Rng control_init_rng = point.split(5);
    const Matrix ik = Matrix::Identity(cfg.keep, cfg.keep);
    const PatternMatrix control_init = sample_gaussian_patterns(ik, cfg.n, control_init_rng);
    Rng control_rng = point.split(6);
    const TrainResult control =
        train_student_gaussian(data, cfg.beta, cfg.keep, control_init, cfg.sim, control_rng);
    Rng ticket_rng = point.split(7);
    const TrainResult ticket =
        train_student_gaussian(data, cfg.beta, cfg.keep, ticket_init, cfg.sim, ticket_rng);

    std::vector<double> mc(epochs), mt(epochs);
    for (size_t e = 0; e < epochs; ++e) {
      mc[e] = recall_magnetization(control.trace.m[e]);
      mt[e] = recall_magnetization(ticket.trace.m[e]);
    }
    out.m_control.push_back(std::move(mc));
    out.m_ticket.push_back(std::move(mt));
  }

  out.median_lead.resize(epochs);
  out.mad_lead.resize(epochs);
  std::vector<double> lead(cfg.alphas.size());
  for (size_t e = 0; e < epochs; ++e) {
    for (size_t j = 0; j < cfg.alphas.size(); ++j)
      lead[j] = out.m_ticket[j][e] - out.m_control[j][e];
    std::vector<double> sorted = lead;
    std::sort(sorted.begin(), sorted.end());
    const size_t half = sorted.size() / 2;
    const double median = sorted.size() % 2 ? sorted[half]
                                            : 0.5 * (sorted[half - 1] + sorted[half]);
    double mad = 0.0;
    for (double v : lead) mad += std::abs(v - median);
    out.median_lead[e] = median;
    out.mad_lead[e] = mad / static_cast<double>(lead.size());
  }
  return out;
}

}  // namespace rbmts
