#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rbmts/reduced.hpp"
#include "rbmts/simulation.hpp"

using namespace rbmts;
using Catch::Approx;

namespace {

PatternMatrix random_binary_patterns(int p, int n, Rng& rng) {
  PatternMatrix out;
  out.binary = true;
  out.values.resize(p, n);
  for (int mu = 0; mu < p; ++mu)
    for (int i = 0; i < n; ++i) out.values(mu, i) = rng.uniform() < 0.5 ? 1.0 : -1.0;
  return out;
}

Matrix random_binary_matrix(int rows, int cols, Rng& rng) {
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(r, c) = rng.uniform() < 0.5 ? 1.0 : -1.0;
  return out;
}

// Naive reimplementation of the posterior log weight with explicit loops and
// a direct sum over the enumerated hidden states.
double naive_posterior_log_weight(const PatternMatrix& xi, const Dataset& data, double beta,
                                  StudentPrior prior) {
  const int p = xi.count();
  const int n = xi.n();
  double total = 0.0;
  for (int a = 0; a < data.m(); ++a) {
    for (int mu = 0; mu < p; ++mu) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += xi.values(mu, i) * data.samples(a, i);
      total += std::log(std::cosh(beta * dot / std::sqrt(static_cast<double>(n))));
    }
  }
  if (data.m() > 0) {
    double z = 0.0;
    for (int s = 0; s < (1 << p); ++s) {
      double e = 0.0;
      for (int mu = 0; mu < p; ++mu) {
        const double tmu = (s >> mu) & 1 ? 1.0 : -1.0;
        for (int nu = 0; nu < p; ++nu) {
          const double tnu = (s >> nu) & 1 ? 1.0 : -1.0;
          double dot = 0.0;
          for (int i = 0; i < n; ++i) dot += xi.values(mu, i) * xi.values(nu, i);
          e += 0.5 * beta * beta * (dot / n) * tmu * tnu;
        }
      }
      z += std::exp(e) / (1 << p);
    }
    total -= data.m() * std::log(z);
  }
  if (prior == StudentPrior::StandardGaussian) total -= 0.5 * xi.values.squaredNorm();
  return total;
}

Dataset dataset_from(Matrix samples, PatternMatrix teacher, double beta_star = 1.0) {
  Dataset out;
  out.samples = std::move(samples);
  out.teacher = std::move(teacher);
  out.beta_star = beta_star;
  return out;
}

}  // namespace

TEST_CASE("overlaps are exact inner products over the dimension", "[sim]") {
  Rng rng(11);
  const PatternMatrix xi_star = random_binary_patterns(3, 40, rng);

  SECTION("a pattern against itself gives its norm square") {
    const Matrix m = measure_overlaps(xi_star, xi_star);
    // Unit diagonal is exact for +-1 rows; cross terms are the (symmetric)
    // mutual overlaps and stay at the random O(1/sqrt(N)) scale.
    REQUIRE((m.diagonal().array() - 1.0).abs().maxCoeff() < 1e-14);
    REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((m - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 6.0 / std::sqrt(40.0));
    PatternMatrix real = xi_star;
    real.binary = false;
    real.values *= 1.7;
    const Matrix mr = measure_overlaps(real, real);
    for (int mu = 0; mu < 3; ++mu)
      REQUIRE(mr(mu, mu) ==
              Catch::Approx(real.values.row(mu).squaredNorm() / 40.0).margin(1e-13));
  }
  SECTION("negating one side negates the matrix") {
    PatternMatrix neg = xi_star;
    neg.values *= -1.0;
    REQUIRE((measure_overlaps(neg, xi_star) + measure_overlaps(xi_star, xi_star))
                .cwiseAbs()
                .maxCoeff() < 1e-14);
  }
  SECTION("independent random patterns have near-zero overlaps") {
    const int n = 10000;
    Rng r2(12);
    const PatternMatrix a = random_binary_patterns(2, n, r2);
    const PatternMatrix b = random_binary_patterns(3, n, r2);
    const Matrix m = measure_overlaps(b, a);  // teacher rows a, student rows b
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    REQUIRE(m.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(static_cast<double>(n)));
  }
  SECTION("dimension mismatch is rejected") {
    const PatternMatrix other = random_binary_patterns(2, 41, rng);
    REQUIRE_THROWS_AS(measure_overlaps(other, xi_star), DimensionMismatch);
  }
  SECTION("recall magnetization averages the per-teacher best match") {
    Matrix m(2, 2);
    m << 0.2, -0.9, 0.5, 0.1;
    REQUIRE(recall_magnetization(m) == Catch::Approx(0.7).margin(1e-15));
    REQUIRE(recall_magnetization(Matrix()) == 0.0);
  }
}

TEST_CASE("a free teacher emits unbiased independent samples", "[sim]") {
  Rng rng(21);
  const int n = 64, m = 2000;
  const PatternMatrix xi_star = random_binary_patterns(2, n, rng);
  SimulationConfig cfg;
  cfg.gibbs_sweeps = 3;  // burn-in is irrelevant without couplings
  Rng gen(22);
  const Dataset data = generate_teacher_data(xi_star, 0.0, m, n, cfg, gen);

  REQUIRE(data.m() == m);
  REQUIRE(data.n() == n);
  REQUIRE((data.samples.array().abs() == 1.0).all());
  const double grand_mean = data.samples.mean();
  REQUIRE(std::abs(grand_mean) < 4.0 / std::sqrt(static_cast<double>(n) * m));
  // Fields along the teacher patterns stay at the null scale.
  const Matrix fields = data.samples * xi_star.values.transpose() / static_cast<double>(n);
  REQUIRE(std::abs(fields.mean()) < 4.0 / std::sqrt(static_cast<double>(n) * m));

  // Distinct seeds give bitwise-different datasets with compatible statistics.
  Rng gen_b(23);
  const Dataset other = generate_teacher_data(xi_star, 0.0, m, n, cfg, gen_b);
  REQUIRE(data.samples != other.samples);
  const double se = std::sqrt(2.0 / (static_cast<double>(n) * m));
  REQUIRE(std::abs(grand_mean - other.samples.mean()) < 3.0 * se);

  // Same seed reproduces the dataset bitwise.
  Rng gen_c(22);
  const Dataset again = generate_teacher_data(xi_star, 0.0, m, n, cfg, gen_c);
  REQUIRE(data.samples == again.samples);
}

TEST_CASE("the data chain reaches the planted marginal", "[sim]") {
  // Single-pattern instance small enough to enumerate the marginal
  // P(sigma) ~ cosh(beta* xi . sigma / sqrt(N)) exactly.
  const int n = 10;
  const double beta_star = 1.2;
  Rng rng(31);
  const PatternMatrix xi_star = random_binary_patterns(1, n, rng);

  std::vector<double> exact(1 << n);
  double z = 0.0;
  for (int s = 0; s < (1 << n); ++s) {
    double dot = 0.0;
    for (int i = 0; i < n; ++i)
      dot += xi_star.values(0, i) * ((s >> i) & 1 ? 1.0 : -1.0);
    exact[s] = std::cosh(beta_star * dot / std::sqrt(static_cast<double>(n)));
    z += exact[s];
  }
  for (double& e : exact) e /= z;

  // One long chain, occupancy recorded every sweep.
  const int sweeps = 4000000;
  Vector sigma(n), tau(1);
  Rng chain(32);
  for (int i = 0; i < n; ++i) sigma(i) = chain.uniform() < 0.5 ? 1.0 : -1.0;
  tau(0) = chain.uniform() < 0.5 ? 1.0 : -1.0;
  std::vector<long> counts(1 << n, 0);
  for (int t = 0; t < sweeps; ++t) {
    detail::teacher_gibbs_chain(xi_star.values, beta_star, 1, sigma, tau, chain);
    int idx = 0;
    for (int i = 0; i < n; ++i)
      if (sigma(i) > 0) idx |= 1 << i;
    ++counts[idx];
  }
  double tv = 0.0;
  for (int s = 0; s < (1 << n); ++s)
    tv += std::abs(static_cast<double>(counts[s]) / sweeps - exact[s]);
  tv *= 0.5;
  INFO("total variation distance = " << tv);
  REQUIRE(tv < 0.02);
}

TEST_CASE("a strong single pattern magnetizes the samples", "[sim]") {
  // With one pattern the rescaled field x = xi . sigma / sqrt(N) is drawn
  // from a standard normal tilted by cosh(beta* x): an equal mixture of unit
  // normals centered at +-beta*, so E|x| is known in closed form.
  const int n = 400, m = 400;
  const double beta_star = 3.0;
  Rng rng(41);
  const PatternMatrix xi_star = random_binary_patterns(1, n, rng);
  SimulationConfig cfg;  // default burn-in
  Rng gen(42);
  const Dataset data = generate_teacher_data(xi_star, beta_star, m, n, cfg, gen);

  const Vector fields =
      data.samples * xi_star.values.row(0).transpose() / std::sqrt(static_cast<double>(n));
  const double mean_abs = fields.cwiseAbs().mean();
  // E|N(beta*, 1)| with beta* = 3, plus a generous lattice/CLT allowance.
  const double exact = 3.0004;
  INFO("mean |field| = " << mean_abs);
  REQUIRE(std::abs(mean_abs - exact) < 0.3);
  REQUIRE(mean_abs > 2.0);
}

TEST_CASE("posterior log weight matches a direct evaluation", "[sim]") {
  Rng rng(51);
  const int n = 24, m = 5, p = 3;
  const PatternMatrix teacher = random_binary_patterns(2, n, rng);
  const Dataset data = dataset_from(random_binary_matrix(m, n, rng), teacher);
  const double beta = 0.9;

  SECTION("binary and gaussian priors against the naive loop version") {
    const PatternMatrix xi = random_binary_patterns(p, n, rng);
    REQUIRE(posterior_log_weight(xi, data, beta, StudentPrior::BinaryUniform) ==
            Catch::Approx(naive_posterior_log_weight(xi, data, beta,
                                                     StudentPrior::BinaryUniform))
                .margin(1e-11));
    PatternMatrix real = xi;
    real.binary = false;
    real.values *= 0.8;
    real.values(0, 0) = 1.9;
    REQUIRE(posterior_log_weight(real, data, beta, StudentPrior::StandardGaussian) ==
            Catch::Approx(naive_posterior_log_weight(real, data, beta,
                                                     StudentPrior::StandardGaussian))
                .margin(1e-11));
  }
  SECTION("zero temperature leaves only the prior") {
    const PatternMatrix xi = random_binary_patterns(p, n, rng);
    REQUIRE(posterior_log_weight(xi, data, 0.0, StudentPrior::BinaryUniform) == 0.0);
    REQUIRE(posterior_log_weight(xi, data, 0.0, StudentPrior::StandardGaussian) ==
            Catch::Approx(-0.5 * xi.values.squaredNorm()).margin(1e-12));
  }
  SECTION("a single hidden unit has a closed-form normalizer") {
    const PatternMatrix xi = random_binary_patterns(1, n, rng);
    double data_term = 0.0;
    for (int a = 0; a < m; ++a) {
      const double dot = xi.values.row(0).dot(data.samples.row(a));
      data_term += std::log(std::cosh(beta * dot / std::sqrt(static_cast<double>(n))));
    }
    const double log_z = 0.5 * beta * beta * xi.values.squaredNorm() / n;
    REQUIRE(posterior_log_weight(xi, data, beta, StudentPrior::BinaryUniform) ==
            Catch::Approx(data_term - m * log_z).margin(1e-12));
  }
  SECTION("doubling the data doubles the data-dependent part") {
    const PatternMatrix xi = random_binary_patterns(p, n, rng);
    Matrix doubled(2 * m, n);
    doubled << data.samples, data.samples;
    const Dataset twice = dataset_from(doubled, teacher);
    const double w1 = posterior_log_weight(xi, data, beta, StudentPrior::BinaryUniform);
    const double w2 = posterior_log_weight(xi, twice, beta, StudentPrior::BinaryUniform);
    REQUIRE(w2 == Catch::Approx(2.0 * w1).margin(1e-10));
  }
  SECTION("shape and cap violations are rejected") {
    const PatternMatrix xi = random_binary_patterns(p, n + 1, rng);
    REQUIRE_THROWS_AS(posterior_log_weight(xi, data, beta, StudentPrior::BinaryUniform),
                      DimensionMismatch);
    PatternMatrix wide;
    wide.values = Matrix::Ones(kEnumerationCap + 1, n);
    REQUIRE_THROWS_AS(posterior_log_weight(wide, data, beta, StudentPrior::BinaryUniform),
                      EnumerationCapExceeded);
  }
}

TEST_CASE("flip proposals reproduce exact posterior differences", "[sim]") {
  // The incremental Metropolis evaluation must match the difference of two
  // full posterior evaluations, external field included, along a random walk.
  Rng rng(61);
  const int n = 20, m = 6, p = 3;
  const PatternMatrix teacher = random_binary_patterns(p, n, rng);
  const Dataset data = dataset_from(random_binary_matrix(m, n, rng), teacher);
  const double beta = 1.1, lambda = 0.3;

  PatternMatrix xi = random_binary_patterns(p, n, rng);
  detail::MetropolisState st;
  st.init(data.samples, beta, xi.values, lambda * teacher.values);

  auto oracle = [&](const PatternMatrix& x) {
    double w = posterior_log_weight(x, data, beta, StudentPrior::BinaryUniform);
    w += lambda * (x.values.array() * teacher.values.array()).sum();
    return w;
  };

  double max_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    const int mu = rng.uniform_int(p);
    const int i = rng.uniform_int(n);
    const double before = oracle(xi);
    PatternMatrix flipped = xi;
    flipped.values(mu, i) = -flipped.values(mu, i);
    const double expected = oracle(flipped) - before;
    const double got = st.delta_log_weight(mu, i);
    max_err = std::max(max_err, std::abs(got - expected));
    // Walk: accept every other proposal to visit varied states.
    if (t % 2 == 0) {
      st.apply(mu, i);
      xi = flipped;
    }
  }
  INFO("max |incremental - exact| = " << max_err);
  REQUIRE(max_err < 1e-9);
}

TEST_CASE("incremental caches survive a long training run", "[sim]") {
  Rng rng(71);
  const int n = 128, p = 4, m = 32;
  const PatternMatrix teacher = random_binary_patterns(p, n, rng);
  SimulationConfig gen_cfg;
  gen_cfg.gibbs_sweeps = 50;
  Rng gen(72);
  const Dataset data = generate_teacher_data(teacher, 1.0, m, n, gen_cfg, gen);

  SimulationConfig cfg;
  cfg.mc_sweeps = 300;
  const PatternMatrix init = random_binary_patterns(p, n, rng);
  Rng train_rng(73);
  BinaryTrainDiagnostics diag;
  const TrainResult res = train_student_binary(data, 0.9, p, init, cfg, train_rng, &diag);

  INFO("accepted flips = " << diag.accepted);
  REQUIRE(diag.accepted > 30000);
  const double root_n = std::sqrt(static_cast<double>(n));
  const Matrix fields = data.samples * res.xi.values.transpose() / root_n;
  const Matrix gram = res.xi.values * res.xi.values.transpose() / static_cast<double>(n);
  REQUIRE((fields - diag.fields).cwiseAbs().maxCoeff() < 1e-9);
  REQUIRE((gram - diag.gram).cwiseAbs().maxCoeff() < 1e-9);
  detail::MetropolisState scratch;
  scratch.init(data.samples, 0.9, res.xi.values, Matrix::Zero(p, n));
  REQUIRE((scratch.tau_e - diag.tau_energies).cwiseAbs().maxCoeff() < 1e-9);
  // Binary-by-binary overlaps stay inside the unit box along the whole trace.
  for (const Matrix& ov : res.trace.m) REQUIRE(ov.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}

TEST_CASE("free students random-walk around zero overlap", "[sim]") {
  Rng rng(81);
  const int n = 256;
  const PatternMatrix teacher = random_binary_patterns(1, n, rng);
  const Dataset data = dataset_from(random_binary_matrix(4, n, rng), teacher);
  SimulationConfig cfg;
  cfg.mc_sweeps = 200;
  cfg.summary_window = 100;
  const PatternMatrix init = random_binary_patterns(1, n, rng);
  Rng train_rng(82);
  const TrainResult res = train_student_binary(data, 0.0, 1, init, cfg, train_rng);

  for (size_t e = 1; e < res.trace.acceptance.size(); ++e)
    REQUIRE(res.trace.acceptance[e] == 1.0);
  REQUIRE(std::abs(res.trace.window_mean(0, 0)) < 0.04);
  REQUIRE(res.trace.window_std(0, 0) > 0.03);
  REQUIRE(res.trace.window_std(0, 0) < 0.12);
}

TEST_CASE("the external field biases sites by its exact strength", "[sim]") {
  // At zero inference temperature the sites decouple and the field gives
  // each one the two-state distribution with mean tanh(lambda).
  Rng rng(91);
  const int n = 512;
  const PatternMatrix teacher = random_binary_patterns(1, n, rng);
  const Dataset data = dataset_from(Matrix(0, n), teacher);
  SimulationConfig cfg;
  cfg.mc_sweeps = 400;
  cfg.summary_window = 200;
  cfg.external_field = ExternalField{0.5, {}};
  const PatternMatrix init = random_binary_patterns(1, n, rng);
  Rng train_rng(92);
  const TrainResult res = train_student_binary(data, 1.2, 1, init, cfg, train_rng);

  const double expected = std::tanh(0.5);
  INFO("windowed overlap = " << res.trace.window_mean(0, 0));
  REQUIRE(std::abs(res.trace.window_mean(0, 0) - expected) < 0.025);
}

TEST_CASE("metropolis training reaches the infinite-size recall level", "[sim]") {
  const int n = 256;
  const double beta = 1.2, alpha = 2.0;
  const int m = static_cast<int>(alpha * n);
  Rng rng(101);
  const PatternMatrix teacher = random_binary_patterns(1, n, rng);
  SimulationConfig cfg;
  Rng gen(102);
  const Dataset data = generate_teacher_data(teacher, beta, m, n, cfg, gen);

  cfg.mc_sweeps = 500;
  cfg.summary_window = 250;
  const PatternMatrix init = random_binary_patterns(1, n, rng);
  Rng train_rng(103);
  const TrainResult res = train_student_binary(data, beta, 1, init, cfg, train_rng);

  const BinaryPsbSolution theory = solve_binary_psb(beta, beta, alpha);
  REQUIRE(theory.converged);
  const double simulated = std::abs(res.trace.window_mean(0, 0));
  INFO("simulated |m| = " << simulated << ", predicted m = " << theory.m);
  REQUIRE(std::abs(simulated - theory.m) < 0.08);
}

TEST_CASE("detailed balance holds on an enumerable instance", "[sim]") {
  // N = 8, P = 1, M = 4: compare the occupancy of the Metropolis kernel
  // against the exactly enumerated posterior.
  const int n = 8, m = 4;
  const double beta = 1.2;
  Rng rng(111);
  const PatternMatrix teacher = random_binary_patterns(1, n, rng);
  SimulationConfig gen_cfg;
  Rng gen(112);
  const Dataset data = generate_teacher_data(teacher, beta, m, n, gen_cfg, gen);

  std::vector<double> weight(1 << n);
  double z = 0.0;
  PatternMatrix probe;
  probe.binary = true;
  probe.values.resize(1, n);
  for (int s = 0; s < (1 << n); ++s) {
    for (int i = 0; i < n; ++i) probe.values(0, i) = (s >> i) & 1 ? 1.0 : -1.0;
    weight[s] = std::exp(posterior_log_weight(probe, data, beta, StudentPrior::BinaryUniform));
    z += weight[s];
  }
  for (double& w : weight) w /= z;

  detail::MetropolisState st;
  for (int i = 0; i < n; ++i) probe.values(0, i) = 1.0;
  st.init(data.samples, beta, probe.values, Matrix::Zero(1, n));
  Rng chain(113);
  const int sweeps = 10000000;
  std::vector<long> counts(1 << n, 0);
  for (int t = 0; t < sweeps; ++t) {
    for (int k = 0; k < n; ++k) {
      const int i = chain.uniform_int(n);
      const double dw = st.delta_log_weight(0, i);
      if (dw >= 0.0 || chain.uniform() < std::exp(dw)) st.apply(0, i);
    }
    int idx = 0;
    for (int i = 0; i < n; ++i)
      if (st.xi(0, i) > 0) idx |= 1 << i;
    ++counts[idx];
  }
  double tv = 0.0;
  for (int s = 0; s < (1 << n); ++s)
    tv += std::abs(static_cast<double>(counts[s]) / sweeps - weight[s]);
  tv *= 0.5;
  INFO("total variation distance = " << tv);
  REQUIRE(tv < 0.02);
}

TEST_CASE("langevin dynamics without data samples the prior", "[sim]") {
  // Exact oracle: the per-coordinate update is linear, so its stationary
  // covariance solves a 2x2 discrete Lyapunov equation.
  const double h = 0.02, gamma = 1.0;
  Matrix a(2, 2);
  a << 1.0 - h * h, h * (1.0 - gamma * h), -h, 1.0 - gamma * h;
  const double c2 = 2.0 * gamma * h;
  Matrix bbt(2, 2);
  bbt << c2 * h * h, c2 * h, c2 * h, c2;
  // Solve sigma = a sigma a^T + bbt for the three unknowns.
  Matrix lhs(3, 3);
  Vector rhs(3);
  // Unknowns: (sxx, sxv, svv). Row for each equation entry (0,0), (0,1), (1,1).
  lhs << 1.0 - a(0, 0) * a(0, 0), -2.0 * a(0, 0) * a(0, 1), -a(0, 1) * a(0, 1),
      -a(1, 0) * a(0, 0), 1.0 - a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0), -a(0, 1) * a(1, 1),
      -a(1, 0) * a(1, 0), -2.0 * a(1, 0) * a(1, 1), 1.0 - a(1, 1) * a(1, 1);
  rhs << bbt(0, 0), bbt(0, 1), bbt(1, 1);
  const Vector sol = lhs.fullPivLu().solve(rhs);
  const double exact_var = sol(0);
  REQUIRE(std::abs(exact_var - 1.0) < 0.05);  // small discretization shift

  const int n = 256, p = 2;
  Rng rng(121);
  const PatternMatrix teacher = random_binary_patterns(1, n, rng);
  const Dataset data = dataset_from(Matrix(0, n), teacher);
  SimulationConfig cfg;
  cfg.mc_sweeps = 6000;
  cfg.langevin.step_size = h;
  cfg.langevin.friction = gamma;
  PatternMatrix init;
  init.binary = false;
  init.values = Matrix::Zero(p, n);
  Rng train_rng(122);
  const TrainResult res = train_student_gaussian(data, 0.0, p, init, cfg, train_rng);

  // The final pattern is one stationary draw per coordinate, independent
  // across the p*n coordinates, so its mean square estimates the variance.
  const double var_final = res.xi.values.array().square().mean();
  INFO("sampled variance = " << var_final << ", exact stationary = " << exact_var);
  REQUIRE(std::abs(var_final - exact_var) < 0.2);
  REQUIRE(std::abs(res.xi.values.mean()) < 4.0 / std::sqrt(static_cast<double>(p * n)));
}

TEST_CASE("the negative phase is unbiased once the chain mixes", "[sim]") {
  // Tiny instance where grad log Z = (beta/sqrt(N)) E[tau sigma^T] can be
  // enumerated exactly; long alternation makes the chain forget its start.
  const int n = 6, p = 2;
  const double beta = 0.8;
  Rng rng(131);
  Matrix xi(p, n);
  for (int mu = 0; mu < p; ++mu)
    for (int i = 0; i < n; ++i) xi(mu, i) = rng.normal();

  const double scale = beta / std::sqrt(static_cast<double>(n));
  Matrix exact = Matrix::Zero(p, n);
  double z = 0.0;
  for (int sv = 0; sv < (1 << n); ++sv) {
    Vector sigma(n);
    for (int i = 0; i < n; ++i) sigma(i) = (sv >> i) & 1 ? 1.0 : -1.0;
    for (int st = 0; st < (1 << p); ++st) {
      Vector tau(p);
      for (int mu = 0; mu < p; ++mu) tau(mu) = (st >> mu) & 1 ? 1.0 : -1.0;
      const double w = std::exp(scale * (tau.transpose() * xi * sigma)(0, 0));
      z += w;
      exact += w * scale * tau * sigma.transpose();
    }
  }
  exact /= z;

  const int m = 4000;
  const Matrix starts = random_binary_matrix(m, n, rng);
  Rng visible(132);
  std::vector<Rng> rows;
  rows.push_back(Rng(133));
  rows.push_back(Rng(134));
  const Matrix estimate = detail::cd_negative_phase(xi, starts, beta, 40, visible, rows) /
                          static_cast<double>(m);
  const double tol = 4.0 * scale / std::sqrt(static_cast<double>(m));
  INFO("max deviation = " << (estimate - exact).cwiseAbs().maxCoeff() << ", tol = " << tol);
  REQUIRE((estimate - exact).cwiseAbs().maxCoeff() < tol);
}

TEST_CASE("the data gradient matches finite differences", "[sim]") {
  Rng rng(141);
  const int n = 12, m = 7, p = 2;
  const Matrix data = random_binary_matrix(m, n, rng);
  Matrix xi(p, n);
  for (int mu = 0; mu < p; ++mu)
    for (int i = 0; i < n; ++i) xi(mu, i) = 0.5 * rng.normal();
  const double beta = 1.3;

  auto value = [&](const Matrix& x) {
    double total = 0.0;
    const double scale = beta / std::sqrt(static_cast<double>(n));
    for (int a = 0; a < m; ++a)
      for (int mu = 0; mu < p; ++mu)
        total += std::log(std::cosh(scale * x.row(mu).dot(data.row(a))));
    return total;
  };
  const Matrix grad = detail::positive_phase_gradient(xi, data, beta);
  const double eps = 1e-6;
  for (int mu = 0; mu < p; ++mu) {
    for (int i = 0; i < n; i += 3) {
      Matrix up = xi, down = xi;
      up(mu, i) += eps;
      down(mu, i) -= eps;
      const double fd = (value(up) - value(down)) / (2.0 * eps);
      REQUIRE(grad(mu, i) == Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("langevin training samples the same posterior as exact metropolis", "[sim]") {
  // On one fixed instance, the Langevin+CD trainer must agree with an
  // independent random-walk Metropolis chain targeting the posterior log
  // weight directly. The infinite-size prediction only bounds the level
  // loosely here: at this N the posterior mean overlap sits visibly below
  // the limit and drifts toward it as N grows.
  const int n = 192;
  const double beta = 2.0, alpha = 1.5;
  const int m = static_cast<int>(alpha * n);
  const Matrix q1 = Matrix::Identity(1, 1);
  Rng teacher_rng(152);
  const PatternMatrix teacher = sample_gaussian_patterns(q1, n, teacher_rng);
  SimulationConfig cfg;
  Rng gen(153);
  const Dataset data = generate_teacher_data(teacher, beta, m, n, cfg, gen);

  cfg.mc_sweeps = 6000;
  cfg.summary_window = 2000;
  cfg.langevin.step_size = 2e-3;
  PatternMatrix init;
  init.binary = false;
  init.values.resize(1, n);
  Rng init_rng(151);
  for (int i = 0; i < n; ++i) init.values(0, i) = init_rng.normal();
  Rng train_rng(154);
  const TrainResult res = train_student_gaussian(data, beta, 1, init, cfg, train_rng);
  const double langevin_m = std::abs(res.trace.window_mean(0, 0));

  // Reference chain: per-coordinate Gaussian proposals, exact accept rule on
  // the posterior weight, incremental per-sample field cache.
  const double root_n = std::sqrt(static_cast<double>(n));
  Rng mh(155);
  Vector xi(n);
  for (int i = 0; i < n; ++i) xi(i) = mh.normal();
  Vector fields = data.samples * xi / root_n;
  const int sweeps = 2000, burn = 500;
  double mh_m = 0.0;
  long used = 0;
  for (int t = 0; t < sweeps; ++t) {
    for (int i = 0; i < n; ++i) {
      const double delta = 0.35 * mh.normal();
      const double xn = xi(i) + delta;
      double dw = -0.5 * (xn * xn - xi(i) * xi(i));
      dw -= m * beta * beta * (2.0 * xi(i) * delta + delta * delta) / (2.0 * n);
      for (int a = 0; a < m; ++a) {
        const double f = fields(a);
        const double fn = f + delta * data.samples(a, i) / root_n;
        dw += detail::log_cosh(beta * fn) - detail::log_cosh(beta * f);
      }
      if (dw >= 0.0 || mh.uniform() < std::exp(dw)) {
        fields += (delta / root_n) * data.samples.col(i);
        xi(i) = xn;
      }
    }
    if (t >= burn) {
      mh_m += std::abs(teacher.values.row(0).dot(xi) / n);
      ++used;
    }
  }
  mh_m /= static_cast<double>(used);

  const GaussianPsbSolution theory = solve_gaussian_psb(beta, beta, alpha);
  REQUIRE(theory.converged);
  INFO("langevin |m| = " << langevin_m << ", metropolis |m| = " << mh_m
                         << ", infinite-size m = " << theory.m);
  REQUIRE(std::abs(langevin_m - mh_m) < 0.05);
  REQUIRE(langevin_m > 0.5);                     // recall branch, not the flat one
  REQUIRE(std::abs(langevin_m - theory.m) < 0.25);  // finite-size shift stays moderate
}

TEST_CASE("aggressive step decay freezes the trajectory early", "[sim]") {
  // Same data, same start, same seeds: a fast geometric step decay caps the
  // total integrated time near step/(1-decay), so the student freezes far
  // from the recall level a constant step reaches.
  const int n = 256;
  const double beta = 4.0, alpha = 1.0;
  const int m = static_cast<int>(alpha * n);
  const Matrix q1 = Matrix::Identity(1, 1);
  Rng teacher_rng(162);
  const PatternMatrix teacher = sample_gaussian_patterns(q1, n, teacher_rng);
  SimulationConfig cfg;
  Rng gen(163);
  const Dataset data = generate_teacher_data(teacher, beta, m, n, cfg, gen);

  cfg.mc_sweeps = 1200;
  cfg.summary_window = 100;
  cfg.langevin.step_size = 1e-3;
  cfg.langevin.decay = 0.99;
  PatternMatrix init;
  init.binary = false;
  init.values.resize(1, n);
  Rng init_rng(161);
  for (int i = 0; i < n; ++i) init.values(0, i) = init_rng.normal();

  Rng rng_decayed(164);
  const TrainResult frozen = train_student_gaussian(data, beta, 1, init, cfg, rng_decayed);
  SimulationConfig steady_cfg = cfg;
  steady_cfg.langevin.decay = 1.0;
  Rng rng_steady(164);
  const TrainResult steady = train_student_gaussian(data, beta, 1, init, steady_cfg, rng_steady);

  // The recorded schedule is exactly geometric.
  REQUIRE(frozen.trace.step_size[0] == 1e-3);
  double expect_dt = 1e-3;
  for (size_t e = 1; e < frozen.trace.step_size.size(); ++e) {
    REQUIRE(frozen.trace.step_size[e] == Approx(expect_dt).epsilon(1e-12));
    expect_dt *= 0.99;
  }
  // Once the step has decayed away, the overlap stops moving.
  const size_t epochs = frozen.trace.m.size();
  double late_move = 0.0;
  for (size_t e = epochs - 300; e < epochs; ++e)
    late_move = std::max(late_move,
                         std::abs(frozen.trace.m[e](0, 0) - frozen.trace.m.back()(0, 0)));
  INFO("late movement = " << late_move);
  REQUIRE(late_move < 0.01);
  // The constant-step twin keeps evolving toward recall and ends well ahead.
  const double frozen_m = std::abs(frozen.trace.window_mean(0, 0));
  const double steady_m = std::abs(steady.trace.window_mean(0, 0));
  INFO("frozen |m| = " << frozen_m << ", steady |m| = " << steady_m);
  REQUIRE(steady_m > frozen_m + 0.3);
}

TEST_CASE("relabeling hidden rows relabels the trajectory", "[sim]") {
  const int n = 48, p = 3;
  Rng rng(171);
  const PatternMatrix teacher = random_binary_patterns(2, n, rng);
  SimulationConfig cfg;
  cfg.gibbs_sweeps = 30;
  Rng gen(172);
  const Dataset data = generate_teacher_data(teacher, 1.5, 24, n, cfg, gen);

  cfg.mc_sweeps = 12;
  cfg.langevin.step_size = 5e-3;
  cfg.langevin.row_seeds = {901, 902, 903};
  PatternMatrix init;
  init.binary = false;
  init.values.resize(p, n);
  for (int mu = 0; mu < p; ++mu)
    for (int i = 0; i < n; ++i) init.values(mu, i) = rng.normal();

  Rng run_a(173);
  const TrainResult a = train_student_gaussian(data, 1.4, p, init, cfg, run_a);

  const std::vector<int> perm = {2, 0, 1};  // row nu of B = row perm[nu] of A
  SimulationConfig cfg_b = cfg;
  cfg_b.langevin.row_seeds = {903, 901, 902};
  PatternMatrix init_b = init;
  for (int mu = 0; mu < p; ++mu) init_b.values.row(mu) = init.values.row(perm[mu]);
  Rng run_b(173);
  const TrainResult b = train_student_gaussian(data, 1.4, p, init_b, cfg_b, run_b);

  double max_diff = 0.0;
  for (size_t e = 0; e < a.trace.m.size(); ++e)
    for (int mu = 0; mu < 2; ++mu)
      for (int nu = 0; nu < p; ++nu)
        max_diff = std::max(max_diff,
                            std::abs(b.trace.m[e](mu, nu) - a.trace.m[e](mu, perm[nu])));
  for (int nu = 0; nu < p; ++nu)
    max_diff = std::max(
        max_diff, (b.xi.values.row(nu) - a.xi.values.row(perm[nu])).cwiseAbs().maxCoeff());
  INFO("max trajectory discrepancy = " << max_diff);
  REQUIRE(max_diff < 1e-9);
}

TEST_CASE("runaway trajectories are reported", "[sim]") {
  Rng rng(181);
  const PatternMatrix teacher = random_binary_patterns(1, 16, rng);
  const Dataset data = dataset_from(Matrix(0, 16), teacher);
  SimulationConfig cfg;
  cfg.mc_sweeps = 50;
  cfg.langevin.step_size = 0.1;
  cfg.langevin.guard = 0.5;
  PatternMatrix init;
  init.binary = false;
  init.values = Matrix::Constant(1, 16, 0.49);
  Rng train_rng(182);
  REQUIRE_THROWS_AS(train_student_gaussian(data, 0.0, 1, init, cfg, train_rng),
                    DivergedTrajectory);
}

TEST_CASE("magnitude pruning keeps the initial rows that grew", "[sim]") {
  PatternMatrix trained, initial;
  trained.binary = initial.binary = false;
  trained.values.resize(3, 2);
  trained.values << 3.0, 0.0, 1.0, 0.0, 2.0, 0.0;  // row norms 3, 1, 2
  initial.values.resize(3, 2);
  initial.values << 10.0, 1.0, 20.0, 2.0, 30.0, 3.0;

  SECTION("keep two: rows one and three of the initial matrix, largest first") {
    const PatternMatrix kept = magnitude_prune(trained, initial, 2);
    REQUIRE(kept.count() == 2);
    REQUIRE(kept.values.row(0) == initial.values.row(0));
    REQUIRE(kept.values.row(1) == initial.values.row(2));
  }
  SECTION("keep all: initial rows reordered by descending trained norm") {
    const PatternMatrix kept = magnitude_prune(trained, initial, 3);
    REQUIRE(kept.values.row(0) == initial.values.row(0));
    REQUIRE(kept.values.row(1) == initial.values.row(2));
    REQUIRE(kept.values.row(2) == initial.values.row(1));
  }
  SECTION("ties break toward the lower row index") {
    trained.values << 1.0, 0.0, 1.0, 0.0, 2.0, 0.0;
    const PatternMatrix kept = magnitude_prune(trained, initial, 2);
    REQUIRE(kept.values.row(0) == initial.values.row(2));
    REQUIRE(kept.values.row(1) == initial.values.row(0));
  }
  SECTION("shape and count violations are rejected") {
    REQUIRE_THROWS_AS(magnitude_prune(trained, initial, 4), ParameterOutOfRange);
    PatternMatrix short_init = initial;
    short_init.values.conservativeResize(2, 2);
    REQUIRE_THROWS_AS(magnitude_prune(trained, short_init, 1), DimensionMismatch);
  }
}

TEST_CASE("the pruning experiment reports coherent race statistics", "[sim]") {
  LotteryConfig cfg;
  cfg.n = 96;
  cfg.p_star = 2;
  cfg.p_large = 4;
  cfg.keep = 2;
  cfg.beta_star = 3.0;
  cfg.beta = 3.0;
  cfg.alphas = {0.4, 0.8};
  cfg.sim.mc_sweeps = 120;
  cfg.sim.gibbs_sweeps = 60;
  cfg.sim.langevin.step_size = 2e-3;
  Rng rng(191);
  const LotteryResult res = run_lottery_experiment(cfg, rng);

  const size_t epochs = static_cast<size_t>(cfg.sim.mc_sweeps) + 1;
  REQUIRE(res.alphas == cfg.alphas);
  REQUIRE(res.m_control.size() == 2);
  REQUIRE(res.m_ticket.size() == 2);
  REQUIRE(res.median_lead.size() == epochs);
  REQUIRE(res.mad_lead.size() == epochs);
  for (size_t j = 0; j < 2; ++j) {
    REQUIRE(res.m_control[j].size() == epochs);
    REQUIRE(res.m_ticket[j].size() == epochs);
    for (double v : res.m_ticket[j]) REQUIRE(v >= 0.0);
  }
  // Untrained students start with only chance-level recall on either side.
  REQUIRE(std::abs(res.median_lead[0]) < 0.25);
  // The published statistics must equal a recomputation from the traces.
  for (size_t e = 0; e < epochs; e += 17) {
    std::vector<double> lead = {res.m_ticket[0][e] - res.m_control[0][e],
                                res.m_ticket[1][e] - res.m_control[1][e]};
    const double median = 0.5 * (lead[0] + lead[1]);
    const double mad = 0.5 * (std::abs(lead[0] - median) + std::abs(lead[1] - median));
    REQUIRE(res.median_lead[e] == Catch::Approx(median).margin(1e-12));
    REQUIRE(res.mad_lead[e] == Catch::Approx(mad).margin(1e-12));
  }
  // Deterministic replay.
  Rng rng2(191);
  const LotteryResult again = run_lottery_experiment(cfg, rng2);
  REQUIRE(again.median_lead == res.median_lead);
}

TEST_CASE("simulation configuration is validated", "[sim]") {
  Rng rng(201);
  const PatternMatrix teacher = random_binary_patterns(1, 16, rng);
  const Dataset data = dataset_from(random_binary_matrix(2, 16, rng), teacher);
  SimulationConfig cfg;
  cfg.mc_sweeps = 2;
  const PatternMatrix init = random_binary_patterns(1, 16, rng);
  Rng r(202);

  SECTION("teacher data bounds") {
    REQUIRE_THROWS_AS(generate_teacher_data(teacher, 1.0, -1, 16, cfg, r),
                      ParameterOutOfRange);
    REQUIRE_THROWS_AS(generate_teacher_data(teacher, 1.0, 2, kMaxSimulationN + 1, cfg, r),
                      ParameterOutOfRange);
    REQUIRE_THROWS_AS(generate_teacher_data(teacher, -0.1, 2, 16, cfg, r),
                      ParameterOutOfRange);
    REQUIRE_THROWS_AS(generate_teacher_data(teacher, 1.0, 2, 17, cfg, r), DimensionMismatch);
  }
  SECTION("binary trainer demands matching +-1 patterns") {
    PatternMatrix bad = init;
    bad.values(0, 3) = 0.5;
    REQUIRE_THROWS_AS(train_student_binary(data, 1.0, 1, bad, cfg, r), ParameterOutOfRange);
    REQUIRE_THROWS_AS(train_student_binary(data, 1.0, 2, init, cfg, r), DimensionMismatch);
    REQUIRE_THROWS_AS(train_student_binary(data, -1.0, 1, init, cfg, r), ParameterOutOfRange);
  }
  SECTION("langevin knobs are range-checked") {
    PatternMatrix real = init;
    real.binary = false;
    SimulationConfig bad = cfg;
    bad.langevin.step_size = 0.0;
    REQUIRE_THROWS_AS(train_student_gaussian(data, 1.0, 1, real, bad, r), ParameterOutOfRange);
    bad = cfg;
    bad.langevin.decay = 1.5;
    REQUIRE_THROWS_AS(train_student_gaussian(data, 1.0, 1, real, bad, r), ParameterOutOfRange);
    bad = cfg;
    bad.langevin.cd_steps = 0;
    REQUIRE_THROWS_AS(train_student_gaussian(data, 1.0, 1, real, bad, r), ParameterOutOfRange);
    bad = cfg;
    bad.langevin.friction = 2.0;
    bad.langevin.step_size = 0.6;
    REQUIRE_THROWS_AS(train_student_gaussian(data, 1.0, 1, real, bad, r), ParameterOutOfRange);
    bad = cfg;
    bad.langevin.row_seeds = {1, 2};
    REQUIRE_THROWS_AS(train_student_gaussian(data, 1.0, 1, real, bad, r), DimensionMismatch);
  }
  SECTION("external field assignments are checked") {
    SimulationConfig bad = cfg;
    bad.external_field = ExternalField{0.1, {5}};
    REQUIRE_THROWS_AS(train_student_binary(data, 1.0, 1, init, bad, r), ParameterOutOfRange);
    bad.external_field = ExternalField{0.1, {0, 0}};
    REQUIRE_THROWS_AS(train_student_binary(data, 1.0, 1, init, bad, r), DimensionMismatch);
    bad.external_field = ExternalField{-0.1, {}};
    REQUIRE_THROWS_AS(train_student_binary(data, 1.0, 1, init, bad, r), ParameterOutOfRange);
  }
  SECTION("lottery grid must be usable") {
    LotteryConfig lc;
    lc.alphas = {};
    Rng lr(203);
    REQUIRE_THROWS_AS(run_lottery_experiment(lc, lr), ParameterOutOfRange);
    lc.alphas = {-0.5};
    REQUIRE_THROWS_AS(run_lottery_experiment(lc, lr), ParameterOutOfRange);
    lc = LotteryConfig{};
    lc.keep = 9;
    REQUIRE_THROWS_AS(run_lottery_experiment(lc, lr), ParameterOutOfRange);
  }
}
