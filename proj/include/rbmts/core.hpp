#pragma once
// Shared domain types, validation, error taxonomy, and seeded RNG plumbing
// for the replica-symmetric RBM teacher-student toolkit.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rbmts {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;

// Spin enumerations run over 2^p states; hard cap so a typo cannot request 2^40.
inline constexpr int kEnumerationCap = 20;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPSDCovariance : Error { using Error::Error; };
struct NonPSDTransformedCovariance : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct ParameterOutOfRange : Error { using Error::Error; };
struct EnumerationCapExceeded : Error { using Error::Error; };
struct NonFiniteEnergy : Error { using Error::Error; };
struct SingularPrecision : Error { using Error::Error; };
struct DegenerateSample : Error { using Error::Error; };
struct SingularSampleCovariance : Error { using Error::Error; };
struct DivergedTrajectory : Error { using Error::Error; };
struct ConfigParseError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

struct NonFiniteUpdate : Error {
  explicit NonFiniteUpdate(int iteration)
      : Error("non-finite value produced at iteration " + std::to_string(iteration)),
        iteration(iteration) {}
  int iteration = -1;
};

inline void check_enumeration_cap(int p, const char* what) {
  if (p > kEnumerationCap)
    throw EnumerationCapExceeded(std::string(what) + ": 2^" + std::to_string(p) +
                                 " states exceeds the enumeration cap of 2^20");
}

// ---------------------------------------------------------------------------
// RNG: mt19937_64 wrapper with cheap deterministic stream splitting
// ---------------------------------------------------------------------------
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Per-grid-point seed derivation: adding points never perturbs existing ones.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x9e3779b97f4a7c15ULL));
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : seed_(seed), gen_(splitmix64(seed)) {}
  double normal() { return normal_(gen_); }
  double uniform() { return uniform_(gen_); }
  int uniform_int(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen_); }
  uint64_t next_u64() { return gen_(); }
  // Child stream independent of how much the parent has been consumed.
  Rng split(uint64_t tag) const { return Rng(derive_seed(seed_, tag)); }
  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// ---------------------------------------------------------------------------
// Hyperparameters and covariance specification
// ---------------------------------------------------------------------------
enum class StudentPrior { BinaryUniform, StandardGaussian };
enum class TeacherPrior { BinaryArcsine, Gaussian };

inline const char* to_string(StudentPrior p) {
  return p == StudentPrior::BinaryUniform ? "binary" : "gaussian";
}
inline const char* to_string(TeacherPrior p) {
  return p == TeacherPrior::BinaryArcsine ? "binary" : "gaussian";
}

struct Hyperparameters {
  double beta_star = 1.0;  // teacher inverse temperature
  double beta = 1.0;       // student inverse inference temperature
  double alpha = 0.0;      // data load M/N
  int p_star = 1;          // teacher hidden units
  int p = 1;               // student hidden units
  StudentPrior student_prior = StudentPrior::BinaryUniform;
  TeacherPrior teacher_prior = TeacherPrior::BinaryArcsine;
};

struct CovarianceSpec {
  enum class Kind { Identity, Uniform, Explicit, Wishart };
  Kind kind = Kind::Identity;
  double c = 0.0;      // Uniform / Wishart correlation strength
  Matrix matrix;       // Explicit
  int wishart_d = 0;   // inner dimension; 0 means D = P*
  uint64_t seed = 0;   // Wishart draw seed

  static CovarianceSpec identity() { return {}; }
  static CovarianceSpec uniform(double c) {
    CovarianceSpec s;
    s.kind = Kind::Uniform;
    s.c = c;
    return s;
  }
  static CovarianceSpec explicit_matrix(Matrix m) {
    CovarianceSpec s;
    s.kind = Kind::Explicit;
    s.matrix = std::move(m);
    return s;
  }
  static CovarianceSpec wishart(double c, int d, uint64_t seed) {
    CovarianceSpec s;
    s.kind = Kind::Wishart;
    s.c = c;
    s.wishart_d = d;
    s.seed = seed;
    return s;
  }
};

inline Matrix uniform_correlation_matrix(double c, int p_star) {
  Matrix q = Matrix::Constant(p_star, p_star, c);
  q.diagonal().setOnes();
  return q;
}

// Eigenvalue clamp for matrices that sit numerically on the PSD boundary.
// Accepts min eigenvalue >= -1e-10 * max|eigenvalue|, clamps it to 0.
inline Matrix clamp_psd(const Matrix& a, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) throw NonPSDCovariance(std::string(what) + ": eigensolve failed");
  Vector ev = es.eigenvalues();
  const double scale = std::max(std::abs(ev.minCoeff()), std::abs(ev.maxCoeff()));
  if (ev.minCoeff() < -1e-10 * std::max(scale, 1.0))
    throw NonPSDCovariance(std::string(what) + ": eigenvalue " + std::to_string(ev.minCoeff()));
  Vector clamped = ev.cwiseMax(0.0);
  return es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
}

// ---------------------------------------------------------------------------
// Order parameters: m (P*xP), s/q (PxP) and their conjugates
// ---------------------------------------------------------------------------
struct OrderParameterState {
  Matrix m, s, q;                 // overlaps
  Matrix m_hat, s_hat, q_hat;     // conjugates
  int p_star() const { return static_cast<int>(m.rows()); }
  int p() const { return static_cast<int>(m.cols()); }
};

// Normalizing constructor: symmetrizes q and q_hat exactly, pins the s_hat
// diagonal to zero (it never enters the free entropy), checks shapes.
inline OrderParameterState make_state(Matrix m, Matrix s, Matrix q, Matrix m_hat,
                                      Matrix s_hat, Matrix q_hat) {
  const auto ps = m.rows(), p = m.cols();
  auto check = [&](const Matrix& x, Eigen::Index r, Eigen::Index c, const char* name) {
    if (x.rows() != r || x.cols() != c)
      throw DimensionMismatch(std::string("order-parameter matrix ") + name + " has shape " +
                              std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  };
  check(s, p, p, "s");
  check(q, p, p, "q");
  check(m_hat, ps, p, "m_hat");
  check(s_hat, p, p, "s_hat");
  check(q_hat, p, p, "q_hat");
  OrderParameterState st;
  st.m = std::move(m);
  st.s = std::move(s);
  st.q = 0.5 * (q + q.transpose());
  st.m_hat = std::move(m_hat);
  st.s_hat = std::move(s_hat);
  st.s_hat.diagonal().setZero();
  st.q_hat = 0.5 * (q_hat + q_hat.transpose());
  return st;
}

inline OrderParameterState zero_state(int p_star, int p, double s_diag = 1.0) {
  OrderParameterState st;
  st.m = Matrix::Zero(p_star, p);
  st.s = Matrix::Zero(p, p);
  st.s.diagonal().setConstant(s_diag);
  st.q = Matrix::Zero(p, p);
  st.m_hat = Matrix::Zero(p_star, p);
  st.s_hat = Matrix::Zero(p, p);
  st.q_hat = Matrix::Zero(p, p);
  return st;
}

// ---------------------------------------------------------------------------
// Patterns and datasets
// ---------------------------------------------------------------------------
struct PatternMatrix {
  Matrix values;       // one pattern per row, shape (#patterns x N)
  bool binary = true;  // entries in {-1,+1} when set
  int count() const { return static_cast<int>(values.rows()); }
  int n() const { return static_cast<int>(values.cols()); }
};

struct Dataset {
  Matrix samples;          // M x N, entries in {-1,+1}
  PatternMatrix teacher;   // generating patterns, kept for overlap traces
  double beta_star = 0.0;  // generating inverse temperature
  uint64_t teacher_seed = 0;
  int gibbs_burn_in = 0;
  int m() const { return static_cast<int>(samples.rows()); }
  int n() const { return static_cast<int>(samples.cols()); }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------
struct Violation {
  std::string code;
  std::string detail;
};

struct CheckedConfig {
  bool ok = false;
  Hyperparameters h;
  Matrix Q;  // realized covariance (Identity/Uniform/Explicit; Wishart realized by its seed)
  std::vector<Violation> violations;
};

namespace detail {
// Projected Wishart draw: columns of A ~ Normal(0, C), C uniform(c); B = A A^T;
// Q = B rescaled to unit diagonal. One resample on a zero diagonal, then error.
inline Matrix projected_wishart(double c, int p, int d, Rng& rng) {
  if (c < 0.0 || c >= 1.0) throw ParameterOutOfRange("wishart correlation must lie in [0,1)");
  if (p < 1 || d < 1) throw ParameterOutOfRange("wishart dimensions must be >= 1");
  Matrix chol = Matrix::Identity(p, p);
  if (c > 0.0) {
    Eigen::LLT<Matrix> llt(uniform_correlation_matrix(c, p));
    if (llt.info() != Eigen::Success)
      throw NonPSDCovariance("uniform correlation matrix is not PSD");
    chol = llt.matrixL();
  }
  for (int attempt = 0; attempt < 2; ++attempt) {
    Matrix a(p, d);
    for (int j = 0; j < d; ++j)
      for (int i = 0; i < p; ++i) a(i, j) = rng.normal();
    a = chol * a;
    Matrix b = a * a.transpose();
    if ((b.diagonal().array() > 0.0).all()) {
      Vector inv_sqrt = b.diagonal().array().sqrt().inverse();
      Matrix q = inv_sqrt.asDiagonal() * b * inv_sqrt.asDiagonal();
      q.diagonal().setOnes();
      Matrix sym = 0.5 * (q + q.transpose());  // temporary: q aliases itself otherwise
      return sym;
    }
  }
  throw DegenerateSample("projected wishart produced a zero diagonal twice");
}
}  // namespace detail

// Deterministic realization of the covariance spec for a P*-dimensional teacher.
inline Matrix realize_covariance(const CovarianceSpec& cov, int p_star) {
  switch (cov.kind) {
    case CovarianceSpec::Kind::Identity:
      return Matrix::Identity(p_star, p_star);
    case CovarianceSpec::Kind::Uniform:
      if (cov.c < 0.0 || cov.c > 1.0)
        throw ParameterOutOfRange("uniform correlation c must lie in [0,1]");
      return uniform_correlation_matrix(cov.c, p_star);
    case CovarianceSpec::Kind::Explicit: {
      if (cov.matrix.rows() != p_star || cov.matrix.cols() != p_star)
        throw DimensionMismatch("explicit covariance side does not match p_star");
      Matrix q = 0.5 * (cov.matrix + cov.matrix.transpose());
      return clamp_psd(q, "explicit covariance");
    }
    case CovarianceSpec::Kind::Wishart: {
      Rng rng(cov.seed);
      return detail::projected_wishart(cov.c, p_star, cov.wishart_d > 0 ? cov.wishart_d : p_star,
                                       rng);
    }
  }
  throw ParameterOutOfRange("unknown covariance kind");
}

// Structured validation: collects violations instead of throwing, so a CLI can
// report all problems at once. ok == violations.empty().
inline CheckedConfig validate(const Hyperparameters& h, const CovarianceSpec& cov) {
  CheckedConfig out;
  out.h = h;
  auto bad = [&](const char* code, std::string detail) {
    out.violations.push_back({code, std::move(detail)});
  };
  if (!(h.beta_star > 0.0)) bad("ParameterOutOfRange", "beta_star must be > 0");
  if (!(h.beta > 0.0)) bad("ParameterOutOfRange", "beta must be > 0");
  if (!(h.alpha >= 0.0)) bad("ParameterOutOfRange", "alpha must be >= 0");
  if (h.p_star < 1) bad("ParameterOutOfRange", "p_star must be >= 1");
  if (h.p < 1) bad("ParameterOutOfRange", "p must be >= 1");
  if (h.p_star > kEnumerationCap)
    bad("ParameterOutOfRange", "p_star exceeds the 2^20 enumeration cap");
  if (h.p > kEnumerationCap) bad("ParameterOutOfRange", "p exceeds the 2^20 enumeration cap");
  if (h.teacher_prior == TeacherPrior::Gaussian && h.student_prior == StudentPrior::BinaryUniform)
    bad("ParameterOutOfRange",
        "gaussian teacher with binary student is unsupported: the teacher average has no "
        "enumerable or closed form in this combination");
  if (cov.kind == CovarianceSpec::Kind::Uniform && (cov.c < 0.0 || cov.c > 1.0))
    bad("ParameterOutOfRange", "uniform correlation c must lie in [0,1]");
  if (cov.kind == CovarianceSpec::Kind::Wishart && (cov.c < 0.0 || cov.c >= 1.0))
    bad("ParameterOutOfRange", "wishart correlation c must lie in [0,1)");
  if (cov.kind == CovarianceSpec::Kind::Explicit) {
    if (cov.matrix.rows() != h.p_star || cov.matrix.cols() != h.p_star) {
      bad("DimensionMismatch", "explicit covariance side does not match p_star");
    } else {
      Matrix sym = 0.5 * (cov.matrix + cov.matrix.transpose());
      Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
      const double scale = std::max({std::abs(es.eigenvalues().minCoeff()),
                                     std::abs(es.eigenvalues().maxCoeff()), 1.0});
      if (es.eigenvalues().minCoeff() < -1e-10 * scale)
        bad("NonPSDCovariance", "explicit covariance has eigenvalue " +
                                    std::to_string(es.eigenvalues().minCoeff()));
      if (h.teacher_prior == TeacherPrior::BinaryArcsine &&
          (sym.diagonal().array() - 1.0).abs().maxCoeff() > 1e-9)
        bad("ParameterOutOfRange", "binary teacher requires unit diagonal covariance");
    }
  }
  if (out.violations.empty()) {
    out.Q = realize_covariance(cov, h.p_star);
    out.ok = true;
  }
  return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace rbmts
