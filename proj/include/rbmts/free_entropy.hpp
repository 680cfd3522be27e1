#pragma once
// Replica-symmetric free entropy of the teacher-student ensemble, evaluated
// at an arbitrary order-parameter state. The stochastic solver owns the
// extremization; this functional ranks coexisting fixed-point branches, so
// the deliverable is usually a *difference* of two evaluations under common
// noise samples. Binary partition sums use the counting measure (the
// zero-load paramagnetic value is log 2 per student unit); Gaussian patterns
// integrate out in closed form against the standard normal prior.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rbmts/saddle.hpp"

namespace rbmts {

struct FreeEntropyResult {
  double value = 0.0;
  // Standard error of the noise average, estimated from the spread of the
  // antithetic-pair means. Zero when fewer than two pairs are supplied.
  double mc_standard_error = 0.0;
};

namespace detail {

// Fixed-shape tree reduction: the result depends only on the element order,
// never on how an evaluation loop was batched.
inline double pairwise_sum(std::vector<double> v) {
  if (v.empty()) return 0.0;
  size_t n = v.size();
  while (n > 1) {
    size_t half = n / 2;
    for (size_t i = 0; i < half; ++i) v[i] = v[2 * i] + v[2 * i + 1];
    if (n % 2) {
      v[half] = v[n - 1];
      ++half;
    }
    n = half;
  }
  return v[0];
}

// Adds w * sum_k w_k log|Z(state_k, z_i)| into acc[i] for every noise sample,
// with Z the pairwise-Hamiltonian partition sum over the enumerated inner
// spins and state_k running over the enumerated outer ensemble.
inline void accumulate_ensemble_log_z(const Matrix& m_like, const Matrix& s_like,
                                      const Matrix& q_like, double l1, double l2,
                                      const SpinEnsemble& outer, const std::vector<Matrix>& zs,
                                      double weight, std::vector<double>& acc) {
  LContext ctx(m_like, s_like, q_like, l1, l2);
  ThermalMoments tm;
  for (int k = 0; k < outer.count(); ++k) {
    const Vector state = outer.states.row(k).transpose();
    const double wk = weight * outer.weights(k);
    for (size_t i = 0; i < zs.size(); ++i) {
      ctx.moments_into(state, zs[i], tm);
      acc[i] += wk * tm.log_abs_z;
    }
  }
}

inline void check_state_shapes(const OrderParameterState& st, int p_star, int p) {
  const bool ok = st.m.rows() == p_star && st.m.cols() == p && st.m_hat.rows() == p_star &&
                  st.m_hat.cols() == p && st.s.rows() == p && st.s.cols() == p &&
                  st.q.rows() == p && st.q.cols() == p && st.s_hat.rows() == p &&
                  st.s_hat.cols() == p && st.q_hat.rows() == p && st.q_hat.cols() == p;
  if (!ok) throw DimensionMismatch("order-parameter shapes do not match the hyperparameters");
}

}  // namespace detail

// Free entropy at the supplied state under caller-provided noise samples
// (each p x p). Supplying the same samples to two evaluations yields a
// common-random-number comparison whose difference is far more precise than
// either value. When per_sample_noise_terms is non-null it receives the
// per-sample totals of the stochastic terms (the deterministic terms
// excluded), enabling error analysis of such differences.
inline FreeEntropyResult free_entropy(const OrderParameterState& st, const Hyperparameters& h,
                                      const Matrix& Q, const std::vector<Matrix>& z_samples,
                                      std::vector<double>* per_sample_noise_terms = nullptr) {
  if (!(h.beta > 0.0) || !(h.beta_star > 0.0))
    throw ParameterOutOfRange("inverse temperatures must be positive");
  if (!(h.alpha >= 0.0)) throw ParameterOutOfRange("load must be nonnegative");
  if (h.p < 1 || h.p_star < 1) throw ParameterOutOfRange("unit counts must be positive");
  check_enumeration_cap(h.p, "free_entropy");
  detail::check_state_shapes(st, h.p_star, h.p);
  const size_t n = z_samples.size();
  if (n < 2 || n % 2 != 0)
    throw ParameterOutOfRange("free entropy needs a positive even noise-sample count");
  for (const Matrix& z : z_samples)
    if (z.rows() != h.p || z.cols() != h.p)
      throw DimensionMismatch("noise matrix size mismatch");

  const SaddleContext ctx = make_saddle_context(h, Q);

  // Deterministic couplings between the order parameters and their
  // conjugates; the pair-interaction trace excludes the diagonal.
  double algebra = -(st.m.array() * st.m_hat.array()).sum() +
                   0.5 * (st.q.array() * st.q_hat.array()).sum();
  for (int u = 0; u < h.p; ++u)
    for (int v = 0; v < h.p; ++v)
      if (u != v) algebra -= 0.5 * st.s(u, v) * st.s_hat(u, v);

  // Reference-measure subtraction on the hidden side.
  const double log_z_m = hidden_moments_M(st.s, h.beta).log_z;

  // Noise-averaged log partition sums, kept per sample so antithetic pairs
  // can be folded for the error estimate.
  std::vector<double> per(n, 0.0);
  if (h.alpha != 0.0)
    detail::accumulate_ensemble_log_z(st.m, st.s, st.q, h.beta_star, h.beta, ctx.teacher,
                                      z_samples, h.alpha, per);
  double pattern_closed_form = 0.0;
  if (h.student_prior == StudentPrior::BinaryUniform) {
    detail::accumulate_ensemble_log_z(st.m_hat, st.s_hat, st.q_hat, 1.0, 1.0, ctx.source,
                                      z_samples, 1.0, per);
  } else {
    // Gaussian patterns integrate out exactly: with G = I + q_hat - s_hat and
    // drive covariance m_hat^T Q m_hat + q_hat, the averaged log partition
    // sum is (1/2) tr(G^{-1} cov) - (1/2) log det G.
    auto ldlt = detail::precision_factor(st.q_hat, st.s_hat);
    const double log_det = ldlt.vectorD().array().log().sum();
    const Matrix cov = st.m_hat.transpose() * Q * st.m_hat + st.q_hat;
    pattern_closed_form = 0.5 * ldlt.solve(cov).trace() - 0.5 * log_det;
  }

  std::vector<double> pair_means(n / 2);
  for (size_t j = 0; j < n / 2; ++j) pair_means[j] = 0.5 * (per[2 * j] + per[2 * j + 1]);
  const double noise_mean = detail::pairwise_sum(pair_means) / static_cast<double>(n / 2);

  FreeEntropyResult out;
  out.value = algebra + pattern_closed_form + noise_mean - h.alpha * log_z_m;
  if (n / 2 >= 2) {
    std::vector<double> dev2(n / 2);
    for (size_t j = 0; j < n / 2; ++j) {
      const double d = pair_means[j] - noise_mean;
      dev2[j] = d * d;
    }
    const double var = detail::pairwise_sum(dev2) / static_cast<double>(n / 2 - 1);
    out.mc_standard_error = std::sqrt(var / static_cast<double>(n / 2));
  }
  if (per_sample_noise_terms) *per_sample_noise_terms = std::move(per);
  return out;
}

// Convenience overload drawing the antithetic whitened samples internally.
inline FreeEntropyResult free_entropy(const OrderParameterState& st, const Hyperparameters& h,
                                      const Matrix& Q, int n_gaussian_samples, Rng& rng) {
  const std::vector<Matrix> zs = whitened_gaussian_samples(n_gaussian_samples, h.p, rng);
  return free_entropy(st, h, Q, zs);
}

struct FreeEntropyGap {
  double value = 0.0;           // first minus second under common noise
  double standard_error = 0.0;  // spread of the antithetic-pair differences
  FreeEntropyResult first;
  FreeEntropyResult second;
};

// Ranks two coexisting branches by evaluating both free entropies on the
// same noise stream and differencing per antithetic pair, which cancels the
// fluctuations the branches share. Samples are drawn (and whitened) in
// bounded chunks so large budgets never hold the whole stream in memory; the
// result is deterministic for a fixed rng state and chunk size.
inline FreeEntropyGap free_entropy_gap(const OrderParameterState& a, const OrderParameterState& b,
                                       const Hyperparameters& h, const Matrix& Q, int n_samples,
                                       Rng& rng, int chunk_samples = 100000) {
  if (n_samples < 2 || n_samples % 2 != 0)
    throw ParameterOutOfRange("free entropy needs a positive even noise-sample count");
  if (chunk_samples < 2 || chunk_samples % 2 != 0)
    throw ParameterOutOfRange("noise chunks must hold a positive even sample count");

  const size_t pairs = static_cast<size_t>(n_samples) / 2;
  std::vector<double> pair_a(pairs), pair_b(pairs), pair_d(pairs);
  double det_a = 0.0, det_b = 0.0;  // noise-independent parts, taken off chunk 0

  std::vector<double> per_a, per_b;
  size_t done = 0;
  while (done < pairs) {
    const int chunk = static_cast<int>(std::min<size_t>(chunk_samples, 2 * (pairs - done)));
    const std::vector<Matrix> zs = whitened_gaussian_samples(chunk, h.p, rng);
    const FreeEntropyResult ra = free_entropy(a, h, Q, zs, &per_a);
    const FreeEntropyResult rb = free_entropy(b, h, Q, zs, &per_b);
    const size_t chunk_pairs = static_cast<size_t>(chunk) / 2;
    for (size_t j = 0; j < chunk_pairs; ++j) {
      pair_a[done + j] = 0.5 * (per_a[2 * j] + per_a[2 * j + 1]);
      pair_b[done + j] = 0.5 * (per_b[2 * j] + per_b[2 * j + 1]);
      pair_d[done + j] = pair_a[done + j] - pair_b[done + j];
    }
    if (done == 0) {
      // free_entropy's value is det + mean(pair means); recover det with the
      // same reduction it used so the subtraction is exact.
      std::vector<double> cm(per_a.size() / 2);
      for (size_t j = 0; j < cm.size(); ++j) cm[j] = 0.5 * (per_a[2 * j] + per_a[2 * j + 1]);
      det_a = ra.value - detail::pairwise_sum(cm) / static_cast<double>(cm.size());
      for (size_t j = 0; j < cm.size(); ++j) cm[j] = 0.5 * (per_b[2 * j] + per_b[2 * j + 1]);
      det_b = rb.value - detail::pairwise_sum(cm) / static_cast<double>(cm.size());
    }
    done += chunk_pairs;
  }

  const auto summarize = [&](const std::vector<double>& pm, double det, FreeEntropyResult& out) {
    const double mean = detail::pairwise_sum(pm) / static_cast<double>(pairs);
    out.value = det + mean;
    if (pairs >= 2) {
      std::vector<double> dev2(pairs);
      for (size_t j = 0; j < pairs; ++j) dev2[j] = (pm[j] - mean) * (pm[j] - mean);
      const double var = detail::pairwise_sum(dev2) / static_cast<double>(pairs - 1);
      out.mc_standard_error = std::sqrt(var / static_cast<double>(pairs));
    }
    return mean;
  };

  FreeEntropyGap out;
  summarize(pair_a, det_a, out.first);
  summarize(pair_b, det_b, out.second);
  FreeEntropyResult diff;
  summarize(pair_d, det_a - det_b, diff);
  out.value = diff.value;
  out.standard_error = diff.mc_standard_error;
  return out;
}

}  // namespace rbmts
