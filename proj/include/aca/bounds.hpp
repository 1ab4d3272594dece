#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>

#include "aca/dp_optimizer.hpp"
#include "aca/rng.hpp"
#include "aca/vec.hpp"

namespace aca {

// High-probability bound on the norm of a d-dimensional Gaussian with
// per-coordinate standard deviation sigma_coord:
//   ||Y|| <= sigma_coord * (sqrt(d) + sqrt(2 log(1/delta)))  w.p. >= 1 - delta.
inline double tail_bound(std::size_t d, double sigma_coord, double delta) {
  if (sigma_coord < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  return sigma_coord * (std::sqrt(static_cast<double>(d)) + std::sqrt(2.0 * std::log(1.0 / delta)));
}

struct BoundInputs {
  double alpha = 0.0;       // collective fraction, in (0,1]
  double sigma = 0.0;       // noise multiplier, >= 0
  double clip = std::numeric_limits<double>::infinity();  // clipping threshold C
  std::int64_t steps = 1;   // T
  double eta = 0.1;         // learning rate
  std::size_t d = 1;        // parameter dimension
  double delta_conf = 0.05; // confidence level of the bound (not the DP delta)
  double dist0 = 0.0;       // ||theta_0 - theta*||
  double xi_min = 0.0;      // redirect-strength minimum along the path

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
    if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
    if (!(clip > 0.0)) throw std::invalid_argument("clip threshold must be > 0");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
    if (d == 0) throw std::invalid_argument("dimension must be >= 1");
    if (!(delta_conf > 0.0 && delta_conf < 1.0)) throw std::invalid_argument("delta_conf must be in (0,1)");
    if (dist0 < 0.0) throw std::invalid_argument("dist0 must be >= 0");
    if (!(xi_min > 0.0)) throw std::invalid_argument("xi_min must be > 0");
  }
};

struct BoundResult {
  double contraction_rate = 0.0;  // B = alpha * xi_min
  double noise_horizon = 0.0;     // f1 = (1 - (1 - eta B)^T) / B
  double dimension_factor = 0.0;  // f2 = sqrt(d) + sqrt(2 log(1/delta_conf))
  double lower_bound = 0.0;       // on S_T; <= 0 whenever the contraction holds
  bool contraction_ok = false;    // eta * B < 1
};

// Success lower bound after T steps:
//   S_T >= -(1 - eta B)^T * dist0 - sigma C * f1 * f2.
// sigma = 0 drops the noise term entirely and leaves the pure geometric
// contraction. A violated contraction condition is flagged but the value is
// still reported.
inline BoundResult compute_bound(const BoundInputs& in) {
  in.validate();
  if (in.sigma > 0.0 && std::isinf(in.clip))
    throw std::invalid_argument("noise term sigma*C is undefined for infinite clip threshold");

  BoundResult out;
  out.contraction_rate = in.alpha * in.xi_min;
  out.contraction_ok = in.eta * out.contraction_rate < 1.0;
  const double decay = std::pow(1.0 - in.eta * out.contraction_rate, static_cast<double>(in.steps));
  out.noise_horizon = (1.0 - decay) / out.contraction_rate;
  out.dimension_factor = std::sqrt(static_cast<double>(in.d)) + std::sqrt(2.0 * std::log(1.0 / in.delta_conf));
  const double noise_term =
      (in.sigma > 0.0) ? in.sigma * in.clip * out.noise_horizon * out.dimension_factor : 0.0;
  out.lower_bound = -decay * in.dist0 - noise_term;
  return out;
}

// Collective gradient that makes the alpha-mixture with g_base equal to
// alpha * xi * (theta - target):
//   g' = -((1-alpha)/alpha) g_base + xi (theta - target).
inline Vec redirect_gradient(const Vec& g_base, double alpha, double xi, const Vec& theta, const Vec& target) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
  Vec out = scaled(g_base, -(1.0 - alpha) / alpha);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += xi * (theta[i] - target[i]);
  return out;
}

// Effective redirect strength realized by a pair of clipped gradients:
//   xi_c = ||g_coll + ((1-alpha)/alpha) g_base|| / ||theta - target||.
inline double xi_c(const Vec& g_clip_collective, const Vec& g_clip_base, double alpha, const Vec& theta,
                   const Vec& target) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in (0,1]");
  const double gap = distance(theta, target);
  if (gap == 0.0) throw std::invalid_argument("xi_c is undefined at theta == target (dynamics have converged)");
  Vec combined = g_clip_collective;
  axpy((1.0 - alpha) / alpha, g_clip_base, combined);
  return norm(combined) / gap;
}

// Idealized dynamics: the learner descends on expected clipped gradients of
// the mixture, plus spherical Gaussian noise of scale sigma*C.
struct Landscape {
  std::function<Vec(const Vec&)> base_gradient;  // g_{P0}(theta)
  Vec theta0;
  Vec target;
};

inline Landscape quadratic_landscape(Vec minimum, Vec theta0, Vec target, double curvature = 1.0) {
  Landscape l;
  l.theta0 = std::move(theta0);
  l.target = std::move(target);
  l.base_gradient = [min = std::move(minimum), curvature](const Vec& theta) {
    Vec g = sub(theta, min);
    for (double& v : g) v *= curvature;
    return g;
  };
  return l;
}

struct TrialResult {
  double final_distance = 0.0;
  double success = 0.0;            // S_T = -final_distance
  double xi_min_realized = 0.0;    // min over steps of the realized xi_c
  std::int64_t clip_saturated_steps = 0;
};

struct SimResult {
  std::vector<TrialResult> trials;
  double success_q05 = 0.0;  // empirical 5% quantile of S_T
};

// Runs `trials` independent T-step trajectories. Each step the collective
// responds to the clipped base gradient with the redirect construction; the
// learner applies the clipped mixture plus noise. Steps where the clip binds
// on the collective's intended gradient are counted as clip-saturated, since
// the realized mixture then deviates from alpha*xi*(theta - target).
inline SimResult simulate_dynamics(const Landscape& landscape, const BoundInputs& in, double xi, int trials,
                                   std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (!(xi > 0.0)) throw std::invalid_argument("xi must be > 0");
  if (in.sigma > 0.0 && std::isinf(in.clip))
    throw std::invalid_argument("noise scale sigma*C is undefined for infinite clip threshold");
  if (landscape.theta0.size() != in.d || landscape.target.size() != in.d)
    throw std::invalid_argument("landscape dimension != BoundInputs.d");

  SimResult result;
  result.trials.resize(static_cast<std::size_t>(trials));
  for (int trial = 0; trial < trials; ++trial) {
    auto rng = make_rng(derive_seed(seed, std::string_view("trial"), trial));
    std::normal_distribution<double> unit_gauss(0.0, 1.0);
    Vec theta = landscape.theta0;
    TrialResult& tr = result.trials[static_cast<std::size_t>(trial)];
    tr.xi_min_realized = std::numeric_limits<double>::infinity();

    for (std::int64_t t = 0; t < in.steps; ++t) {
      if (distance(theta, landscape.target) == 0.0) break;  // converged exactly
      const Vec g_base = clip_gradient(landscape.base_gradient(theta), in.clip);
      const Vec g_coll_intended = redirect_gradient(g_base, in.alpha, xi, theta, landscape.target);
      if (norm(g_coll_intended) > in.clip) ++tr.clip_saturated_steps;
      const Vec g_coll = clip_gradient(g_coll_intended, in.clip);

      tr.xi_min_realized = std::min(tr.xi_min_realized, xi_c(g_coll, g_base, in.alpha, theta, landscape.target));

      Vec update = scaled(g_coll, in.alpha);
      axpy(1.0 - in.alpha, g_base, update);
      if (in.sigma > 0.0) {
        const double noise_sd = in.sigma * in.clip;
        for (double& v : update) v += noise_sd * unit_gauss(rng);
      }
      axpy(-in.eta, update, theta);
    }
    tr.final_distance = distance(theta, landscape.target);
    tr.success = -tr.final_distance;
    if (!std::isfinite(tr.xi_min_realized)) tr.xi_min_realized = xi;  // converged before any step
  }

  std::vector<double> successes;
  successes.reserve(result.trials.size());
  for (const TrialResult& tr : result.trials) successes.push_back(tr.success);
  std::sort(successes.begin(), successes.end());
  const std::size_t q_idx = static_cast<std::size_t>(0.05 * static_cast<double>(successes.size() - 1));
  result.success_q05 = successes[q_idx];
  return result;
}

enum class XiMode { analytic, realized };

struct VerifyReport {
  double violation_rate = 0.0;
  bool pass = false;
  int trials = 0;
  XiMode mode = XiMode::analytic;
};

namespace detail {

// Treats rounding ties as non-violations: with sigma = 0 and no clipping the
// trajectory lands exactly on the bound.
inline bool violates(double success, double bound) {
  return (bound - success) > 1e-9 * std::max(1.0, std::abs(bound));
}

inline bool rate_passes(double rate, double delta_conf, std::size_t trials) {
  const double slack = 2.0 * std::sqrt(delta_conf * (1.0 - delta_conf) / static_cast<double>(trials));
  return rate <= delta_conf + slack;
}

}  // namespace detail

// Checks the simulated successes against one fixed bound (analytic xi_min).
// Passes iff the violation rate stays within delta_conf plus binomial slack
// 2*sqrt(delta_conf(1-delta_conf)/trials); the boundary is inclusive.
inline VerifyReport verify_bound(const SimResult& sim, const BoundResult& bound, double delta_conf) {
  if (sim.trials.size() < 100) throw std::invalid_argument("verify_bound requires >= 100 trials");
  std::size_t violations = 0;
  for (const TrialResult& tr : sim.trials)
    if (detail::violates(tr.success, bound.lower_bound)) ++violations;
  VerifyReport report;
  report.trials = static_cast<int>(sim.trials.size());
  report.violation_rate = static_cast<double>(violations) / static_cast<double>(sim.trials.size());
  report.pass = detail::rate_passes(report.violation_rate, delta_conf, sim.trials.size());
  report.mode = XiMode::analytic;
  return report;
}

// Same check with the bound re-evaluated per trial at that trial's realized
// xi_c minimum.
inline VerifyReport verify_bound_realized(const SimResult& sim, const BoundInputs& in) {
  if (sim.trials.size() < 100) throw std::invalid_argument("verify_bound requires >= 100 trials");
  std::size_t violations = 0;
  for (const TrialResult& tr : sim.trials) {
    BoundInputs per_trial = in;
    per_trial.xi_min = tr.xi_min_realized;
    if (detail::violates(tr.success, compute_bound(per_trial).lower_bound)) ++violations;
  }
  VerifyReport report;
  report.trials = static_cast<int>(sim.trials.size());
  report.violation_rate = static_cast<double>(violations) / static_cast<double>(sim.trials.size());
  report.pass = detail::rate_passes(report.violation_rate, in.delta_conf, sim.trials.size());
  report.mode = XiMode::realized;
  return report;
}

}  // namespace aca
