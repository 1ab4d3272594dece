#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace aca {

// Renyi-DP values over a grid of orders. Orders are strictly increasing and
// values non-negative; +inf entries mark overflow regimes and are skipped by
// the (eps, delta) conversion.
struct RdpCurve {
  std::vector<double> orders;
  std::vector<double> values;

  void validate() const {
    if (orders.empty() || orders.size() != values.size()) throw std::invalid_argument("malformed RDP curve");
    for (std::size_t i = 0; i < orders.size(); ++i) {
      if (!(orders[i] > 1.0)) throw std::invalid_argument("RDP orders must be > 1");
      if (i > 0 && !(orders[i] > orders[i - 1])) throw std::invalid_argument("RDP orders must be increasing");
      if (values[i] < 0.0) throw std::invalid_argument("RDP values must be >= 0");
    }
  }
};

// Full-batch Gaussian mechanism with sensitivity 1: alpha / (2 sigma^2).
inline double rdp_gaussian(double sigma, double order) {
  if (!(sigma > 0.0)) throw std::invalid_argument("rdp_gaussian requires sigma > 0 (sigma=0 has infinite loss)");
  if (!(order > 1.0)) throw std::invalid_argument("rdp_gaussian requires order > 1");
  return order / (2.0 * sigma * sigma);
}

// Poisson-subsampled Gaussian mechanism at an integer order, via the
// binomial-expansion upper bound
//   (1/(a-1)) * log sum_{k=0..a} C(a,k) (1-q)^(a-k) q^k exp(k(k-1)/(2 sigma^2))
// evaluated in log-space; the individual terms overflow doubles already for
// moderate a / sigma. Non-finite results are reported as +inf.
inline double rdp_subsampled_gaussian(double q, double sigma, int order) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("sampling rate must be in (0,1]");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  if (order < 2) throw std::invalid_argument("integer order must be >= 2");

  const double a = static_cast<double>(order);
  std::vector<double> log_terms;
  log_terms.reserve(static_cast<std::size_t>(order) + 1);
  for (int k = 0; k <= order; ++k) {
    const double kd = static_cast<double>(k);
    if (q == 1.0 && k < order) continue;  // (1-q)^(a-k) vanishes
    const double log_binom = std::lgamma(a + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(a - kd + 1.0);
    const double log_keep = (k == order) ? 0.0 : (a - kd) * std::log1p(-q);
    const double log_q = (k == 0) ? 0.0 : kd * std::log(q);
    log_terms.push_back(log_binom + log_keep + log_q + kd * (kd - 1.0) / (2.0 * sigma * sigma));
  }
  double max_term = -std::numeric_limits<double>::infinity();
  for (double t : log_terms) max_term = std::max(max_term, t);
  double s = 0.0;
  for (double t : log_terms) s += std::exp(t - max_term);
  const double value = (max_term + std::log(s)) / (a - 1.0);
  if (!std::isfinite(value)) return std::numeric_limits<double>::infinity();
  // The sum is >= 1 for every q, so the exact value is non-negative; rounding
  // can land a hair below zero at q -> 0.
  return std::max(value, 0.0);
}

// Integer orders 2..64 plus {128, 256}; covers the conversion minima for the
// sigma range of interest ([0.4, 2]).
inline std::vector<int> default_orders() {
  std::vector<int> orders;
  for (int a = 2; a <= 64; ++a) orders.push_back(a);
  orders.push_back(128);
  orders.push_back(256);
  return orders;
}

inline RdpCurve subsampled_gaussian_curve(double q, double sigma, const std::vector<int>& orders = default_orders()) {
  RdpCurve curve;
  for (int a : orders) {
    curve.orders.push_back(static_cast<double>(a));
    curve.values.push_back(rdp_subsampled_gaussian(q, sigma, a));
  }
  return curve;
}

// Dense real-order grid for the full-batch mechanism, where the closed form
// holds for all real orders > 1.
inline RdpCurve gaussian_curve(double sigma) {
  RdpCurve curve;
  for (int i = 1; i <= 6400; ++i) {
    const double a = 1.0 + 0.01 * static_cast<double>(i);
    curve.orders.push_back(a);
    curve.values.push_back(rdp_gaussian(sigma, a));
  }
  curve.orders.push_back(128.0);
  curve.values.push_back(rdp_gaussian(sigma, 128.0));
  curve.orders.push_back(256.0);
  curve.values.push_back(rdp_gaussian(sigma, 256.0));
  return curve;
}

// RDP composes additively across mechanism invocations.
inline RdpCurve compose(const RdpCurve& per_step, std::int64_t steps) {
  if (steps < 1) throw std::invalid_argument("compose requires steps >= 1");
  per_step.validate();
  RdpCurve out = per_step;
  for (double& v : out.values) v *= static_cast<double>(steps);
  return out;
}

struct EpsResult {
  double epsilon = std::numeric_limits<double>::infinity();
  double order = 0.0;  // argmin order
};

// eps = min over orders of rdp(a) + log(1/delta)/(a-1). Non-finite curve
// entries are excluded; an all-infinite curve reports eps = +inf.
inline EpsResult rdp_to_eps(const RdpCurve& curve, double delta) {
  curve.validate();
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  EpsResult best;
  const double log_inv_delta = std::log(1.0 / delta);
  for (std::size_t i = 0; i < curve.orders.size(); ++i) {
    if (!std::isfinite(curve.values[i])) continue;
    const double eps = curve.values[i] + log_inv_delta / (curve.orders[i] - 1.0);
    if (eps < best.epsilon) {
      best.epsilon = eps;
      best.order = curve.orders[i];
    }
  }
  return best;
}

// Privacy cost of T steps of (subsampled) Gaussian DPSGD. q = 1 uses the
// closed-form curve on a dense real grid; q < 1 uses the integer-order bound.
inline EpsResult epsilon_for(double sigma, double q, std::int64_t steps, double delta) {
  const RdpCurve per_step = (q >= 1.0) ? gaussian_curve(sigma) : subsampled_gaussian_curve(q, sigma);
  return rdp_to_eps(compose(per_step, steps), delta);
}

// Inverse lookup: bisection over sigma in [1e-3, 1e3]; eps(sigma) is monotone
// decreasing.
inline double sigma_for_epsilon(double target_eps, double delta, double q, std::int64_t steps) {
  if (!(target_eps > 0.0)) throw std::invalid_argument("target epsilon must be > 0");
  double lo = 1e-3, hi = 1e3;
  const double eps_lo = epsilon_for(lo, q, steps, delta).epsilon;   // largest achievable
  const double eps_hi = epsilon_for(hi, q, steps, delta).epsilon;   // smallest achievable
  if (target_eps > eps_lo || target_eps < eps_hi)
    throw std::range_error("target epsilon is outside the achievable range for sigma in [1e-3, 1e3]");
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double eps = epsilon_for(mid, q, steps, delta).epsilon;
    if (std::abs(eps - target_eps) <= 1e-3 * target_eps) return mid;
    if (eps > target_eps)
      lo = mid;
    else
      hi = mid;
  }
  throw std::range_error("sigma_for_epsilon did not converge");
}

}  // namespace aca
