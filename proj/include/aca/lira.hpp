#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>

#include "aca/dataset.hpp"
#include "aca/model.hpp"
#include "aca/rng.hpp"
#include "aca/strategy.hpp"

namespace aca {

// Logit-scaled confidence of the true label: log(p_y / (1 - p_y)) with p_y
// clamped to [1e-9, 1 - 1e-9] so the statistic stays finite.
inline double confidence(const ParameterVector& theta, const ModelSpec& spec, const Example& z) {
  if (z.label < 0 || z.label >= spec.num_classes) throw std::invalid_argument("label out of range");
  const Vec p = softmax(class_scores(theta, spec, z.features));
  const double p_raw = p[static_cast<std::size_t>(z.label)];
  // log(p/(1-p)) via the clamped complement; the naive form loses all digits
  // of 1-p once p saturates.
  const double p_y = std::clamp(p_raw, 1e-9, 1.0 - 1e-9);
  const double complement = std::clamp(1.0 - p_raw, 1e-9, 1.0 - 1e-9);
  return std::log(p_y) - std::log(complement);
}

struct ShadowEnsemble {
  std::vector<ParameterVector> models;
  // member_mask[s][i]: pool example i was in shadow s's training half.
  std::vector<std::vector<bool>> member_mask;
  // Raised when some pool example never appears as a member, or never as a
  // non-member, across the ensemble.
  bool coverage_ok = true;
  std::vector<std::size_t> uncovered;
};

using TrainFn = std::function<ParameterVector(const Dataset&, std::uint64_t)>;

// Trains n_shadows models, each on a fresh seeded half of the pool. When a
// strategy is given, the collective exists inside each shadow world too: the
// mixture is applied to the member half before training.
inline ShadowEnsemble train_shadows(const Dataset& pool, std::size_t n_shadows, const Strategy* strategy,
                                    const TrainFn& train_fn, std::uint64_t seed) {
  if (n_shadows < 2) throw std::invalid_argument("need at least 2 shadow models");
  if (pool.size() < 2) throw std::invalid_argument("pool too small to split");

  ShadowEnsemble ensemble;
  ensemble.models.reserve(n_shadows);
  ensemble.member_mask.assign(n_shadows, std::vector<bool>(pool.size(), false));

  // Half-splits are drawn over indices so the mask lines up with the pool.
  std::vector<std::size_t> perm(pool.size());
  const std::size_t half = pool.size() / 2;
  for (std::size_t s = 0; s < n_shadows; ++s) {
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_rng(derive_seed(seed, std::string_view("shadow_split"), s));
    std::shuffle(perm.begin(), perm.end(), rng);

    Dataset members;
    members.d_in = pool.d_in;
    members.num_classes = pool.num_classes;
    for (std::size_t i = 0; i < half; ++i) {
      members.examples.push_back(pool.examples[perm[i]]);
      ensemble.member_mask[s][perm[i]] = true;
    }
    members.feature_range = compute_feature_range(members.examples, members.d_in);
    if (strategy) members = build_mixture(members, *strategy, derive_seed(seed, std::string_view("shadow_mix"), s)).data;
    ensemble.models.push_back(train_fn(members, derive_seed(seed, std::string_view("shadow_train"), s)));
  }

  for (std::size_t i = 0; i < pool.size(); ++i) {
    bool ever_in = false, ever_out = false;
    for (std::size_t s = 0; s < n_shadows; ++s) (ensemble.member_mask[s][i] ? ever_in : ever_out) = true;
    if (!ever_in || !ever_out) {
      ensemble.coverage_ok = false;
      ensemble.uncovered.push_back(i);
    }
  }
  return ensemble;
}

namespace detail {

inline double log_gaussian(double x, double mean, double variance) {
  return -0.5 * std::log(2.0 * M_PI * variance) - (x - mean) * (x - mean) / (2.0 * variance);
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_variance(const std::vector<double>& v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace detail

// Per-example Gaussian likelihood ratio: log N(phi; mu_in, s_in^2) -
// log N(phi; mu_out, s_out^2), with variances floored at 1e-6. Higher score
// means more member-like. When a side has fewer than two samples the caller
// supplies fallback (global) variances; the mean falls back too if the side
// is empty.
struct GaussianFallback {
  double mean_in = 0.0, variance_in = 1.0;
  double mean_out = 0.0, variance_out = 1.0;
};

inline double lira_score(double phi_target, const std::vector<double>& in_confidences,
                         const std::vector<double>& out_confidences,
                         const std::optional<GaussianFallback>& fallback = std::nullopt) {
  constexpr double kVarFloor = 1e-6;
  double mu_in, var_in, mu_out, var_out;
  if (in_confidences.size() >= 2) {
    mu_in = detail::mean_of(in_confidences);
    var_in = detail::sample_variance(in_confidences, mu_in);
  } else if (fallback) {
    mu_in = in_confidences.empty() ? fallback->mean_in : in_confidences.front();
    var_in = fallback->variance_in;
  } else {
    throw std::invalid_argument("lira_score needs >= 2 IN confidences or a fallback fit");
  }
  if (out_confidences.size() >= 2) {
    mu_out = detail::mean_of(out_confidences);
    var_out = detail::sample_variance(out_confidences, mu_out);
  } else if (fallback) {
    mu_out = out_confidences.empty() ? fallback->mean_out : out_confidences.front();
    var_out = fallback->variance_out;
  } else {
    throw std::invalid_argument("lira_score needs >= 2 OUT confidences or a fallback fit");
  }
  var_in = std::max(var_in, kVarFloor);
  var_out = std::max(var_out, kVarFloor);
  return detail::log_gaussian(phi_target, mu_in, var_in) - detail::log_gaussian(phi_target, mu_out, var_out);
}

// ROC by threshold sweep over the scores, descending, ties grouped. Points
// run from (0,0) to (1,1) with both coordinates non-decreasing.
struct RocCurve {
  std::vector<double> fpr;
  std::vector<double> tpr;
};

inline RocCurve roc(const std::vector<double>& scores, const std::vector<bool>& is_positive) {
  if (scores.size() != is_positive.size() || scores.empty()) throw std::invalid_argument("roc: malformed inputs");
  std::size_t n_pos = 0;
  for (bool b : is_positive) n_pos += b ? 1 : 0;
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc needs both classes present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.fpr.push_back(0.0);
  curve.tpr.push_back(0.0);
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (is_positive[order[i]] ? tp : fp) += 1;
      ++i;
    }
    curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(n_neg));
    curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(n_pos));
  }
  return curve;
}

// Trapezoidal area; equals the Mann-Whitney U statistic (ties counted half).
inline double auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.fpr.size(); ++i)
    area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) / 2.0;
  return area;
}

// Conservative step interpolation: TPR of the last curve point whose FPR does
// not exceed the target.
inline double tpr_at_fpr(const RocCurve& curve, double fpr_target) {
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) throw std::invalid_argument("fpr target must be in (0,1)");
  double best = 0.0;
  for (std::size_t i = 0; i < curve.fpr.size(); ++i)
    if (curve.fpr[i] <= fpr_target) best = curve.tpr[i];
  return best;
}

// --- end-to-end attack ------------------------------------------------------

struct AttackResult {
  std::vector<double> scores;          // per pool example
  std::vector<bool> is_member;         // member of the target model's half
  std::vector<bool> is_collective;     // transformed inside the target world
  bool coverage_ok = true;
  double auc_all = 0.0;
  double tpr_at_low_fpr_all = 0.0;     // at 0.1% FPR
  double auc_clean = 0.0;              // restricted to non-collective examples
  double tpr_at_low_fpr_clean = 0.0;
};

// Attacks a single target model trained exactly like the shadows: seeded
// half-split of the shared pool, optional collective mixture on the member
// half. Every pool example is scored against its original (x, y).
inline AttackResult lira_attack(const Dataset& pool, const ModelSpec& spec, std::size_t n_shadows,
                                const Strategy* strategy, const TrainFn& train_fn, std::uint64_t seed) {
  const ShadowEnsemble ensemble = train_shadows(pool, n_shadows, strategy, train_fn, seed);

  // Target world, same recipe as a shadow but on its own seed stream.
  std::vector<std::size_t> perm(pool.size());
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_rng(derive_seed(seed, std::string_view("target_split")));
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t half = pool.size() / 2;

  AttackResult result;
  result.is_member.assign(pool.size(), false);
  result.is_collective.assign(pool.size(), false);
  result.coverage_ok = ensemble.coverage_ok;

  Dataset members;
  members.d_in = pool.d_in;
  members.num_classes = pool.num_classes;
  std::vector<std::size_t> member_index;
  for (std::size_t i = 0; i < half; ++i) {
    members.examples.push_back(pool.examples[perm[i]]);
    member_index.push_back(perm[i]);
    result.is_member[perm[i]] = true;
  }
  members.feature_range = compute_feature_range(members.examples, members.d_in);
  if (strategy) {
    const Mixture mix = build_mixture(members, *strategy, derive_seed(seed, std::string_view("target_mix")));
    for (std::size_t i = 0; i < member_index.size(); ++i)
      if (mix.collective_mask[i]) result.is_collective[member_index[i]] = true;
    members = mix.data;
  }
  const ParameterVector target_model = train_fn(members, derive_seed(seed, std::string_view("target_train")));

  // Shadow confidences for every pool example.
  std::vector<std::vector<double>> shadow_phi(ensemble.models.size());
  for (std::size_t s = 0; s < ensemble.models.size(); ++s) {
    shadow_phi[s].resize(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i)
      shadow_phi[s][i] = confidence(ensemble.models[s], spec, pool.examples[i]);
  }

  // Global fit used as the small-sample fallback.
  std::vector<double> all_in, all_out;
  for (std::size_t s = 0; s < ensemble.models.size(); ++s)
    for (std::size_t i = 0; i < pool.size(); ++i)
      (ensemble.member_mask[s][i] ? all_in : all_out).push_back(shadow_phi[s][i]);
  GaussianFallback fallback;
  fallback.mean_in = detail::mean_of(all_in);
  fallback.variance_in = detail::sample_variance(all_in, fallback.mean_in);
  fallback.mean_out = detail::mean_of(all_out);
  fallback.variance_out = detail::sample_variance(all_out, fallback.mean_out);

  result.scores.resize(pool.size());
  std::vector<double> ins, outs;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    ins.clear();
    outs.clear();
    for (std::size_t s = 0; s < ensemble.models.size(); ++s)
      (ensemble.member_mask[s][i] ? ins : outs).push_back(shadow_phi[s][i]);
    const double phi = confidence(target_model, spec, pool.examples[i]);
    result.scores[i] = lira_score(phi, ins, outs, fallback);
  }

  const RocCurve curve_all = roc(result.scores, result.is_member);
  result.auc_all = auc(curve_all);
  result.tpr_at_low_fpr_all = tpr_at_fpr(curve_all, 0.001);

  std::vector<double> clean_scores;
  std::vector<bool> clean_labels;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (result.is_collective[i]) continue;
    clean_scores.push_back(result.scores[i]);
    clean_labels.push_back(result.is_member[i]);
  }
  const RocCurve curve_clean = roc(clean_scores, clean_labels);
  result.auc_clean = auc(curve_clean);
  result.tpr_at_low_fpr_clean = tpr_at_fpr(curve_clean, 0.001);
  return result;
}

}  // namespace aca
