#include <catch2/catch_amalgamated.hpp>

#include "aca/dp_optimizer.hpp"
#include "aca/lira.hpp"
#include "aca/synthetic.hpp"

using namespace aca;

namespace {

// Brute-force Mann-Whitney U statistic, ties counted half.
double mann_whitney_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  double u = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    ++n_pos;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      if (scores[i] > scores[j])
        u += 1.0;
      else if (scores[i] == scores[j])
        u += 0.5;
    }
  }
  for (bool b : labels) n_neg += b ? 0 : 1;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace

TEST_CASE("confidence") {
  const ModelSpec spec{Architecture::multinomial_logistic, 1, 0, 2};

  SECTION("p_y = 1/2 maps to 0") {
    const ParameterVector zero = init_model(spec, 0, 0.0);
    REQUIRE(confidence(zero, spec, {{1.0}, 0}) == 0.0);
  }
  SECTION("p_y = e/(1+e) maps to 1") {
    ParameterVector theta = init_model(spec, 0, 0.0);
    theta.values[2] = 1.0;  // class-0 bias; logits (1, 0)
    REQUIRE_THAT(confidence(theta, spec, {{0.0}, 0}), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  SECTION("saturated probabilities are clamped to a finite logit") {
    ParameterVector theta = init_model(spec, 0, 0.0);
    theta.values[2] = 60.0;  // p_y numerically 1
    const double phi = confidence(theta, spec, {{0.0}, 0});
    REQUIRE(std::isfinite(phi));
    REQUIRE_THAT(phi, Catch::Matchers::WithinAbs(std::log((1.0 - 1e-9) / 1e-9), 1e-9));
  }
}

TEST_CASE("train_shadows") {
  BlobConfig blob;
  blob.n = 4;
  blob.d_in = 2;
  const Dataset pool = make_blobs(blob, 3);
  const ModelSpec spec{Architecture::multinomial_logistic, 2, 0, 2};
  const TrainFn stub = [&](const Dataset&, std::uint64_t seed) { return init_model(spec, seed, 0.1); };

  SECTION("halves of the pool per shadow") {
    const ShadowEnsemble e = train_shadows(pool, 2, nullptr, stub, 5);
    for (std::size_t s = 0; s < 2; ++s) {
      std::size_t members = 0;
      for (bool b : e.member_mask[s]) members += b ? 1 : 0;
      REQUIRE(members == 2);
    }
  }
  SECTION("deterministic under the seed") {
    const ShadowEnsemble a = train_shadows(pool, 4, nullptr, stub, 5);
    const ShadowEnsemble b = train_shadows(pool, 4, nullptr, stub, 5);
    REQUIRE(a.member_mask == b.member_mask);
    for (std::size_t s = 0; s < 4; ++s) REQUIRE(a.models[s].values == b.models[s].values);
  }
  SECTION("coverage flag agrees with direct mask inspection") {
    BlobConfig big;
    big.n = 64;
    big.d_in = 2;
    const Dataset pool64 = make_blobs(big, 8);
    const ShadowEnsemble e = train_shadows(pool64, 16, nullptr, stub, 5);
    std::vector<std::size_t> uncovered;
    for (std::size_t i = 0; i < pool64.size(); ++i) {
      bool in = false, out = false;
      for (std::size_t s = 0; s < 16; ++s) (e.member_mask[s][i] ? in : out) = true;
      if (!in || !out) uncovered.push_back(i);
    }
    REQUIRE(e.uncovered == uncovered);
    REQUIRE(e.coverage_ok == uncovered.empty());
  }
  SECTION("fewer than two shadows are rejected") {
    REQUIRE_THROWS_AS(train_shadows(pool, 1, nullptr, stub, 5), std::invalid_argument);
  }
}

TEST_CASE("lira_score") {
  SECTION("gaussian arithmetic: means 5 and 0, unit variances, phi=5 gives 12.5") {
    const std::vector<double> ins = {4.0, 5.0, 6.0};   // mean 5, sample variance 1
    const std::vector<double> outs = {-1.0, 0.0, 1.0}; // mean 0, sample variance 1
    REQUIRE_THAT(lira_score(5.0, ins, outs), Catch::Matchers::WithinAbs(12.5, 1e-12));
  }
  SECTION("zero at the midpoint of equal-variance fits") {
    const std::vector<double> ins = {4.0, 5.0, 6.0};
    const std::vector<double> outs = {-1.0, 0.0, 1.0};
    REQUIRE_THAT(lira_score(2.5, ins, outs), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
  SECTION("identical OUT confidences hit the variance floor, score stays finite") {
    const std::vector<double> ins = {4.0, 5.0, 6.0};
    const std::vector<double> outs = {1.0, 1.0, 1.0};
    REQUIRE(std::isfinite(lira_score(5.0, ins, outs)));
  }
  SECTION("monotone in phi when mu_in > mu_out with equal variances") {
    const std::vector<double> ins = {4.0, 5.0, 6.0};
    const std::vector<double> outs = {-1.0, 0.0, 1.0};
    double prev = lira_score(-3.0, ins, outs);
    for (double phi = -2.5; phi < 8.0; phi += 0.5) {
      const double cur = lira_score(phi, ins, outs);
      REQUIRE(cur > prev);
      prev = cur;
    }
  }
  SECTION("small samples need the fallback fit") {
    REQUIRE_THROWS_AS(lira_score(1.0, {1.0}, {0.0, 1.0}), std::invalid_argument);
    GaussianFallback fallback;
    REQUIRE(std::isfinite(lira_score(1.0, {1.0}, {0.0, 1.0}, fallback)));
    REQUIRE(std::isfinite(lira_score(1.0, {}, {0.0, 1.0}, fallback)));
  }
}

TEST_CASE("roc and auc") {
  SECTION("perfect separation gives AUC 1") {
    const std::vector<double> scores = {3.0, 2.5, 2.0, 1.0, 0.5, 0.0};
    const std::vector<bool> labels = {true, true, true, false, false, false};
    REQUIRE(auc(roc(scores, labels)) == 1.0);
  }
  SECTION("a single tie group gives the chance diagonal") {
    const std::vector<double> scores = {1.0, 1.0, 1.0, 1.0};
    const std::vector<bool> labels = {true, false, true, false};
    const RocCurve curve = roc(scores, labels);
    REQUIRE(curve.fpr.size() == 2);  // (0,0) then (1,1)
    REQUIRE(auc(curve) == 0.5);
  }
  SECTION("label-independent scores land near 0.5") {
    auto rng = make_rng(2718);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> scores(2000);
    std::vector<bool> labels(2000);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = unit(rng);
      labels[i] = (rng() & 1) != 0;
    }
    REQUIRE_THAT(auc(roc(scores, labels)), Catch::Matchers::WithinAbs(0.5, 0.02));
  }
  SECTION("AUC equals the brute-force Mann-Whitney U statistic, ties included") {
    auto rng = make_rng(99);
    std::uniform_int_distribution<int> coarse(0, 20);  // deliberate ties
    std::vector<double> scores(1000);
    std::vector<bool> labels(1000);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = static_cast<double>(coarse(rng));
      labels[i] = (rng() & 1) != 0;
    }
    REQUIRE_THAT(auc(roc(scores, labels)),
                 Catch::Matchers::WithinAbs(mann_whitney_auc(scores, labels), 1e-9));
  }
  SECTION("single-class labels are rejected") {
    REQUIRE_THROWS_AS(roc({1.0, 2.0}, {true, true}), std::invalid_argument);
  }
  SECTION("curve endpoints and monotonicity") {
    auto rng = make_rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> scores(257);
    std::vector<bool> labels(257);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i] = gauss(rng);
      labels[i] = i % 3 == 0;
    }
    const RocCurve curve = roc(scores, labels);
    REQUIRE(curve.fpr.front() == 0.0);
    REQUIRE(curve.tpr.front() == 0.0);
    REQUIRE(curve.fpr.back() == 1.0);
    REQUIRE(curve.tpr.back() == 1.0);
    for (std::size_t i = 1; i < curve.fpr.size(); ++i) {
      REQUIRE(curve.fpr[i] >= curve.fpr[i - 1]);
      REQUIRE(curve.tpr[i] >= curve.tpr[i - 1]);
    }
  }
}

TEST_CASE("tpr_at_fpr") {
  SECTION("densely sampled diagonal") {
    RocCurve diag;
    for (int k = 0; k <= 1000; ++k) {
      diag.fpr.push_back(k / 1000.0);
      diag.tpr.push_back(k / 1000.0);
    }
    REQUIRE_THAT(auc(diag), Catch::Matchers::WithinAbs(0.5, 1e-12));
    REQUIRE(tpr_at_fpr(diag, 0.001) == 0.001);
  }
  SECTION("perfect curve") {
    const RocCurve perfect{{0.0, 0.0, 1.0}, {0.0, 1.0, 1.0}};
    REQUIRE(auc(perfect) == 1.0);
    REQUIRE(tpr_at_fpr(perfect, 0.001) == 1.0);
  }
  SECTION("no point below the target except the origin is conservative") {
    const RocCurve coarse{{0.0, 1.0}, {0.0, 1.0}};
    REQUIRE(tpr_at_fpr(coarse, 0.001) == 0.0);
  }
  SECTION("target outside (0,1) is rejected") {
    const RocCurve coarse{{0.0, 1.0}, {0.0, 1.0}};
    REQUIRE_THROWS_AS(tpr_at_fpr(coarse, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(tpr_at_fpr(coarse, 1.0), std::invalid_argument);
  }
}

TEST_CASE("lira_attack smoke: an overfit model leaks membership") {
  BlobConfig blob;
  blob.n = 128;
  blob.d_in = 6;
  blob.num_classes = 2;
  blob.separation = 1.0;  // heavy class overlap forces memorization
  blob.noise_sd = 1.5;
  const Dataset pool = make_blobs(blob, 17);
  const ModelSpec spec{Architecture::mlp_one_hidden, 6, 32, 2};

  const TrainFn overfit = [&](const Dataset& members, std::uint64_t seed) {
    TrainConfig config;
    config.learning_rate = 0.4;
    config.steps = 600;
    config.scheme = BatchScheme::fixed_shuffle;
    config.batch_size = members.size();
    config.seed = seed;
    return train(members, spec, config, {0.0, std::numeric_limits<double>::infinity(), 1e-5},
                 init_model(spec, seed, 0.3))
        .final_params;
  };

  const AttackResult result = lira_attack(pool, spec, 8, nullptr, overfit, 2025);
  REQUIRE(result.scores.size() == pool.size());
  REQUIRE(result.auc_all > 0.55);
  REQUIRE(result.auc_all == mann_whitney_auc(result.scores, result.is_member));
}
