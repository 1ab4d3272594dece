#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "aca/model.hpp"
#include "aca/rng.hpp"

using namespace aca;

namespace {

ModelSpec logistic_spec(std::size_t d_in, int k) {
  return ModelSpec{Architecture::multinomial_logistic, d_in, 0, k};
}

ModelSpec mlp_spec(std::size_t d_in, std::size_t hidden, int k) {
  return ModelSpec{Architecture::mlp_one_hidden, d_in, hidden, k};
}

Example random_example(const ModelSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Example z;
  z.features.resize(spec.d_in);
  for (double& v : z.features) v = gauss(rng);
  z.label = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.num_classes));
  return z;
}

// Central differences cross a ReLU kink when a hidden pre-activation sits
// within the probe radius; such pairs are excluded by construction.
bool off_relu_kinks(const ParameterVector& theta, const ModelSpec& spec, const Example& z, double margin) {
  if (spec.arch != Architecture::mlp_one_hidden) return true;
  const std::size_t h = spec.hidden_units;
  const double* w1 = theta.values.data();
  const double* b1 = theta.values.data() + h * spec.d_in;
  for (std::size_t u = 0; u < h; ++u) {
    double s = b1[u];
    for (std::size_t j = 0; j < spec.d_in; ++j) s += w1[u * spec.d_in + j] * z.features[j];
    if (std::abs(s) < margin) return false;
  }
  return true;
}

// The finite-difference oracle loses all significant digits on coordinates
// whose gradient is below the rounding floor eps/step; pairs with such
// near-zero (but not exactly zero) coordinates are rejected, same as pairs
// sitting on a ReLU kink.
bool fd_oracle_applicable(const ParameterVector& theta, const ModelSpec& spec, const Example& z) {
  if (!off_relu_kinks(theta, spec, z, 1e-4)) return false;
  for (double g : per_example_gradient(theta, spec, z))
    if (g != 0.0 && std::abs(g) < 1e-4) return false;
  return true;
}

}  // namespace

TEST_CASE("init_model") {
  const ModelSpec spec = logistic_spec(2, 3);
  REQUIRE(spec.param_count() == 9);  // 2*3 weights + 3 biases

  SECTION("scale 0 gives all-zero parameters") {
    const ParameterVector theta = init_model(spec, 1, 0.0);
    for (double v : theta.values) REQUIRE(v == 0.0);
  }
  SECTION("deterministic under the seed") {
    const ParameterVector a = init_model(spec, 7, 0.5);
    const ParameterVector b = init_model(spec, 7, 0.5);
    REQUIRE(a.values == b.values);
    const ParameterVector c = init_model(spec, 8, 0.5);
    REQUIRE(a.values != c.values);
  }
  SECTION("biases start at zero") {
    const ParameterVector theta = init_model(spec, 7, 0.5);
    for (std::size_t i = 6; i < 9; ++i) REQUIRE(theta.values[i] == 0.0);
  }
}

TEST_CASE("predict") {
  const ModelSpec spec = logistic_spec(2, 3);

  SECTION("all-equal scores break ties toward class 0") {
    const ParameterVector zero = init_model(spec, 0, 0.0);
    REQUIRE(predict(zero, spec, {1.0, -2.0}) == 0);
  }
  SECTION("dominant logit wins") {
    ParameterVector theta = init_model(spec, 0, 0.0);
    theta.values[2 * 2 + 0] = 5.0;  // weight of class 2 on feature 0
    REQUIRE(predict(theta, spec, {1.0, 0.0}) == 2);
  }
  SECTION("wrong input length is an argument error") {
    const ParameterVector zero = init_model(spec, 0, 0.0);
    REQUIRE_THROWS_AS(predict(zero, spec, {1.0, 2.0, 3.0}), std::invalid_argument);
  }
  SECTION("invariant to adding a constant to every logit") {
    auto rng = make_rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
      ParameterVector theta = init_model(spec, static_cast<std::uint64_t>(rep), 1.0);
      Vec x = {gauss(rng), gauss(rng)};
      const int before = predict(theta, spec, x);
      for (int c = 0; c < 3; ++c) theta.values[6 + c] += 11.25;  // shift all biases
      REQUIRE(predict(theta, spec, x) == before);
    }
  }
}

TEST_CASE("loss") {
  SECTION("zero parameters give ln K") {
    for (int k = 2; k <= 5; ++k) {
      const ModelSpec spec = logistic_spec(3, k);
      const ParameterVector zero = init_model(spec, 0, 0.0);
      const Example z{{0.5, -1.0, 2.0}, k - 1};
      REQUIRE_THAT(loss(zero, spec, z), Catch::Matchers::WithinAbs(std::log(double(k)), 1e-12));
    }
  }
  SECTION("binary zero logits give ln 2") {
    const ModelSpec spec = logistic_spec(1, 2);
    const ParameterVector zero = init_model(spec, 0, 0.0);
    REQUIRE_THAT(loss(zero, spec, {{1.0}, 1}), Catch::Matchers::WithinAbs(0.6931471805599453, 1e-12));
  }
  SECTION("loss decreases monotonically toward 0 as the true logit grows") {
    const ModelSpec spec = logistic_spec(1, 2);
    ParameterVector theta = init_model(spec, 0, 0.0);
    double prev = loss(theta, spec, {{1.0}, 0});
    for (double w : {1.0, 5.0, 20.0, 100.0}) {
      theta.values[0] = w;  // class-0 weight on the single feature
      const double l = loss(theta, spec, {{1.0}, 0});
      REQUIRE(l < prev);
      prev = l;
    }
    REQUIRE(prev < 1e-20);
    REQUIRE(prev >= 0.0);
  }
  SECTION("softmax sums to one for all finite parameters") {
    const ModelSpec spec = mlp_spec(4, 8, 3);
    auto rng = make_rng(5);
    std::normal_distribution<double> gauss(0.0, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
      ParameterVector theta = init_model(spec, static_cast<std::uint64_t>(rep), 2.0);
      Vec x(4);
      for (double& v : x) v = gauss(rng);
      const Vec p = softmax(class_scores(theta, spec, x));
      double sum = 0.0;
      for (double v : p) sum += v;
      REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
  }
}

TEST_CASE("per_example_gradient closed forms") {
  SECTION("zero logistic parameters: class-0 weight block is (softmax - onehot) * x") {
    const ModelSpec spec = logistic_spec(2, 2);
    const ParameterVector zero = init_model(spec, 0, 0.0);
    const Vec g = per_example_gradient(zero, spec, {{1.0, 0.0}, 0});
    REQUIRE_THAT(g[0], Catch::Matchers::WithinAbs(-0.5, 1e-15));  // (0.5 - 1) * 1
    REQUIRE_THAT(g[1], Catch::Matchers::WithinAbs(0.0, 1e-15));
    REQUIRE_THAT(g[2], Catch::Matchers::WithinAbs(0.5, 1e-15));   // other class mirrors
    REQUIRE_THAT(g[3], Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
  SECTION("gradient vanishes at a symmetric minimum") {
    // The same features under both labels: theta = 0 minimizes the summed
    // loss, so the per-example gradients cancel exactly.
    const ModelSpec spec = logistic_spec(2, 2);
    const ParameterVector zero = init_model(spec, 0, 0.0);
    const Vec g0 = per_example_gradient(zero, spec, {{1.0, 2.0}, 0});
    const Vec g1 = per_example_gradient(zero, spec, {{1.0, 2.0}, 1});
    for (std::size_t i = 0; i < g0.size(); ++i) REQUIRE_THAT(g0[i] + g1[i], Catch::Matchers::WithinAbs(0.0, 1e-15));
  }
}

TEST_CASE("gradients match central finite differences") {
  auto rng = make_rng(12345);

  SECTION("logistic, 100 random pairs") {
    const ModelSpec spec = logistic_spec(5, 3);
    int done = 0;
    for (int rep = 0; done < 100; ++rep) {
      const ParameterVector theta = init_model(spec, derive_seed(1, rep), 1.0);
      const Example z = random_example(spec, rng);
      if (!fd_oracle_applicable(theta, spec, z)) continue;
      REQUIRE(gradient_check(theta, spec, z, 1e-6) < 1e-5);
      ++done;
    }
  }
  SECTION("mlp, 100 random pairs, off the ReLU kinks") {
    const ModelSpec spec = mlp_spec(4, 6, 3);
    int done = 0;
    for (int rep = 0; done < 100; ++rep) {
      const ParameterVector theta = init_model(spec, derive_seed(2, rep), 1.0);
      const Example z = random_example(spec, rng);
      if (!fd_oracle_applicable(theta, spec, z)) continue;
      REQUIRE(gradient_check(theta, spec, z, 1e-6) < 1e-4);
      ++done;
    }
  }
  SECTION("step 0 is an argument error") {
    const ModelSpec spec = logistic_spec(2, 2);
    REQUIRE_THROWS_AS(gradient_check(init_model(spec, 0, 1.0), spec, {{1.0, 1.0}, 0}, 0.0),
                      std::invalid_argument);
  }
}

TEST_CASE("checkpoint round-trip") {
  const ModelSpec spec = mlp_spec(3, 4, 2);
  const ParameterVector theta = init_model(spec, 77, 0.3);
  const auto path = std::filesystem::temp_directory_path() / "aca_tests" / "model.ckpt";
  std::filesystem::create_directories(path.parent_path());
  save_checkpoint(path, spec, theta);
  const auto [spec2, theta2] = load_checkpoint(path);
  REQUIRE(spec2.arch == spec.arch);
  REQUIRE(spec2.d_in == spec.d_in);
  REQUIRE(spec2.hidden_units == spec.hidden_units);
  REQUIRE(spec2.num_classes == spec.num_classes);
  REQUIRE(theta2.values == theta.values);
}
