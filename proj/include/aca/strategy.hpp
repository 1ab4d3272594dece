#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>

#include "aca/dataset.hpp"
#include "aca/model.hpp"
#include "aca/rng.hpp"

namespace aca {

struct ImageGeometry {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 1;

  bool valid() const { return height > 0 && width > 0 && channels > 0; }
  std::size_t flat_size() const { return height * width * channels; }
  // Channel-planar layout: index = c*h*w + r*w + col.
  std::size_t index(std::size_t channel, std::size_t row, std::size_t col) const {
    return channel * height * width + row * width + col;
  }
};

// Set every pixel of a rows x cols patch (all channels) to a fixed value.
struct PatchSet {
  std::size_t rows = 1, cols = 1;
  std::size_t row0 = 0, col0 = 0;
  double value = 0.0;
};

// Perturb pixels whose 0-based row and column indices are both multiples of
// `step`: add `magnitude`, except pixels that would exceed max_value are
// decreased by `magnitude` instead.
struct GridPerturb {
  std::size_t step = 2;
  double magnitude = 2.0;
  double max_value = 255.0;
};

// Add a fixed offset to a single feature coordinate.
struct FeatureOffset {
  std::size_t index = 0;
  double offset = 0.0;
};

struct SignalTransform {
  std::variant<PatchSet, GridPerturb, FeatureOffset> kind;
  ImageGeometry geometry;  // required for the image transforms
};

struct Strategy {
  SignalTransform transform;
  int target_label = 0;
  double alpha = 0.0;

  void validate(int num_classes) const {
    if (target_label < 0 || target_label >= num_classes) throw std::invalid_argument("target label out of range");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0,1]");
  }
};

inline Vec apply_signal(const Vec& x, const SignalTransform& transform) {
  Vec out = x;
  if (const auto* patch = std::get_if<PatchSet>(&transform.kind)) {
    const ImageGeometry& g = transform.geometry;
    if (!g.valid() || x.size() != g.flat_size())
      throw std::invalid_argument("patch_set requires image geometry matching the feature length");
    if (patch->row0 + patch->rows > g.height || patch->col0 + patch->cols > g.width)
      throw std::invalid_argument("patch does not fit inside the image");
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t r = patch->row0; r < patch->row0 + patch->rows; ++r)
        for (std::size_t col = patch->col0; col < patch->col0 + patch->cols; ++col)
          out[g.index(c, r, col)] = patch->value;
  } else if (const auto* grid = std::get_if<GridPerturb>(&transform.kind)) {
    const ImageGeometry& g = transform.geometry;
    if (!g.valid() || x.size() != g.flat_size())
      throw std::invalid_argument("grid_perturb requires image geometry matching the feature length");
    if (grid->step == 0 || !(grid->magnitude > 0.0)) throw std::invalid_argument("grid_perturb needs step >= 1, magnitude > 0");
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t r = 0; r < g.height; r += grid->step)
        for (std::size_t col = 0; col < g.width; col += grid->step) {
          double& v = out[g.index(c, r, col)];
          v = (v + grid->magnitude > grid->max_value) ? v - grid->magnitude : v + grid->magnitude;
        }
  } else {
    const auto& offset = std::get<FeatureOffset>(transform.kind);
    if (offset.index >= x.size()) throw std::invalid_argument("feature_offset index out of range");
    out[offset.index] += offset.offset;
  }
  return out;
}

// h(x, y) = (g(x), y*): plant the signal and relabel to the target class.
inline Example feature_label_strategy(const Example& z, const Strategy& strategy) {
  return Example{apply_signal(z.features, strategy.transform), strategy.target_label};
}

struct Mixture {
  Dataset data;
  std::vector<bool> collective_mask;  // true for the floor(alpha*n) transformed entries
};

// Replace a uniformly chosen floor(alpha*n) subset by its transformed,
// relabeled version.
inline Mixture build_mixture(const Dataset& ds, const Strategy& strategy, std::uint64_t seed) {
  strategy.validate(ds.num_classes);
  const std::size_t n = ds.size();
  const std::size_t m = static_cast<std::size_t>(std::floor(strategy.alpha * static_cast<double>(n)));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_rng(derive_seed(seed, std::string_view("mixture")));
  std::shuffle(perm.begin(), perm.end(), rng);

  Mixture mix;
  mix.data = ds;
  mix.collective_mask.assign(n, false);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t idx = perm[i];
    mix.data.examples[idx] = feature_label_strategy(ds.examples[idx], strategy);
    mix.collective_mask[idx] = true;
  }
  mix.data.feature_range = compute_feature_range(mix.data.examples, mix.data.d_in);
  return mix;
}

// Fraction of test points whose transformed features are predicted as the
// target label.
inline double measure_success(const ParameterVector& theta, const ModelSpec& spec, const Dataset& test,
                              const Strategy& strategy) {
  if (test.empty()) throw std::invalid_argument("measure_success requires a non-empty test set");
  std::size_t hits = 0;
  for (const Example& z : test.examples)
    if (predict(theta, spec, apply_signal(z.features, strategy.transform)) == strategy.target_label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

// Plain accuracy on untouched data; kept separate from the success metric.
inline double accuracy(const ParameterVector& theta, const ModelSpec& spec, const Dataset& data) {
  if (data.empty()) throw std::invalid_argument("accuracy requires a non-empty dataset");
  std::size_t hits = 0;
  for (const Example& z : data.examples)
    if (predict(theta, spec, z.features) == z.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

// Smallest alpha whose measured success reaches the target; the callback
// trains and evaluates one model per alpha (deriving fresh seeds itself).
inline std::optional<double> critical_mass_search(const std::vector<double>& alphas,
                                                  const std::function<double(double)>& train_and_eval,
                                                  double target_success) {
  if (alphas.empty()) throw std::invalid_argument("critical_mass_search needs a non-empty alpha list");
  for (std::size_t i = 1; i < alphas.size(); ++i)
    if (!(alphas[i] > alphas[i - 1])) throw std::invalid_argument("alphas must be strictly ascending");
  for (double alpha : alphas)
    if (train_and_eval(alpha) >= target_success) return alpha;
  return std::nullopt;
}

}  // namespace aca
