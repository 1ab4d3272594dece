#pragma once

#include <cstdint>
#include <stdexcept>

#include "aca/dataset.hpp"
#include "aca/rng.hpp"

namespace aca {

struct BlobConfig {
  std::size_t n = 1000;           // total examples, balanced round-robin over classes
  std::size_t d_in = 2;
  int num_classes = 2;
  double separation = 4.0;        // distance of each class center from the origin
  double noise_sd = 1.0;
};

// Isotropic Gaussian blobs, one per class, centered on distinct coordinate
// axes. Deterministic under the seed.
inline Dataset make_blobs(const BlobConfig& cfg, std::uint64_t seed) {
  if (cfg.n == 0 || cfg.d_in == 0 || cfg.num_classes <= 0)
    throw std::invalid_argument("make_blobs: empty configuration");
  if (static_cast<std::size_t>(cfg.num_classes) > cfg.d_in)
    throw std::invalid_argument("make_blobs: needs d_in >= num_classes for distinct centers");

  auto rng = make_rng(derive_seed(seed, std::string_view("blobs")));
  std::normal_distribution<double> gauss(0.0, cfg.noise_sd);

  Dataset ds;
  ds.d_in = cfg.d_in;
  ds.num_classes = cfg.num_classes;
  ds.examples.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(cfg.num_classes));
    Example& e = ds.examples[i];
    e.label = label;
    e.features.assign(cfg.d_in, 0.0);
    e.features[static_cast<std::size_t>(label)] = cfg.separation;
    for (double& v : e.features) v += gauss(rng);
  }
  ds.feature_range = compute_feature_range(ds.examples, ds.d_in);
  return ds;
}

}  // namespace aca
