#pragma once

#include <cassert>
#include <cstdint>
#include <limits>
#include <optional>

#include "aca/dataset.hpp"
#include "aca/model.hpp"
#include "aca/rng.hpp"
#include "aca/vec.hpp"

namespace aca {

struct PrivacyParams {
  double noise_multiplier = 0.0;                               // sigma
  double clip_threshold = std::numeric_limits<double>::infinity();  // C
  double target_delta = 1e-5;

  void validate() const {
    if (noise_multiplier < 0.0) throw std::invalid_argument("noise multiplier must be >= 0");
    if (!(clip_threshold > 0.0)) throw std::invalid_argument("clip threshold must be > 0");
    if (!(target_delta > 0.0 && target_delta < 1.0)) throw std::invalid_argument("delta must be in (0,1)");
  }
};

enum class BatchScheme { poisson, fixed_shuffle };

struct TrainConfig {
  double learning_rate = 0.1;
  std::int64_t steps = 1;
  BatchScheme scheme = BatchScheme::poisson;
  double sampling_rate = 0.1;   // poisson q
  std::size_t batch_size = 32;  // fixed_shuffle B
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    if (scheme == BatchScheme::poisson && !(sampling_rate > 0.0 && sampling_rate <= 1.0))
      throw std::invalid_argument("poisson sampling rate must be in (0,1]");
    if (scheme == BatchScheme::fixed_shuffle && batch_size < 1)
      throw std::invalid_argument("fixed_shuffle batch size must be >= 1");
  }
};

struct TrainTrace {
  std::vector<double> mean_loss;        // per step, NaN for skipped (empty) batches
  std::vector<double> dist_to_target;   // per step, empty when no target was given
  ParameterVector final_params;
  std::int64_t realized_steps = 0;
};

// clip(g, C) = g * min(1, C / ||g||); the zero vector maps to itself.
inline Vec clip_gradient(const Vec& g, double clip_threshold) {
  if (!(clip_threshold > 0.0)) throw std::invalid_argument("clip threshold must be > 0");
  const double n = norm(g);
  if (n <= clip_threshold || n == 0.0) return g;
  return scaled(g, clip_threshold / n);
}

// Batch for step t, a pure function of (config.seed, t).
//
// poisson:       every index is included independently with probability q;
//                the batch may be empty, in which case the step is skipped.
// fixed_shuffle: the next B indices of a per-epoch seeded shuffle; the final
//                batch of an epoch may be short so each epoch is a partition.
inline std::vector<std::size_t> sample_batch(std::size_t n, const TrainConfig& config, std::int64_t step) {
  if (n == 0) throw std::invalid_argument("cannot sample a batch from an empty dataset");
  std::vector<std::size_t> batch;
  if (config.scheme == BatchScheme::poisson) {
    auto rng = make_rng(derive_seed(config.seed, std::string_view("batch"), step));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
      if (unit(rng) < config.sampling_rate) batch.push_back(i);
    return batch;
  }
  const std::size_t pos = static_cast<std::size_t>(step) * config.batch_size;
  const std::size_t epoch = pos / n;
  const std::size_t offset = pos % n;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  auto rng = make_rng(derive_seed(config.seed, std::string_view("batch_epoch"), epoch));
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t end = std::min(offset + config.batch_size, n);
  batch.assign(perm.begin() + static_cast<std::ptrdiff_t>(offset), perm.begin() + static_cast<std::ptrdiff_t>(end));
  return batch;
}

// One update: theta' = theta - eta * (sum_i clip(grad_i, C) + N(0, sigma^2 C^2 I)) / |B|.
// Noise is added to the clipped sum and then divided by the batch size.
inline ParameterVector dpsgd_step(const ParameterVector& theta, const ModelSpec& spec, const Dataset& data,
                                  const std::vector<std::size_t>& batch, const PrivacyParams& privacy,
                                  double learning_rate, std::mt19937_64& noise_rng) {
  if (batch.empty()) throw std::invalid_argument("dpsgd_step requires a non-empty batch");
  privacy.validate();
  if (privacy.noise_multiplier > 0.0 && std::isinf(privacy.clip_threshold))
    throw std::invalid_argument("noise scale sigma*C is undefined for infinite clip threshold");

  Vec update(theta.size(), 0.0);
  for (std::size_t i : batch) {
    const Vec g = clip_gradient(per_example_gradient(theta, spec, data.examples[i]), privacy.clip_threshold);
    assert(norm(g) <= privacy.clip_threshold * (1.0 + 1e-9));
    axpy(1.0, g, update);
  }
  if (privacy.noise_multiplier > 0.0) {
    std::normal_distribution<double> gauss(0.0, privacy.noise_multiplier * privacy.clip_threshold);
    for (double& v : update) v += gauss(noise_rng);
  }
  ParameterVector next = theta;
  axpy(-learning_rate / static_cast<double>(batch.size()), update, next.values);
  return next;
}

// Runs `steps` updates. Deterministic under (config.seed, inputs): batching
// and noise use separate streams derived from the run seed, so changing sigma
// never changes batch composition. The privacy cost of the run is obtained
// separately from the accountant.
inline TrainTrace train(const Dataset& data, const ModelSpec& spec, const TrainConfig& config,
                        const PrivacyParams& privacy, ParameterVector theta,
                        const ParameterVector* target = nullptr) {
  validate_dataset(data);
  config.validate();
  privacy.validate();
  if (theta.size() != spec.param_count()) throw std::invalid_argument("theta length != spec.param_count()");
  if (target && target->size() != theta.size()) throw std::invalid_argument("target length mismatch");

  TrainTrace trace;
  trace.mean_loss.reserve(static_cast<std::size_t>(config.steps));
  auto noise_rng = make_rng(derive_seed(config.seed, std::string_view("noise")));

  for (std::int64_t t = 0; t < config.steps; ++t) {
    const std::vector<std::size_t> batch = sample_batch(data.size(), config, t);
    if (batch.empty()) {
      // Empty Poisson draw: the mechanism was still invoked, so the step
      // counter advances without an update.
      trace.mean_loss.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      double batch_loss = 0.0;
      for (std::size_t i : batch) batch_loss += loss(theta, spec, data.examples[i]);
      trace.mean_loss.push_back(batch_loss / static_cast<double>(batch.size()));
      theta = dpsgd_step(theta, spec, data, batch, privacy, config.learning_rate, noise_rng);
    }
    if (target) trace.dist_to_target.push_back(distance(theta.values, target->values));
    ++trace.realized_steps;
  }
  trace.final_params = std::move(theta);
  return trace;
}

// Trace export: columns step, mean_loss, dist_to_target (blank without a target).
inline void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open trace CSV for writing: " + path.string());
  out << "step,mean_loss,dist_to_target\n";
  for (std::int64_t t = 0; t < trace.realized_steps; ++t) {
    out << t << ',' << trace.mean_loss[static_cast<std::size_t>(t)] << ',';
    if (!trace.dist_to_target.empty()) out << trace.dist_to_target[static_cast<std::size_t>(t)];
    out << '\n';
  }
}

}  // namespace aca
