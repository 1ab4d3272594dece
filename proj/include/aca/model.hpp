#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "aca/dataset.hpp"
#include "aca/rng.hpp"
#include "aca/vec.hpp"

namespace aca {

enum class Architecture { multinomial_logistic, mlp_one_hidden };

struct ModelSpec {
  Architecture arch = Architecture::multinomial_logistic;
  std::size_t d_in = 0;
  std::size_t hidden_units = 0;  // mlp only
  int num_classes = 0;

  // Parameters are stored flat so that clipping, noise and norm computations
  // all operate on a single vector.
  //
  // logistic: W (K x d_in, row-major), b (K)
  // mlp:      W1 (H x d_in), b1 (H), W2 (K x H), b2 (K), ReLU hidden layer
  std::size_t param_count() const {
    const std::size_t k = static_cast<std::size_t>(num_classes);
    if (arch == Architecture::multinomial_logistic) return k * d_in + k;
    return hidden_units * d_in + hidden_units + k * hidden_units + k;
  }

  void validate() const {
    if (d_in == 0 || num_classes <= 0) throw std::invalid_argument("model spec has empty dimensions");
    if (arch == Architecture::mlp_one_hidden && hidden_units == 0)
      throw std::invalid_argument("mlp spec needs hidden_units >= 1");
  }
};

struct ParameterVector {
  Vec values;
  std::size_t size() const { return values.size(); }
};

// Seeded Gaussian weights with standard deviation `scale`; biases start at 0.
inline ParameterVector init_model(const ModelSpec& spec, std::uint64_t seed, double scale) {
  spec.validate();
  if (scale < 0.0) throw std::invalid_argument("init scale must be >= 0");
  ParameterVector theta;
  theta.values.assign(spec.param_count(), 0.0);
  if (scale == 0.0) return theta;

  auto rng = make_rng(derive_seed(seed, std::string_view("init")));
  std::normal_distribution<double> gauss(0.0, scale);
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  const auto fill = [&](std::size_t offset, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) theta.values[offset + i] = gauss(rng);
  };
  if (spec.arch == Architecture::multinomial_logistic) {
    fill(0, k * spec.d_in);
  } else {
    const std::size_t h = spec.hidden_units;
    fill(0, h * spec.d_in);
    fill(h * spec.d_in + h, k * h);
  }
  return theta;
}

namespace detail {

// Scores and (for the mlp) the hidden pre-activations needed for backprop.
struct Forward {
  Vec scores;
  Vec hidden_pre;
  Vec hidden;
};

inline Forward forward(const ParameterVector& theta, const ModelSpec& spec, const Vec& x) {
  if (x.size() != spec.d_in) throw std::invalid_argument("feature vector length != d_in");
  if (theta.size() != spec.param_count()) throw std::invalid_argument("parameter vector length mismatch");
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  Forward f;
  f.scores.assign(k, 0.0);
  const double* p = theta.values.data();
  if (spec.arch == Architecture::multinomial_logistic) {
    const double* b = p + k * spec.d_in;
    for (std::size_t c = 0; c < k; ++c) {
      double s = b[c];
      const double* w = p + c * spec.d_in;
      for (std::size_t j = 0; j < spec.d_in; ++j) s += w[j] * x[j];
      f.scores[c] = s;
    }
    return f;
  }
  const std::size_t h = spec.hidden_units;
  const double* w1 = p;
  const double* b1 = p + h * spec.d_in;
  const double* w2 = b1 + h;
  const double* b2 = w2 + k * h;
  f.hidden_pre.assign(h, 0.0);
  f.hidden.assign(h, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    double s = b1[u];
    const double* w = w1 + u * spec.d_in;
    for (std::size_t j = 0; j < spec.d_in; ++j) s += w[j] * x[j];
    f.hidden_pre[u] = s;
    f.hidden[u] = s > 0.0 ? s : 0.0;  // ReLU; subgradient at 0 is 0
  }
  for (std::size_t c = 0; c < k; ++c) {
    double s = b2[c];
    const double* w = w2 + c * h;
    for (std::size_t u = 0; u < h; ++u) s += w[u] * f.hidden[u];
    f.scores[c] = s;
  }
  return f;
}

}  // namespace detail

inline Vec class_scores(const ParameterVector& theta, const ModelSpec& spec, const Vec& x) {
  return detail::forward(theta, spec, x).scores;
}

// Max-subtracted softmax; sums to 1 for any finite scores.
inline Vec softmax(const Vec& scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  Vec p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

// Argmax class; ties break toward the lowest class index.
inline int predict(const ParameterVector& theta, const ModelSpec& spec, const Vec& x) {
  const Vec scores = class_scores(theta, spec, x);
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return static_cast<int>(best);
}

// Cross-entropy -log softmax(scores)[y], stabilized by max subtraction.
inline double loss(const ParameterVector& theta, const ModelSpec& spec, const Example& z) {
  if (z.label < 0 || z.label >= spec.num_classes) throw std::invalid_argument("label out of range");
  const Vec scores = class_scores(theta, spec, z.features);
  const double m = *std::max_element(scores.begin(), scores.end());
  double z_sum = 0.0;
  for (double s : scores) z_sum += std::exp(s - m);
  return (m + std::log(z_sum)) - scores[static_cast<std::size_t>(z.label)];
}

// Analytic gradient of the cross-entropy loss, flat layout matching the spec.
inline Vec per_example_gradient(const ParameterVector& theta, const ModelSpec& spec, const Example& z) {
  if (z.label < 0 || z.label >= spec.num_classes) throw std::invalid_argument("label out of range");
  const detail::Forward f = detail::forward(theta, spec, z.features);
  const Vec p = softmax(f.scores);
  const std::size_t k = static_cast<std::size_t>(spec.num_classes);
  Vec delta(k);
  for (std::size_t c = 0; c < k; ++c) delta[c] = p[c] - (static_cast<int>(c) == z.label ? 1.0 : 0.0);

  Vec grad(spec.param_count(), 0.0);
  if (spec.arch == Architecture::multinomial_logistic) {
    double* gw = grad.data();
    double* gb = grad.data() + k * spec.d_in;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < spec.d_in; ++j) gw[c * spec.d_in + j] = delta[c] * z.features[j];
      gb[c] = delta[c];
    }
    return grad;
  }

  const std::size_t h = spec.hidden_units;
  const double* w2 = theta.values.data() + h * spec.d_in + h;
  double* gw1 = grad.data();
  double* gb1 = grad.data() + h * spec.d_in;
  double* gw2 = gb1 + h;
  double* gb2 = gw2 + k * h;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t u = 0; u < h; ++u) gw2[c * h + u] = delta[c] * f.hidden[u];
    gb2[c] = delta[c];
  }
  for (std::size_t u = 0; u < h; ++u) {
    if (f.hidden_pre[u] <= 0.0) continue;
    double dh = 0.0;
    for (std::size_t c = 0; c < k; ++c) dh += delta[c] * w2[c * h + u];
    for (std::size_t j = 0; j < spec.d_in; ++j) gw1[u * spec.d_in + j] = dh * z.features[j];
    gb1[u] = dh;
  }
  return grad;
}

// Max over coordinates of the relative gap between the analytic gradient and
// a central finite difference of the loss.
inline double gradient_check(const ParameterVector& theta, const ModelSpec& spec, const Example& z, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("gradient_check step must be > 0");
  const Vec analytic = per_example_gradient(theta, spec, z);
  ParameterVector probe = theta;
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double saved = probe.values[i];
    probe.values[i] = saved + step;
    const double up = loss(probe, spec, z);
    probe.values[i] = saved - step;
    const double down = loss(probe, spec, z);
    probe.values[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double rel = std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + std::abs(numeric) + 1e-12);
    worst = std::max(worst, rel);
  }
  return worst;
}

// --- checkpoint io ---------------------------------------------------------

inline void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec, const ParameterVector& theta) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open checkpoint for writing: " + path.string());
  out << "aca_model 1\n";
  out << "arch " << (spec.arch == Architecture::multinomial_logistic ? "logistic" : "mlp") << '\n';
  out << "d_in " << spec.d_in << '\n';
  out << "hidden " << spec.hidden_units << '\n';
  out << "classes " << spec.num_classes << '\n';
  out << "params " << theta.size() << '\n';
  char buf[64];
  for (double v : theta.values) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << '\n';
  }
}

inline std::pair<ModelSpec, ParameterVector> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open checkpoint: " + path.string());
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "aca_model" || version != 1) throw format_error("unrecognized checkpoint header in " + path.string());
  ModelSpec spec;
  std::size_t n_params = 0;
  std::string key, arch;
  in >> key >> arch >> key >> spec.d_in >> key >> spec.hidden_units >> key >> spec.num_classes >> key >> n_params;
  if (!in) throw format_error("truncated checkpoint header in " + path.string());
  spec.arch = (arch == "logistic") ? Architecture::multinomial_logistic : Architecture::mlp_one_hidden;
  spec.validate();
  if (n_params != spec.param_count()) throw format_error("checkpoint parameter count mismatch in " + path.string());
  ParameterVector theta;
  theta.values.resize(n_params);
  for (double& v : theta.values)
    if (!(in >> v)) throw format_error("truncated checkpoint payload in " + path.string());
  return {spec, std::move(theta)};
}

}  // namespace aca
