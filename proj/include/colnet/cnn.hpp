#pragma once
// Binary text CNN over an n x d embedding matrix:
//
//   conv:   f_j[i] = relu(<w_j, x[i : i+k_j-1]> + b_j[i]),  i < n - k_j + 1
//   pool:   f'[j]  = max_i f_j[i]
//   dense:  y      = g(f' W + b'),  W is m x 2
//   output: p      = softmax(y)[1]
//
// Forward, hand-written backward pass, finite-difference gradient checking,
// mini-batch SGD with S_g pre-training and S_p fine-tuning, and JSON
// persistence that round-trips every parameter exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "colnet/embedding.hpp"
#include "colnet/random.hpp"
#include "colnet/text.hpp"

namespace colnet {

enum class Activation { identity, relu };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }
inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "identity") return Activation::identity;
  throw DataError("unknown activation '" + s + "'");
}

struct ConvFilter {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> weights;  // height x width, row-major
  std::vector<double> bias;     // one per output position: n - height + 1

  std::size_t positions() const { return bias.size(); }
  friend bool operator==(const ConvFilter&, const ConvFilter&) = default;
};

struct ModelShape {
  std::size_t n = 8;
  std::size_t d = 50;
  std::vector<std::size_t> heights{2, 3, 4};
  std::size_t filters_per_height = 32;
  Activation dense_activation = Activation::identity;
};

struct CnnModel {
  std::size_t n = 0;
  std::size_t d = 0;
  Activation dense_activation = Activation::identity;
  std::uint64_t seed = 0;
  std::vector<ConvFilter> filters;
  std::vector<double> dense_weights;  // m x 2, row-major
  std::vector<double> dense_bias;     // 2

  std::size_t m() const { return filters.size(); }

  // Seeded uniform initialization in [-scale, scale].
  static CnnModel random(const ModelShape& shape, std::uint64_t seed, double scale = 0.05) {
    if (shape.n == 0 || shape.d == 0) throw PreconditionError("model shape must be non-empty");
    if (shape.heights.empty() || shape.filters_per_height == 0) throw PreconditionError("model needs filters");
    CnnModel model;
    model.n = shape.n;
    model.d = shape.d;
    model.dense_activation = shape.dense_activation;
    model.seed = seed;
    Rng rng(seed);
    for (auto k : shape.heights) {
      if (k == 0 || k > shape.n) {
        throw PreconditionError("filter height " + std::to_string(k) + " does not fit n=" + std::to_string(shape.n));
      }
      for (std::size_t f = 0; f < shape.filters_per_height; ++f) {
        ConvFilter filter{k, shape.d, std::vector<double>(k * shape.d), std::vector<double>(shape.n - k + 1)};
        for (auto& w : filter.weights) w = uniform_real(rng, -scale, scale);
        for (auto& b : filter.bias) b = uniform_real(rng, -scale, scale);
        model.filters.push_back(std::move(filter));
      }
    }
    model.dense_weights.resize(model.m() * 2);
    for (auto& w : model.dense_weights) w = uniform_real(rng, -scale, scale);
    model.dense_bias = {uniform_real(rng, -scale, scale), uniform_real(rng, -scale, scale)};
    return model;
  }

  // Same shapes, all parameters zero.
  CnnModel zeros_like() const {
    CnnModel z = *this;
    for (auto block : z.parameter_blocks()) std::fill(block.begin(), block.end(), 0.0);
    return z;
  }

  // Every trainable parameter, in a fixed order shared by model and gradient.
  std::vector<std::span<double>> parameter_blocks() {
    std::vector<std::span<double>> out;
    for (auto& f : filters) {
      out.emplace_back(f.weights);
      out.emplace_back(f.bias);
    }
    out.emplace_back(dense_weights);
    out.emplace_back(dense_bias);
    return out;
  }
  std::vector<std::span<const double>> parameter_blocks() const {
    std::vector<std::span<const double>> out;
    for (const auto& f : filters) {
      out.emplace_back(f.weights);
      out.emplace_back(f.bias);
    }
    out.emplace_back(dense_weights);
    out.emplace_back(dense_bias);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (auto b : parameter_blocks()) total += b.size();
    return total;
  }

  void validate() const {
    if (dense_weights.size() != m() * 2 || dense_bias.size() != 2) throw DataError("dense layer shape mismatch");
    for (const auto& f : filters) {
      if (f.height == 0 || f.height > n || f.width != d || f.weights.size() != f.height * d ||
          f.bias.size() != n - f.height + 1) {
        throw DataError("convolution filter shape mismatch");
      }
    }
  }

  friend bool operator==(const CnnModel&, const CnnModel&) = default;
};

// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
  std::vector<std::vector<double>> pre;  // conv pre-activations per filter
  std::vector<std::size_t> argmax;       // pooled position per filter
  std::vector<double> pooled;            // f'
  std::array<double, 2> dense_pre{};     // f' W + b'
  std::array<double, 2> logits{};        // after g
  std::array<double, 2> probs{};         // softmax
};

namespace detail {

inline void check_input(const CnnModel& model, const Matrix& x) {
  if (x.rows != model.n || x.cols != model.d) {
    throw PreconditionError("input is " + std::to_string(x.rows) + "x" + std::to_string(x.cols) + ", model expects " +
                            std::to_string(model.n) + "x" + std::to_string(model.d));
  }
}

inline double conv_at(const ConvFilter& f, const Matrix& x, std::size_t i) {
  const double* xs = x.data.data() + i * x.cols;
  double s = 0.0;
  for (std::size_t t = 0; t < f.weights.size(); ++t) s += f.weights[t] * xs[t];
  return s + f.bias[i];
}

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

}  // namespace detail

// Post-activation feature vector of one filter, length n - k + 1.
inline std::vector<double> conv_feature(const ConvFilter& f, const Matrix& x) {
  if (x.cols != f.width || x.rows < f.height || f.bias.size() != x.rows - f.height + 1) {
    throw PreconditionError("conv_feature: filter does not match input");
  }
  std::vector<double> out(f.positions());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::relu(detail::conv_at(f, x, i));
  return out;
}

inline ForwardTrace forward_trace(const CnnModel& model, const Matrix& x) {
  detail::check_input(model, x);
  ForwardTrace t;
  const std::size_t m = model.m();
  t.pre.resize(m);
  t.argmax.resize(m);
  t.pooled.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& f = model.filters[j];
    auto& z = t.pre[j];
    z.resize(f.positions());
    std::size_t best = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] = detail::conv_at(f, x, i);
      if (z[i] > z[best]) best = i;
    }
    t.argmax[j] = best;
    t.pooled[j] = detail::relu(z[best]);
  }
  for (std::size_t o = 0; o < 2; ++o) {
    double s = model.dense_bias[o];
    for (std::size_t j = 0; j < m; ++j) s += t.pooled[j] * model.dense_weights[j * 2 + o];
    t.dense_pre[o] = s;
    t.logits[o] = model.dense_activation == Activation::relu ? detail::relu(s) : s;
  }
  const double top = std::max(t.logits[0], t.logits[1]);
  const double e0 = std::exp(t.logits[0] - top);
  const double e1 = std::exp(t.logits[1] - top);
  t.probs = {e0 / (e0 + e1), e1 / (e0 + e1)};
  return t;
}

// Pooled feature vector f' of length m.
inline std::vector<double> pooled_features(const CnnModel& model, const Matrix& x) {
  return forward_trace(model, x).pooled;
}

// Probability of the positive class.
inline double forward(const CnnModel& model, const Matrix& x) { return forward_trace(model, x).probs[1]; }

inline double cross_entropy(const ForwardTrace& t, bool positive) {
  const double top = std::max(t.logits[0], t.logits[1]);
  const double lse = top + std::log(std::exp(t.logits[0] - top) + std::exp(t.logits[1] - top));
  return lse - t.logits[positive ? 1 : 0];
}

inline double loss(const CnnModel& model, const Matrix& x, bool positive) {
  return cross_entropy(forward_trace(model, x), positive);
}

// Adds scale * d(loss)/d(theta) into grad (shaped like model) and returns the loss.
inline double accumulate_gradient(const CnnModel& model, const Matrix& x, bool positive, CnnModel& grad,
                                  double scale = 1.0) {
  const auto t = forward_trace(model, x);
  std::array<double, 2> dy{t.probs[0] - (positive ? 0.0 : 1.0), t.probs[1] - (positive ? 1.0 : 0.0)};
  if (model.dense_activation == Activation::relu) {
    for (std::size_t o = 0; o < 2; ++o) {
      if (t.dense_pre[o] <= 0.0) dy[o] = 0.0;
    }
  }
  for (std::size_t o = 0; o < 2; ++o) grad.dense_bias[o] += scale * dy[o];
  for (std::size_t j = 0; j < model.m(); ++j) {
    grad.dense_weights[j * 2] += scale * t.pooled[j] * dy[0];
    grad.dense_weights[j * 2 + 1] += scale * t.pooled[j] * dy[1];
    const std::size_t i = t.argmax[j];
    if (t.pre[j][i] <= 0.0) continue;
    const double dz = scale * (model.dense_weights[j * 2] * dy[0] + model.dense_weights[j * 2 + 1] * dy[1]);
    auto& g = grad.filters[j];
    const double* xs = x.data.data() + i * x.cols;
    for (std::size_t w = 0; w < g.weights.size(); ++w) g.weights[w] += dz * xs[w];
    g.bias[i] += dz;
  }
  return cross_entropy(t, positive);
}

struct Example {
  Matrix x;
  bool positive = false;
};

// Mean loss over the batch; grad receives the gradient of that mean.
inline double batch_gradient(const CnnModel& model, std::span<const Example* const> batch, CnnModel& grad) {
  grad = model.zeros_like();
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const Example* e : batch) total += accumulate_gradient(model, e->x, e->positive, grad, scale);
  return total * scale;
}

inline double batch_gradient(const CnnModel& model, std::span<const Example> batch, CnnModel& grad) {
  std::vector<const Example*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& e : batch) ptrs.push_back(&e);
  return batch_gradient(model, std::span<const Example* const>(ptrs), grad);
}

inline double mean_loss(const CnnModel& model, std::span<const Example> data) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const auto& e : data) total += loss(model, e.x, e.positive);
  return total / static_cast<double>(data.size());
}

// --- training ----------------------------------------------------------------

enum class LossKind { cross_entropy };

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t pretrain_epochs = 10;
  std::size_t finetune_budget = 2000;  // K: sample presentations
  std::size_t max_finetune_epochs = 200;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::cross_entropy;

  void validate() const {
    if (!(learning_rate > 0.0)) throw PreconditionError("learning_rate must be > 0");
    if (batch_size == 0 || pretrain_epochs == 0 || finetune_budget == 0 || max_finetune_epochs == 0) {
      throw PreconditionError("training counts must be >= 1");
    }
  }
};

struct TrainHistory {
  std::vector<double> pretrain_loss;  // full-set mean loss after each epoch
  std::vector<double> finetune_loss;
  std::size_t finetune_epochs = 0;
};

// ceil(K / |S_p|) clamped to [1, max_finetune_epochs]; 0 when S_p is empty.
inline std::size_t finetune_epochs(std::size_t particular_size, const TrainConfig& cfg) {
  if (particular_size == 0) return 0;
  const std::size_t e = (cfg.finetune_budget + particular_size - 1) / particular_size;
  return std::clamp<std::size_t>(e, 1, cfg.max_finetune_epochs);
}

// Plain mini-batch gradient descent over shuffled epochs.
inline void run_epochs(CnnModel& model, std::span<const Example> data, std::size_t epochs, const TrainConfig& cfg,
                       std::uint64_t shuffle_seed, std::vector<double>* loss_log) {
  if (data.empty() || epochs == 0) return;
  Rng rng(shuffle_seed);
  std::vector<std::size_t> order(data.size());
  std::vector<const Example*> batch;
  CnnModel grad = model.zeros_like();
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
        batch.push_back(&data[order[i]]);
      }
      batch_gradient(model, std::span<const Example* const>(batch), grad);
      auto params = model.parameter_blocks();
      auto grads = grad.parameter_blocks();
      for (std::size_t b = 0; b < params.size(); ++b) {
        for (std::size_t k = 0; k < params[b].size(); ++k) params[b][k] -= cfg.learning_rate * grads[b][k];
      }
    }
    if (loss_log) loss_log->push_back(mean_loss(model, data));
  }
}

inline CnnModel pretrain(CnnModel model, std::span<const Example> general, const TrainConfig& cfg,
                         TrainHistory* history = nullptr) {
  run_epochs(model, general, cfg.pretrain_epochs, cfg, derive_seed(cfg.seed, "pretrain"),
             history ? &history->pretrain_loss : nullptr);
  return model;
}

inline CnnModel fine_tune(CnnModel model, std::span<const Example> particular, const TrainConfig& cfg,
                          TrainHistory* history = nullptr) {
  const auto epochs = finetune_epochs(particular.size(), cfg);
  if (history) history->finetune_epochs = epochs;
  run_epochs(model, particular, epochs, cfg, derive_seed(cfg.seed, "finetune"),
             history ? &history->finetune_loss : nullptr);
  return model;
}

// Seeded init, pre-train on S_g, fine-tune on S_p. Either set may be empty,
// not both.
inline CnnModel train(const ModelShape& shape, std::span<const Example> general,
                      std::span<const Example> particular, const TrainConfig& cfg,
                      TrainHistory* history = nullptr) {
  cfg.validate();
  if (general.empty() && particular.empty()) throw PreconditionError("train: both sample sets are empty");
  for (auto sets : {general, particular}) {
    for (const auto& e : sets) {
      if (e.x.rows != shape.n || e.x.cols != shape.d) throw PreconditionError("train: sample shape mismatch");
    }
  }
  auto model = CnnModel::random(shape, cfg.seed);
  model = pretrain(std::move(model), general, cfg, history);
  return fine_tune(std::move(model), particular, cfg, history);
}

// --- gradient checking ---------------------------------------------------------

struct KinkProximityError : PreconditionError {
  using PreconditionError::PreconditionError;
};

enum class GradCheckScope { all, dense_only };

// Largest relative error between the analytic gradient and central
// differences (L(t+e) - L(t-e)) / 2e over the checked parameters. Throws
// KinkProximityError when a ReLU input or a max-pool runner-up lies within
// 10*epsilon (scaled by the input magnitude) of its kink.
inline double gradient_check(const CnnModel& model, const Example& sample, double epsilon,
                             GradCheckScope scope = GradCheckScope::all) {
  if (!(epsilon > 0.0)) throw PreconditionError("gradient_check: epsilon must be > 0");
  const auto t = forward_trace(model, sample.x);
  double xmax = 1.0;
  for (double v : sample.x.data) xmax = std::max(xmax, std::abs(v));
  const double margin = 10.0 * epsilon * xmax * 2.0;
  for (std::size_t j = 0; j < model.m(); ++j) {
    const auto& z = t.pre[j];
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (std::abs(z[i]) < margin) throw KinkProximityError("conv pre-activation near ReLU kink");
      if (i != t.argmax[j] && z[t.argmax[j]] > 0.0 && z[t.argmax[j]] - z[i] < margin) {
        throw KinkProximityError("max-pool runner-up near the maximum");
      }
    }
  }
  if (model.dense_activation == Activation::relu) {
    for (double y : t.dense_pre) {
      if (std::abs(y) < margin * (1.0 + static_cast<double>(model.m()))) {
        throw KinkProximityError("dense pre-activation near ReLU kink");
      }
    }
  }

  CnnModel analytic = model.zeros_like();
  accumulate_gradient(model, sample.x, sample.positive, analytic);
  CnnModel probe = model;
  auto params = probe.parameter_blocks();
  auto grads = analytic.parameter_blocks();
  const std::size_t first = scope == GradCheckScope::dense_only ? params.size() - 2 : 0;
  double worst = 0.0;
  for (std::size_t b = first; b < params.size(); ++b) {
    for (std::size_t k = 0; k < params[b].size(); ++k) {
      const double saved = params[b][k];
      params[b][k] = saved + epsilon;
      const double up = loss(probe, sample.x, sample.positive);
      params[b][k] = saved - epsilon;
      const double down = loss(probe, sample.x, sample.positive);
      params[b][k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grads[b][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

// --- persistence ---------------------------------------------------------------

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const CnnModel& model) {
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& f : model.filters) {
    filters.push_back({{"height", f.height}, {"width", f.width}, {"weights", f.weights}, {"bias", f.bias}});
  }
  return {{"format", "colnet-cnn"},
          {"version", kModelFormatVersion},
          {"n", model.n},
          {"d", model.d},
          {"m", model.m()},
          {"dense_activation", to_string(model.dense_activation)},
          {"seed", model.seed},
          {"filters", filters},
          {"dense_weights", model.dense_weights},
          {"dense_bias", model.dense_bias}};
}

inline CnnModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "colnet-cnn") throw DataError("not a colnet model document");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion) throw DataError("unsupported model version " + std::to_string(version));
    CnnModel model;
    j.at("n").get_to(model.n);
    j.at("d").get_to(model.d);
    model.dense_activation = parse_activation(j.at("dense_activation").get<std::string>());
    j.at("seed").get_to(model.seed);
    for (const auto& f : j.at("filters")) {
      ConvFilter filter;
      f.at("height").get_to(filter.height);
      f.at("width").get_to(filter.width);
      f.at("weights").get_to(filter.weights);
      f.at("bias").get_to(filter.bias);
      model.filters.push_back(std::move(filter));
    }
    j.at("dense_weights").get_to(model.dense_weights);
    j.at("dense_bias").get_to(model.dense_bias);
    if (j.at("m").get<std::size_t>() != model.m()) throw DataError("filter count does not match m");
    model.validate();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace colnet
