#pragma once

// Minimal feed-forward network core: parameter storage, batched forward and
// analytic backward passes, cross-entropy loss with L2 on the weights, Adam,
// and a central-finite-difference gradient check.
//
// Hidden layers are rectified-linear; the output is a single logit. The
// batched passes are written axpy-style (unit-stride inner loops without
// cross-lane reductions) so they vectorize under -O3 without changing the
// floating-point contract.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "posgrad/rng.hpp"

namespace posgrad {

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    data.assign(r * c, 0.0);
  }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool operator==(const Matrix&) const = default;
};

struct Layer {
  Matrix weights;            // [out][in]
  std::vector<double> bias;  // [out]

  bool operator==(const Layer&) const = default;
};

// Parameter set for one MLP. Also reused as the gradient container, which
// keeps gradients parameter-shaped by construction.
struct MlpParams {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::vector<Layer> layers;

  static MlpParams zeros(std::vector<std::size_t> sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("need at least input and output sizes");
    for (std::size_t s : sizes)
      if (s == 0) throw std::invalid_argument("layer size must be positive");
    MlpParams p;
    p.layer_sizes = std::move(sizes);
    p.layers.resize(p.layer_sizes.size() - 1);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      p.layers[l].weights.resize(p.layer_sizes[l + 1], p.layer_sizes[l]);
      p.layers[l].bias.assign(p.layer_sizes[l + 1], 0.0);
    }
    return p;
  }

  // Uniform(-s, s) with s = sqrt(6 / (fan_in + fan_out)); biases zero.
  static MlpParams glorot_uniform(std::vector<std::size_t> sizes, SplitMix64& rng) {
    MlpParams p = zeros(std::move(sizes));
    for (Layer& layer : p.layers) {
      const double s = std::sqrt(6.0 / static_cast<double>(layer.weights.rows +
                                                           layer.weights.cols));
      for (double& w : layer.weights.data) w = rng.next_uniform(-s, s);
    }
    return p;
  }

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weights.data.size() + l.bias.size();
    return n;
  }

  double sum_squared_weights() const {  // biases excluded
    double s = 0.0;
    for (const Layer& l : layers)
      for (double w : l.weights.data) s += w * w;
    return s;
  }

  void scale(double f) {
    for (Layer& l : layers) {
      for (double& w : l.weights.data) w *= f;
      for (double& b : l.bias) b *= f;
    }
  }

  bool same_shape(const MlpParams& other) const { return layer_sizes == other.layer_sizes; }

  bool operator==(const MlpParams&) const = default;
};

inline double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Cross-entropy of a {0,1} label against a logit, evaluated stably.
inline double logit_cross_entropy(double logit, int label) {
  // log(1 + exp(z)) - y*z, rewritten to avoid overflow for |z| large.
  const double softplus = logit > 0.0 ? logit + std::log1p(std::exp(-logit))
                                      : std::log1p(std::exp(logit));
  return softplus - static_cast<double>(label) * logit;
}

// Scratch space for batched passes; reusable across batches.
struct BatchWorkspace {
  Matrix input;                    // [B][in], sized and filled by the caller
  std::vector<Matrix> activations; // post-ReLU per layer; last is the logits
  std::vector<Matrix> deltas;      // backward scratch, same shapes
  std::vector<Matrix> weights_t;   // transposed weights, refreshed per batch

  void prepare(const MlpParams& p, std::size_t batch) {
    if (input.rows != batch || input.cols != p.input_dim())
      throw std::invalid_argument("workspace input is " + std::to_string(input.rows) + "x" +
                                  std::to_string(input.cols) + ", network expects " +
                                  std::to_string(batch) + "x" + std::to_string(p.input_dim()));
    const std::size_t n_layers = p.layers.size();
    activations.resize(n_layers);
    deltas.resize(n_layers);
    weights_t.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::size_t out = p.layer_sizes[l + 1];
      if (activations[l].rows != batch || activations[l].cols != out) {
        activations[l].resize(batch, out);
        deltas[l].resize(batch, out);
      }
      const Matrix& w = p.layers[l].weights;
      if (weights_t[l].rows != w.cols || weights_t[l].cols != w.rows) {
        weights_t[l].resize(w.cols, w.rows);
      }
      for (std::size_t o = 0; o < w.rows; ++o) {
        const double* src = w.row(o);
        for (std::size_t i = 0; i < w.cols; ++i) weights_t[l].at(i, o) = src[i];
      }
    }
  }

  std::span<const double> logits() const {
    return {activations.back().data.data(), activations.back().rows};
  }
};

namespace detail {

// out[b][:] = in[b][:] * W^T + bias, ReLU unless last layer.
inline void forward_layer(const Matrix& in, const Matrix& weights_t,
                          std::span<const double> bias, Matrix& out, bool relu) {
  const std::size_t batch = in.rows, n_in = in.cols, n_out = out.cols;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = in.row(b);
    double* z = out.row(b);
    std::memcpy(z, bias.data(), n_out * sizeof(double));
    for (std::size_t j = 0; j < n_in; ++j) {
      const double xj = x[j];
      const double* wt = weights_t.row(j);
      for (std::size_t o = 0; o < n_out; ++o) z[o] += xj * wt[o];
    }
    if (relu) {
      for (std::size_t o = 0; o < n_out; ++o) z[o] = z[o] > 0.0 ? z[o] : 0.0;
    }
  }
}

}  // namespace detail

// Batched forward pass. ws.input must hold the batch rows already; logits
// land in ws.activations.back().
inline void forward_batch(const MlpParams& p, std::size_t batch, BatchWorkspace& ws) {
  ws.prepare(p, batch);
  const Matrix* in = &ws.input;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const bool relu = l + 1 < p.layers.size();
    detail::forward_layer(*in, ws.weights_t[l], p.layers[l].bias, ws.activations[l], relu);
    in = &ws.activations[l];
  }
}

// Single-sample forward to the output logit.
inline double forward(const MlpParams& p, std::span<const double> input) {
  if (input.size() != p.input_dim())
    throw std::invalid_argument("forward: input length " + std::to_string(input.size()) +
                                " does not match first layer " +
                                std::to_string(p.input_dim()));
  if (p.output_dim() != 1)
    throw std::invalid_argument("forward: network must end in a single logit");
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const Layer& layer = p.layers[l];
    const bool relu = l + 1 < p.layers.size();
    next.assign(layer.bias.begin(), layer.bias.end());
    for (std::size_t o = 0; o < layer.weights.rows; ++o) {
      const double* w = layer.weights.row(o);
      double acc = next[o];
      for (std::size_t i = 0; i < layer.weights.cols; ++i) acc += w[i] * cur[i];
      next[o] = relu ? (acc > 0.0 ? acc : 0.0) : acc;
    }
    cur.swap(next);
  }
  return cur[0];
}

// Backpropagate dL/dlogit through the network; accumulates parameter
// gradients into `grads` (adding onto whatever is there) and adds
// 2*l2_coeff*w to the weight gradients.
inline void backward_batch(const MlpParams& p, BatchWorkspace& ws,
                           std::span<const double> dlogit, MlpParams& grads,
                           double l2_coeff) {
  if (!grads.same_shape(p)) throw std::invalid_argument("backward_batch: gradient shape mismatch");
  const std::size_t batch = ws.input.rows;
  const std::size_t last = p.layers.size() - 1;

  std::copy(dlogit.begin(), dlogit.end(), ws.deltas[last].data.begin());

  for (std::size_t l = last + 1; l-- > 0;) {
    const Matrix& delta = ws.deltas[l];
    const Matrix& below = l == 0 ? ws.input : ws.activations[l - 1];
    Layer& g = grads.layers[l];
    // dW[o][:] += delta[b][o] * below[b][:];  db[o] += delta[b][o]
    for (std::size_t b = 0; b < batch; ++b) {
      const double* d = delta.row(b);
      const double* x = below.row(b);
      for (std::size_t o = 0; o < delta.cols; ++o) {
        const double dv = d[o];
        if (dv == 0.0) continue;
        double* gw = g.weights.row(o);
        for (std::size_t i = 0; i < below.cols; ++i) gw[i] += dv * x[i];
        g.bias[o] += dv;
      }
    }
    if (l > 0) {
      // delta_below = (delta * W) masked by the ReLU activation pattern.
      Matrix& dn = ws.deltas[l - 1];
      const Matrix& act = ws.activations[l - 1];
      const Matrix& w = p.layers[l].weights;
      for (std::size_t b = 0; b < batch; ++b) {
        double* out = dn.row(b);
        std::fill(out, out + dn.cols, 0.0);
        const double* d = delta.row(b);
        for (std::size_t o = 0; o < delta.cols; ++o) {
          const double dv = d[o];
          if (dv == 0.0) continue;
          const double* wr = w.row(o);
          for (std::size_t i = 0; i < dn.cols; ++i) out[i] += dv * wr[i];
        }
        const double* a = act.row(b);
        for (std::size_t i = 0; i < dn.cols; ++i) {
          if (a[i] <= 0.0) out[i] = 0.0;
        }
      }
    }
  }
  if (l2_coeff != 0.0) {
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const double* w = p.layers[l].weights.data.data();
      double* gw = grads.layers[l].weights.data.data();
      const std::size_t n = p.layers[l].weights.data.size();
      for (std::size_t i = 0; i < n; ++i) gw[i] += 2.0 * l2_coeff * w[i];
    }
  }
}

// Mean cross-entropy over the batch plus l2_coeff * (sum of squared weights),
// with exact analytic gradients written into `grads` (overwritten).
// Throws if an activation goes non-finite, naming the offending layer.
inline double loss_and_grad(const MlpParams& p, std::size_t batch,
                            std::span<const int> labels, double l2_coeff,
                            MlpParams& grads, BatchWorkspace& ws) {
  if (batch == 0) throw std::invalid_argument("loss_and_grad: empty batch");
  if (labels.size() != batch) throw std::invalid_argument("loss_and_grad: label count mismatch");
  if (p.output_dim() != 1) throw std::invalid_argument("loss_and_grad: network must end in a single logit");

  forward_batch(p, batch, ws);
  const std::span<const double> logits = ws.logits();
  double ce = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    if (!std::isfinite(logits[b])) {
      for (std::size_t l = 0; l < ws.activations.size(); ++l) {
        for (double v : ws.activations[l].data) {
          if (!std::isfinite(v))
            throw std::runtime_error("non-finite activation in layer " + std::to_string(l));
        }
      }
      throw std::runtime_error("non-finite logit");
    }
    ce += logit_cross_entropy(logits[b], labels[b]);
  }
  ce /= static_cast<double>(batch);

  for (Layer& l : grads.layers) {
    std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  std::vector<double> dlogit(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    dlogit[b] = (logistic(logits[b]) - static_cast<double>(labels[b])) /
                static_cast<double>(batch);
  }
  backward_batch(p, ws, dlogit, grads, l2_coeff);
  return ce + l2_coeff * p.sum_squared_weights();
}

struct TrainConfig {
  std::vector<std::size_t> hidden_sizes{64, 32};
  double l2_coeff = 1e-4;
  double learning_rate = 1e-3;
  std::size_t batch_size = 1024;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t max_epochs = 30;
  std::size_t patience = 3;
  std::uint64_t seed = 1;

  void validate() const {
    if (l2_coeff < 0.0) throw std::invalid_argument("l2_coeff must be >= 0");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0))
      throw std::invalid_argument("betas must lie in (0,1)");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
    if (adam_epsilon <= 0.0) throw std::invalid_argument("adam_epsilon must be > 0");
    if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  }
};

struct AdamState {
  std::vector<Layer> m, v;
  std::int64_t step = 0;

  static AdamState zeros_like(const MlpParams& p) {
    AdamState s;
    s.m.reserve(p.layers.size());
    for (const Layer& l : p.layers) {
      Layer z;
      z.weights.resize(l.weights.rows, l.weights.cols);
      z.bias.assign(l.bias.size(), 0.0);
      s.m.push_back(z);
      s.v.push_back(std::move(z));
    }
    return s;
  }
};

// Standard Adam update with bias correction.
inline void adam_step(MlpParams& p, const MlpParams& grads, AdamState& state,
                      const TrainConfig& cfg) {
  if (!p.same_shape(grads)) throw std::invalid_argument("adam_step: shape mismatch");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(cfg.beta1, t);
  const double corr2 = 1.0 - std::pow(cfg.beta2, t);
  auto update = [&](double* param, const double* grad, double* m, double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double m_hat = m[i] / corr1;
      const double v_hat = v[i] / corr2;
      param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
  };
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    update(p.layers[l].weights.data.data(), grads.layers[l].weights.data.data(),
           state.m[l].weights.data.data(), state.v[l].weights.data.data(),
           p.layers[l].weights.data.size());
    update(p.layers[l].bias.data(), grads.layers[l].bias.data(),
           state.m[l].bias.data(), state.v[l].bias.data(), p.layers[l].bias.size());
  }
}

// Max relative error between analytic gradients and central finite
// differences over a random sample of parameters. Steps below the
// machine-precision floor (~1e-9 here) make the central difference itself
// meaningless; callers should stay near the default 1e-5.
inline double finite_diff_check(const MlpParams& params, const Matrix& inputs,
                                std::span<const int> labels, double l2_coeff,
                                double step, std::size_t max_probes = 200,
                                std::uint64_t probe_seed = 12345) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be > 0");
  MlpParams work = params;
  MlpParams grads = MlpParams::zeros(params.layer_sizes);
  BatchWorkspace ws;
  ws.input = inputs;
  loss_and_grad(work, inputs.rows, labels, l2_coeff, grads, ws);

  // Collect flat pointers to every parameter and its analytic gradient.
  std::vector<double*> param_ptr;
  std::vector<double> analytic;
  for (std::size_t l = 0; l < work.layers.size(); ++l) {
    for (std::size_t i = 0; i < work.layers[l].weights.data.size(); ++i) {
      param_ptr.push_back(&work.layers[l].weights.data[i]);
      analytic.push_back(grads.layers[l].weights.data[i]);
    }
    for (std::size_t i = 0; i < work.layers[l].bias.size(); ++i) {
      param_ptr.push_back(&work.layers[l].bias[i]);
      analytic.push_back(grads.layers[l].bias[i]);
    }
  }
  std::vector<std::size_t> probe(param_ptr.size());
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = i;
  if (probe.size() > max_probes) {
    SplitMix64 rng(probe_seed);
    rng.shuffle(probe.begin(), probe.end());
    probe.resize(max_probes);
  }

  auto loss_at = [&]() {
    return loss_and_grad(work, inputs.rows, labels, l2_coeff, grads, ws);
  };
  double max_rel = 0.0;
  for (std::size_t idx : probe) {
    double* p = param_ptr[idx];
    const double saved = *p;
    *p = saved + step;
    const double up = loss_at();
    *p = saved - step;
    const double down = loss_at();
    *p = saved;
    const double fd = (up - down) / (2.0 * step);
    const double rel = std::abs(analytic[idx] - fd) / (std::abs(fd) + 1e-8);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace posgrad
