#pragma once

// Model zoo and training loop.
//
//   BASE    logistic(main(user+item)); never sees the position.
//   ST_PSF  logistic(main(user+item) + tower(position one-hot)).
//   PAL     logistic(tower(position)) * logistic(main(user+item)).
//   GI(r)   ST_PSF trained with the randomization trick: each sample has its
//           position replaced by a uniform one with probability r.
//
// Training is mini-batch Adam with early stopping on validation AUC, and is
// deterministic given the config seed. ST_PSF and GI(0) consume identical
// random streams, so they produce bit-identical parameters.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posgrad/data.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/nnet.hpp"
#include "posgrad/rng.hpp"

namespace posgrad {

enum class ModelFamily { Base, StPsf, Pal, Gi };

struct ModelKind {
  ModelFamily family = ModelFamily::Base;
  double randomization_rate = 0.0;  // GI only

  static ModelKind base() { return {ModelFamily::Base, 0.0}; }
  static ModelKind st_psf() { return {ModelFamily::StPsf, 0.0}; }
  static ModelKind pal() { return {ModelFamily::Pal, 0.0}; }
  static ModelKind gi(double rate) {
    if (!(rate >= 0.0 && rate <= 1.0))
      throw std::invalid_argument("randomization rate must lie in [0,1]");
    return {ModelFamily::Gi, rate};
  }

  bool position_aware() const { return family != ModelFamily::Base; }

  std::string name() const {
    switch (family) {
      case ModelFamily::Base: return "BASE";
      case ModelFamily::StPsf: return "ST_PSF";
      case ModelFamily::Pal: return "PAL";
      case ModelFamily::Gi: {
        char buf[40];  // shortest representation that parses back exactly
        const auto res = std::to_chars(buf, buf + sizeof(buf), randomization_rate);
        return "GI(" + std::string(buf, res.ptr) + ")";
      }
    }
    return "?";
  }

  // Accepts BASE, ST_PSF, PAL, GI(<rate>).
  static std::optional<ModelKind> parse(std::string_view text) {
    if (text == "BASE") return base();
    if (text == "ST_PSF") return st_psf();
    if (text == "PAL") return pal();
    if (text.starts_with("GI(") && text.ends_with(")")) {
      const std::string num(text.substr(3, text.size() - 4));
      char* end = nullptr;
      const double r = std::strtod(num.c_str(), &end);
      if (end == num.c_str() + num.size() && r >= 0.0 && r <= 1.0) return gi(r);
    }
    return std::nullopt;
  }

  bool operator==(const ModelKind&) const = default;
};

// FNV-1a over a canonical rendering of the training setup; identifies which
// configuration produced a checkpoint.
inline std::string config_fingerprint(const TrainConfig& cfg, const ModelKind& kind, int k) {
  std::string text = "kind=" + kind.name() + ";k=" + std::to_string(k) + ";h=";
  for (std::size_t h : cfg.hidden_sizes) text += std::to_string(h) + ",";
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                ";l2=%.17g;lr=%.17g;bs=%zu;b1=%.17g;b2=%.17g;eps=%.17g;ep=%zu;pat=%zu;seed=%llu",
                cfg.l2_coeff, cfg.learning_rate, cfg.batch_size, cfg.beta1, cfg.beta2,
                cfg.adam_epsilon, cfg.max_epochs, cfg.patience,
                static_cast<unsigned long long>(cfg.seed));
  text += buf;
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct TrainedModel {
  ModelKind kind;
  int k = 10;
  MlpParams main_net;
  std::optional<MlpParams> position_tower;  // absent for BASE
  std::string config_fingerprint;
};

inline void validate_model(const TrainedModel& m) {
  if (m.kind.position_aware() != m.position_tower.has_value())
    throw std::invalid_argument("position tower must be present exactly for position-aware kinds");
  if (m.k < 2) throw std::invalid_argument("model K must be >= 2");
}

namespace detail {

// Tower input is the position one-hot, optionally followed by the user
// features (the tower's own input width says which).
inline std::size_t tower_input_dim(int k, bool with_user) {
  return static_cast<std::size_t>(k) + (with_user ? kFeatureDim : 0);
}

inline void fill_tower_row(double* row, std::size_t dim, int k, int position,
                           const FeatureVector& user) {
  std::memset(row, 0, dim * sizeof(double));
  row[static_cast<std::size_t>(position)] = 1.0;
  if (dim > static_cast<std::size_t>(k)) {
    std::memcpy(row + k, user.data(), kFeatureDim * sizeof(double));
  }
}

inline double combine(const ModelKind& kind, double main_logit, double tower_logit) {
  if (kind.family == ModelFamily::Pal) return logistic(main_logit) * logistic(tower_logit);
  return logistic(main_logit + tower_logit);
}

}  // namespace detail

// Predicted CTR for one (user, item, position). BASE ignores the position
// entirely; position-aware kinds validate it against K.
inline double predict(const TrainedModel& m, const FeatureVector& user,
                      const FeatureVector& item, int position) {
  std::array<double, 2 * kFeatureDim> input;
  std::memcpy(input.data(), user.data(), kFeatureDim * sizeof(double));
  std::memcpy(input.data() + kFeatureDim, item.data(), kFeatureDim * sizeof(double));
  const double main_logit = forward(m.main_net, input);
  if (!m.kind.position_aware()) return logistic(main_logit);

  if (position < 0 || position >= m.k)
    throw std::invalid_argument("predict: position " + std::to_string(position) +
                                " out of range for K=" + std::to_string(m.k));
  const std::size_t dim = m.position_tower->input_dim();
  std::vector<double> tower_in(dim);
  detail::fill_tower_row(tower_in.data(), dim, m.k, position, user);
  const double tower_logit = forward(*m.position_tower, tower_in);
  return detail::combine(m.kind, main_logit, tower_logit);
}

// Batched prediction at the recorded positions (or a fixed override, the
// "default position" serving mode).
inline std::vector<double> predict_batch(const TrainedModel& m,
                                         std::span<const Exposure> exposures,
                                         std::optional<int> position_override = std::nullopt) {
  constexpr std::size_t kChunk = 2048;
  std::vector<double> out(exposures.size());
  BatchWorkspace main_ws, tower_ws;
  const bool aware = m.kind.position_aware();
  const std::size_t tower_dim = aware ? m.position_tower->input_dim() : 0;
  if (position_override && aware &&
      (*position_override < 0 || *position_override >= m.k))
    throw std::invalid_argument("predict_batch: position override out of range");

  for (std::size_t begin = 0; begin < exposures.size(); begin += kChunk) {
    const std::size_t batch = std::min(kChunk, exposures.size() - begin);
    main_ws.input.resize(batch, 2 * kFeatureDim);
    for (std::size_t i = 0; i < batch; ++i) {
      const Exposure& e = exposures[begin + i];
      double* row = main_ws.input.row(i);
      std::memcpy(row, e.user_features.data(), kFeatureDim * sizeof(double));
      std::memcpy(row + kFeatureDim, e.item_features.data(), kFeatureDim * sizeof(double));
    }
    forward_batch(m.main_net, batch, main_ws);
    const std::span<const double> main_logits = main_ws.logits();

    if (!aware) {
      for (std::size_t i = 0; i < batch; ++i) out[begin + i] = logistic(main_logits[i]);
      continue;
    }
    tower_ws.input.resize(batch, tower_dim);
    for (std::size_t i = 0; i < batch; ++i) {
      const Exposure& e = exposures[begin + i];
      const int pos = position_override ? *position_override : e.position;
      if (pos < 0 || pos >= m.k)
        throw std::invalid_argument("predict_batch: position out of range");
      detail::fill_tower_row(tower_ws.input.row(i), tower_dim, m.k, pos, e.user_features);
    }
    forward_batch(*m.position_tower, batch, tower_ws);
    const std::span<const double> tower_logits = tower_ws.logits();
    for (std::size_t i = 0; i < batch; ++i) {
      out[begin + i] = detail::combine(m.kind, main_logits[i], tower_logits[i]);
    }
  }
  return out;
}

// Mean predicted CTR per recorded position, with counts. Positions that
// receive no exposures stay flagged empty.
inline PositionCurve serve_curve(const TrainedModel& m, std::span<const Exposure> eval_set) {
  if (eval_set.empty()) throw std::invalid_argument("serve_curve: empty eval set");
  const std::vector<double> preds = predict_batch(m, eval_set);
  return value_curve(eval_set, preds, static_cast<std::size_t>(m.k));
}

// Empirical position gradient: mean over probe pairs and adjacent positions
// of predict(u,i,k+1) - predict(u,i,k). Exactly zero for position-unaware
// models. Probes should come from random traffic so that item placement is
// independent of position.
inline double position_gradient(const TrainedModel& m, std::span<const Exposure> probes) {
  if (probes.empty()) throw std::invalid_argument("position_gradient: empty probe set");
  if (m.k < 2) throw std::invalid_argument("position_gradient: K must be >= 2");
  if (!m.kind.position_aware()) return 0.0;
  double total = 0.0;
  std::vector<double> prev = predict_batch(m, probes, 0);
  for (int k = 1; k < m.k; ++k) {
    std::vector<double> cur = predict_batch(m, probes, k);
    for (std::size_t i = 0; i < probes.size(); ++i) total += cur[i] - prev[i];
    prev = std::move(cur);
  }
  return total / (static_cast<double>(probes.size()) * static_cast<double>(m.k - 1));
}

// Replace each position independently with probability `rate` by a uniform
// draw from {0..k-1}; labels and features untouched.
inline void randomize_positions(std::span<int> positions, double rate, int k,
                                SplitMix64& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("rate must lie in [0,1]");
  if (rate == 0.0) return;
  for (int& p : positions) {
    if (rng.next_bernoulli(rate)) p = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k)));
  }
}

inline std::vector<Exposure> randomize_positions(std::vector<Exposure> batch, double rate,
                                                 int k, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<int> positions(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) positions[i] = batch[i].position;
  randomize_positions(std::span<int>(positions), rate, k, rng);
  for (std::size_t i = 0; i < batch.size(); ++i) batch[i].position = positions[i];
  return batch;
}

// Optional per-step position-gradient recording (the data behind gradient
// trace plots): measured on a fixed probe set every `every_steps` steps.
struct GradientTraceOptions {
  std::span<const Exposure> probes;
  std::size_t every_steps = 500;
};

struct TrainDiagnostics {
  std::vector<double> validation_auc;  // one entry per completed epoch
  std::size_t best_epoch = 0;
  double best_validation_auc = 0.0;
  std::int64_t steps = 0;
  std::vector<std::pair<std::int64_t, double>> gradient_trace;  // (step, gradient)
};

namespace detail {

struct TrainState {
  MlpParams main, tower;           // tower unused for BASE
  MlpParams main_grads, tower_grads;
  AdamState main_adam, tower_adam;
  BatchWorkspace main_ws, tower_ws;
  bool has_tower = false;
};

inline TrainedModel snapshot_model(const ModelKind& kind, int k, const TrainState& st,
                                   const TrainConfig& cfg) {
  TrainedModel m;
  m.kind = kind;
  m.k = k;
  m.main_net = st.main;
  if (st.has_tower) m.position_tower = st.tower;
  m.config_fingerprint = config_fingerprint(cfg, kind, k);
  return m;
}

}  // namespace detail

// Mini-batch Adam with early stopping: training stops once validation AUC
// has failed to improve for `patience` consecutive epochs, and the snapshot
// with the best validation AUC is returned.
inline TrainedModel train(ModelKind kind, std::span<const Exposure> train_set,
                          std::span<const Exposure> validation_set, int k,
                          const TrainConfig& cfg,
                          const GradientTraceOptions* trace = nullptr,
                          TrainDiagnostics* diagnostics = nullptr) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (validation_set.empty()) throw std::invalid_argument("train: empty validation set");
  if (k < 2) throw std::invalid_argument("train: K must be >= 2");
  for (const Exposure& e : train_set) {
    if (e.position < 0 || e.position >= k)
      throw std::invalid_argument("train: exposure position out of range for K");
  }

  SplitMix64 init_rng(mix_seed(cfg.seed, 1));
  SplitMix64 shuffle_rng(mix_seed(cfg.seed, 2));
  SplitMix64 posrand_rng(mix_seed(cfg.seed, 3));

  std::vector<std::size_t> main_sizes;
  main_sizes.push_back(2 * kFeatureDim);
  for (std::size_t h : cfg.hidden_sizes) main_sizes.push_back(h);
  main_sizes.push_back(1);

  detail::TrainState st;
  st.main = MlpParams::glorot_uniform(main_sizes, init_rng);
  st.main_grads = MlpParams::zeros(main_sizes);
  st.main_adam = AdamState::zeros_like(st.main);
  st.has_tower = kind.position_aware();
  if (st.has_tower) {
    const std::size_t tower_dim = detail::tower_input_dim(k, /*with_user=*/false);
    st.tower = MlpParams::glorot_uniform({tower_dim, 1}, init_rng);
    st.tower_grads = MlpParams::zeros({tower_dim, 1});
    st.tower_adam = AdamState::zeros_like(st.tower);
  }

  const double gi_rate = kind.family == ModelFamily::Gi ? kind.randomization_rate : 0.0;
  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  std::vector<int> batch_labels(cfg.batch_size);
  std::vector<int> batch_positions(cfg.batch_size);
  std::vector<double> dz_main(cfg.batch_size), dz_tower(cfg.batch_size);

  std::vector<int> val_labels(validation_set.size());
  for (std::size_t i = 0; i < validation_set.size(); ++i) val_labels[i] = validation_set[i].label;

  double best_auc = -1.0;
  std::size_t best_epoch = 0, bad_epochs = 0;
  TrainedModel best = detail::snapshot_model(kind, k, st, cfg);
  std::int64_t step = 0;
  TrainDiagnostics local_diag;
  TrainDiagnostics& diag = diagnostics ? *diagnostics : local_diag;
  diag = TrainDiagnostics{};

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t batch = std::min(cfg.batch_size, n - start);
      st.main_ws.input.resize(batch, 2 * kFeatureDim);
      for (std::size_t i = 0; i < batch; ++i) {
        const Exposure& e = train_set[order[start + i]];
        double* row = st.main_ws.input.row(i);
        std::memcpy(row, e.user_features.data(), kFeatureDim * sizeof(double));
        std::memcpy(row + kFeatureDim, e.item_features.data(), kFeatureDim * sizeof(double));
        batch_labels[i] = e.label;
        batch_positions[i] = e.position;
      }
      if (gi_rate > 0.0) {
        randomize_positions(std::span<int>(batch_positions.data(), batch), gi_rate, k,
                            posrand_rng);
      }
      forward_batch(st.main, batch, st.main_ws);
      const std::span<const double> zm = st.main_ws.logits();

      std::span<const double> zt;
      if (st.has_tower) {
        const std::size_t tower_dim = st.tower.input_dim();
        st.tower_ws.input.resize(batch, tower_dim);
        for (std::size_t i = 0; i < batch; ++i) {
          detail::fill_tower_row(st.tower_ws.input.row(i), tower_dim, k, batch_positions[i],
                                 train_set[order[start + i]].user_features);
        }
        forward_batch(st.tower, batch, st.tower_ws);
        zt = st.tower_ws.logits();
      }

      // Per-sample dL/dlogit for both nets; mean loss checked for blowups.
      double ce = 0.0;
      const double inv_batch = 1.0 / static_cast<double>(batch);
      for (std::size_t i = 0; i < batch; ++i) {
        const int y = batch_labels[i];
        if (!st.has_tower) {
          ce += logit_cross_entropy(zm[i], y);
          dz_main[i] = (logistic(zm[i]) - static_cast<double>(y)) * inv_batch;
        } else if (kind.family == ModelFamily::Pal) {
          const double sm = logistic(zm[i]), tt = logistic(zt[i]);
          const double prob = sm * tt;
          ce += y == 1 ? -std::log(prob) : -std::log1p(-prob);
          if (y == 1) {
            dz_main[i] = -(1.0 - sm) * inv_batch;
            dz_tower[i] = -(1.0 - tt) * inv_batch;
          } else {
            const double denom = 1.0 - prob;
            dz_main[i] = sm * (1.0 - sm) * tt / denom * inv_batch;
            dz_tower[i] = tt * (1.0 - tt) * sm / denom * inv_batch;
          }
        } else {
          const double z = zm[i] + zt[i];
          ce += logit_cross_entropy(z, y);
          const double d = (logistic(z) - static_cast<double>(y)) * inv_batch;
          dz_main[i] = d;
          dz_tower[i] = d;
        }
      }
      if (!std::isfinite(ce)) {
        throw std::runtime_error("train(" + kind.name() + "): non-finite loss at step " +
                                 std::to_string(step) + ", epoch " + std::to_string(epoch));
      }

      for (Layer& l : st.main_grads.layers) {
        std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
      }
      backward_batch(st.main, st.main_ws, {dz_main.data(), batch}, st.main_grads,
                     cfg.l2_coeff);
      adam_step(st.main, st.main_grads, st.main_adam, cfg);
      if (st.has_tower) {
        for (Layer& l : st.tower_grads.layers) {
          std::fill(l.weights.data.begin(), l.weights.data.end(), 0.0);
          std::fill(l.bias.begin(), l.bias.end(), 0.0);
        }
        backward_batch(st.tower, st.tower_ws, {dz_tower.data(), batch}, st.tower_grads,
                       cfg.l2_coeff);
        adam_step(st.tower, st.tower_grads, st.tower_adam, cfg);
      }
      ++step;
      if (trace && !trace->probes.empty() && trace->every_steps > 0 &&
          step % static_cast<std::int64_t>(trace->every_steps) == 0) {
        const TrainedModel probe_model = detail::snapshot_model(kind, k, st, cfg);
        diag.gradient_trace.emplace_back(step, position_gradient(probe_model, trace->probes));
      }
    }

    const TrainedModel epoch_model = detail::snapshot_model(kind, k, st, cfg);
    const std::vector<double> val_pred = predict_batch(epoch_model, validation_set);
    const double val_auc = auc(std::span<const int>(val_labels), std::span<const double>(val_pred));
    diag.validation_auc.push_back(val_auc);
    if (val_auc > best_auc) {
      best_auc = val_auc;
      best_epoch = epoch;
      best = epoch_model;
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }
  diag.best_epoch = best_epoch;
  diag.best_validation_auc = best_auc;
  diag.steps = step;
  return best;
}

}  // namespace posgrad
