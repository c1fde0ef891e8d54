#pragma once

// Run-artifact serialization. Checkpoints, metrics and fusion results are
// JSON; per-position curves travel as CSV with columns position,value,count.
// Doubles are written with enough digits to round-trip exactly, so saving
// and reloading reproduces bit-identical objects and repeated runs produce
// byte-identical files.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "posgrad/data.hpp"
#include "posgrad/fusion.hpp"
#include "posgrad/metrics.hpp"
#include "posgrad/models.hpp"
#include "posgrad/nnet.hpp"

namespace posgrad {

// Shortest decimal form that parses back to the same double (what the JSON
// writer uses too), so artifacts stay exact and byte-stable.
inline std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline void save_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void save_json(const nlohmann::ordered_json& j, const std::string& path) {
  save_text(path, j.dump(2) + "\n");
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": invalid JSON: " + e.what());
  }
}

// ---- curves ----------------------------------------------------------------

inline void write_curve_csv(const PositionCurve& c, const std::string& path) {
  std::string text = "position,value,count\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    text += std::to_string(i) + "," + fmt_double(c.values[i]) + "," +
            std::to_string(c.counts[i]) + "\n";
  }
  save_text(path, text);
}

inline PositionCurve read_curve_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "position,value,count")
    throw std::runtime_error(path + ":1: expected header \"position,value,count\"");
  std::vector<double> values;
  std::vector<std::int64_t> counts;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto err = [&](const std::string& what) -> std::runtime_error {
      return std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
    };
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw err("expected three comma-separated columns");
    char* end = nullptr;
    const std::string pos_s = line.substr(0, c1);
    const long long pos = std::strtoll(pos_s.c_str(), &end, 10);
    if (end != pos_s.c_str() + pos_s.size() || pos != static_cast<long long>(values.size()))
      throw err("positions must run 0,1,2,... in order");
    const std::string val_s = line.substr(c1 + 1, c2 - c1 - 1);
    const double value = std::strtod(val_s.c_str(), &end);
    if (end != val_s.c_str() + val_s.size()) throw err("bad value column");
    const std::string cnt_s = line.substr(c2 + 1);
    const long long count = std::strtoll(cnt_s.c_str(), &end, 10);
    if (end != cnt_s.c_str() + cnt_s.size() || count < 0) throw err("bad count column");
    values.push_back(value);
    counts.push_back(count);
  }
  if (values.empty()) throw std::runtime_error(path + ": no curve rows");
  PositionCurve c(values.size());
  c.values = std::move(values);
  c.counts = std::move(counts);
  return c;
}

inline nlohmann::ordered_json curve_to_json(const PositionCurve& c) {
  nlohmann::ordered_json j;
  j["values"] = c.values;
  j["counts"] = c.counts;
  return j;
}

inline PositionCurve curve_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("values") || !j.contains("counts"))
    throw std::runtime_error("curve JSON needs \"values\" and \"counts\"");
  PositionCurve c;
  c.values = j["values"].get<std::vector<double>>();
  c.counts = j["counts"].get<std::vector<std::int64_t>>();
  if (c.values.size() != c.counts.size() || c.values.empty())
    throw std::runtime_error("curve JSON: values/counts length mismatch");
  return c;
}

// ---- metrics ---------------------------------------------------------------

inline nlohmann::ordered_json metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["auc"] = r.auc;
  j["curve"] = curve_to_json(r.curve);
  j["relative_curve"] = r.relative_curve;
  j["estimation_error_sq"] = r.estimation_error_sq;
  j["estimation_error_maxabs"] = r.estimation_error_maxabs;
  j["overestimation_ratio"] = r.overestimation_ratio;
  j["position_gradient"] = r.position_gradient;
  return j;
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    r.auc = j.at("auc").get<double>();
    r.curve = curve_from_json(j.at("curve"));
    r.relative_curve = j.at("relative_curve").get<std::vector<double>>();
    r.estimation_error_sq = j.at("estimation_error_sq").get<double>();
    r.estimation_error_maxabs = j.at("estimation_error_maxabs").get<double>();
    r.overestimation_ratio = j.at("overestimation_ratio").get<double>();
    r.position_gradient = j.at("position_gradient").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("metrics JSON: ") + e.what());
  }
  return r;
}

// ---- fusion ----------------------------------------------------------------

inline nlohmann::ordered_json fusion_to_json(const FusionResult& f) {
  nlohmann::ordered_json j;
  j["alpha"] = f.alpha;
  j["randomization_rate"] = f.randomization_rate;
  j["objective"] = f.objective;
  j["degenerate"] = f.degenerate;
  j["p_g"] = curve_to_json(f.p_g);
  j["p_a"] = curve_to_json(f.p_a);
  j["p_u"] = curve_to_json(f.p_u);
  return j;
}

inline FusionResult fusion_from_json(const nlohmann::json& j) {
  FusionResult f;
  try {
    f.alpha = j.at("alpha").get<double>();
    f.randomization_rate = j.at("randomization_rate").get<double>();
    f.objective = j.at("objective").get<double>();
    f.degenerate = j.at("degenerate").get<bool>();
    f.p_g = curve_from_json(j.at("p_g"));
    f.p_a = curve_from_json(j.at("p_a"));
    f.p_u = curve_from_json(j.at("p_u"));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("fusion JSON: ") + e.what());
  }
  return f;
}

// ---- checkpoints -----------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json mlp_to_json(const MlpParams& p) {
  nlohmann::ordered_json j;
  j["layer_sizes"] = p.layer_sizes;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const Layer& l : p.layers) {
    nlohmann::ordered_json lj;
    lj["weights"] = l.weights.data;  // row-major [out][in]
    lj["bias"] = l.bias;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j;
}

inline MlpParams mlp_from_json(const nlohmann::json& j) {
  MlpParams p = MlpParams::zeros(j.at("layer_sizes").get<std::vector<std::size_t>>());
  const nlohmann::json& layers = j.at("layers");
  if (!layers.is_array() || layers.size() != p.layers.size())
    throw std::runtime_error("checkpoint: layer count does not match layer_sizes");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    std::vector<double> w = layers[l].at("weights").get<std::vector<double>>();
    std::vector<double> b = layers[l].at("bias").get<std::vector<double>>();
    if (w.size() != p.layers[l].weights.data.size() || b.size() != p.layers[l].bias.size())
      throw std::runtime_error("checkpoint: layer " + std::to_string(l) + " shape mismatch");
    p.layers[l].weights.data = std::move(w);
    p.layers[l].bias = std::move(b);
  }
  return p;
}

}  // namespace detail

inline constexpr const char* kCheckpointFormat = "posgrad-checkpoint";

inline nlohmann::ordered_json checkpoint_to_json(const TrainedModel& m) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kVersion;
  j["kind"] = m.kind.name();
  j["k"] = m.k;
  j["config_fingerprint"] = m.config_fingerprint;
  j["main_net"] = detail::mlp_to_json(m.main_net);
  if (m.position_tower) {
    j["position_tower"] = detail::mlp_to_json(*m.position_tower);
  } else {
    j["position_tower"] = nullptr;
  }
  return j;
}

inline TrainedModel checkpoint_from_json(const nlohmann::json& j) {
  TrainedModel m;
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw std::runtime_error("not a model checkpoint");
    const std::string kind_name = j.at("kind").get<std::string>();
    const auto kind = ModelKind::parse(kind_name);
    if (!kind) throw std::runtime_error("unknown model kind \"" + kind_name + "\"");
    m.kind = *kind;
    m.k = j.at("k").get<int>();
    m.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    m.main_net = detail::mlp_from_json(j.at("main_net"));
    if (!j.at("position_tower").is_null())
      m.position_tower = detail::mlp_from_json(j.at("position_tower"));
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("checkpoint JSON: ") + e.what());
  }
  validate_model(m);
  if (m.main_net.input_dim() != 2 * kFeatureDim)
    throw std::runtime_error("checkpoint: main net input dim is not " +
                             std::to_string(2 * kFeatureDim));
  return m;
}

inline void save_checkpoint(const TrainedModel& m, const std::string& path) {
  save_json(checkpoint_to_json(m), path);
}

inline TrainedModel load_checkpoint(const std::string& path) {
  const nlohmann::json j = load_json(path);
  try {
    return checkpoint_from_json(j);
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace posgrad
