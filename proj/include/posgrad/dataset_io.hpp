#pragma once

// JSONL dataset files: one exposure per line, LF-terminated, with keys
// user_id, item_id, user_features, item_features, position, label, traffic,
// true_pctr. Consecutive lines sharing a user_id form one query group;
// import rebuilds the groups and re-checks every invariant, reporting the
// line number of anything malformed.

#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "posgrad/data.hpp"

namespace posgrad {

namespace detail {

inline nlohmann::ordered_json exposure_to_json(const Exposure& e) {
  nlohmann::ordered_json j;
  j["user_id"] = e.user_id;
  j["item_id"] = e.item_id;
  j["user_features"] = e.user_features;
  j["item_features"] = e.item_features;
  j["position"] = e.position;
  j["label"] = e.label;
  j["traffic"] = to_string(e.traffic);
  j["true_pctr"] = e.true_pctr;
  return j;
}

[[noreturn]] inline void dataset_error(const std::string& path, std::size_t line,
                                       const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

inline FeatureVector parse_features(const nlohmann::json& j, const char* field,
                                    const std::string& path, std::size_t line) {
  if (!j.is_array() || j.size() != kFeatureDim)
    dataset_error(path, line,
                  std::string("field \"") + field + "\" must be an array of " +
                      std::to_string(kFeatureDim) + " numbers");
  FeatureVector out{};
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    if (!j[i].is_number())
      dataset_error(path, line, std::string("field \"") + field + "\" entry " +
                                    std::to_string(i) + " is not a number");
    out[i] = j[i].get<double>();
  }
  return out;
}

inline Exposure parse_exposure(const std::string& text, const std::string& path,
                               std::size_t line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    dataset_error(path, line, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) dataset_error(path, line, "record is not a JSON object");
  for (const char* field : {"user_id", "item_id", "user_features", "item_features",
                            "position", "label", "traffic", "true_pctr"}) {
    if (!j.contains(field))
      dataset_error(path, line, std::string("missing field \"") + field + "\"");
  }
  Exposure e;
  try {
    e.user_id = j["user_id"].get<std::int64_t>();
    e.item_id = j["item_id"].get<std::int64_t>();
    e.position = j["position"].get<int>();
    e.label = j["label"].get<int>();
    e.true_pctr = j["true_pctr"].get<double>();
  } catch (const nlohmann::json::exception& ex) {
    dataset_error(path, line, std::string("bad field type: ") + ex.what());
  }
  e.user_features = parse_features(j["user_features"], "user_features", path, line);
  e.item_features = parse_features(j["item_features"], "item_features", path, line);
  if (!j["traffic"].is_string() ||
      !parse_traffic(j["traffic"].get<std::string>(), e.traffic))
    dataset_error(path, line, "field \"traffic\" must be \"RS\" or \"RANDOM\"");
  if (e.label != 0 && e.label != 1) dataset_error(path, line, "field \"label\" must be 0 or 1");
  if (e.position < 0) dataset_error(path, line, "field \"position\" must be >= 0");
  if (!(e.true_pctr >= 0.0 && e.true_pctr <= 1.0))
    dataset_error(path, line, "field \"true_pctr\" must lie in [0,1]");
  try {
    validate_features(e.user_features, "user");
    validate_features(e.item_features, "item");
  } catch (const std::exception& ex) {
    dataset_error(path, line, ex.what());
  }
  return e;
}

}  // namespace detail

inline void export_jsonl(const std::vector<QueryGroup>& groups, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const QueryGroup& g : groups) {
    for (const Exposure& e : g.exposures) {
      out << detail::exposure_to_json(e).dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::vector<QueryGroup> import_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);

  std::vector<QueryGroup> groups;
  std::string text;
  std::size_t line = 0;
  std::size_t group_start_line = 0;
  QueryGroup current;
  bool open_group = false;

  auto close_group = [&] {
    if (!open_group) return;
    try {
      validate_group(current);
    } catch (const std::exception& ex) {
      detail::dataset_error(path, group_start_line,
                            std::string("invalid query group: ") + ex.what());
    }
    if (!groups.empty() && groups.front().exposures.size() != current.exposures.size())
      detail::dataset_error(path, group_start_line,
                            "query group size differs from the first group");
    groups.push_back(std::move(current));
    current = QueryGroup{};
    open_group = false;
  };

  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    Exposure e = detail::parse_exposure(text, path, line);
    if (open_group && e.user_id != current.user_id) close_group();
    if (!open_group) {
      current.user_id = e.user_id;
      group_start_line = line;
      open_group = true;
    }
    current.exposures.push_back(std::move(e));
  }
  close_group();
  if (groups.empty()) throw std::runtime_error(path + ": no records");
  return groups;
}

}  // namespace posgrad
