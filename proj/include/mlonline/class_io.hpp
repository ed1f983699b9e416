#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mlonline/core.hpp"

namespace mlonline {

using ordered_json = nlohmann::ordered_json;

namespace detail {

// Parses JSON text while recording object keys that appear twice in the same object.
inline ordered_json parse_tracking_duplicates(const std::string& text, std::vector<std::string>& duplicates) {
  std::vector<std::set<std::string>> open_objects;
  auto callback = [&](int, ordered_json::parse_event_t event, ordered_json& parsed) {
    switch (event) {
      case ordered_json::parse_event_t::object_start: open_objects.emplace_back(); break;
      case ordered_json::parse_event_t::object_end:
        if (!open_objects.empty()) open_objects.pop_back();
        break;
      case ordered_json::parse_event_t::key:
        if (!open_objects.empty() && !open_objects.back().insert(parsed.get<std::string>()).second)
          duplicates.push_back(parsed.get<std::string>());
        break;
      default: break;
    }
    return true;
  };
  try {
    return ordered_json::parse(text, callback);
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::InvalidClass, std::string("JSON parse error: ") + e.what());
  }
}

inline std::vector<std::string> string_list(const ordered_json& j, const char* field) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidClass, std::string("'") + field + "' must be a list of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw Error(ErrorCode::InvalidClass, std::string("'") + field + "' must be a list of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace detail

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RawClass parse_raw_class(const std::string& text) {
  RawClass raw;
  ordered_json doc = detail::parse_tracking_duplicates(text, raw.duplicate_keys);
  if (!doc.is_object()) throw Error(ErrorCode::InvalidClass, "class file must be a JSON object");
  for (const auto& [key, _] : doc.items())
    if (key != "labels" && key != "instances" && key != "hypotheses")
      throw Error(ErrorCode::InvalidClass, "unknown top-level key '" + key + "'");
  for (const char* required : {"labels", "instances", "hypotheses"})
    if (!doc.contains(required)) throw Error(ErrorCode::InvalidClass, std::string("missing '") + required + "'");

  raw.labels = detail::string_list(doc["labels"], "labels");
  raw.instances = detail::string_list(doc["instances"], "instances");
  const auto& hyps = doc["hypotheses"];
  if (!hyps.is_object()) throw Error(ErrorCode::InvalidClass, "'hypotheses' must be an object");
  for (const auto& [name, cells] : hyps.items()) {
    if (!cells.is_object()) throw Error(ErrorCode::InvalidClass, "hypothesis '" + name + "' must map instances to label lists");
    RawClass::Hypothesis h{name, {}};
    for (const auto& [inst, labels] : cells.items())
      h.cells.emplace_back(inst, detail::string_list(labels, "labels of a cell"));
    raw.hypotheses.push_back(std::move(h));
  }
  return raw;
}

inline HypothesisClass parse_class(const std::string& text) { return validate_class(parse_raw_class(text)); }

inline HypothesisClass load_class(const std::filesystem::path& path) { return parse_class(read_text_file(path)); }

inline ordered_json label_set_json(const HypothesisClass& cls, LabelSet s) {
  ordered_json arr = ordered_json::array();
  s.for_each([&](LabelId y) { arr.push_back(cls.label_names()[y]); });
  return arr;
}

/// Canonical serialization: file order equals index order.
inline ordered_json class_to_json(const HypothesisClass& cls) {
  ordered_json doc;
  doc["labels"] = cls.label_names();
  doc["instances"] = cls.instance_names();
  ordered_json hyps = ordered_json::object();
  for (HypothesisId h = 0; h < cls.num_hypotheses(); ++h) {
    ordered_json cells = ordered_json::object();
    for (InstanceId x = 0; x < cls.num_instances(); ++x)
      cells[cls.instance_names()[x]] = label_set_json(cls, cls.output(h, x));
    hyps[cls.hypothesis_names()[h]] = std::move(cells);
  }
  doc["hypotheses"] = std::move(hyps);
  return doc;
}

inline std::string serialize_class(const HypothesisClass& cls) { return class_to_json(cls).dump(2) + "\n"; }

}  // namespace mlonline
