#pragma once

// Text formats for datasets, saliency tensors, rationales, confidences,
// activations and reports. Instance-level data is JSON Lines; a report is a
// single JSON document. Keys are written sorted and numbers in shortest
// round-trip form, so write(load(x)) is canonical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vek/error.hpp"
#include "vek/numerics/matrix.hpp"

namespace vek {

using Json = nlohmann::json;

enum class PuFlag { labelled, unlabelled };

struct Instance {
  std::string id;
  std::optional<std::vector<std::string>> tokens;
  std::optional<std::vector<double>> features;
  std::optional<int> label;
  std::optional<PuFlag> pu_flag;
  std::optional<std::string> domain;
  std::optional<std::int64_t> timestep;

  // A label is visible to learners unless the instance is flagged
  // unlabelled; in that case any label present is held-out ground truth.
  std::optional<int> visible_label() const {
    if (pu_flag == PuFlag::unlabelled) return std::nullopt;
    return label;
  }

  friend bool operator==(const Instance&, const Instance&) = default;
};

enum class Schema { features, tokens, both };

class FeatureDataset {
 public:
  FeatureDataset() = default;
  explicit FeatureDataset(std::vector<Instance> instances) : instances_(std::move(instances)) { reindex(); }

  const std::vector<Instance>& instances() const noexcept { return instances_; }
  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }

  const Instance* find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &instances_[it->second];
  }

  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Length of the feature vectors (0 when no instance has features).
  std::size_t feature_dim() const {
    for (const auto& inst : instances_)
      if (inst.features) return inst.features->size();
    return 0;
  }

  Matrix feature_matrix() const {
    Matrix m(0, feature_dim());
    for (const auto& inst : instances_) {
      require(inst.features.has_value(), Errc::schema, "instance '" + inst.id + "' has no features");
      m.append_row(*inst.features);
    }
    return m;
  }

  /// Instances grouped by timestep in ascending order.
  std::vector<FeatureDataset> split_by_timestep() const {
    std::map<std::int64_t, std::vector<Instance>> groups;
    for (const auto& inst : instances_) {
      require(inst.timestep.has_value(), Errc::schema, "instance '" + inst.id + "' has no timestep");
      groups[*inst.timestep].push_back(inst);
    }
    std::vector<FeatureDataset> out;
    for (auto& [step, insts] : groups) out.emplace_back(std::move(insts));
    return out;
  }

  friend bool operator==(const FeatureDataset& a, const FeatureDataset& b) { return a.instances_ == b.instances_; }

 private:
  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      auto [it, inserted] = index_.emplace(instances_[i].id, i);
      require(inserted, Errc::duplicate_id, "duplicate instance id '" + instances_[i].id + "'");
    }
  }

  std::vector<Instance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

// Calls `fn(json, line_number)` for each non-blank line.
inline void for_each_json_line(std::istream& in, const std::string& source,
                               const std::function<void(const Json&, std::size_t)>& fn) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    Json value;
    try {
      value = Json::parse(text);
    } catch (const Json::parse_error& e) {
      fail(Errc::parse, where(source, line) + ": " + e.what());
    }
    if (!value.is_object()) fail(Errc::parse, where(source, line) + ": line is not a JSON object");
    fn(value, line);
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open '" + path + "' for reading");
  return in;
}

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& at) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) fail(Errc::schema, at + ": unknown field '" + it.key() + "'");
  }
}

inline const Json& field(const Json& obj, const char* key, const std::string& at) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::schema, at + ": missing field '" + key + "'");
  return *it;
}

inline std::string get_string(const Json& obj, const char* key, const std::string& at) {
  const Json& v = field(obj, key, at);
  if (!v.is_string()) fail(Errc::schema, at + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

inline std::int64_t get_int(const Json& v, const char* key, const std::string& at) {
  if (!v.is_number_integer()) fail(Errc::schema, at + ": field '" + key + "' must be an integer");
  return v.get<std::int64_t>();
}

inline double get_real(const Json& v, const char* key, const std::string& at) {
  if (!v.is_number()) fail(Errc::schema, at + ": field '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(Errc::schema, at + ": field '" + key + "' is not finite");
  return x;
}

inline std::vector<double> get_reals(const Json& obj, const char* key, const std::string& at) {
  const Json& v = field(obj, key, at);
  if (!v.is_array()) fail(Errc::schema, at + ": field '" + key + "' must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(get_real(x, key, at));
  return out;
}

inline std::vector<std::string> get_strings(const Json& obj, const char* key, const std::string& at) {
  const Json& v = field(obj, key, at);
  if (!v.is_array()) fail(Errc::schema, at + ": field '" + key + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) fail(Errc::schema, at + ": field '" + key + "' must be an array of strings");
    out.push_back(x.get<std::string>());
  }
  return out;
}

inline void write_lines(const std::string& path, const std::vector<Json>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  for (const auto& l : lines) out << l.dump() << '\n';
  if (!out) fail(Errc::io, "write to '" + path + "' failed");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// datasets

inline Instance parse_instance(const Json& obj, Schema schema, std::optional<int> num_classes, const std::string& at) {
  using namespace detail;
  check_keys(obj, {"id", "tokens", "features", "label", "pu_flag", "domain", "timestep"}, at);
  Instance inst;
  inst.id = get_string(obj, "id", at);
  if (obj.contains("tokens")) inst.tokens = get_strings(obj, "tokens", at);
  if (obj.contains("features")) inst.features = get_reals(obj, "features", at);
  if (obj.contains("label")) {
    const auto label = get_int(obj["label"], "label", at);
    if (label < 0 || (num_classes && label >= *num_classes))
      fail(Errc::schema, at + ": field 'label' value " + std::to_string(label) + " outside declared classes");
    inst.label = static_cast<int>(label);
  }
  if (obj.contains("pu_flag")) {
    const auto flag = get_string(obj, "pu_flag", at);
    if (flag == "labelled") inst.pu_flag = PuFlag::labelled;
    else if (flag == "unlabelled") inst.pu_flag = PuFlag::unlabelled;
    else fail(Errc::schema, at + ": field 'pu_flag' must be 'labelled' or 'unlabelled'");
  }
  if (obj.contains("domain")) inst.domain = get_string(obj, "domain", at);
  if (obj.contains("timestep")) inst.timestep = get_int(obj["timestep"], "timestep", at);

  if (!inst.tokens && !inst.features) fail(Errc::schema, at + ": field 'features' or 'tokens' required");
  if ((schema == Schema::features || schema == Schema::both) && !inst.features)
    fail(Errc::schema, at + ": missing field 'features'");
  if ((schema == Schema::tokens || schema == Schema::both) && !inst.tokens)
    fail(Errc::schema, at + ": missing field 'tokens'");
  return inst;
}

inline FeatureDataset parse_dataset(std::istream& in, Schema schema, const std::string& source = "<stream>",
                                    std::optional<int> num_classes = std::nullopt) {
  std::vector<Instance> instances;
  std::unordered_map<std::string, std::size_t> seen;
  std::size_t dim = 0;
  bool have_dim = false;
  detail::for_each_json_line(in, source, [&](const Json& obj, std::size_t line) {
    const std::string at = detail::where(source, line);
    Instance inst = parse_instance(obj, schema, num_classes, at);
    if (inst.features) {
      if (!have_dim) {
        dim = inst.features->size();
        have_dim = true;
      } else if (inst.features->size() != dim) {
        fail(Errc::schema, at + ": field 'features' has length " + std::to_string(inst.features->size()) +
                               ", expected " + std::to_string(dim));
      }
    }
    if (auto [it, ok] = seen.emplace(inst.id, line); !ok)
      fail(Errc::duplicate_id, at + ": duplicate id '" + inst.id + "' (first seen on line " +
                                   std::to_string(it->second) + ")");
    instances.push_back(std::move(inst));
  });
  return FeatureDataset(std::move(instances));
}

inline FeatureDataset load_dataset(const std::string& path, Schema schema,
                                   std::optional<int> num_classes = std::nullopt) {
  auto in = detail::open_input(path);
  return parse_dataset(in, schema, path, num_classes);
}

inline Json to_json(const Instance& inst) {
  Json obj = Json::object();
  obj["id"] = inst.id;
  if (inst.tokens) obj["tokens"] = *inst.tokens;
  if (inst.features) obj["features"] = *inst.features;
  if (inst.label) obj["label"] = *inst.label;
  if (inst.pu_flag) obj["pu_flag"] = *inst.pu_flag == PuFlag::labelled ? "labelled" : "unlabelled";
  if (inst.domain) obj["domain"] = *inst.domain;
  if (inst.timestep) obj["timestep"] = *inst.timestep;
  return obj;
}

inline void write_dataset(const FeatureDataset& dataset, std::ostream& out) {
  for (const auto& inst : dataset.instances()) out << to_json(inst).dump() << '\n';
}

inline void write_dataset(const FeatureDataset& dataset, const std::string& path) {
  std::vector<Json> lines;
  for (const auto& inst : dataset.instances()) lines.push_back(to_json(inst));
  detail::write_lines(path, lines);
}

// ---------------------------------------------------------------------------
// saliency, rationales, confidences, activations

/// Per (instance id, class) token-score vectors.
struct SaliencyTensor {
  std::map<std::pair<std::string, int>, std::vector<double>> entries;

  const std::vector<double>* find(const std::string& id, int cls) const {
    auto it = entries.find({id, cls});
    return it == entries.end() ? nullptr : &it->second;
  }
  void set(const std::string& id, int cls, std::vector<double> scores) { entries[{id, cls}] = std::move(scores); }
};

using RationaleSet = std::map<std::string, std::vector<int>>;

struct ConfidenceEntry {
  int predicted_class = 0;
  double confidence = 0.0;
  std::optional<std::vector<double>> distribution;
};

using ConfidenceTable = std::map<std::string, ConfidenceEntry>;

/// (model id, instance id) -> activation summary.
using ActivationTable = std::map<std::pair<std::string, std::string>, std::vector<double>>;

namespace detail {

inline const Instance& known_instance(const FeatureDataset& dataset, const std::string& id, const std::string& at) {
  const Instance* inst = dataset.find(id);
  if (!inst) fail(Errc::unknown_instance, at + ": unknown instance id '" + id + "'");
  return *inst;
}

inline std::size_t token_count(const Instance& inst, const std::string& at) {
  if (!inst.tokens) fail(Errc::schema, at + ": instance '" + inst.id + "' has no tokens");
  return inst.tokens->size();
}

}  // namespace detail

inline SaliencyTensor parse_saliency(std::istream& in, const FeatureDataset& dataset,
                                     const std::string& source = "<stream>") {
  SaliencyTensor out;
  detail::for_each_json_line(in, source, [&](const Json& obj, std::size_t line) {
    using namespace detail;
    const std::string at = where(source, line);
    check_keys(obj, {"id", "class", "scores"}, at);
    const auto id = get_string(obj, "id", at);
    const auto cls = get_int(field(obj, "class", at), "class", at);
    if (cls < 0) fail(Errc::schema, at + ": field 'class' must be non-negative");
    auto scores = get_reals(obj, "scores", at);
    const auto& inst = known_instance(dataset, id, at);
    if (scores.size() != token_count(inst, at))
      fail(Errc::length_mismatch, at + ": saliency for '" + id + "' has " + std::to_string(scores.size()) +
                                      " scores but the instance has " + std::to_string(inst.tokens->size()) + " tokens");
    out.set(id, static_cast<int>(cls), std::move(scores));
  });
  return out;
}

inline SaliencyTensor load_saliency(const std::string& path, const FeatureDataset& dataset) {
  auto in = detail::open_input(path);
  return parse_saliency(in, dataset, path);
}

inline void write_saliency(const SaliencyTensor& tensor, const std::string& path) {
  std::vector<Json> lines;
  for (const auto& [key, scores] : tensor.entries)
    lines.push_back(Json{{"id", key.first}, {"class", key.second}, {"scores", scores}});
  detail::write_lines(path, lines);
}

inline RationaleSet parse_rationales(std::istream& in, const FeatureDataset& dataset,
                                     const std::string& source = "<stream>") {
  RationaleSet out;
  detail::for_each_json_line(in, source, [&](const Json& obj, std::size_t line) {
    using namespace detail;
    const std::string at = where(source, line);
    check_keys(obj, {"id", "mask"}, at);
    const auto id = get_string(obj, "id", at);
    const Json& mask = field(obj, "mask", at);
    if (!mask.is_array()) fail(Errc::schema, at + ": field 'mask' must be an array");
    std::vector<int> values;
    for (const auto& m : mask) {
      const auto v = get_int(m, "mask", at);
      if (v != 0 && v != 1) fail(Errc::schema, at + ": field 'mask' values must be 0 or 1");
      values.push_back(static_cast<int>(v));
    }
    const auto& inst = known_instance(dataset, id, at);
    if (values.size() != token_count(inst, at))
      fail(Errc::length_mismatch, at + ": mask for '" + id + "' has length " + std::to_string(values.size()) +
                                      " but the instance has " + std::to_string(inst.tokens->size()) + " tokens");
    if (out.contains(id)) fail(Errc::duplicate_id, at + ": duplicate id '" + id + "'");
    out[id] = std::move(values);
  });
  return out;
}

inline RationaleSet load_rationales(const std::string& path, const FeatureDataset& dataset) {
  auto in = detail::open_input(path);
  return parse_rationales(in, dataset, path);
}

inline void write_rationales(const RationaleSet& rationales, const std::string& path) {
  std::vector<Json> lines;
  for (const auto& [id, mask] : rationales) lines.push_back(Json{{"id", id}, {"mask", mask}});
  detail::write_lines(path, lines);
}

inline ConfidenceTable parse_confidences(std::istream& in, const FeatureDataset& dataset,
                                         const std::string& source = "<stream>") {
  ConfidenceTable out;
  detail::for_each_json_line(in, source, [&](const Json& obj, std::size_t line) {
    using namespace detail;
    const std::string at = where(source, line);
    check_keys(obj, {"id", "predicted_class", "confidence", "distribution"}, at);
    const auto id = get_string(obj, "id", at);
    known_instance(dataset, id, at);
    ConfidenceEntry entry;
    const auto cls = get_int(field(obj, "predicted_class", at), "predicted_class", at);
    if (cls < 0) fail(Errc::schema, at + ": field 'predicted_class' must be non-negative");
    entry.predicted_class = static_cast<int>(cls);
    entry.confidence = get_real(field(obj, "confidence", at), "confidence", at);
    if (entry.confidence < 0.0 || entry.confidence > 1.0)
      fail(Errc::schema, at + ": field 'confidence' must lie in [0, 1]");
    if (obj.contains("distribution")) {
      entry.distribution = get_reals(obj, "distribution", at);
      const auto& dist = *entry.distribution;
      if (dist.empty()) fail(Errc::schema, at + ": field 'distribution' is empty");
      const double top = *std::max_element(dist.begin(), dist.end());
      if (std::abs(top - entry.confidence) > 1e-9)
        fail(Errc::schema, at + ": field 'confidence' differs from the maximum of 'distribution'");
    }
    if (out.contains(id)) fail(Errc::duplicate_id, at + ": duplicate id '" + id + "'");
    out[id] = std::move(entry);
  });
  return out;
}

inline ConfidenceTable load_confidences(const std::string& path, const FeatureDataset& dataset) {
  auto in = detail::open_input(path);
  return parse_confidences(in, dataset, path);
}

inline void write_confidences(const ConfidenceTable& table, const std::string& path) {
  std::vector<Json> lines;
  for (const auto& [id, e] : table) {
    Json obj{{"id", id}, {"predicted_class", e.predicted_class}, {"confidence", e.confidence}};
    if (e.distribution) obj["distribution"] = *e.distribution;
    lines.push_back(std::move(obj));
  }
  detail::write_lines(path, lines);
}

inline ActivationTable parse_activations(std::istream& in, const FeatureDataset& dataset,
                                         const std::string& source = "<stream>") {
  ActivationTable out;
  std::map<std::string, std::size_t> widths;
  detail::for_each_json_line(in, source, [&](const Json& obj, std::size_t line) {
    using namespace detail;
    const std::string at = where(source, line);
    check_keys(obj, {"model", "id", "activation"}, at);
    const auto model = get_string(obj, "model", at);
    const auto id = get_string(obj, "id", at);
    known_instance(dataset, id, at);
    auto act = get_reals(obj, "activation", at);
    auto [it, fresh] = widths.emplace(model, act.size());
    if (!fresh && it->second != act.size())
      fail(Errc::length_mismatch, at + ": activation for '" + id + "' under model '" + model + "' has length " +
                                      std::to_string(act.size()) + ", expected " + std::to_string(it->second));
    out[{model, id}] = std::move(act);
  });
  return out;
}

inline ActivationTable load_activations(const std::string& path, const FeatureDataset& dataset) {
  auto in = detail::open_input(path);
  return parse_activations(in, dataset, path);
}

inline void write_activations(const ActivationTable& table, const std::string& path) {
  std::vector<Json> lines;
  for (const auto& [key, act] : table) lines.push_back(Json{{"model", key.first}, {"id", key.second}, {"activation", act}});
  detail::write_lines(path, lines);
}

// ---------------------------------------------------------------------------
// extractive-explanation corpora

struct ExplainDocument {
  std::string id;
  std::vector<std::string> sentences;
  std::string justification;
};

inline std::vector<ExplainDocument> parse_explain_corpus(std::istream& in, const std::string& source = "<stream>") {
  std::vector<ExplainDocument> docs;
  std::map<std::string, std::size_t> seen;
  detail::for_each_json_line(in, source, [&](const Json& obj, std::size_t line) {
    using namespace detail;
    const std::string at = where(source, line);
    check_keys(obj, {"id", "sentences", "justification"}, at);
    ExplainDocument doc{get_string(obj, "id", at), get_strings(obj, "sentences", at),
                        get_string(obj, "justification", at)};
    if (!seen.emplace(doc.id, line).second) fail(Errc::duplicate_id, at + ": duplicate id '" + doc.id + "'");
    docs.push_back(std::move(doc));
  });
  return docs;
}

inline std::vector<ExplainDocument> load_explain_corpus(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_explain_corpus(in, path);
}

inline void write_explain_corpus(const std::vector<ExplainDocument>& docs, const std::string& path) {
  std::vector<Json> lines;
  for (const auto& d : docs)
    lines.push_back(Json{{"id", d.id}, {"sentences", d.sentences}, {"justification", d.justification}});
  detail::write_lines(path, lines);
}

/// Prediction line: {"id":..., "selected":[...]} or {"id":..., "text":"..."}.
struct ExplainPrediction {
  std::string id;
  std::optional<std::vector<std::size_t>> selected;
  std::optional<std::string> text;
};

inline std::vector<ExplainPrediction> parse_explain_predictions(std::istream& in,
                                                                const std::string& source = "<stream>") {
  std::vector<ExplainPrediction> out;
  std::map<std::string, std::size_t> seen;
  detail::for_each_json_line(in, source, [&](const Json& obj, std::size_t line) {
    using namespace detail;
    const std::string at = where(source, line);
    check_keys(obj, {"id", "selected", "text", "gains"}, at);
    ExplainPrediction p{get_string(obj, "id", at), std::nullopt, std::nullopt};
    if (obj.contains("selected")) {
      std::vector<std::size_t> sel;
      for (const auto& v : obj["selected"]) {
        const auto i = get_int(v, "selected", at);
        if (i < 0) fail(Errc::schema, at + ": field 'selected' must hold non-negative indices");
        sel.push_back(static_cast<std::size_t>(i));
      }
      p.selected = std::move(sel);
    }
    if (obj.contains("text")) p.text = get_string(obj, "text", at);
    if (!p.selected && !p.text) fail(Errc::schema, at + ": field 'selected' or 'text' required");
    if (!seen.emplace(p.id, line).second) fail(Errc::duplicate_id, at + ": duplicate id '" + p.id + "'");
    out.push_back(std::move(p));
  });
  return out;
}

inline std::vector<ExplainPrediction> load_explain_predictions(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_explain_predictions(in, path);
}

// ---------------------------------------------------------------------------
// reports

inline constexpr const char* kToolVersion = "0.1.0";

/// Assembles the report document: tool version, seed, config echo,
/// wall time and per-metric results.
inline Json make_report(const Json& config, std::uint64_t seed, Json results, double wall_time = 0.0) {
  Json report = Json::object();
  report["tool_version"] = kToolVersion;
  report["seed"] = seed;
  report["config"] = config;
  report["wall_time"] = wall_time;
  report["results"] = std::move(results);
  return report;
}

inline std::string render_report(const Json& report) { return report.dump(2) + "\n"; }

inline void write_report(const Json& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot open '" + path + "' for writing");
  out << render_report(report);
  out.flush();
  if (!out) fail(Errc::io, "write to '" + path + "' failed");
}

inline Json read_report(const std::string& path) {
  auto in = detail::open_input(path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(Errc::parse, path + ": " + e.what());
  }
}

}  // namespace vek
