#pragma once

// registry.hpp — named dataset registry: manifest entries describing where a
// corpus lives, how its fields map onto the canonical schema, and the
// checksum it had when registered.

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlikit/digest.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/json_io.hpp"
#include "nlikit/transform.hpp"

namespace nlikit {

struct FieldMap {
  std::string premise = "premise";
  std::string hypothesis = "hypothesis";
  std::string label = "label";
  std::string id = "id";
  std::string genre = "genre";
};

struct DatasetManifest {
  std::string name;
  std::string path;
  std::string format = "jsonl";  // "jsonl" or "copa"
  DatasetKind kind = DatasetKind::train;
  FieldMap fields;
  bool unlabelled = false;        // corpus ships without gold labels
  bool in_distribution = false;   // exempt from OOD categorization
  bool binary_eval = false;       // score with entailment/non-entailment collapse
  std::string checksum;           // sha256 of file contents; empty until registered
  std::string split_map;          // optional difficulty-split file (JSON id->tag)
};

struct LoadResult {
  Dataset dataset;
  std::size_t dropped_labels = 0;  // "-" style disagreement markers
  TagLog tag_log;
};

inline json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["name"] = m.name;
  j["path"] = m.path;
  j["format"] = m.format;
  j["kind"] = std::string(dataset_kind_name(m.kind));
  json f;
  f["premise"] = m.fields.premise;
  f["hypothesis"] = m.fields.hypothesis;
  f["label"] = m.fields.label;
  f["id"] = m.fields.id;
  f["genre"] = m.fields.genre;
  j["fields"] = f;
  if (m.unlabelled) j["unlabelled"] = true;
  if (m.in_distribution) j["in_distribution"] = true;
  if (m.binary_eval) j["binary_eval"] = true;
  if (!m.checksum.empty()) j["checksum"] = m.checksum;
  if (!m.split_map.empty()) j["split_map"] = m.split_map;
  return j;
}

inline DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.name = j.at("name").get<std::string>();
  m.path = j.at("path").get<std::string>();
  m.format = j.value("format", std::string("jsonl"));
  m.kind = parse_dataset_kind(j.value("kind", std::string("train")));
  if (j.contains("fields")) {
    const json& f = j.at("fields");
    m.fields.premise = f.value("premise", m.fields.premise);
    m.fields.hypothesis = f.value("hypothesis", m.fields.hypothesis);
    m.fields.label = f.value("label", m.fields.label);
    m.fields.id = f.value("id", m.fields.id);
    m.fields.genre = f.value("genre", m.fields.genre);
  }
  m.unlabelled = j.value("unlabelled", false);
  m.in_distribution = j.value("in_distribution", false);
  m.binary_eval = j.value("binary_eval", false);
  m.checksum = j.value("checksum", std::string());
  m.split_map = j.value("split_map", std::string());
  return m;
}

// Parses a corpus under the manifest's declared format and field mapping.
// Ids are taken from the id field when present, else minted as
// "<name>:<zero-based line index>". Labels are normalized; disagreement
// markers drop with a count; any other unknown label is an error with the
// line number.
inline LoadResult load_dataset(const DatasetManifest& m) {
  if (m.format != "jsonl") {
    throw DataError("dataset '" + m.name + "': format '" + m.format +
                    "' is not loadable as a corpus (use copa-build for copa)");
  }
  std::ifstream in(m.path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + m.path);

  LoadResult result;
  result.dataset = Dataset(m.name, m.kind);
  std::string line;
  std::size_t lineno = 0;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(m.path + ":" + std::to_string(lineno) +
                      ": JSON parse failure: " + e.what());
    }

    NliInstance inst;
    if (j.contains(m.fields.id) && !j.at(m.fields.id).is_null()) {
      const json& idv = j.at(m.fields.id);
      inst.id = idv.is_string() ? idv.get<std::string>() : idv.dump();
    } else {
      inst.id = m.name + ":" + std::to_string(index);
    }
    if (!j.contains(m.fields.premise) || !j.contains(m.fields.hypothesis)) {
      throw DataError(m.path + ":" + std::to_string(lineno) +
                      ": missing premise/hypothesis field");
    }
    inst.premise = j.at(m.fields.premise).get<std::string>();
    inst.hypothesis = j.at(m.fields.hypothesis).get<std::string>();
    inst.source = m.name;
    if (j.contains(m.fields.genre) && j.at(m.fields.genre).is_string()) {
      inst.meta["genre"] = j.at(m.fields.genre).get<std::string>();
    }

    if (!m.unlabelled) {
      if (!j.contains(m.fields.label)) {
        throw DataError(m.path + ":" + std::to_string(lineno) +
                        ": missing label field '" + m.fields.label + "'");
      }
      std::optional<Label> label;
      try {
        label = normalize_label(j.at(m.fields.label).get<std::string>());
      } catch (const DataError& e) {
        throw DataError(m.path + ":" + std::to_string(lineno) + ": " +
                        e.what());
      }
      ++index;
      if (!label) {
        result.dropped_labels++;
        continue;
      }
      inst.label = label;
    } else {
      ++index;
    }
    result.dataset.add(std::move(inst));
  }

  if (!m.split_map.empty()) {
    json sm = read_json_file(m.split_map);
    std::map<std::string, std::string> tags;
    for (auto it = sm.begin(); it != sm.end(); ++it) {
      tags[it.key()] = it.value().get<std::string>();
    }
    result.dataset = tag_splits(result.dataset, tags, &result.tag_log);
  }
  return result;
}

// One JSON document listing every registered dataset. Loading a dataset
// recomputes its checksum; a mismatch flags the entry stale and refuses the
// load.
class Registry {
public:
  Registry() = default;

  static Registry load(const std::string& path) {
    Registry r;
    r.path_ = path;
    json j = read_json_file(path);
    for (const auto& item : j.at("datasets")) {
      r.add(manifest_from_json(item));
    }
    return r;
  }

  void save(const std::string& path) const {
    json j;
    j["datasets"] = json::array();
    for (const auto& m : manifests_) j["datasets"].push_back(manifest_to_json(m));
    write_json_file(path, j);
  }

  void add(DatasetManifest m) {
    if (index_.count(m.name)) {
      throw ConfigError("registry: duplicate dataset name '" + m.name + "'");
    }
    index_[m.name] = manifests_.size();
    manifests_.push_back(std::move(m));
  }

  const std::vector<DatasetManifest>& manifests() const { return manifests_; }
  std::vector<DatasetManifest>& manifests_mutable() { return manifests_; }

  DatasetManifest& get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) {
      throw ConfigError("registry: unknown dataset '" + name + "'");
    }
    return manifests_[it->second];
  }

  bool is_stale(const std::string& name) const { return stale_.count(name) > 0; }

  // Verifies the stored checksum (filling it in on first load) and parses
  // the corpus.
  LoadResult load_verified(const std::string& name) {
    DatasetManifest& m = get(name);
    const std::string actual = sha256_file(m.path);
    if (m.checksum.empty()) {
      m.checksum = actual;
    } else if (m.checksum != actual) {
      stale_.insert(name);
      throw DataError("registry: dataset '" + name +
                      "' is stale (checksum mismatch for " + m.path + ")");
    }
    return load_dataset(m);
  }

private:
  std::string path_;
  std::vector<DatasetManifest> manifests_;
  std::map<std::string, std::size_t> index_;
  std::set<std::string> stale_;
};

}  // namespace nlikit
