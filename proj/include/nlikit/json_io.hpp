#pragma once

// json_io.hpp — JSON (de)serialization for the domain types and the JSON
// Lines corpus format. Serialized keys come out sorted (nlohmann objects are
// ordered maps), so equal values always produce equal bytes.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/partition.hpp"
#include "nlikit/swap_plan.hpp"

namespace nlikit {

using json = nlohmann::json;

inline json instance_to_json(const NliInstance& inst) {
  json j;
  j["id"] = inst.id;
  j["premise"] = inst.premise;
  j["hypothesis"] = inst.hypothesis;
  if (inst.label) j["label"] = std::string(label_word(*inst.label));
  if (!inst.source.empty()) j["source"] = inst.source;
  if (!inst.meta.empty()) j["meta"] = inst.meta;
  return j;
}

inline NliInstance instance_from_json(const json& j) {
  NliInstance inst;
  inst.id = j.at("id").get<std::string>();
  inst.premise = j.at("premise").get<std::string>();
  inst.hypothesis = j.at("hypothesis").get<std::string>();
  if (j.contains("label") && !j.at("label").is_null()) {
    inst.label = parse_label(j.at("label").get<std::string>());
  }
  if (j.contains("source")) inst.source = j.at("source").get<std::string>();
  if (j.contains("meta")) {
    for (auto it = j.at("meta").begin(); it != j.at("meta").end(); ++it) {
      inst.meta[it.key()] = it.value().get<std::string>();
    }
  }
  return inst;
}

// One compact JSON object per line, LF-terminated.
inline void save_dataset_jsonl(const Dataset& d, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (const auto& inst : d.instances()) {
    out << instance_to_json(inst).dump() << '\n';
  }
}

inline Dataset load_dataset_jsonl(const std::string& path,
                                  const std::string& name, DatasetKind kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset file: " + path);
  Dataset d(name, kind);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": JSON parse failure: " + e.what());
    }
    try {
      d.add(instance_from_json(j));
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return d;
}

inline json partition_to_json(const Partition& p) {
  json j;
  j["init_ids"] = p.init_ids;
  j["potential_ids"] = p.potential_ids;
  j["seed"] = p.seed;
  return j;
}

inline Partition partition_from_json(const json& j) {
  Partition p;
  p.init_ids = j.at("init_ids").get<std::vector<std::string>>();
  p.potential_ids = j.at("potential_ids").get<std::vector<std::string>>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

// The plan document embeds full up-instances so the swap is auditable
// without the source corpus at hand.
inline json plan_to_json(const SwapPlan& plan) {
  json j;
  j["method"] = plan.method;
  j["seed"] = plan.seed;
  j["config_digest"] = plan.config_digest;
  j["down_ids"] = plan.down_ids;
  j["up"] = json::array();
  for (const auto& inst : plan.up) j["up"].push_back(instance_to_json(inst));
  return j;
}

inline SwapPlan plan_from_json(const json& j) {
  SwapPlan plan;
  plan.method = j.at("method").get<std::string>();
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.config_digest = j.at("config_digest").get<std::string>();
  plan.down_ids = j.at("down_ids").get<std::vector<std::string>>();
  for (const auto& item : j.at("up")) {
    plan.up.push_back(instance_from_json(item));
  }
  return plan;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << body;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw DataError(path + ": JSON parse failure: " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace nlikit
