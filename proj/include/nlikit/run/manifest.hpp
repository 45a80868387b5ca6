#pragma once

// run/manifest.hpp — the run manifest: one record per pipeline stage with
// input digests, output digests, wall time and status. A stage re-executes
// only when an input digest changed; otherwise its outputs are reused after
// digest verification.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nlikit/digest.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/json_io.hpp"
#include "nlikit/modelgate/types.hpp"

namespace nlikit::run {

struct StageRecord {
  std::string stage;
  std::map<std::string, std::string> inputs;   // label -> digest
  std::map<std::string, std::string> outputs;  // relative path -> digest
  double wall_seconds = 0.0;
  std::string status;  // "succeeded" or "failed"
  std::uint64_t cache_hits = 0;

  json to_json() const {
    json j;
    j["stage"] = stage;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["wall_seconds"] = wall_seconds;
    j["status"] = status;
    j["cache_hits"] = cache_hits;
    return j;
  }

  static StageRecord from_json(const json& j) {
    StageRecord r;
    r.stage = j.at("stage").get<std::string>();
    r.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    r.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    r.wall_seconds = j.value("wall_seconds", 0.0);
    r.status = j.value("status", std::string());
    r.cache_hits = j.value("cache_hits", std::uint64_t{0});
    return r;
  }
};

class RunManifest {
public:
  RunManifest() = default;
  RunManifest(std::string run_id, std::string config_digest)
      : run_id_(std::move(run_id)), config_digest_(std::move(config_digest)) {}

  static RunManifest load(const std::string& path) {
    json j = read_json_file(path);
    RunManifest m;
    m.run_id_ = j.at("run_id").get<std::string>();
    m.config_digest_ = j.at("config_digest").get<std::string>();
    for (const auto& item : j.at("stages")) {
      StageRecord r = StageRecord::from_json(item);
      m.order_.push_back(r.stage);
      m.stages_[m.order_.back()] = std::move(r);
    }
    if (j.contains("jobs")) {
      for (auto it = j.at("jobs").begin(); it != j.at("jobs").end(); ++it) {
        m.jobs_[it.key()] = gate::FinetuneJob::from_json(it.value());
      }
    }
    m.provider_usage_ =
        j.value("provider_usage", std::map<std::string, std::uint64_t>{});
    return m;
  }

  void save(const std::string& path) const {
    json j;
    j["run_id"] = run_id_;
    j["config_digest"] = config_digest_;
    j["stages"] = json::array();
    for (const auto& name : order_) {
      j["stages"].push_back(stages_.at(name).to_json());
    }
    json jobs = json::object();
    for (const auto& [key, job] : jobs_) jobs[key] = job.to_json();
    j["jobs"] = jobs;
    j["provider_usage"] = provider_usage_;
    write_json_file(path, j);
  }

  const std::string& run_id() const { return run_id_; }
  const std::string& config_digest() const { return config_digest_; }

  const StageRecord* find(const std::string& stage) const {
    auto it = stages_.find(stage);
    return it == stages_.end() ? nullptr : &it->second;
  }

  void upsert(StageRecord record) {
    if (!stages_.count(record.stage)) order_.push_back(record.stage);
    stages_[record.stage] = std::move(record);
  }

  const std::vector<std::string>& stage_order() const { return order_; }
  const std::map<std::string, StageRecord>& stages() const { return stages_; }

  void record_job(const std::string& key, const gate::FinetuneJob& job) {
    jobs_[key] = job;
  }
  const gate::FinetuneJob* find_job(const std::string& key) const {
    auto it = jobs_.find(key);
    return it == jobs_.end() ? nullptr : &it->second;
  }

  void add_usage(const std::string& counter, std::uint64_t delta) {
    provider_usage_[counter] += delta;
  }
  const std::map<std::string, std::uint64_t>& provider_usage() const {
    return provider_usage_;
  }

private:
  std::string run_id_;
  std::string config_digest_;
  std::vector<std::string> order_;
  std::map<std::string, StageRecord> stages_;
  std::map<std::string, gate::FinetuneJob> jobs_;
  std::map<std::string, std::uint64_t> provider_usage_;
};

// Runs `body` unless the previous record for this stage has identical input
// digests and every recorded output still matches its digest on disk; in
// that case the stage is skipped and its cache-hit counter bumped. `body`
// returns the list of run-dir-relative output paths it wrote.
inline bool run_stage(RunManifest& manifest, const std::string& run_dir,
                      const std::string& stage,
                      const std::map<std::string, std::string>& inputs,
                      const std::function<std::vector<std::string>()>& body) {
  const StageRecord* prev = manifest.find(stage);
  if (prev != nullptr && prev->status == "succeeded" &&
      prev->inputs == inputs) {
    bool outputs_intact = true;
    for (const auto& [rel, digest] : prev->outputs) {
      const std::string path = run_dir + "/" + rel;
      if (!std::filesystem::exists(path) || sha256_file(path) != digest) {
        outputs_intact = false;
        break;
      }
    }
    if (outputs_intact) {
      StageRecord hit = *prev;
      hit.cache_hits++;
      manifest.upsert(std::move(hit));
      return false;  // not re-executed
    }
  }

  StageRecord record;
  record.stage = stage;
  record.inputs = inputs;
  const auto start = std::chrono::steady_clock::now();
  try {
    for (const std::string& rel : body()) {
      record.outputs[rel] = sha256_file(run_dir + "/" + rel);
    }
  } catch (...) {
    record.status = "failed";
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    manifest.upsert(std::move(record));
    throw;
  }
  record.status = "succeeded";
  record.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  manifest.upsert(std::move(record));
  return true;
}

}  // namespace nlikit::run
