#pragma once

// modelgate/types.hpp — handles, prompt configuration, prediction records
// and fine-tune job state shared across provider adapters.

#include <json.hpp>

#include <optional>
#include <string>

#include "nlikit/entropy.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/labels.hpp"
#include "nlikit/strings.hpp"

namespace nlikit::gate {

using json = nlohmann::json;

struct ModelHandle {
  std::string provider;
  std::string model;
  std::string role = "base";  // "base" (M) or "finetuned" (M_base)
  bool supports_probabilities = false;
  bool supports_finetune = false;
};

struct PromptConfig {
  int n_shots = 3;
  bool chain_of_thought = true;
  std::string template_id;  // empty resolves to the role default
  double temperature = 0.0;

  json to_json() const {
    json j;
    j["n_shots"] = n_shots;
    j["chain_of_thought"] = chain_of_thought;
    j["template_id"] = template_id;
    j["temperature"] = temperature;
    return j;
  }
};

// Decoding rule: the first case-insensitive occurrence of a label word in the
// raw text wins; no occurrence means the prediction is invalid. Total: every
// text maps to exactly one of the three labels or the invalid marker.
inline std::optional<Label> decode_label(std::string_view raw) {
  std::size_t best_pos = std::string_view::npos;
  std::optional<Label> best;
  for (Label l : kLabels) {
    const std::size_t pos = find_ci(raw, label_word(l));
    if (pos < best_pos) {
      best_pos = pos;
      best = l;
    }
  }
  return best;
}

struct PredictionRecord {
  std::string instance_id;
  std::optional<Label> decoded;  // nullopt = invalid marker
  std::optional<Probs> probs;
  std::string raw;
  std::string prompt_hash;

  void validate() const {
    if (probs) validate_probs(*probs);
  }
};

inline json prediction_to_json(const PredictionRecord& r) {
  json j;
  j["id"] = r.instance_id;
  j["decoded"] = r.decoded ? std::string(label_word(*r.decoded)) : "invalid";
  if (r.probs) j["probs"] = *r.probs;
  j["raw"] = r.raw;
  j["prompt_hash"] = r.prompt_hash;
  return j;
}

inline PredictionRecord prediction_from_json(const json& j) {
  PredictionRecord r;
  r.instance_id = j.at("id").get<std::string>();
  const std::string decoded = j.at("decoded").get<std::string>();
  if (decoded != "invalid") r.decoded = parse_label(decoded);
  if (j.contains("probs")) r.probs = j.at("probs").get<Probs>();
  r.raw = j.at("raw").get<std::string>();
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.validate();
  return r;
}

enum class JobState { submitted, running, succeeded, failed };

inline std::string_view job_state_name(JobState s) {
  switch (s) {
    case JobState::submitted: return "submitted";
    case JobState::running: return "running";
    case JobState::succeeded: return "succeeded";
    case JobState::failed: return "failed";
  }
  return "submitted";
}

inline JobState parse_job_state(std::string_view s) {
  if (s == "submitted") return JobState::submitted;
  if (s == "running") return JobState::running;
  if (s == "succeeded") return JobState::succeeded;
  if (s == "failed") return JobState::failed;
  throw DataError("unknown job state: '" + std::string(s) + "'");
}

inline bool job_terminal(JobState s) {
  return s == JobState::succeeded || s == JobState::failed;
}

// submitted -> running -> {succeeded, failed}; no other moves.
inline int job_state_rank(JobState s) {
  switch (s) {
    case JobState::submitted: return 0;
    case JobState::running: return 1;
    case JobState::succeeded:
    case JobState::failed: return 2;
  }
  return 0;
}

struct FinetuneJob {
  std::string job_id;
  std::string provider;
  std::string training_digest;
  JobState state = JobState::submitted;
  json params = json::object();  // provider passthroughs, never interpreted
  std::optional<ModelHandle> result;
  std::string error;

  json to_json() const {
    json j;
    j["job_id"] = job_id;
    j["provider"] = provider;
    j["training_digest"] = training_digest;
    j["state"] = std::string(job_state_name(state));
    j["params"] = params;
    if (result) {
      json h;
      h["provider"] = result->provider;
      h["model"] = result->model;
      h["role"] = result->role;
      h["supports_probabilities"] = result->supports_probabilities;
      h["supports_finetune"] = result->supports_finetune;
      j["result"] = h;
    }
    if (!error.empty()) j["error"] = error;
    return j;
  }

  static FinetuneJob from_json(const json& j) {
    FinetuneJob job;
    job.job_id = j.at("job_id").get<std::string>();
    job.provider = j.at("provider").get<std::string>();
    job.training_digest = j.at("training_digest").get<std::string>();
    job.state = parse_job_state(j.at("state").get<std::string>());
    job.params = j.value("params", json::object());
    if (j.contains("result")) {
      const json& h = j.at("result");
      ModelHandle handle;
      handle.provider = h.at("provider").get<std::string>();
      handle.model = h.at("model").get<std::string>();
      handle.role = h.value("role", std::string("finetuned"));
      handle.supports_probabilities = h.value("supports_probabilities", false);
      handle.supports_finetune = h.value("supports_finetune", false);
      job.result = handle;
    }
    job.error = j.value("error", std::string());
    return job;
  }
};

}  // namespace nlikit::gate
