#pragma once

// modelgate/gateway.hpp — the uniform front door to model providers:
// few-shot classification, instance scoring, free-text generation and the
// fine-tune lifecycle, with bounded retries, bounded concurrency and a
// content-addressed response cache.

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include "nlikit/digest.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/modelgate/cache.hpp"
#include "nlikit/modelgate/provider.hpp"
#include "nlikit/modelgate/templates.hpp"
#include "nlikit/modelgate/types.hpp"

namespace nlikit::gate {

enum class ScoreDim { correctness, difficulty, plausibility, fluency };

inline std::string_view score_dim_name(ScoreDim d) {
  switch (d) {
    case ScoreDim::correctness: return "correctness";
    case ScoreDim::difficulty: return "difficulty";
    case ScoreDim::plausibility: return "plausibility";
    case ScoreDim::fluency: return "fluency";
  }
  return "difficulty";
}

inline ScoreDim parse_score_dim(std::string_view s) {
  if (s == "correctness" || s == "C") return ScoreDim::correctness;
  if (s == "difficulty" || s == "D") return ScoreDim::difficulty;
  if (s == "plausibility" || s == "P") return ScoreDim::plausibility;
  if (s == "fluency" || s == "F") return ScoreDim::fluency;
  throw ConfigError("unknown score dimension: '" + std::string(s) + "'");
}

// First integer in the text, accepted only within [1, 10].
inline std::optional<int> parse_score_value(std::string_view raw) {
  std::size_t i = 0;
  while (i < raw.size() && !std::isdigit(static_cast<unsigned char>(raw[i]))) {
    ++i;
  }
  if (i == raw.size()) return std::nullopt;
  int value = 0;
  while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) {
    value = value * 10 + (raw[i] - '0');
    if (value > 99) return std::nullopt;
    ++i;
  }
  if (value < 1 || value > 10) return std::nullopt;
  return value;
}

struct ScoreResult {
  std::map<ScoreDim, int> values;
  bool unscorable = false;
  std::string note;

  // Combined score: the sum of the configured dimensions.
  int total() const {
    int sum = 0;
    for (const auto& [dim, v] : values) sum += v;
    return sum;
  }
};

struct GatewayOptions {
  std::string cache_journal;  // empty = in-memory cache only
  int transport_retries = 3;
  int score_retries = 2;
  std::chrono::milliseconds backoff_base{1000};
  int max_in_flight = 4;
};

class Gateway {
public:
  Gateway(std::shared_ptr<Provider> provider, TemplateStore templates,
          GatewayOptions options = {})
      : provider_(std::move(provider)),
        templates_(std::move(templates)),
        options_(options),
        cache_(options.cache_journal),
        in_flight_(options.max_in_flight > 0 ? options.max_in_flight : 1) {}

  const TemplateStore& templates() const { return templates_; }
  std::uint64_t transport_count() const { return transport_count_.load(); }
  std::uint64_t cache_hit_count() const { return cache_hits_.load(); }

  // Content address of a request: model, prompt, full prompt config and the
  // nonce all participate, so a changed temperature or a fresh vote nonce is
  // a distinct cache entry.
  std::string request_digest(const ProviderRequest& req,
                             const PromptConfig& cfg) const {
    json j;
    j["kind"] = std::string(request_kind_name(req.kind));
    j["model"] = req.model;
    j["prompt"] = req.prompt;
    j["temperature"] = req.temperature;
    j["want_probs"] = req.want_probs;
    j["cfg"] = cfg.to_json();
    j["nonce"] = req.nonce;
    return sha256_hex(j.dump());
  }

  PredictionRecord classify(const ModelHandle& handle, const NliInstance& inst,
                            const PromptConfig& cfg,
                            const std::string& nonce = "") {
    const std::string tmpl = resolve_classify_template(cfg);
    const std::string prompt = templates_.render(
        tmpl, {{"premise", inst.premise}, {"hypothesis", inst.hypothesis}});
    ProviderRequest req;
    req.kind = RequestKind::classify;
    req.model = handle.model;
    req.prompt = prompt;
    req.temperature = cfg.temperature;
    req.want_probs = handle.supports_probabilities;
    req.nonce = nonce;
    req.digest = request_digest(req, cfg);
    ProviderResponse resp = cached_complete(req);

    PredictionRecord rec;
    rec.instance_id = inst.id;
    rec.decoded = decode_label(resp.text);
    rec.probs = resp.label_probs;
    rec.raw = resp.text;
    rec.prompt_hash = req.digest;
    rec.validate();
    return rec;
  }

  // One prompt per requested dimension; a score that fails to parse as an
  // integer in [1,10] is retried (with a retry nonce so the cache cannot
  // replay the bad answer), then the instance is marked unscorable.
  ScoreResult score_instance(const ModelHandle& handle,
                             const NliInstance& inst,
                             const std::vector<ScoreDim>& dimensions,
                             const PromptConfig& cfg = PromptConfig{
                                 .n_shots = 0,
                                 .chain_of_thought = false,
                                 .template_id = "",
                                 .temperature = 0.0}) {
    if (dimensions.empty()) {
      throw ConfigError("score_instance: empty dimension set");
    }
    ScoreResult result;
    for (ScoreDim dim : dimensions) {
      const std::string tmpl = "score_" + std::string(score_dim_name(dim));
      const std::string prompt = templates_.render(
          tmpl,
          {{"premise", inst.premise},
           {"hypothesis", inst.hypothesis},
           {"label",
            inst.label ? std::string(label_word(*inst.label)) : "unknown"}});
      std::optional<int> value;
      for (int attempt = 0; attempt <= options_.score_retries; ++attempt) {
        ProviderRequest req;
        req.kind = RequestKind::score;
        req.model = handle.model;
        req.prompt = prompt;
        req.temperature = cfg.temperature;
        req.nonce = attempt == 0 ? "" : "retry:" + std::to_string(attempt);
        req.digest = request_digest(req, cfg);
        value = parse_score_value(cached_complete(req).text);
        if (value) break;
      }
      if (!value) {
        result.unscorable = true;
        result.note = "unparseable " + std::string(score_dim_name(dim)) +
                      " score after " +
                      std::to_string(options_.score_retries) + " retries";
        return result;
      }
      result.values[dim] = *value;
    }
    return result;
  }

  std::string generate(const ModelHandle& handle, const std::string& prompt,
                       const PromptConfig& cfg, const std::string& nonce = "") {
    ProviderRequest req;
    req.kind = RequestKind::generate;
    req.model = handle.model;
    req.prompt = prompt;
    req.temperature = cfg.temperature;
    req.nonce = nonce;
    req.digest = request_digest(req, cfg);
    return cached_complete(req).text;
  }

  // Idempotent by training-file digest: resubmitting the same bytes returns
  // the already-known job.
  FinetuneJob submit_finetune(const ModelHandle& handle,
                              const std::string& training_file,
                              const json& params,
                              const std::string& expected_digest = "") {
    if (!handle.supports_finetune) {
      throw CapabilityError("model '" + handle.model +
                            "' does not support fine-tuning");
    }
    const std::string digest = sha256_file(training_file);
    if (!expected_digest.empty() && digest != expected_digest) {
      throw DataError("fine-tune training file digest mismatch for " +
                      training_file);
    }
    {
      std::lock_guard<std::mutex> lock(jobs_mu_);
      auto it = jobs_.find(digest);
      if (it != jobs_.end()) return it->second;
    }
    FinetuneRequest req;
    req.training_file = training_file;
    req.training_digest = digest;
    req.base_model = handle.model;
    req.params = params;
    FinetuneJob job = provider_->submit_finetune(req);
    std::lock_guard<std::mutex> lock(jobs_mu_);
    jobs_[digest] = job;
    return job;
  }

  // Monotone in job state; a terminal job is returned as-is with no
  // transport.
  FinetuneJob poll_finetune(const FinetuneJob& job) {
    if (job_terminal(job.state)) return job;
    FinetuneJob next = provider_->poll_finetune(job);
    if (job_state_rank(next.state) < job_state_rank(job.state)) {
      next.state = job.state;
    }
    std::lock_guard<std::mutex> lock(jobs_mu_);
    jobs_[job.training_digest] = next;
    return next;
  }

private:
  std::string resolve_classify_template(const PromptConfig& cfg) const {
    if (!cfg.template_id.empty()) {
      if (!templates_.has(cfg.template_id)) {
        throw ConfigError("template id does not resolve: '" + cfg.template_id +
                          "'");
      }
      return cfg.template_id;
    }
    return cfg.n_shots > 0 ? "classify_fewshot" : "classify_plain";
  }

  ProviderResponse cached_complete(const ProviderRequest& req) {
    if (auto hit = cache_.get(req.digest)) {
      cache_hits_++;
      return *hit;
    }
    for (int attempt = 0;; ++attempt) {
      try {
        {
          in_flight_.acquire();
          struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
          } release{in_flight_};
          transport_count_++;
          ProviderResponse resp = provider_->complete(req);
          cache_.put(req.digest, resp);
        }
        // Return the stored entry: equal digests yield identical bytes even
        // when two callers raced on the same request.
        return *cache_.get(req.digest);
      } catch (const TransportError& e) {
        if (attempt >= options_.transport_retries) {
          throw ProviderError("gateway: transport failed after " +
                              std::to_string(options_.transport_retries) +
                              " retries: " + e.what());
        }
        std::this_thread::sleep_for(options_.backoff_base * (1LL << attempt));
      }
    }
  }

  std::shared_ptr<Provider> provider_;
  TemplateStore templates_;
  GatewayOptions options_;
  ResponseCache cache_;
  std::counting_semaphore<> in_flight_;
  std::atomic<std::uint64_t> transport_count_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::mutex jobs_mu_;
  std::map<std::string, FinetuneJob> jobs_;
};

}  // namespace nlikit::gate
