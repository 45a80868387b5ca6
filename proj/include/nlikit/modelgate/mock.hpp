#pragma once

// modelgate/mock.hpp — deterministic offline provider. Unscripted responses
// are a pure function of (seed, request digest), so two runs with equal
// seeds reproduce identical records across the whole pipeline. Scripts let
// tests pin exact responses or inject failures.

#include <array>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "nlikit/modelgate/provider.hpp"
#include "nlikit/rng.hpp"

namespace nlikit::gate {

struct MockScript {
  std::optional<RequestKind> kind;
  std::string prompt_contains;  // empty matches every prompt
  std::string response;
  std::optional<Probs> probs;
  int times = -1;  // -1 = unlimited
  bool fail_transport = false;
};

class MockProvider : public Provider {
public:
  explicit MockProvider(std::uint64_t seed, bool with_probs = true)
      : seed_(seed), with_probs_(with_probs) {}

  std::string id() const override { return "mock"; }

  void add_script(MockScript script) {
    std::lock_guard<std::mutex> lock(mu_);
    scripts_.push_back(std::move(script));
  }

  void fail_next_finetune(const std::string& reason) {
    std::lock_guard<std::mutex> lock(mu_);
    finetune_fail_reason_ = reason;
  }

  ProviderResponse complete(const ProviderRequest& req) override {
    std::lock_guard<std::mutex> lock(mu_);
    for (auto& script : scripts_) {
      if (script.times == 0) continue;
      if (script.kind && *script.kind != req.kind) continue;
      if (!script.prompt_contains.empty() &&
          req.prompt.find(script.prompt_contains) == std::string::npos) {
        continue;
      }
      if (script.times > 0) script.times--;
      if (script.fail_transport) {
        throw TransportError("scripted transport failure");
      }
      ProviderResponse resp;
      resp.text = script.response;
      if (script.probs && req.want_probs) resp.label_probs = script.probs;
      return resp;
    }
    return synthesize(req);
  }

  FinetuneJob submit_finetune(const FinetuneRequest& req) override {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = jobs_by_digest_.find(req.training_digest);
    if (it != jobs_by_digest_.end()) return it->second;

    FinetuneJob job;
    job.job_id = "mockft-" + req.training_digest.substr(0, 12);
    job.provider = "mock";
    job.training_digest = req.training_digest;
    job.state = JobState::submitted;
    job.params = req.params;
    jobs_by_digest_[req.training_digest] = job;
    return job;
  }

  // submitted -> running -> succeeded after two polls, unless a failure was
  // scripted.
  FinetuneJob poll_finetune(const FinetuneJob& job) override {
    std::lock_guard<std::mutex> lock(mu_);
    if (job_terminal(job.state)) return job;
    FinetuneJob next = job;
    if (!finetune_fail_reason_.empty()) {
      next.state = JobState::failed;
      next.error = finetune_fail_reason_;
    } else if (job.state == JobState::submitted) {
      next.state = JobState::running;
    } else {
      next.state = JobState::succeeded;
      ModelHandle handle;
      handle.provider = "mock";
      handle.model = "mock-ft-" + job.training_digest.substr(0, 12);
      handle.role = "finetuned";
      handle.supports_probabilities = with_probs_;
      handle.supports_finetune = false;
      next.result = handle;
    }
    jobs_by_digest_[job.training_digest] = next;
    return next;
  }

private:
  // Hash stream seeded by (provider seed, request digest).
  struct HashStream {
    std::uint64_t state;
    std::uint64_t next() { return state = splitmix64(state); }
    double unit() {
      return static_cast<double>(next() >> 11) * 0x1.0p-53 + 1e-9;
    }
  };

  ProviderResponse synthesize(const ProviderRequest& req) const {
    HashStream h{splitmix64(seed_ ^ hash64(req.digest))};
    switch (req.kind) {
      case RequestKind::classify: return synth_classify(h, req);
      case RequestKind::score: return synth_score(h);
      case RequestKind::generate: return synth_generate(h, req);
    }
    return {};
  }

  ProviderResponse synth_classify(HashStream& h,
                                  const ProviderRequest& req) const {
    ProviderResponse resp;
    Label decoded;
    if (with_probs_ && req.want_probs) {
      Probs p{h.unit(), h.unit(), h.unit()};
      double sum = p[0] + p[1] + p[2];
      for (double& v : p) v /= sum;
      int best = 0;
      for (int i = 1; i < 3; ++i) {
        if (p[i] > p[best]) best = i;
      }
      decoded = kLabels[static_cast<std::size_t>(best)];
      resp.label_probs = p;
    } else {
      decoded = kLabels[h.next() % 3];
    }
    resp.text = "Considering the relationship between the two sentences, "
                "the answer is " +
                std::string(label_word(decoded)) + ".";
    return resp;
  }

  ProviderResponse synth_score(HashStream& h) const {
    ProviderResponse resp;
    resp.text = std::to_string(1 + h.next() % 10);
    return resp;
  }

  ProviderResponse synth_generate(HashStream& h,
                                  const ProviderRequest& req) const {
    int sentences = 1;
    if (req.prompt.find("four sentences") != std::string::npos) {
      sentences = 4;
    } else if (req.prompt.find("two sentence") != std::string::npos) {
      sentences = 2;
    }
    std::ostringstream out;
    for (int i = 0; i < sentences; ++i) {
      if (i > 0) out << ' ';
      out << sentence(h);
    }
    ProviderResponse resp;
    resp.text = out.str();
    return resp;
  }

  // Clean declarative sentences: no filter words, terminal periods, no
  // unpunctuated joins.
  std::string sentence(HashStream& h) const {
    static const std::array<const char*, 10> adjectives = {
        "quiet", "old",  "bright", "narrow", "busy",
        "calm",  "distant", "modern", "famous", "small"};
    static const std::array<const char*, 10> nouns = {
        "engineer", "bridge",  "garden",  "musician", "train",
        "harbor",   "library", "mountain", "teacher",  "river"};
    static const std::array<const char*, 10> verbs = {
        "describes", "crosses",  "watches", "repairs", "visits",
        "paints",    "measures", "follows", "records", "admires"};
    std::ostringstream s;
    s << "The " << adjectives[h.next() % adjectives.size()] << ' '
      << nouns[h.next() % nouns.size()] << ' '
      << verbs[h.next() % verbs.size()] << " the "
      << adjectives[h.next() % adjectives.size()] << ' '
      << nouns[h.next() % nouns.size()] << '.';
    return s.str();
  }

  std::uint64_t seed_;
  bool with_probs_;
  mutable std::mutex mu_;
  std::vector<MockScript> scripts_;
  std::unordered_map<std::string, FinetuneJob> jobs_by_digest_;
  std::string finetune_fail_reason_;
};

}  // namespace nlikit::gate
