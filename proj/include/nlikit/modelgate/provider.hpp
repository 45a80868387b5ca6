#pragma once

// modelgate/provider.hpp — the provider abstraction every adapter implements:
// text completion plus the fine-tune job lifecycle.

#include <optional>
#include <string>

#include "nlikit/entropy.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/modelgate/types.hpp"

namespace nlikit::gate {

// Retryable transport trouble (connection failures, 5xx).
class TransportError : public ProviderError {
public:
  using ProviderError::ProviderError;
};

// HTTP 429 and friends; retried with backoff before giving up.
class RateLimitError : public TransportError {
public:
  using TransportError::TransportError;
};

enum class RequestKind { classify, score, generate };

inline std::string_view request_kind_name(RequestKind k) {
  switch (k) {
    case RequestKind::classify: return "classify";
    case RequestKind::score: return "score";
    case RequestKind::generate: return "generate";
  }
  return "generate";
}

struct ProviderRequest {
  RequestKind kind = RequestKind::generate;
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  bool want_probs = false;
  std::string nonce;   // distinguishes votes/retries that share a prompt
  std::string digest;  // content address, filled by the gateway
};

struct ProviderResponse {
  std::string text;
  std::optional<Probs> label_probs;
};

struct FinetuneRequest {
  std::string training_file;    // local path of the exported file
  std::string training_digest;  // sha256 of its contents
  std::string base_model;
  json params = json::object();
};

class Provider {
public:
  virtual ~Provider() = default;
  virtual std::string id() const = 0;
  virtual ProviderResponse complete(const ProviderRequest& req) = 0;
  virtual FinetuneJob submit_finetune(const FinetuneRequest& req) = 0;
  virtual FinetuneJob poll_finetune(const FinetuneJob& job) = 0;
};

}  // namespace nlikit::gate
