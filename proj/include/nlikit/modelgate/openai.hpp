#pragma once

// modelgate/openai.hpp — HTTP adapter speaking the OpenAI-compatible chat
// completion wire protocol, which several hosted providers accept. Credentials
// come from an environment variable named per provider; nothing is read from
// disk.
//
// Class probabilities: when the provider returns top_logprobs for the first
// generated token, the likelihood of each label is taken from the best
// matching token (a token whose text is a prefix of the label word), then the
// three likelihoods are renormalized. Providers without logprobs simply yield
// records with probs absent.

#include <httplib.h>
#include <json.hpp>

#include <cctype>
#include <cstdlib>
#include <optional>
#include <string>

#include "nlikit/modelgate/provider.hpp"

namespace nlikit::gate {

struct OpenAiConfig {
  std::string base_url;             // e.g. "https://api.openai.com"
  std::string path_prefix = "/v1";  // API root
  std::string api_key_env = "OPENAI_API_KEY";
  std::string provider_id = "openai";
  int top_logprobs = 20;
  int timeout_seconds = 120;
};

class OpenAiProvider : public Provider {
public:
  explicit OpenAiProvider(OpenAiConfig cfg) : cfg_(std::move(cfg)) {
    if (const char* key = std::getenv(cfg_.api_key_env.c_str())) {
      api_key_ = key;
    }
  }

  std::string id() const override { return cfg_.provider_id; }

  ProviderResponse complete(const ProviderRequest& req) override {
    json body;
    body["model"] = req.model;
    body["messages"] = json::array(
        {json{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = req.temperature;
    if (req.want_probs) {
      body["logprobs"] = true;
      body["top_logprobs"] = cfg_.top_logprobs;
    }

    json reply = post_json("/chat/completions", body);
    ProviderResponse resp;
    try {
      const json& choice = reply.at("choices").at(0);
      resp.text = choice.at("message").at("content").get<std::string>();
      if (req.want_probs && choice.contains("logprobs") &&
          !choice.at("logprobs").is_null()) {
        resp.label_probs = probs_from_logprobs(choice.at("logprobs"));
      }
    } catch (const json::exception& e) {
      throw ProviderError("provider response shape unexpected: " +
                          std::string(e.what()));
    }
    return resp;
  }

  FinetuneJob submit_finetune(const FinetuneRequest& req) override {
    // 1) upload the training file, 2) create the job referencing it.
    const std::string contents = read_file(req.training_file);
    httplib::MultipartFormDataItems items = {
        {"purpose", "fine-tune", "", ""},
        {"file", contents, "training.jsonl", "application/jsonl"},
    };
    json file_reply = post_multipart("/files", items);
    std::string file_id;
    try {
      file_id = file_reply.at("id").get<std::string>();
    } catch (const json::exception&) {
      throw ProviderError("file upload reply missing id: " + file_reply.dump());
    }

    json body;
    body["training_file"] = file_id;
    body["model"] = req.base_model;
    if (!req.params.empty()) body["hyperparameters"] = req.params;
    json reply = post_json("/fine_tuning/jobs", body);

    FinetuneJob job;
    job.provider = cfg_.provider_id;
    job.training_digest = req.training_digest;
    job.params = req.params;
    fill_job(job, reply);
    return job;
  }

  FinetuneJob poll_finetune(const FinetuneJob& job) override {
    if (job_terminal(job.state)) return job;
    json reply = get_json("/fine_tuning/jobs/" + job.job_id);
    FinetuneJob next = job;
    fill_job(next, reply);
    return next;
  }

private:
  static std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open training file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  httplib::Client make_client() const {
    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);
    return client;
  }

  json handle_result(const httplib::Result& res, const std::string& where) {
    if (!res) {
      throw TransportError("transport failure for " + where + ": " +
                           httplib::to_string(res.error()));
    }
    if (res->status == 429) {
      throw RateLimitError("rate limited on " + where);
    }
    if (res->status >= 500) {
      throw TransportError("server error " + std::to_string(res->status) +
                           " on " + where);
    }
    if (res->status >= 300) {
      throw ProviderError("provider rejected " + where + " (" +
                          std::to_string(res->status) + "): " + res->body);
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProviderError("provider returned non-JSON body on " + where +
                          ": " + e.what());
    }
  }

  json post_json(const std::string& path, const json& body) {
    auto client = make_client();
    auto res = client.Post(cfg_.path_prefix + path, body.dump(),
                           "application/json");
    return handle_result(res, path);
  }

  json post_multipart(const std::string& path,
                      const httplib::MultipartFormDataItems& items) {
    auto client = make_client();
    auto res = client.Post(cfg_.path_prefix + path, items);
    return handle_result(res, path);
  }

  json get_json(const std::string& path) {
    auto client = make_client();
    auto res = client.Get(cfg_.path_prefix + path);
    return handle_result(res, path);
  }

  void fill_job(FinetuneJob& job, const json& reply) {
    try {
      job.job_id = reply.at("id").get<std::string>();
      const std::string status = reply.value("status", std::string("queued"));
      if (status == "succeeded") {
        job.state = JobState::succeeded;
        ModelHandle handle;
        handle.provider = cfg_.provider_id;
        handle.model = reply.value("fine_tuned_model", std::string());
        handle.role = "finetuned";
        handle.supports_probabilities = true;
        handle.supports_finetune = false;
        job.result = handle;
      } else if (status == "failed" || status == "cancelled") {
        job.state = JobState::failed;
        if (reply.contains("error") && !reply.at("error").is_null()) {
          job.error = reply.at("error").dump();
        } else {
          job.error = status;
        }
      } else if (status == "running") {
        job.state = JobState::running;
      } else {
        job.state = JobState::submitted;  // queued / validating_files
      }
    } catch (const json::exception& e) {
      throw ProviderError("fine-tune reply shape unexpected: " +
                          std::string(e.what()));
    }
  }

  // Best logprob among tokens whose text prefixes the label word, per label;
  // exponentiated and renormalized.
  std::optional<Probs> probs_from_logprobs(const json& logprobs) const {
    if (!logprobs.contains("content") || logprobs.at("content").empty()) {
      return std::nullopt;
    }
    const json& first = logprobs.at("content").at(0);
    if (!first.contains("top_logprobs")) return std::nullopt;

    std::array<double, 3> best{};
    std::array<bool, 3> found{};
    for (const auto& item : first.at("top_logprobs")) {
      const std::string token =
          to_lower(trim(item.at("token").get<std::string>()));
      if (token.empty()) continue;
      const double lp = item.at("logprob").get<double>();
      for (Label l : kLabels) {
        const std::string word(label_word(l));
        if (token.size() <= word.size() &&
            word.compare(0, token.size(), token) == 0) {
          const auto i = static_cast<std::size_t>(label_index(l));
          if (!found[i] || lp > best[i]) {
            best[i] = lp;
            found[i] = true;
          }
        }
      }
    }
    if (!found[0] && !found[1] && !found[2]) return std::nullopt;
    Probs probs{0.0, 0.0, 0.0};
    double sum = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      if (found[i]) {
        probs[i] = std::exp(best[i]);
        sum += probs[i];
      }
    }
    if (sum <= 0.0) return std::nullopt;
    for (double& p : probs) p /= sum;
    return probs;
  }

  OpenAiConfig cfg_;
  std::string api_key_;
};

}  // namespace nlikit::gate
