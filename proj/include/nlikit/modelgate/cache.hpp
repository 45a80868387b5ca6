#pragma once

// modelgate/cache.hpp — content-addressed response cache. Lookups hit an
// in-memory map; when a journal path is configured, entries are also
// persisted to an append-only JSON Lines journal and reloaded on startup.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "nlikit/errors.hpp"
#include "nlikit/modelgate/provider.hpp"
#include "nlikit/strings.hpp"

namespace nlikit::gate {

class ResponseCache {
public:
  // Empty path = memory-only cache.
  explicit ResponseCache(std::string journal_path = "")
      : journal_path_(std::move(journal_path)) {
    if (journal_path_.empty()) return;
    namespace fs = std::filesystem;
    fs::path p(journal_path_);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ifstream in(journal_path_, std::ios::binary);
    if (!in) return;  // fresh journal
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError(journal_path_ + ":" + std::to_string(lineno) +
                        ": corrupt cache journal: " + e.what());
      }
      ProviderResponse resp;
      resp.text = j.at("text").get<std::string>();
      if (j.contains("probs")) resp.label_probs = j.at("probs").get<Probs>();
      entries_[j.at("digest").get<std::string>()] = std::move(resp);
    }
  }

  std::optional<ProviderResponse> get(const std::string& digest) const {
    std::shared_lock lock(mu_);
    auto it = entries_.find(digest);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& digest, const ProviderResponse& resp) {
    std::unique_lock lock(mu_);
    auto [it, fresh] = entries_.emplace(digest, resp);
    if (!fresh || journal_path_.empty()) return;
    nlohmann::json j;
    j["digest"] = digest;
    j["text"] = resp.text;
    if (resp.label_probs) j["probs"] = *resp.label_probs;
    std::ofstream out(journal_path_, std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot append to cache journal: " + journal_path_);
    out << j.dump() << '\n';
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

private:
  std::string journal_path_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, ProviderResponse> entries_;
};

}  // namespace nlikit::gate
