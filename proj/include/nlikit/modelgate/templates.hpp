#pragma once

// modelgate/templates.hpp — prompt template store. Templates are plain text
// assets, one file per template id, with {placeholder} substitution. Prompt
// wording is data, never hard-coded into operations.

#include <filesystem>
#include <map>
#include <string>

#include "nlikit/errors.hpp"
#include "nlikit/json_io.hpp"

namespace nlikit::gate {

class TemplateStore {
public:
  TemplateStore() = default;

  // Loads every <id>.txt under dir.
  static TemplateStore load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    TemplateStore store;
    if (!fs::is_directory(dir)) {
      throw ConfigError("template directory not found: " + dir);
    }
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".txt") {
        continue;
      }
      store.set(entry.path().stem().string(),
                read_text_file(entry.path().string()));
    }
    return store;
  }

  void set(const std::string& id, std::string body) {
    templates_[id] = std::move(body);
  }

  bool has(const std::string& id) const { return templates_.count(id) > 0; }

  const std::string& raw(const std::string& id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) {
      throw ConfigError("template id does not resolve: '" + id + "'");
    }
    return it->second;
  }

  std::string render(const std::string& id,
                     const std::map<std::string, std::string>& values) const {
    std::string out = raw(id);
    for (const auto& [key, value] : values) {
      const std::string slot = "{" + key + "}";
      std::size_t pos = 0;
      while ((pos = out.find(slot, pos)) != std::string::npos) {
        out.replace(pos, slot.size(), value);
        pos += value.size();
      }
    }
    return out;
  }

private:
  std::map<std::string, std::string> templates_;
};

}  // namespace nlikit::gate
