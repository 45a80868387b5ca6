#pragma once

// run/config.hpp — the declarative run configuration: datasets, budget,
// selection method, generation strategy, seeds, provider and prompt
// settings. One JSON document drives the whole pipeline.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nlikit/budget.hpp"
#include "nlikit/digest.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/json_io.hpp"
#include "nlikit/modelgate/types.hpp"
#include "nlikit/select.hpp"

namespace nlikit::run {

struct ProviderConfig {
  std::string kind = "mock";  // "mock" or "openai"
  std::string model = "mock-base";
  bool supports_probabilities = true;
  bool supports_finetune = true;
  std::uint64_t mock_seed = 0;
  // OpenAI-compatible transport settings.
  std::string base_url;
  std::string path_prefix = "/v1";
  std::string api_key_env = "OPENAI_API_KEY";
};

struct GenerationConfig {
  std::string strategy;  // short_simple | long_simple | long_complex | domain_label
  std::size_t target_per_class = 0;
  std::uint64_t seed = 0;
  std::string unlabelled_dataset;  // registry name, for domain_label
  double temperature = 0.7;
  double validation_temperature = 0.7;
};

struct EvalConfig {
  double challenge_threshold = eval::kDefaultChallengeThreshold;
  std::size_t bootstrap_resamples = 1000;
  std::uint64_t bootstrap_seed = 0;
  std::string model = "finetuned";  // "finetuned" or "base"
};

struct RunConfig {
  std::string registry_path;
  std::string train_dataset;
  std::vector<std::string> eval_datasets;
  Budget budget = Budget::make(10000, 0.05);
  select::SelectionConfig selection;
  bool generation_plan = false;    // plans come from the validated pool
  std::string selection_model;     // empty = the provider's base model
  std::string selection_template;  // prompt template id for selection-time predictions
  std::optional<GenerationConfig> generation;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  ProviderConfig provider;
  gate::PromptConfig prompts;
  json finetune_params = json::object();
  EvalConfig eval;
  std::string export_template = "classify_plain";
  std::string system_name;  // report row label
  std::string asset_dir;    // empty = compiled-in default

  std::string raw;  // the exact config document, for digesting

  bool plan_from_generation() const { return generation_plan; }

  std::string digest() const { return sha256_hex(raw); }

  static RunConfig load(const std::string& path) {
    std::string text;
    try {
      text = read_text_file(path);
    } catch (const DataError& e) {
      throw ConfigError(e.what());  // a missing config file is a config error
    }
    return parse(text, path);
  }

  static RunConfig parse(const std::string& text, const std::string& origin) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(origin + ": config parse failure: " + e.what());
    }
    RunConfig cfg;
    cfg.raw = text;
    try {
      cfg.registry_path = j.at("registry").get<std::string>();
      cfg.train_dataset = j.at("train_dataset").get<std::string>();
      cfg.eval_datasets =
          j.value("eval_datasets", std::vector<std::string>{});

      const json& b = j.at("budget");
      const auto m = b.at("m").get<std::size_t>();
      if (b.contains("K")) {
        cfg.budget = Budget::with_cap(m, b.at("K").get<std::size_t>());
      } else {
        cfg.budget = Budget::make(m, b.value("k_fraction", 0.05));
      }

      if (j.contains("selection")) {
        const json& s = j.at("selection");
        const std::string method = s.value("method", std::string("random"));
        if (method == "generation") {
          // The plan comes from the validated synthetic pool instead of a
          // selection method.
          cfg.generation_plan = true;
          cfg.selection.method = select::Method::random;
        } else {
          cfg.selection.method = select::parse_method(method);
        }
        cfg.selection.down_strategy = select::parse_down_strategy(
            s.value("down_strategy", std::string("random")));
        if (s.contains("K")) {
          cfg.selection.k_override = s.at("K").get<std::size_t>();
        }
        cfg.selection.hypotheses_per_concat = s.value("H", 3);
        if (s.contains("dimensions")) {
          cfg.selection.dimensions.clear();
          for (const auto& d : s.at("dimensions")) {
            cfg.selection.dimensions.push_back(
                gate::parse_score_dim(d.get<std::string>()));
          }
        }
        cfg.selection_model = s.value("model", std::string());
        cfg.selection_template = s.value("template", std::string());
      }

      if (j.contains("generation")) {
        const json& g = j.at("generation");
        GenerationConfig gen;
        gen.strategy = g.at("strategy").get<std::string>();
        gen.target_per_class = g.value("target_per_class", std::size_t{0});
        gen.seed = g.value("seed", std::uint64_t{0});
        gen.unlabelled_dataset = g.value("unlabelled_dataset", std::string());
        gen.temperature = g.value("temperature", 0.7);
        gen.validation_temperature = g.value("validation_temperature", 0.7);
        cfg.generation = gen;
      }

      cfg.seeds = j.value("seeds", cfg.seeds);
      if (cfg.seeds.empty()) throw ConfigError("config: empty seeds list");

      if (j.contains("provider")) {
        const json& p = j.at("provider");
        cfg.provider.kind = p.value("kind", std::string("mock"));
        cfg.provider.model = p.value("model", std::string("mock-base"));
        cfg.provider.supports_probabilities =
            p.value("supports_probabilities", true);
        cfg.provider.supports_finetune = p.value("supports_finetune", true);
        cfg.provider.mock_seed = p.value("seed", std::uint64_t{0});
        cfg.provider.base_url = p.value("base_url", std::string());
        cfg.provider.path_prefix = p.value("path_prefix", std::string("/v1"));
        cfg.provider.api_key_env =
            p.value("api_key_env", std::string("OPENAI_API_KEY"));
        if (cfg.provider.kind != "mock" && cfg.provider.kind != "openai") {
          throw ConfigError("config: unknown provider kind '" +
                            cfg.provider.kind + "'");
        }
      }

      if (j.contains("prompts")) {
        const json& p = j.at("prompts");
        cfg.prompts.n_shots = p.value("n_shots", 3);
        if (cfg.prompts.n_shots < 0) {
          throw ConfigError("config: prompts.n_shots must be >= 0");
        }
        cfg.prompts.chain_of_thought = p.value("chain_of_thought", true);
        cfg.prompts.template_id = p.value("template", std::string());
        cfg.prompts.temperature = p.value("temperature", 0.0);
      }

      cfg.finetune_params = j.value("finetune", json::object());

      if (j.contains("eval")) {
        const json& e = j.at("eval");
        cfg.eval.challenge_threshold =
            e.value("challenge_threshold", cfg.eval.challenge_threshold);
        cfg.eval.bootstrap_resamples =
            e.value("bootstrap_resamples", cfg.eval.bootstrap_resamples);
        cfg.eval.bootstrap_seed =
            e.value("bootstrap_seed", cfg.eval.bootstrap_seed);
        cfg.eval.model = e.value("model", cfg.eval.model);
        if (cfg.eval.model != "finetuned" && cfg.eval.model != "base") {
          throw ConfigError("config: eval.model must be finetuned or base");
        }
      }

      cfg.export_template =
          j.value("export_template", std::string("classify_plain"));
      cfg.system_name = j.value("system", std::string());
      if (cfg.system_name.empty()) {
        cfg.system_name =
            cfg.generation_plan && cfg.generation
                ? cfg.generation->strategy
                : std::string(select::method_name(cfg.selection.method));
      }
      cfg.asset_dir = j.value("assets", std::string());
    } catch (const json::exception& e) {
      throw ConfigError(origin + ": " + e.what());
    }
    if (cfg.generation_plan && !cfg.generation) {
      throw ConfigError(origin +
                        ": selection.method 'generation' needs a generation "
                        "section");
    }
    return cfg;
  }

  std::uint64_t seed_at(std::size_t index) const {
    if (index >= seeds.size()) {
      throw ConfigError("seed index " + std::to_string(index) +
                        " out of range (config has " +
                        std::to_string(seeds.size()) + " seeds)");
    }
    return seeds[index];
  }

  std::string assets() const {
    return asset_dir.empty() ? std::string(NLIKIT_ASSET_DIR) : asset_dir;
  }
};

}  // namespace nlikit::run
