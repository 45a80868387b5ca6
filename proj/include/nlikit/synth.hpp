#pragma once

// synth.hpp — synthetic NLI data: zero-shot premise/hypothesis generation
// across the domain catalog, labelling of unlabelled corpora, and the
// unanimity ("all eight votes agree") validation gate.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlikit/budget.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/filter.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/json_io.hpp"
#include "nlikit/modelgate/gateway.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/select.hpp"
#include "nlikit/swap_plan.hpp"

namespace nlikit::synth {

using gate::Gateway;
using gate::ModelHandle;
using gate::PromptConfig;

inline constexpr std::size_t kDomainCount = 51;
inline constexpr int kUnanimityVotes = 8;

enum class PremiseLength { one_sentence, four_sentences };

inline std::string_view premise_directive(PremiseLength l) {
  return l == PremiseLength::one_sentence
             ? "Provide a single sentence"
             : "Provide an output with four sentences";
}

// The ordered domain-phrase catalog; ships as a text asset, one phrase per
// line.
class DomainCatalog {
public:
  static DomainCatalog load(const std::string& path) {
    DomainCatalog cat;
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (trim(line).empty()) continue;
      cat.domains_.push_back(line);
    }
    cat.validate();
    return cat;
  }

  static DomainCatalog from_list(std::vector<std::string> domains) {
    DomainCatalog cat;
    cat.domains_ = std::move(domains);
    cat.validate();
    return cat;
  }

  void validate() const {
    if (domains_.size() != kDomainCount) {
      throw DataError("domain catalog has " + std::to_string(domains_.size()) +
                      " entries, expected " + std::to_string(kDomainCount));
    }
    for (const auto& d : domains_) {
      if (trim(d).empty()) throw DataError("domain catalog has empty entry");
    }
  }

  const std::vector<std::string>& domains() const { return domains_; }
  std::size_t size() const { return domains_.size(); }
  const std::string& at(std::size_t i) const {
    return domains_[i % domains_.size()];
  }

private:
  std::vector<std::string> domains_;
};

struct GenStrategy {
  std::string name;
  PremiseLength length = PremiseLength::one_sentence;
  // Hypothesis prompt template ids per class; two per class for the complex
  // strategy, one otherwise.
  std::array<std::vector<std::string>, 3> hypothesis_templates;

  void validate() const {
    const std::size_t per_class = name == "long_complex" ? 2 : 1;
    for (Label c : kLabels) {
      const auto& ts = hypothesis_templates[static_cast<std::size_t>(
          label_index(c))];
      if (ts.size() != per_class) {
        throw ConfigError("strategy '" + name + "' needs " +
                          std::to_string(per_class) + " templates for class '" +
                          std::string(label_word(c)) + "', has " +
                          std::to_string(ts.size()));
      }
    }
  }

  static GenStrategy standard(const std::string& name) {
    GenStrategy s;
    s.name = name;
    if (name == "short_simple") {
      s.length = PremiseLength::one_sentence;
    } else if (name == "long_simple" || name == "long_complex") {
      s.length = PremiseLength::four_sentences;
    } else {
      throw ConfigError("unknown generation strategy: '" + name +
                        "' (domain_label corpora go through label_unlabelled)");
    }
    for (Label c : kLabels) {
      const auto ci = static_cast<std::size_t>(label_index(c));
      const std::string word(label_word(c));
      if (name == "long_complex") {
        s.hypothesis_templates[ci] = {"gen_complex_" + word + "_1",
                                      "gen_complex_" + word + "_2"};
      } else {
        s.hypothesis_templates[ci] = {"gen_hypothesis_" + word};
      }
    }
    s.validate();
    return s;
  }
};

struct GenerationBatch {
  std::vector<NliInstance> instances;  // post-filter
  FilterReport filter_report;
  std::size_t skipped = 0;  // provider failures absorbed
  bool partial = false;     // aborted after exhausting the skip budget
};

// Zero-shot generation: domains cycle round-robin from a seeded start; each
// draw first asks for a premise (directive + domain), then for a hypothesis
// conditioned on the prompted class. Raw output passes the quality filters
// before return. Provider failures skip the draw until the skip budget (10%
// of requested draws) runs out, at which point the batch aborts as partial.
inline GenerationBatch generate_batch(Gateway& gateway,
                                      const ModelHandle& handle,
                                      const GenStrategy& strategy,
                                      const DomainCatalog& domains,
                                      std::size_t target_per_class,
                                      std::uint64_t seed,
                                      const FilterRules& rules,
                                      const PromptConfig& cfg = {}) {
  strategy.validate();
  if (target_per_class == 0) {
    throw ConfigError("generate_batch: target_per_class must be >= 1");
  }
  Rng rng = Rng(seed).derive("generate:" + strategy.name);
  std::size_t domain_cursor = rng.below(domains.size());
  const std::size_t total_draws = 3 * target_per_class;
  const std::size_t skip_budget =
      (total_draws + 9) / 10;  // ceil(10% of requested draws)

  GenerationBatch batch;
  std::vector<NliInstance> raw;
  for (Label c : kLabels) {
    const auto ci = static_cast<std::size_t>(label_index(c));
    const auto& templates = strategy.hypothesis_templates[ci];
    for (std::size_t i = 0; i < target_per_class; ++i) {
      const std::string& domain = domains.at(domain_cursor++);
      const std::string nonce = "gen:" + strategy.name + ":" +
                                std::string(label_word(c)) + ":" +
                                std::to_string(i);
      const std::string tmpl = templates[i % templates.size()];
      try {
        const std::string premise_prompt = gateway.templates().render(
            "gen_premise",
            {{"directive", std::string(premise_directive(strategy.length))},
             {"domain", domain}});
        const std::string premise =
            gateway.generate(handle, premise_prompt, cfg, nonce + ":premise");
        const std::string hyp_prompt =
            gateway.templates().render(tmpl, {{"premise", premise}});
        const std::string hypothesis =
            gateway.generate(handle, hyp_prompt, cfg, nonce + ":hypothesis");

        NliInstance inst;
        inst.id = "gen:" + strategy.name + ":" + std::string(label_word(c)) +
                  ":" + std::to_string(i);
        inst.premise = premise;
        inst.hypothesis = hypothesis;
        inst.label = c;
        inst.source = strategy.name;
        inst.meta["domain"] = domain;
        inst.meta["intended_label"] = std::string(label_word(c));
        if (templates.size() > 1) inst.meta["template"] = tmpl;
        raw.push_back(std::move(inst));
      } catch (const ProviderError&) {
        batch.skipped++;
        if (batch.skipped > skip_budget) {
          batch.partial = true;
          auto [kept, report] = filter_generated(raw, rules);
          batch.instances = std::move(kept);
          batch.filter_report = report;
          return batch;
        }
      }
    }
  }
  auto [kept, report] = filter_generated(raw, rules);
  batch.instances = std::move(kept);
  batch.filter_report = report;
  return batch;
}

struct LabelledBatch {
  std::vector<NliInstance> instances;
  FilterReport filter_report;
  std::size_t dropped_invalid = 0;
};

// Labels an unlabelled corpus with few-shot predictions. Filtering runs
// before any model call, so a filtered instance costs zero transport.
inline LabelledBatch label_unlabelled(Gateway& gateway,
                                      const ModelHandle& handle,
                                      const std::vector<NliInstance>& corpus,
                                      const PromptConfig& cfg,
                                      const FilterRules& rules) {
  for (const auto& inst : corpus) {
    if (inst.label) {
      throw DataError("label_unlabelled: instance '" + inst.id +
                      "' already carries a label");
    }
  }
  auto [clean, report] = filter_generated(corpus, rules);
  LabelledBatch batch;
  batch.filter_report = report;
  for (auto& inst : clean) {
    gate::PredictionRecord rec = gateway.classify(handle, inst, cfg);
    if (!rec.decoded) {
      batch.dropped_invalid++;
      continue;
    }
    NliInstance labelled = inst;
    labelled.label = rec.decoded;
    labelled.meta["labelled_by"] = handle.model;
    batch.instances.push_back(std::move(labelled));
  }
  return batch;
}

struct ValidationVerdict {
  std::string instance_id;
  std::vector<std::optional<Label>> votes;  // nullopt = invalid decode
  bool kept = false;
  std::optional<Label> final_label;  // present iff kept
};

// The keep decision: kept iff every vote is a valid decode and all votes
// agree; the unanimous label is the final one.
inline std::optional<Label> unanimity_decision(
    const std::vector<std::optional<Label>>& votes) {
  if (votes.empty()) return std::nullopt;
  if (!votes.front()) return std::nullopt;
  for (const auto& v : votes) {
    if (!v || *v != *votes.front()) return std::nullopt;
  }
  return votes.front();
}

struct UnanimityResult {
  std::vector<NliInstance> kept;
  std::vector<ValidationVerdict> verdicts;
  std::size_t unresolved = 0;  // transport failures, excluded from discards
};

// Eight independent votes per instance; a distinct nonce per vote keeps the
// cache from collapsing them into one. Instances are kept only on unanimous
// valid votes; the unanimous label overwrites the intended one (the original
// stays in meta for audit).
inline UnanimityResult validate_unanimity(Gateway& gateway,
                                          const ModelHandle& handle,
                                          const std::vector<NliInstance>& batch,
                                          const PromptConfig& cfg) {
  UnanimityResult result;
  for (const auto& inst : batch) {
    ValidationVerdict verdict;
    verdict.instance_id = inst.id;
    bool failed = false;
    for (int vote = 0; vote < kUnanimityVotes; ++vote) {
      try {
        gate::PredictionRecord rec = gateway.classify(
            handle, inst, cfg, "vote:" + std::to_string(vote));
        verdict.votes.push_back(rec.decoded);
      } catch (const ProviderError&) {
        failed = true;
        break;
      }
    }
    if (failed) {
      result.unresolved++;
      continue;
    }
    verdict.final_label = unanimity_decision(verdict.votes);
    verdict.kept = verdict.final_label.has_value();
    if (verdict.kept) {
      NliInstance kept = inst;
      if (kept.label && *kept.label != *verdict.final_label) {
        kept.meta["intended_label"] = std::string(label_word(*kept.label));
      }
      kept.label = verdict.final_label;
      result.kept.push_back(std::move(kept));
    }
    result.verdicts.push_back(std::move(verdict));
  }
  return result;
}

// Swap plan from a validated synthetic pool: K per class drawn uniformly,
// shrinking to the available supply, with a random matched down-draw.
inline SwapPlan build_generation_plan(const std::vector<NliInstance>& pool,
                                      const Dataset& init,
                                      const Budget& budget,
                                      const std::string& method_name,
                                      std::uint64_t seed) {
  std::array<std::vector<const NliInstance*>, 3> by_class;
  for (const auto& inst : pool) {
    if (!inst.label) {
      throw DataError("generation plan: instance '" + inst.id +
                      "' lacks a final label");
    }
    by_class[static_cast<std::size_t>(label_index(*inst.label))].push_back(
        &inst);
  }
  SwapPlan plan;
  plan.method = method_name;
  plan.seed = seed;
  plan.config_digest = sha256_hex("generation|" + method_name + "|" +
                                  std::to_string(seed));
  for (Label c : kLabels) {
    const auto ci = static_cast<std::size_t>(label_index(c));
    auto& candidates = by_class[ci];
    Rng rng = Rng(seed).derive("genplan:" + std::string(label_word(c)));
    const std::size_t take = std::min(budget.K, candidates.size());
    for (std::size_t i : rng.sample_indices(candidates.size(), take)) {
      plan.up.push_back(*candidates[i]);
    }
  }
  plan.down_ids = select::choose_down(init, plan.up_histogram(),
                                      select::DownStrategy::random, {},
                                      Rng(seed));
  validate_plan(plan, init, budget);
  return plan;
}

}  // namespace nlikit::synth
