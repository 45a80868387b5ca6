#pragma once

// select.hpp — construction of swap plans under the budget: random,
// uncertainty (plain and correct-only), difficulty-score, misclassified and
// concatenative-hypothesis upsampling, each paired with a matched per-class
// down-draw from the initial training set.
//
// Tie-breaking everywhere is a seeded pre-shuffle followed by a stable sort,
// so equal keys resolve reproducibly and without positional bias.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "nlikit/budget.hpp"
#include "nlikit/digest.hpp"
#include "nlikit/entropy.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/modelgate/gateway.hpp"
#include "nlikit/modelgate/types.hpp"
#include "nlikit/rng.hpp"
#include "nlikit/swap_plan.hpp"

namespace nlikit::select {

using gate::PredictionRecord;
using gate::ScoreDim;
using gate::ScoreResult;

enum class Method {
  random,
  uncertainty,
  uncertainty_correct_only,
  difficulty_score,
  misclassified,
  concat_hypothesis,
};

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::random: return "random";
    case Method::uncertainty: return "uncertainty";
    case Method::uncertainty_correct_only: return "uncertainty_correct_only";
    case Method::difficulty_score: return "difficulty_score";
    case Method::misclassified: return "misclassified";
    case Method::concat_hypothesis: return "concat_hypothesis";
  }
  return "random";
}

inline Method parse_method(std::string_view s) {
  for (Method m : {Method::random, Method::uncertainty,
                   Method::uncertainty_correct_only, Method::difficulty_score,
                   Method::misclassified, Method::concat_hypothesis}) {
    if (s == method_name(m)) return m;
  }
  throw ConfigError("unknown selection method: '" + std::string(s) + "'");
}

enum class DownStrategy { random, lowest_entropy, lowest_score };

inline std::string_view down_strategy_name(DownStrategy s) {
  switch (s) {
    case DownStrategy::random: return "random";
    case DownStrategy::lowest_entropy: return "lowest_entropy";
    case DownStrategy::lowest_score: return "lowest_score";
  }
  return "random";
}

inline DownStrategy parse_down_strategy(std::string_view s) {
  if (s == "random") return DownStrategy::random;
  if (s == "lowest_entropy") return DownStrategy::lowest_entropy;
  if (s == "lowest_score") return DownStrategy::lowest_score;
  throw ConfigError("unknown down strategy: '" + std::string(s) + "'");
}

struct SelectionConfig {
  Method method = Method::random;
  DownStrategy down_strategy = DownStrategy::random;
  std::optional<std::size_t> k_override;
  int hypotheses_per_concat = 3;  // H
  std::vector<ScoreDim> dimensions = {ScoreDim::difficulty};
  std::uint64_t seed = 0;

  void validate() const {
    if (down_strategy == DownStrategy::lowest_entropy &&
        method != Method::uncertainty &&
        method != Method::uncertainty_correct_only) {
      throw ConfigError(
          "down strategy lowest_entropy requires an entropy-computing "
          "method");
    }
    if (down_strategy == DownStrategy::lowest_score &&
        method != Method::difficulty_score) {
      throw ConfigError("down strategy lowest_score requires difficulty_score");
    }
    if (hypotheses_per_concat < 2 && method == Method::concat_hypothesis) {
      throw ConfigError("concat_hypothesis requires H >= 2");
    }
    if (dimensions.empty() && method == Method::difficulty_score) {
      throw ConfigError("difficulty_score requires a non-empty dimension set");
    }
  }

  std::string digest() const {
    std::ostringstream s;
    s << method_name(method) << '|' << down_strategy_name(down_strategy) << '|'
      << (k_override ? std::to_string(*k_override) : "-") << '|'
      << hypotheses_per_concat << '|';
    for (ScoreDim d : dimensions) s << gate::score_dim_name(d) << ',';
    s << '|' << seed;
    return sha256_hex(s.str());
  }

  Budget effective_budget(const Budget& base) const {
    return k_override ? Budget::with_cap(base.m, *k_override) : base;
  }
};

using PredMap = std::unordered_map<std::string, PredictionRecord>;
using ScoreMap = std::unordered_map<std::string, ScoreResult>;

// Artifacts a down-draw may rank by: prediction entropies or summed scores
// over the initial training set.
struct DownArtifacts {
  const PredMap* init_predictions = nullptr;
  const ScoreMap* init_scores = nullptr;
};

namespace detail {

inline const PredictionRecord& prediction_for(const PredMap& preds,
                                              const std::string& id) {
  auto it = preds.find(id);
  if (it == preds.end()) {
    throw DataError("missing prediction record for instance '" + id + "'");
  }
  return it->second;
}

inline double entropy_for(const PredMap& preds, const std::string& id) {
  const PredictionRecord& rec = prediction_for(preds, id);
  if (!rec.probs) {
    throw CapabilityError(
        "prediction for '" + id +
        "' carries no class probabilities (provider capability)");
  }
  return entropy(*rec.probs);
}

// Per-class list of instances, preserving dataset order.
inline std::array<std::vector<const NliInstance*>, 3> split_by_class(
    const Dataset& d) {
  std::array<std::vector<const NliInstance*>, 3> by_class;
  for (const auto& inst : d.instances()) {
    if (!inst.label) {
      throw DataError("instance '" + inst.id + "' in '" + d.name() +
                      "' is unlabelled");
    }
    by_class[static_cast<std::size_t>(label_index(*inst.label))].push_back(
        &inst);
  }
  return by_class;
}

// Seeded pre-shuffle then stable sort: descending when `descending`, else
// ascending. Returns the instances in rank order.
inline std::vector<const NliInstance*> rank(
    std::vector<const NliInstance*> candidates,
    const std::unordered_map<const NliInstance*, double>& key, Rng rng,
    bool descending) {
  rng.shuffle(candidates);
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](const NliInstance* a, const NliInstance* b) {
                     const double ka = key.at(a);
                     const double kb = key.at(b);
                     return descending ? ka > kb : ka < kb;
                   });
  return candidates;
}

}  // namespace detail

// Down-draw matching the per-class counts already fixed by the up side.
inline std::vector<std::string> choose_down(
    const Dataset& init, const std::array<std::size_t, 3>& needed,
    DownStrategy strategy, const DownArtifacts& artifacts, Rng base_rng) {
  auto by_class = detail::split_by_class(init);
  std::vector<std::string> down;
  for (Label c : kLabels) {
    const auto ci = static_cast<std::size_t>(label_index(c));
    const std::size_t need = needed[ci];
    if (need == 0) continue;
    auto& candidates = by_class[ci];
    if (candidates.size() < need) {
      throw DataError("down draw: class '" + std::string(label_word(c)) +
                      "' has only " + std::to_string(candidates.size()) +
                      " instances in the initial set, need " +
                      std::to_string(need));
    }
    Rng rng = base_rng.derive("down:" + std::string(label_word(c)));
    switch (strategy) {
      case DownStrategy::random: {
        auto picks = rng.sample_indices(candidates.size(), need);
        for (std::size_t i : picks) down.push_back(candidates[i]->id);
        break;
      }
      case DownStrategy::lowest_entropy: {
        if (artifacts.init_predictions == nullptr) {
          throw ConfigError(
              "down strategy lowest_entropy requires predictions over the "
              "initial training set");
        }
        std::unordered_map<const NliInstance*, double> key;
        for (const auto* inst : candidates) {
          key[inst] = detail::entropy_for(*artifacts.init_predictions,
                                           inst->id);
        }
        auto ranked = detail::rank(candidates, key, rng, /*descending=*/false);
        for (std::size_t i = 0; i < need; ++i) down.push_back(ranked[i]->id);
        break;
      }
      case DownStrategy::lowest_score: {
        if (artifacts.init_scores == nullptr) {
          throw ConfigError(
              "down strategy lowest_score requires scores over the initial "
              "training set");
        }
        std::vector<const NliInstance*> scorable;
        std::unordered_map<const NliInstance*, double> key;
        for (const auto* inst : candidates) {
          auto it = artifacts.init_scores->find(inst->id);
          if (it == artifacts.init_scores->end()) {
            throw DataError("missing score for init instance '" + inst->id +
                            "'");
          }
          if (it->second.unscorable) continue;
          scorable.push_back(inst);
          key[inst] = static_cast<double>(it->second.total());
        }
        if (scorable.size() < need) {
          throw DataError("down draw: class '" + std::string(label_word(c)) +
                          "' has only " + std::to_string(scorable.size()) +
                          " scorable instances, need " + std::to_string(need));
        }
        auto ranked = detail::rank(scorable, key, rng, /*descending=*/false);
        for (std::size_t i = 0; i < need; ++i) down.push_back(ranked[i]->id);
        break;
      }
    }
  }
  return down;
}

namespace detail {

inline SwapPlan finish_plan(std::vector<NliInstance> up, const Dataset& init,
                            const Budget& budget, const SelectionConfig& cfg,
                            const DownArtifacts& artifacts) {
  SwapPlan plan;
  plan.method = std::string(method_name(cfg.method));
  plan.seed = cfg.seed;
  plan.config_digest = cfg.digest();
  plan.up = std::move(up);
  plan.down_ids = choose_down(init, plan.up_histogram(), cfg.down_strategy,
                              artifacts, Rng(cfg.seed));
  validate_plan(plan, init, budget);
  return plan;
}

}  // namespace detail

// K uniformly drawn candidates per class. Unlike the shrink-tolerant
// methods, a class short of K here is a sizing error: the caller asked for a
// uniform sample that cannot exist.
inline SwapPlan select_random(const Dataset& pool, const Dataset& init,
                              const Budget& base_budget,
                              const SelectionConfig& cfg,
                              const DownArtifacts& artifacts = {}) {
  cfg.validate();
  const Budget budget = cfg.effective_budget(base_budget);
  auto by_class = detail::split_by_class(pool);
  std::vector<NliInstance> up;
  for (Label c : kLabels) {
    const auto ci = static_cast<std::size_t>(label_index(c));
    auto& candidates = by_class[ci];
    if (candidates.size() < budget.K) {
      throw DataError("select_random: class '" + std::string(label_word(c)) +
                      "' has " + std::to_string(candidates.size()) +
                      " pool instances, need K = " + std::to_string(budget.K));
    }
    Rng rng = Rng(cfg.seed).derive("up:" + std::string(label_word(c)));
    for (std::size_t i : rng.sample_indices(candidates.size(), budget.K)) {
      up.push_back(*candidates[i]);
    }
  }
  return detail::finish_plan(std::move(up), init, budget, cfg, artifacts);
}

// Top-K per class by prediction entropy (descending). The correct-only
// variant keeps only candidates whose decoded label matches gold before
// ranking, shrinking the matched down-draw when a class runs short.
inline SwapPlan select_uncertainty(const Dataset& pool, const PredMap& preds,
                                   const Dataset& init,
                                   const Budget& base_budget,
                                   const SelectionConfig& cfg,
                                   const DownArtifacts& artifacts = {}) {
  cfg.validate();
  if (cfg.method != Method::uncertainty &&
      cfg.method != Method::uncertainty_correct_only) {
    throw ConfigError("select_uncertainty called with method '" +
                      std::string(method_name(cfg.method)) + "'");
  }
  const bool correct_only = cfg.method == Method::uncertainty_correct_only;
  const Budget budget = cfg.effective_budget(base_budget);
  auto by_class = detail::split_by_class(pool);
  std::vector<NliInstance> up;
  for (Label c : kLabels) {
    const auto ci = static_cast<std::size_t>(label_index(c));
    std::vector<const NliInstance*> candidates;
    std::unordered_map<const NliInstance*, double> key;
    for (const auto* inst : by_class[ci]) {
      const PredictionRecord& rec = detail::prediction_for(preds, inst->id);
      if (correct_only && rec.decoded != inst->label) continue;
      candidates.push_back(inst);
      key[inst] = detail::entropy_for(preds, inst->id);
    }
    Rng rng = Rng(cfg.seed).derive("up:" + std::string(label_word(c)));
    auto ranked = detail::rank(candidates, key, rng, /*descending=*/true);
    const std::size_t take = std::min(budget.K, ranked.size());
    for (std::size_t i = 0; i < take; ++i) up.push_back(*ranked[i]);
  }
  return detail::finish_plan(std::move(up), init, budget, cfg, artifacts);
}

// Top-K per class by the summed configured score dimensions. Unscorable
// instances are excluded (and counted via `excluded_unscorable`).
inline SwapPlan select_difficulty(const Dataset& pool, const ScoreMap& scores,
                                  const Dataset& init,
                                  const Budget& base_budget,
                                  const SelectionConfig& cfg,
                                  const DownArtifacts& artifacts = {},
                                  std::size_t* excluded_unscorable = nullptr) {
  cfg.validate();
  if (cfg.dimensions.empty()) {
    throw ConfigError("difficulty_score requires a non-empty dimension set");
  }
  const Budget budget = cfg.effective_budget(base_budget);
  auto by_class = detail::split_by_class(pool);
  std::size_t excluded = 0;
  std::vector<NliInstance> up;
  for (Label c : kLabels) {
    const auto ci = static_cast<std::size_t>(label_index(c));
    std::vector<const NliInstance*> candidates;
    std::unordered_map<const NliInstance*, double> key;
    for (const auto* inst : by_class[ci]) {
      auto it = scores.find(inst->id);
      if (it == scores.end()) {
        throw DataError("missing score for pool instance '" + inst->id + "'");
      }
      if (it->second.unscorable) {
        ++excluded;
        continue;
      }
      double sum = 0.0;
      for (ScoreDim d : cfg.dimensions) {
        auto vit = it->second.values.find(d);
        if (vit == it->second.values.end()) {
          throw DataError("score for '" + inst->id + "' lacks dimension '" +
                          std::string(gate::score_dim_name(d)) + "'");
        }
        sum += vit->second;
      }
      candidates.push_back(inst);
      key[inst] = sum;
    }
    Rng rng = Rng(cfg.seed).derive("up:" + std::string(label_word(c)));
    auto ranked = detail::rank(candidates, key, rng, /*descending=*/true);
    const std::size_t take = std::min(budget.K, ranked.size());
    for (std::size_t i = 0; i < take; ++i) up.push_back(*ranked[i]);
  }
  if (excluded_unscorable != nullptr) *excluded_unscorable = excluded;
  return detail::finish_plan(std::move(up), init, budget, cfg, artifacts);
}

// K misclassified candidates per class (an invalid decode counts as
// misclassified); fewer than K means the class swap shrinks to match.
inline SwapPlan select_misclassified(const Dataset& pool, const PredMap& preds,
                                     const Dataset& init,
                                     const Budget& base_budget,
                                     const SelectionConfig& cfg,
                                     const DownArtifacts& artifacts = {}) {
  cfg.validate();
  const Budget budget = cfg.effective_budget(base_budget);
  auto by_class = detail::split_by_class(pool);
  std::vector<NliInstance> up;
  for (Label c : kLabels) {
    const auto ci = static_cast<std::size_t>(label_index(c));
    std::vector<const NliInstance*> candidates;
    for (const auto* inst : by_class[ci]) {
      const PredictionRecord& rec = detail::prediction_for(preds, inst->id);
      if (!rec.decoded || *rec.decoded != *inst->label) {
        candidates.push_back(inst);
      }
    }
    Rng rng = Rng(cfg.seed).derive("up:" + std::string(label_word(c)));
    if (candidates.size() > budget.K) {
      for (std::size_t i : rng.sample_indices(candidates.size(), budget.K)) {
        up.push_back(*candidates[i]);
      }
    } else {
      for (const auto* inst : candidates) up.push_back(*inst);
    }
  }
  return detail::finish_plan(std::move(up), init, budget, cfg, artifacts);
}

// A synthetic candidate produced by joining H hypotheses that share a
// premise.
struct ConcatCandidate {
  NliInstance instance;
  std::vector<std::string> lineage;  // constituent ids, in drawn order
};

namespace detail {

inline constexpr std::size_t kMaxCombosPerGroup = 64;

// All H-combinations of [0, n) when few, else a seeded sample of distinct
// combinations capped at kMaxCombosPerGroup.
inline std::vector<std::vector<std::size_t>> h_combinations(std::size_t n,
                                                            std::size_t h,
                                                            Rng& rng) {
  double total = 1.0;
  for (std::size_t i = 0; i < h; ++i) {
    total *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  std::vector<std::vector<std::size_t>> combos;
  if (total <= static_cast<double>(kMaxCombosPerGroup)) {
    std::vector<std::size_t> idx(h);
    for (std::size_t i = 0; i < h; ++i) idx[i] = i;
    while (true) {
      combos.push_back(idx);
      std::size_t i = h;
      while (i > 0 && idx[i - 1] == n - h + i - 1) --i;
      if (i == 0) break;
      idx[i - 1]++;
      for (std::size_t j = i; j < h; ++j) idx[j] = idx[j - 1] + 1;
    }
  } else {
    std::set<std::vector<std::size_t>> seen;
    std::size_t attempts = 0;
    while (seen.size() < kMaxCombosPerGroup &&
           attempts < kMaxCombosPerGroup * 8) {
      auto pick = rng.sample_indices(n, h);
      std::sort(pick.begin(), pick.end());
      seen.insert(pick);
      ++attempts;
    }
    combos.assign(seen.begin(), seen.end());
  }
  return combos;
}

}  // namespace detail

// Candidate construction is exposed separately so lineage can be audited
// (acceptance checks recompute each label from the recorded lineage).
inline std::vector<ConcatCandidate> concat_candidates(const Dataset& source,
                                                      int hypotheses_per_concat,
                                                      std::uint64_t seed) {
  if (hypotheses_per_concat < 2) {
    throw ConfigError("concat candidates require H >= 2");
  }
  const auto h = static_cast<std::size_t>(hypotheses_per_concat);

  // Group by exact premise string, in order of first appearance.
  std::vector<std::pair<std::string, std::vector<const NliInstance*>>> groups;
  std::unordered_map<std::string, std::size_t> group_index;
  for (const auto& inst : source.instances()) {
    if (!inst.label) continue;  // unlabelled instances cannot compose
    auto [it, fresh] = group_index.emplace(inst.premise, groups.size());
    if (fresh) groups.push_back({inst.premise, {}});
    groups[it->second].second.push_back(&inst);
  }

  Rng rng = Rng(seed).derive("concat");
  std::vector<ConcatCandidate> candidates;
  for (auto& [premise, members] : groups) {
    if (members.size() < h) continue;
    for (auto& combo : detail::h_combinations(members.size(), h, rng)) {
      rng.shuffle(combo);  // hypothesis order is part of the draw
      ConcatCandidate cand;
      std::vector<Label> labels;
      std::string joined;
      std::string lineage_key;
      for (std::size_t k = 0; k < combo.size(); ++k) {
        const NliInstance* part = members[combo[k]];
        if (k > 0) joined += ' ';
        joined += part->hypothesis;
        labels.push_back(*part->label);
        cand.lineage.push_back(part->id);
        lineage_key += part->id;
        lineage_key += '\n';
      }
      cand.instance.premise = premise;
      cand.instance.hypothesis = joined;
      cand.instance.label = compose_labels(labels);
      cand.instance.source = "concat_hypothesis";
      cand.instance.id =
          "concat:" + short_digest(sha256_hex(premise + "\n" + lineage_key));
      std::string lineage_csv;
      for (std::size_t k = 0; k < cand.lineage.size(); ++k) {
        if (k > 0) lineage_csv += ',';
        lineage_csv += cand.lineage[k];
      }
      cand.instance.meta["lineage"] = lineage_csv;
      candidates.push_back(std::move(cand));
    }
  }
  rng.shuffle(candidates);  // acceptance order is seeded too
  return candidates;
}

// Builds the plan from concatenated-hypothesis candidates drawn from
// D \ D_init; accepts per class until K, taking all found when short.
inline SwapPlan select_concat(const Dataset& source, const Dataset& init,
                              const Budget& base_budget,
                              const SelectionConfig& cfg,
                              const DownArtifacts& artifacts = {}) {
  cfg.validate();
  const Budget budget = cfg.effective_budget(base_budget);
  auto candidates =
      concat_candidates(source, cfg.hypotheses_per_concat, cfg.seed);
  std::array<std::size_t, 3> taken{0, 0, 0};
  std::vector<NliInstance> up;
  std::set<std::string> used_ids;
  for (auto& cand : candidates) {
    const auto ci = static_cast<std::size_t>(label_index(*cand.instance.label));
    if (taken[ci] >= budget.K) continue;
    if (!used_ids.insert(cand.instance.id).second) continue;
    up.push_back(cand.instance);
    taken[ci]++;
  }
  return detail::finish_plan(std::move(up), init, budget, cfg, artifacts);
}

}  // namespace nlikit::select
