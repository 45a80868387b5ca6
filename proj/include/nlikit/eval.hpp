#pragma once

// eval.hpp — scoring, seed aggregation, Challenge/Standard categorization and
// paired bootstrap significance testing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/json_io.hpp"
#include "nlikit/modelgate/types.hpp"
#include "nlikit/rng.hpp"

namespace nlikit::eval {

using gate::PredictionRecord;

inline constexpr double kDefaultChallengeThreshold = 0.70;
inline constexpr std::size_t kDefaultBootstrapResamples = 10000;

struct RunResult {
  std::string system;
  std::uint64_t seed = 0;
  std::string dataset;
  std::vector<std::uint8_t> bits;  // per-instance correctness, dataset order

  double accuracy() const {
    if (bits.empty()) return 0.0;
    double sum = 0.0;
    for (auto b : bits) sum += b;
    return sum / static_cast<double>(bits.size());
  }

  json to_json() const {
    json j;
    j["system"] = system;
    j["seed"] = seed;
    j["dataset"] = dataset;
    j["bits"] = bits;
    j["accuracy"] = accuracy();
    return j;
  }

  static RunResult from_json(const json& j) {
    RunResult r;
    r.system = j.at("system").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.dataset = j.at("dataset").get<std::string>();
    r.bits = j.at("bits").get<std::vector<std::uint8_t>>();
    return r;
  }
};

// Correctness bit per instance: 1 iff the decoded label equals gold; an
// invalid decode is always 0. Binary-collapse mode (choice-derived test
// sets) treats neutral and contradiction as one non-entailment class on both
// sides.
inline RunResult score(const Dataset& d,
                       const std::unordered_map<std::string, PredictionRecord>&
                           predictions,
                       bool binary_collapse = false,
                       const std::string& system = "",
                       std::uint64_t seed = 0,
                       const std::optional<std::string>& split_tag = {}) {
  RunResult result;
  result.system = system;
  result.seed = seed;
  result.dataset = d.name();
  std::vector<std::string> missing;
  for (const auto& inst : d.instances()) {
    if (split_tag) {
      auto it = inst.meta.find("split");
      if (it == inst.meta.end() || it->second != *split_tag) continue;
    }
    if (!inst.label) {
      throw DataError("score: instance '" + inst.id + "' has no gold label");
    }
    auto it = predictions.find(inst.id);
    if (it == predictions.end()) {
      missing.push_back(inst.id);
      continue;
    }
    const auto& decoded = it->second.decoded;
    bool correct = false;
    if (decoded) {
      if (binary_collapse) {
        correct = (*inst.label == Label::entailment) ==
                  (*decoded == Label::entailment);
      } else {
        correct = *decoded == *inst.label;
      }
    }
    result.bits.push_back(correct ? 1 : 0);
  }
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << "score: " << missing.size() << " instances lack predictions:";
    for (std::size_t i = 0; i < missing.size() && i < 8; ++i) {
      msg << ' ' << missing[i];
    }
    if (missing.size() > 8) msg << " ...";
    throw DataError(msg.str());
  }
  return result;
}

enum class Category { challenge, standard };

inline std::string_view category_name(Category c) {
  return c == Category::challenge ? "challenge" : "standard";
}

// Challenge-OOD iff the baseline accuracy falls strictly below the
// threshold; in-distribution datasets are exempt.
inline std::map<std::string, Category> categorize(
    const std::map<std::string, double>& baseline_accuracies,
    double threshold = kDefaultChallengeThreshold,
    const std::set<std::string>& in_distribution = {}) {
  std::map<std::string, Category> out;
  for (const auto& [name, acc] : baseline_accuracies) {
    if (acc < 0.0 || acc > 1.0) {
      throw DataError("categorize: accuracy " + std::to_string(acc) +
                      " for '" + name + "' outside [0,1]");
    }
    if (in_distribution.count(name)) continue;
    out[name] = acc < threshold ? Category::challenge : Category::standard;
  }
  return out;
}

struct DatasetStats {
  double mean = 0.0;
  double stddev = 0.0;  // population sigma over seeds
  std::vector<double> per_seed;
};

struct EvalReport {
  // system -> dataset -> stats
  std::map<std::string, std::map<std::string, DatasetStats>> systems;
  std::map<std::string, Category> categorization;
  std::set<std::string> in_distribution;
  std::vector<std::string> dataset_order;
  // system -> group name ("challenge"/"standard"/"in_distribution") -> avg
  std::map<std::string, std::map<std::string, double>> group_averages;
  // "systemA vs systemB" -> surface ("dataset:<name>" / "group:<name>") -> p
  std::map<std::string, std::map<std::string, double>> significance;
  std::string notes;
};

// Per-dataset mean and population sigma over seeds; group averages are
// unweighted means of member-dataset means. Every system must cover each of
// its datasets with the same seed set.
inline EvalReport aggregate(const std::vector<RunResult>& results,
                            const std::map<std::string, Category>& categorization,
                            const std::set<std::string>& in_distribution = {}) {
  EvalReport report;
  report.categorization = categorization;
  report.in_distribution = in_distribution;

  std::map<std::string, std::map<std::string, std::vector<const RunResult*>>>
      grouped;
  std::map<std::string, std::set<std::uint64_t>> seed_sets;
  for (const auto& r : results) {
    grouped[r.system][r.dataset].push_back(&r);
    seed_sets[r.system].insert(r.seed);
    if (std::find(report.dataset_order.begin(), report.dataset_order.end(),
                  r.dataset) == report.dataset_order.end()) {
      report.dataset_order.push_back(r.dataset);
    }
  }

  for (const auto& [system, datasets] : grouped) {
    const auto& expected_seeds = seed_sets[system];
    for (const auto& [dataset, runs] : datasets) {
      std::set<std::uint64_t> seen;
      for (const auto* r : runs) {
        if (!seen.insert(r->seed).second) {
          throw DataError("aggregate: duplicate result for system '" + system +
                          "', dataset '" + dataset + "', seed " +
                          std::to_string(r->seed));
        }
      }
      if (seen != expected_seeds) {
        throw DataError("aggregate: ragged seed coverage for system '" +
                        system + "' on dataset '" + dataset + "' (" +
                        std::to_string(seen.size()) + " of " +
                        std::to_string(expected_seeds.size()) + " seeds)");
      }
      DatasetStats stats;
      // Seed order is part of the report; sort for stability.
      std::vector<const RunResult*> ordered(runs.begin(), runs.end());
      std::sort(ordered.begin(), ordered.end(),
                [](const RunResult* a, const RunResult* b) {
                  return a->seed < b->seed;
                });
      for (const auto* r : ordered) stats.per_seed.push_back(r->accuracy());
      double sum = 0.0;
      for (double a : stats.per_seed) sum += a;
      stats.mean = sum / static_cast<double>(stats.per_seed.size());
      double var = 0.0;
      for (double a : stats.per_seed) {
        var += (a - stats.mean) * (a - stats.mean);
      }
      stats.stddev = std::sqrt(var / static_cast<double>(stats.per_seed.size()));
      report.systems[system][dataset] = std::move(stats);
    }

    std::map<std::string, std::vector<double>> group_means;
    for (const auto& [dataset, stats] : report.systems[system]) {
      if (in_distribution.count(dataset)) {
        group_means["in_distribution"].push_back(stats.mean);
        continue;
      }
      auto it = categorization.find(dataset);
      if (it == categorization.end()) continue;
      group_means[std::string(category_name(it->second))].push_back(stats.mean);
    }
    for (const auto& [group, means] : group_means) {
      double sum = 0.0;
      for (double m : means) sum += m;
      report.group_averages[system][group] =
          sum / static_cast<double>(means.size());
    }
  }
  return report;
}

// Seeds pooled by averaging per-instance bits across seeds; the pooled
// vector is the comparison surface for significance testing.
inline std::vector<double> pool_bits(const std::vector<const RunResult*>& runs) {
  if (runs.empty()) throw DataError("pool_bits: no runs");
  const std::size_t n = runs.front()->bits.size();
  for (const auto* r : runs) {
    if (r->bits.size() != n) {
      throw DataError("pool_bits: bit-vector length mismatch on dataset '" +
                      r->dataset + "'");
    }
  }
  std::vector<double> pooled(n, 0.0);
  for (const auto* r : runs) {
    for (std::size_t i = 0; i < n; ++i) pooled[i] += r->bits[i];
  }
  for (double& v : pooled) v /= static_cast<double>(runs.size());
  return pooled;
}

// Two-tailed paired bootstrap over per-instance correctness: resample
// instance indices with replacement, recompute the mean difference, and
// report p = 2 * min(frac <= 0, frac >= 0) clipped to [0,1]. Resamples with
// a zero difference count toward both fractions.
inline double paired_bootstrap(const std::vector<double>& a,
                               const std::vector<double>& b,
                               std::size_t resamples, std::uint64_t seed) {
  if (a.size() != b.size()) {
    throw DataError("paired_bootstrap: surfaces have different lengths (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DataError("paired_bootstrap: empty surface");
  if (resamples == 0) throw ConfigError("paired_bootstrap: zero resamples");

  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];

  Rng rng = Rng(seed).derive("bootstrap");
  std::size_t le = 0;
  std::size_t ge = 0;
  const std::size_t n = diff.size();
  for (std::size_t r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += diff[static_cast<std::size_t>(rng.below(n))];
    }
    if (sum <= 0.0) ++le;
    if (sum >= 0.0) ++ge;
  }
  const double fle = static_cast<double>(le) / static_cast<double>(resamples);
  const double fge = static_cast<double>(ge) / static_cast<double>(resamples);
  double p = 2.0 * std::min(fle, fge);
  if (p > 1.0) p = 1.0;
  if (p < 0.0) p = 0.0;
  return p;
}

// Pools each system's runs per dataset and compares the two systems on every
// shared dataset surface and on the pooled group surfaces.
inline std::map<std::string, double> bootstrap_compare(
    const std::vector<RunResult>& system_a,
    const std::vector<RunResult>& system_b,
    const std::map<std::string, Category>& categorization,
    std::size_t resamples = kDefaultBootstrapResamples,
    std::uint64_t seed = 0) {
  auto index = [](const std::vector<RunResult>& rs) {
    std::map<std::string, std::vector<const RunResult*>> by_dataset;
    for (const auto& r : rs) by_dataset[r.dataset].push_back(&r);
    return by_dataset;
  };
  auto a_sets = index(system_a);
  auto b_sets = index(system_b);

  std::map<std::string, double> out;
  std::map<std::string, std::vector<double>> group_a;
  std::map<std::string, std::vector<double>> group_b;
  for (const auto& [dataset, a_runs] : a_sets) {
    auto bit = b_sets.find(dataset);
    if (bit == b_sets.end()) continue;
    auto pa = pool_bits(a_runs);
    auto pb = pool_bits(bit->second);
    if (pa.size() != pb.size()) {
      throw DataError("bootstrap_compare: dataset '" + dataset +
                      "' has mismatched instance counts between systems");
    }
    out["dataset:" + dataset] =
        paired_bootstrap(pa, pb, resamples, seed ^ hash64(dataset));
    auto cit = categorization.find(dataset);
    if (cit != categorization.end()) {
      const std::string group(category_name(cit->second));
      group_a[group].insert(group_a[group].end(), pa.begin(), pa.end());
      group_b[group].insert(group_b[group].end(), pb.begin(), pb.end());
    }
  }
  for (const auto& [group, surface_a] : group_a) {
    out["group:" + group] = paired_bootstrap(
        surface_a, group_b[group], resamples, seed ^ hash64("group:" + group));
  }
  return out;
}

}  // namespace nlikit::eval
