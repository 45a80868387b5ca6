#pragma once

// partition.hpp — the disjoint initial-training / candidate-pool split of a
// corpus, and the seeded draw that produces it.

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "nlikit/budget.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/rng.hpp"

namespace nlikit {

struct Partition {
  // Stored as vectors in draw order for stable serialization; membership
  // checks go through the sets below.
  std::vector<std::string> init_ids;
  std::vector<std::string> potential_ids;
  std::uint64_t seed = 0;

  std::unordered_set<std::string> init_set() const {
    return {init_ids.begin(), init_ids.end()};
  }
  std::unordered_set<std::string> potential_set() const {
    return {potential_ids.begin(), potential_ids.end()};
  }

  void validate(const Dataset& parent) const {
    auto init = init_set();
    for (const auto& id : potential_ids) {
      if (init.count(id)) {
        throw InvariantError("partition: id '" + id +
                             "' present in both init and potential sets");
      }
    }
    for (const auto& id : init_ids) {
      if (!parent.contains(id)) {
        throw InvariantError("partition: init id '" + id +
                             "' not in parent dataset");
      }
    }
    for (const auto& id : potential_ids) {
      if (!parent.contains(id)) {
        throw InvariantError("partition: potential id '" + id +
                             "' not in parent dataset");
      }
    }
  }
};

// Seeded uniform sample without replacement: the first m draws form the
// initial training subset, the next m the candidate pool.
inline Partition draw_partition(const Dataset& d, const Budget& budget,
                                std::uint64_t seed) {
  const std::size_t need = 2 * budget.m;
  if (d.size() < need) {
    throw DataError("draw_partition: dataset '" + d.name() + "' has " +
                    std::to_string(d.size()) + " instances, need " +
                    std::to_string(need) + " (2m)");
  }
  Rng rng = Rng(seed).derive("partition");
  auto picks = rng.sample_indices(d.size(), need);
  Partition p;
  p.seed = seed;
  p.init_ids.reserve(budget.m);
  p.potential_ids.reserve(budget.m);
  for (std::size_t i = 0; i < budget.m; ++i) {
    p.init_ids.push_back(d.instances()[picks[i]].id);
  }
  for (std::size_t i = budget.m; i < need; ++i) {
    p.potential_ids.push_back(d.instances()[picks[i]].id);
  }
  return p;
}

}  // namespace nlikit
