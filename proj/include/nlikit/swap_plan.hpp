#pragma once

// swap_plan.hpp — the audited record of a budgeted swap: which instances
// enter the training set (up) and which leave it (down), matched per class so
// the label distribution never shifts.

#include <array>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "nlikit/budget.hpp"
#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/labels.hpp"

namespace nlikit {

struct SwapPlan {
  std::vector<NliInstance> up;        // new examples, possibly synthetic
  std::vector<std::string> down_ids;  // drawn from the initial training set
  std::string method;
  std::uint64_t seed = 0;
  std::string config_digest;

  std::array<std::size_t, 3> up_histogram() const {
    std::array<std::size_t, 3> h{0, 0, 0};
    for (const auto& inst : up) {
      if (!inst.label) {
        throw InvariantError("swap plan: up instance '" + inst.id +
                             "' is unlabelled");
      }
      h[static_cast<std::size_t>(label_index(*inst.label))]++;
    }
    return h;
  }
};

// Checks every SwapPlan invariant against the initial training slice. All
// producing methods funnel through this one validator.
inline void validate_plan(const SwapPlan& plan, const Dataset& init,
                          const Budget& budget) {
  std::unordered_set<std::string> up_ids;
  for (const auto& inst : plan.up) {
    if (!up_ids.insert(inst.id).second) {
      throw InvariantError("swap plan: duplicate up id '" + inst.id + "'");
    }
    if (init.contains(inst.id)) {
      throw InvariantError("swap plan: up id '" + inst.id +
                           "' already present in the initial training set");
    }
    if (!inst.text_ok()) {
      throw InvariantError("swap plan: up instance '" + inst.id +
                           "' has empty premise or hypothesis");
    }
  }

  std::array<std::size_t, 3> down_hist{0, 0, 0};
  std::unordered_set<std::string> down_set;
  for (const auto& id : plan.down_ids) {
    if (!down_set.insert(id).second) {
      throw InvariantError("swap plan: duplicate down id '" + id + "'");
    }
    if (!init.contains(id)) {
      throw InvariantError("swap plan: down id '" + id +
                           "' not in the initial training set");
    }
    const NliInstance& inst = init.by_id(id);
    if (!inst.label) {
      throw InvariantError("swap plan: down id '" + id + "' is unlabelled");
    }
    down_hist[static_cast<std::size_t>(label_index(*inst.label))]++;
  }

  const auto up_hist = plan.up_histogram();
  for (Label c : kLabels) {
    const auto i = static_cast<std::size_t>(label_index(c));
    if (up_hist[i] != down_hist[i]) {
      throw InvariantError(
          "swap plan: class '" + std::string(label_word(c)) + "' has |up| = " +
          std::to_string(up_hist[i]) + " but |down| = " +
          std::to_string(down_hist[i]));
    }
    if (up_hist[i] > budget.K) {
      throw InvariantError("swap plan: class '" + std::string(label_word(c)) +
                           "' swaps " + std::to_string(up_hist[i]) +
                           " instances, exceeding K = " +
                           std::to_string(budget.K));
    }
  }
}

// (init ∪ up) \ down. Output order: surviving init instances in init order,
// then up instances in plan order. Size and class histogram match init.
inline Dataset apply_swap(const Dataset& init, const SwapPlan& plan,
                          const Budget& budget) {
  if (init.size() != budget.m) {
    throw InvariantError("apply_swap: initial training set has " +
                         std::to_string(init.size()) + " instances, budget m = " +
                         std::to_string(budget.m));
  }
  validate_plan(plan, init, budget);

  std::unordered_set<std::string> down(plan.down_ids.begin(),
                                       plan.down_ids.end());
  Dataset out(init.name() + "+" + plan.method, DatasetKind::train);
  for (const auto& inst : init.instances()) {
    if (!down.count(inst.id)) out.add(inst);
  }
  for (const auto& inst : plan.up) {
    out.add(inst);
  }
  if (out.size() != budget.m) {
    throw InvariantError("apply_swap: output size " +
                         std::to_string(out.size()) + " != m = " +
                         std::to_string(budget.m));
  }
  return out;
}

}  // namespace nlikit
