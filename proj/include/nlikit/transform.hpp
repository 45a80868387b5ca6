#pragma once

// transform.hpp — deterministic dataset constructions: choice-format records
// rewritten as NLI pairs, and difficulty-split tagging.

#include <map>
#include <string>
#include <vector>

#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/labels.hpp"

namespace nlikit {

struct CopaRecord {
  std::string id;
  std::string premise;
  std::string choice1;
  std::string choice2;
  std::string question;  // "cause" or "effect"
  int correct = 1;       // 1 or 2

  void validate() const {
    if (trim(choice1).empty() || trim(choice2).empty()) {
      throw DataError("copa record '" + id + "': empty choice");
    }
    if (correct != 1 && correct != 2) {
      throw DataError("copa record '" + id + "': correct choice index " +
                      std::to_string(correct) + " not in {1,2}");
    }
    if (question != "cause" && question != "effect") {
      throw DataError("copa record '" + id + "': question type '" + question +
                      "' not in {cause, effect}");
    }
  }
};

inline std::string copa_hypothesis(const std::string& first,
                                   const std::string& second,
                                   const std::string& question) {
  return "\"" + first + "\" is a more likely " + question + " of this than \"" +
         second + "\"";
}

// Two NLI instances per record: the given choice order and its swap. The
// instance whose first slot holds the correct choice is entailment; the
// other is non-entailment, encoded as `non_entailment_as` (neutral by
// default) for the 3-class pipeline. Binary-collapse scoring treats neutral
// and contradiction alike, so the encoding choice does not affect results.
inline Dataset build_copa_nli(const std::vector<CopaRecord>& records,
                              Label non_entailment_as = Label::neutral,
                              const std::string& name = "copa_nli") {
  if (non_entailment_as == Label::entailment) {
    throw ConfigError("copa: non-entailment cannot map to entailment");
  }
  Dataset out(name, DatasetKind::eval);
  for (const auto& rec : records) {
    rec.validate();

    NliInstance fwd;
    fwd.id = rec.id + "#fwd";
    fwd.premise = rec.premise;
    fwd.hypothesis = copa_hypothesis(rec.choice1, rec.choice2, rec.question);
    fwd.label = rec.correct == 1 ? Label::entailment : non_entailment_as;
    fwd.source = name;
    fwd.meta["copa_question"] = rec.question;

    NliInstance swp;
    swp.id = rec.id + "#swap";
    swp.premise = rec.premise;
    swp.hypothesis = copa_hypothesis(rec.choice2, rec.choice1, rec.question);
    swp.label = rec.correct == 2 ? Label::entailment : non_entailment_as;
    swp.source = name;
    swp.meta["copa_question"] = rec.question;

    out.add(std::move(fwd));
    out.add(std::move(swp));
  }
  return out;
}

struct TagLog {
  std::size_t tagged = 0;
  std::size_t missing_ids = 0;   // ids in the map absent from the dataset
  std::size_t overwritten = 0;   // ids whose tag changed (last write wins)
};

// Records split tags ("hard" / "ambiguous" / "easy") in instance meta under
// "split". Text and labels are never touched; untagged instances stay
// untagged.
inline Dataset tag_splits(const Dataset& d,
                          const std::map<std::string, std::string>& split_map,
                          TagLog* log = nullptr) {
  for (const auto& [id, tag] : split_map) {
    if (tag != "hard" && tag != "ambiguous" && tag != "easy") {
      throw DataError("split tag '" + tag + "' for id '" + id +
                      "' not in {hard, ambiguous, easy}");
    }
  }
  TagLog local;
  Dataset out(d.name(), d.kind());
  for (NliInstance inst : d.instances()) {
    auto it = split_map.find(inst.id);
    if (it != split_map.end()) {
      auto existing = inst.meta.find("split");
      if (existing != inst.meta.end() && existing->second != it->second) {
        local.overwritten++;
      }
      inst.meta["split"] = it->second;
      local.tagged++;
    }
    out.add(std::move(inst));
  }
  for (const auto& [id, tag] : split_map) {
    (void)tag;
    if (!d.contains(id)) local.missing_ids++;
  }
  if (log != nullptr) *log = local;
  return out;
}

}  // namespace nlikit
