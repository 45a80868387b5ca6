#pragma once

// instance.hpp — NLI instances and ordered datasets.
//
// Dataset order is load order and is preserved through serialization;
// selection determinism depends on it.

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "nlikit/errors.hpp"
#include "nlikit/labels.hpp"
#include "nlikit/strings.hpp"

namespace nlikit {

struct NliInstance {
  std::string id;
  std::string premise;
  std::string hypothesis;
  std::optional<Label> label;  // absent for unlabelled instances
  std::string source;          // corpus name or generation strategy
  std::map<std::string, std::string> meta;

  bool labelled() const { return label.has_value(); }

  // Training/evaluation requires non-empty text after trimming.
  bool text_ok() const {
    return !trim(premise).empty() && !trim(hypothesis).empty();
  }
};

enum class DatasetKind { train, eval };

inline std::string_view dataset_kind_name(DatasetKind k) {
  return k == DatasetKind::train ? "train" : "eval";
}

inline DatasetKind parse_dataset_kind(std::string_view s) {
  if (s == "train") return DatasetKind::train;
  if (s == "eval") return DatasetKind::eval;
  throw DataError("unknown dataset kind: '" + std::string(s) + "'");
}

class Dataset {
public:
  Dataset() = default;
  Dataset(std::string name, DatasetKind kind)
      : name_(std::move(name)), kind_(kind) {}

  const std::string& name() const { return name_; }
  DatasetKind kind() const { return kind_; }
  const std::vector<NliInstance>& instances() const { return instances_; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }

  void add(NliInstance inst) {
    if (inst.id.empty()) {
      throw DataError("instance with empty id in dataset '" + name_ + "'");
    }
    auto [it, fresh] = index_.emplace(inst.id, instances_.size());
    if (!fresh) {
      throw DataError("duplicate instance id '" + inst.id + "' in dataset '" +
                      name_ + "'");
    }
    instances_.push_back(std::move(inst));
  }

  bool contains(const std::string& id) const { return index_.count(id) > 0; }

  const NliInstance& by_id(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw DataError("unknown instance id '" + id + "' in dataset '" + name_ +
                      "'");
    }
    return instances_[it->second];
  }

  // Per-class instance counts, indexed by label_index. Unlabelled instances
  // are not counted.
  std::array<std::size_t, 3> class_histogram() const {
    std::array<std::size_t, 3> h{0, 0, 0};
    for (const auto& inst : instances_) {
      if (inst.label) h[static_cast<std::size_t>(label_index(*inst.label))]++;
    }
    return h;
  }

  // Subset preserving this dataset's order; every requested id must exist.
  Dataset subset(const std::unordered_set<std::string>& ids,
                 const std::string& subset_name) const {
    Dataset out(subset_name, kind_);
    std::size_t found = 0;
    for (const auto& inst : instances_) {
      if (ids.count(inst.id)) {
        out.add(inst);
        ++found;
      }
    }
    if (found != ids.size()) {
      throw DataError("subset of '" + name_ + "' missing " +
                      std::to_string(ids.size() - found) + " requested ids");
    }
    return out;
  }

private:
  std::string name_;
  DatasetKind kind_ = DatasetKind::train;
  std::vector<NliInstance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace nlikit
