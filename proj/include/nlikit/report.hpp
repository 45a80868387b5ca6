#pragma once

// report.hpp — EvalReport rendering: a machine JSON document and a
// fixed-width text table (in-distribution column, Challenge-OOD members and
// average, Standard-OOD members and average).

#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "nlikit/eval.hpp"
#include "nlikit/json_io.hpp"

namespace nlikit::eval {

inline json report_to_json(const EvalReport& report) {
  json j;
  j["datasets"] = report.dataset_order;
  json cat;
  for (const auto& [name, c] : report.categorization) {
    cat[name] = std::string(category_name(c));
  }
  j["categorization"] = cat;
  j["in_distribution"] = std::vector<std::string>(report.in_distribution.begin(),
                                                  report.in_distribution.end());
  json systems;
  for (const auto& [system, datasets] : report.systems) {
    json per_dataset;
    for (const auto& [dataset, stats] : datasets) {
      json s;
      s["mean"] = stats.mean;
      s["stddev"] = stats.stddev;
      s["per_seed"] = stats.per_seed;
      per_dataset[dataset] = s;
    }
    systems[system] = per_dataset;
  }
  j["systems"] = systems;
  j["group_averages"] = report.group_averages;
  j["significance"] = report.significance;
  if (!report.notes.empty()) j["notes"] = report.notes;
  // Aggregation conventions, recorded so alternates can be compared.
  j["conventions"] = {
      {"stddev", "population sigma over seeds"},
      {"group_average", "unweighted mean of member-dataset means"},
      {"seed_pooling", "per-instance bits averaged across seeds before resampling"},
  };
  return j;
}

inline std::string render_table(const EvalReport& report) {
  std::vector<std::string> id_cols;
  std::vector<std::string> challenge_cols;
  std::vector<std::string> standard_cols;
  for (const auto& name : report.dataset_order) {
    if (report.in_distribution.count(name)) {
      id_cols.push_back(name);
      continue;
    }
    auto it = report.categorization.find(name);
    if (it == report.categorization.end()) continue;
    if (it->second == Category::challenge) {
      challenge_cols.push_back(name);
    } else {
      standard_cols.push_back(name);
    }
  }

  struct Col {
    std::string header;
    std::string key;   // dataset name, or "" for separators/averages
    std::string kind;  // "dataset" | "avg:challenge" | "avg:standard" | "sep"
  };
  std::vector<Col> cols;
  for (const auto& c : id_cols) cols.push_back({c, c, "dataset"});
  if (!challenge_cols.empty()) {
    cols.push_back({"|", "", "sep"});
    for (const auto& c : challenge_cols) cols.push_back({c, c, "dataset"});
    cols.push_back({"Avg.", "", "avg:challenge"});
  }
  if (!standard_cols.empty()) {
    cols.push_back({"|", "", "sep"});
    for (const auto& c : standard_cols) cols.push_back({c, c, "dataset"});
    cols.push_back({"Avg.", "", "avg:standard"});
  }

  std::size_t name_width = std::string("system").size();
  for (const auto& [system, _] : report.systems) {
    name_width = std::max(name_width, system.size());
  }

  auto fmt = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << v * 100.0;
    return s.str();
  };

  std::vector<std::size_t> widths;
  for (const auto& col : cols) {
    widths.push_back(std::max<std::size_t>(col.header.size(), 6));
  }

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "system";
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out << "  " << std::right << std::setw(static_cast<int>(widths[i]))
        << cols[i].header;
  }
  out << '\n';

  for (const auto& [system, datasets] : report.systems) {
    out << std::left << std::setw(static_cast<int>(name_width)) << system;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      std::string cell;
      const auto& col = cols[i];
      if (col.kind == "sep") {
        cell = "|";
      } else if (col.kind == "dataset") {
        auto it = datasets.find(col.key);
        cell = it != datasets.end() ? fmt(it->second.mean) : "-";
      } else {
        const std::string group = col.kind.substr(4);
        auto git = report.group_averages.find(system);
        if (git != report.group_averages.end() &&
            git->second.count(group)) {
          cell = fmt(git->second.at(group));
        } else {
          cell = "-";
        }
      }
      out << "  " << std::right << std::setw(static_cast<int>(widths[i]))
          << cell;
    }
    out << '\n';
  }

  if (!report.significance.empty()) {
    out << '\n' << "two-tailed paired bootstrap p-values:" << '\n';
    for (const auto& [pair, surfaces] : report.significance) {
      for (const auto& [surface, p] : surfaces) {
        out << "  " << pair << "  " << surface << "  p=" << std::fixed
            << std::setprecision(4) << p << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace nlikit::eval
