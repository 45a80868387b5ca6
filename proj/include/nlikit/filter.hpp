#pragma once

// filter.hpp — quality filters for raw generated text.
//
// Word and phrase lists are data (assets/filter_rules.txt), loaded as rules
// with "word:" / "phrase:" prefixes. Two structural rules are code: premises
// ending in '?'/'!', and sentences joined without terminal punctuation. Each
// dropped instance is attributed to the first matching rule, so the report's
// per-rule counts stay additive.

#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nlikit/errors.hpp"
#include "nlikit/instance.hpp"
#include "nlikit/strings.hpp"

namespace nlikit {

struct FilterReport {
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::map<std::string, std::size_t> reasons;
  // Scope choices recorded rather than guessed at read time: word rules
  // check both fields, phrase and terminal-punctuation rules check the
  // premise only, the join check covers both fields.
  std::string scope_note =
      "word:both-fields phrase:premise-only punct:terminal:premise-only "
      "punct:join:both-fields";
};

struct FilterRules {
  std::vector<std::string> words;
  std::vector<std::string> phrases;

  static FilterRules defaults() {
    FilterRules r;
    r.words = {"premise",       "hypothesis", "entailment", "neutral",
               "contradiction", "implies",    "implied"};
    r.phrases = {"sure!", "can i help", "happy to help", "no problem"};
    return r;
  }

  // One rule per line, "word:" or "phrase:" prefixed; '#' comments allowed.
  static FilterRules load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open filter rules: " + path);
    FilterRules r;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view s = trim(line);
      if (s.empty() || s.front() == '#') continue;
      if (s.rfind("word:", 0) == 0) {
        r.words.emplace_back(s.substr(5));
      } else if (s.rfind("phrase:", 0) == 0) {
        r.phrases.emplace_back(s.substr(7));
      } else {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": rule must start with 'word:' or 'phrase:'");
      }
    }
    return r;
  }
};

// Two sentences run together without terminal punctuation show up as a
// lowercase letter, a space, then an uppercase letter ("...noon It was...").
inline bool has_unpunctuated_join(std::string_view text) {
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    if (std::islower(static_cast<unsigned char>(text[i])) &&
        text[i + 1] == ' ' &&
        std::isupper(static_cast<unsigned char>(text[i + 2]))) {
      return true;
    }
  }
  return false;
}

namespace detail {

// Position of the first whole-word occurrence, or npos.
inline std::size_t find_word_ci(std::string_view haystack,
                                std::string_view word) {
  const std::string h = to_lower(haystack);
  const std::string w = to_lower(word);
  std::size_t pos = 0;
  while ((pos = h.find(w, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(h[pos - 1]);
    const std::size_t end = pos + w.size();
    const bool right_ok = end == h.size() || !is_word_char(h[end]);
    if (left_ok && right_ok) return pos;
    ++pos;
  }
  return std::string_view::npos;
}

// The rule whose match occurs earliest in the text wins the attribution
// ("This implies the premise." attributes to implies, not premise).
template <typename Finder>
inline std::string earliest_rule(std::string_view text,
                                 const std::vector<std::string>& entries,
                                 std::string_view prefix, Finder find) {
  std::size_t best_pos = std::string_view::npos;
  const std::string* best = nullptr;
  for (const auto& entry : entries) {
    const std::size_t pos = find(text, entry);
    if (pos < best_pos) {
      best_pos = pos;
      best = &entry;
    }
  }
  return best ? std::string(prefix) + *best : std::string();
}

}  // namespace detail

// First matching rule name, or empty when the instance is clean. Rule groups
// run in a fixed order (words, phrases, terminal punctuation, joins); within
// a group the earliest match in the premise, then the hypothesis, attributes.
inline std::string filter_reason(const NliInstance& inst,
                                 const FilterRules& rules) {
  for (std::string_view field : {std::string_view(inst.premise),
                                 std::string_view(inst.hypothesis)}) {
    std::string hit =
        detail::earliest_rule(field, rules.words, "word:", detail::find_word_ci);
    if (!hit.empty()) return hit;
  }
  {
    std::string hit =
        detail::earliest_rule(std::string_view(inst.premise), rules.phrases,
                              "phrase:", find_ci);
    if (!hit.empty()) return hit;
  }
  std::string_view premise = trim(inst.premise);
  if (!premise.empty() && (premise.back() == '?' || premise.back() == '!')) {
    return "punct:terminal";
  }
  if (has_unpunctuated_join(inst.premise) ||
      has_unpunctuated_join(inst.hypothesis)) {
    return "punct:join";
  }
  return {};
}

inline std::pair<std::vector<NliInstance>, FilterReport> filter_generated(
    const std::vector<NliInstance>& instances, const FilterRules& rules) {
  std::vector<NliInstance> kept;
  FilterReport report;
  kept.reserve(instances.size());
  for (const auto& inst : instances) {
    const std::string reason = filter_reason(inst, rules);
    if (reason.empty()) {
      kept.push_back(inst);
      report.kept++;
    } else {
      report.dropped++;
      report.reasons[reason]++;
    }
  }
  return {std::move(kept), report};
}

inline std::pair<std::vector<NliInstance>, FilterReport> filter_generated(
    const std::vector<NliInstance>& instances) {
  return filter_generated(instances, FilterRules::defaults());
}

}  // namespace nlikit
