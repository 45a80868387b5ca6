#pragma once

// labels.hpp — the three-way NLI label space and the label-composition rule
// for concatenated hypotheses.

#include <array>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlikit/errors.hpp"
#include "nlikit/strings.hpp"

namespace nlikit {

enum class Label : int { entailment = 0, neutral = 1, contradiction = 2 };

inline constexpr std::array<Label, 3> kLabels = {
    Label::entailment, Label::neutral, Label::contradiction};

inline constexpr int label_index(Label l) { return static_cast<int>(l); }

inline std::string_view label_word(Label l) {
  switch (l) {
    case Label::entailment: return "entailment";
    case Label::neutral: return "neutral";
    case Label::contradiction: return "contradiction";
  }
  return "entailment";
}

// Strict parse: exactly the three label words, nothing else.
inline Label parse_label(std::string_view s) {
  for (Label l : kLabels) {
    if (s == label_word(l)) return l;
  }
  throw DataError("unknown label: '" + std::string(s) + "'");
}

// Lenient parse used at ingestion only. Accepts case variants and the
// single-letter aliases e/n/c. Returns nullopt for the "-" disagreement
// marker so callers can drop-and-count; anything else unknown throws.
inline std::optional<Label> normalize_label(std::string_view raw) {
  const std::string s = to_lower(trim(raw));
  if (s == "-") return std::nullopt;
  if (s == "e" || s == "entailment") return Label::entailment;
  if (s == "n" || s == "neutral") return Label::neutral;
  if (s == "c" || s == "contradiction") return Label::contradiction;
  throw DataError("unknown label: '" + std::string(raw) + "'");
}

// Label of a hypothesis built by concatenating several hypotheses that share
// a premise: any contradiction makes the whole contradictory; otherwise any
// neutral makes it neutral; all-entailment stays entailment.
inline Label compose_labels(const std::vector<Label>& labels) {
  if (labels.empty()) {
    throw InvariantError("compose_labels: empty label list");
  }
  bool any_neutral = false;
  for (Label l : labels) {
    if (l == Label::contradiction) return Label::contradiction;
    if (l == Label::neutral) any_neutral = true;
  }
  return any_neutral ? Label::neutral : Label::entailment;
}

inline Label compose_labels(std::initializer_list<Label> labels) {
  return compose_labels(std::vector<Label>(labels));
}

}  // namespace nlikit
