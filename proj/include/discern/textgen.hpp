#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "discern/counterfactual.hpp"
#include "discern/dataset.hpp"

namespace discern {

// One changed feature in display units: raw values for continuous
// features (4 significant digits), category names for categorical ones.
struct RawChange {
  std::string feature;
  std::string from;
  std::string to;

  bool operator==(const RawChange&) const = default;
};

struct ExplanationText {
  std::string header;
  std::vector<std::string> lines;  // one per changed feature
  std::string outcome;
  std::vector<RawChange> raw_changes;

  std::string str() const;
};

// Raw-unit rendering of a normalised value.
std::string format_value(const FeatureKind& kind, double normalized);

// Default change line: "increase <feature> from <old> to <new>" (or
// "decrease"); categorical features use "change". A custom template
// replaces the change line and may use {feature} {old} {new}
// {outcome_from} {outcome_to}; anything else in braces is BadTemplate.
ExplanationText render(const CounterfactualResult& result, const Instance& query, const Schema& schema,
                       const std::vector<std::string>& class_names,
                       std::optional<std::string_view> line_template = std::nullopt);

// Checks a change-line template without rendering it.
void validate_template(std::string_view line_template);

// Recovers the (feature, from, to) triples from default-template change
// lines.
std::vector<RawChange> parse_default_lines(const std::vector<std::string>& lines, const Schema& schema);

}  // namespace discern
