#include "discern/textgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "discern/error.hpp"

namespace discern {

namespace {

constexpr std::string_view kPlaceholders[] = {"feature", "old", "new", "outcome_from", "outcome_to"};

struct Fields {
  std::string feature, old_value, new_value, outcome_from, outcome_to;
};

std::string substitute(std::string_view tmpl, const Fields* fields) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    const char c = tmpl[i];
    if (c == '}') throw Error(ErrorCode::BadTemplate, "unmatched '}' in template");
    if (c != '{') {
      out.push_back(c);
      continue;
    }
    const auto close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw Error(ErrorCode::BadTemplate, "unterminated '{' in template");
    const auto name = tmpl.substr(i + 1, close - i - 1);
    if (std::find(std::begin(kPlaceholders), std::end(kPlaceholders), name) == std::end(kPlaceholders)) {
      throw Error(ErrorCode::BadTemplate, "unknown placeholder {" + std::string(name) + "}");
    }
    if (fields) {
      if (name == "feature") out += fields->feature;
      else if (name == "old") out += fields->old_value;
      else if (name == "new") out += fields->new_value;
      else if (name == "outcome_from") out += fields->outcome_from;
      else out += fields->outcome_to;
    }
    i = close;
  }
  return out;
}

std::string class_name(const std::vector<std::string>& names, std::size_t cls) {
  return cls < names.size() ? names[cls] : "class " + std::to_string(cls);
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

}  // namespace

std::string ExplanationText::str() const {
  std::string out = header + "\n";
  for (const auto& line : lines) out += "  " + line + "\n";
  out += outcome + "\n";
  return out;
}

std::string format_value(const FeatureKind& kind, double normalized) {
  if (kind.is_categorical()) return kind.categories().at(static_cast<std::size_t>(normalized));
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", kind.denormalize(normalized));
  const double rounded = std::strtod(buf, nullptr);
  if (rounded == 0.0) return "0";
  if (rounded == std::floor(rounded) && std::abs(rounded) < 1e15) std::snprintf(buf, sizeof buf, "%.0f", rounded);
  return buf;
}

void validate_template(std::string_view line_template) { substitute(line_template, nullptr); }

ExplanationText render(const CounterfactualResult& result, const Instance& query, const Schema& schema,
                       const std::vector<std::string>& class_names, std::optional<std::string_view> line_template) {
  if (line_template) validate_template(*line_template);
  if (query.size() != schema.size() || result.counterfactual.size() != schema.size()) {
    throw Error(ErrorCode::InvalidArgument, "result does not match the schema");
  }
  ExplanationText text;
  const auto from_class = class_name(class_names, result.query_class);
  const auto to_class = class_name(class_names, result.new_class);
  text.header = "The model predicts \"" + from_class + "\". To be predicted \"" + to_class + "\" instead:";
  text.outcome = "With these changes the model predicts \"" + to_class + "\".";

  // Lines follow feature order; only features whose value actually differs.
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (result.counterfactual[i] == query[i]) continue;
    const auto& feature = schema.feature(i);
    Fields f{feature.name, format_value(feature.kind, query[i]), format_value(feature.kind, result.counterfactual[i]),
             from_class, to_class};
    text.raw_changes.push_back({f.feature, f.old_value, f.new_value});
    if (line_template) {
      text.lines.push_back(substitute(*line_template, &f));
    } else {
      const char* verb = feature.kind.is_categorical()          ? "change"
                         : result.counterfactual[i] > query[i] ? "increase"
                                                                : "decrease";
      text.lines.push_back(std::string(verb) + " " + f.feature + " from " + f.old_value + " to " + f.new_value);
    }
  }
  return text;
}

std::vector<RawChange> parse_default_lines(const std::vector<std::string>& lines, const Schema& schema) {
  std::vector<RawChange> out;
  for (const auto& raw_line : lines) {
    std::string_view line = raw_line;
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    const auto space = line.find(' ');
    const auto verb = line.substr(0, space);
    if (space == std::string_view::npos || (verb != "increase" && verb != "decrease" && verb != "change")) {
      throw Error(ErrorCode::InvalidArgument, "not a change line: '" + raw_line + "'");
    }
    line.remove_prefix(space + 1);

    // Longest feature name followed by " from " wins.
    const Feature* match = nullptr;
    for (const auto& f : schema.features()) {
      if (starts_with(line, f.name + " from ") && (!match || f.name.size() > match->name.size())) match = &f;
    }
    if (!match) throw Error(ErrorCode::InvalidArgument, "no schema feature in '" + raw_line + "'");
    const auto values = line.substr(match->name.size() + 6);

    std::optional<RawChange> change;
    if (match->kind.is_categorical()) {
      for (const auto& from : match->kind.categories()) {
        if (!starts_with(values, from + " to ")) continue;
        const auto to = values.substr(from.size() + 4);
        if (match->kind.category_index(to)) change = RawChange{match->name, from, std::string(to)};
      }
    } else if (const auto sep = values.find(" to "); sep != std::string_view::npos) {
      change = RawChange{match->name, std::string(values.substr(0, sep)), std::string(values.substr(sep + 4))};
    }
    if (!change) throw Error(ErrorCode::InvalidArgument, "cannot read values in '" + raw_line + "'");
    out.push_back(std::move(*change));
  }
  return out;
}

}  // namespace discern
