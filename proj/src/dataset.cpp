#include "discern/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "csv.hpp"
#include "discern/error.hpp"
#include "discern/rng.hpp"

namespace discern {

namespace {

constexpr double kUnbounded = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto bar = text.find('|', start);
    out.emplace_back(csv::trim(text.substr(start, bar == std::string_view::npos ? bar : bar - start)));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += " | ";
    out += items[i];
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- FeatureKind

FeatureKind FeatureKind::continuous(double min, double max) {
  const bool unfitted = std::isnan(min) && std::isnan(max);
  if (!unfitted && !(std::isfinite(min) && std::isfinite(max) && min <= max)) {
    throw Error(ErrorCode::InvalidSchema,
                "continuous bounds must be finite with min <= max, got [" + format_double(min) + ", " +
                    format_double(max) + "]");
  }
  FeatureKind k;
  k.type_ = FeatureType::Continuous;
  k.min_ = min;
  k.max_ = max;
  return k;
}

FeatureKind FeatureKind::categorical(std::vector<std::string> categories) {
  if (categories.empty()) throw Error(ErrorCode::InvalidSchema, "categorical feature with no categories");
  std::unordered_set<std::string> seen;
  for (const auto& c : categories) {
    if (!seen.insert(c).second) throw Error(ErrorCode::InvalidSchema, "duplicate category '" + c + "'");
  }
  FeatureKind k;
  k.type_ = FeatureType::Categorical;
  k.categories_ = std::move(categories);
  return k;
}

bool FeatureKind::has_bounds() const noexcept {
  return is_categorical() || !(std::isnan(min_) || std::isnan(max_));
}

double FeatureKind::normalize(double raw) const {
  if (!has_bounds()) throw Error(ErrorCode::InvalidSchema, "continuous feature has no fitted bounds");
  if (is_constant()) return 0.0;
  return std::clamp((raw - min_) / (max_ - min_), 0.0, 1.0);
}

double FeatureKind::denormalize(double normalized) const {
  if (is_constant()) return min_;
  return min_ + normalized * (max_ - min_);
}

std::optional<std::size_t> FeatureKind::category_index(std::string_view name) const {
  const auto it = std::find(categories_.begin(), categories_.end(), name);
  if (it == categories_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - categories_.begin());
}

bool operator==(const FeatureKind& a, const FeatureKind& b) {
  if (a.type() != b.type()) return false;
  if (a.is_categorical()) return a.categories() == b.categories();
  if (!a.has_bounds() || !b.has_bounds()) return a.has_bounds() == b.has_bounds();
  return a.min() == b.min() && a.max() == b.max();
}

// --------------------------------------------------------------------- Schema

Schema::Schema(std::vector<Feature> features, std::string target, std::vector<std::string> class_labels)
    : features_(std::move(features)), target_(std::move(target)), class_labels_(std::move(class_labels)) {
  if (features_.empty()) throw Error(ErrorCode::InvalidSchema, "schema needs at least one feature");
  if (class_labels_.size() < 2) throw Error(ErrorCode::InvalidSchema, "schema needs at least two class labels");
  std::unordered_set<std::string> names;
  for (const auto& f : features_) {
    if (f.name.empty()) throw Error(ErrorCode::InvalidSchema, "empty feature name");
    if (!names.insert(f.name).second) throw Error(ErrorCode::InvalidSchema, "duplicate feature '" + f.name + "'");
  }
  if (names.count(target_)) throw Error(ErrorCode::InvalidSchema, "target '" + target_ + "' is also a feature");
  std::unordered_set<std::string> labels(class_labels_.begin(), class_labels_.end());
  if (labels.size() != class_labels_.size()) throw Error(ErrorCode::InvalidSchema, "duplicate class label");
}

std::optional<std::size_t> Schema::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Schema::class_index(std::string_view label) const {
  const auto it = std::find(class_labels_.begin(), class_labels_.end(), label);
  if (it == class_labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - class_labels_.begin());
}

bool conforms(const Instance& instance, const Schema& schema) {
  if (instance.size() != schema.size()) return false;
  for (std::size_t i = 0; i < instance.size(); ++i) {
    const double v = instance[i];
    const auto& kind = schema.feature(i).kind;
    if (kind.is_categorical()) {
      if (!(v >= 0.0) || v != std::floor(v) || v >= static_cast<double>(kind.categories().size())) return false;
    } else if (!(v >= 0.0 && v <= 1.0)) {
      return false;
    }
  }
  return true;
}

// -------------------------------------------------------------------- Dataset

Dataset::Dataset(Schema schema, std::vector<Instance> instances, std::vector<std::size_t> labels)
    : schema_(std::move(schema)), instances_(std::move(instances)), labels_(std::move(labels)) {
  if (instances_.size() != labels_.size()) {
    throw Error(ErrorCode::LengthMismatch, "instance and label counts differ");
  }
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    if (labels_[i] >= schema_.num_classes()) {
      throw Error(ErrorCode::InvalidArgument, "label index out of range at row " + std::to_string(i));
    }
    if (instances_[i].size() != schema_.size()) {
      throw Error(ErrorCode::InvalidArgument, "instance length differs from schema at row " + std::to_string(i));
    }
  }
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(schema_.num_classes(), 0);
  for (auto l : labels_) ++counts[l];
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<Instance> instances;
  std::vector<std::size_t> labels;
  instances.reserve(rows.size());
  labels.reserve(rows.size());
  for (auto r : rows) {
    instances.push_back(instances_.at(r));
    labels.push_back(labels_.at(r));
  }
  return Dataset(schema_, std::move(instances), std::move(labels));
}

RawTable RawTable::subset(std::span<const std::size_t> indices) const {
  RawTable out{schema, {}, {}};
  out.rows.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (auto r : indices) {
    out.rows.push_back(rows.at(r));
    out.labels.push_back(labels.at(r));
  }
  return out;
}

// ---------------------------------------------------------------- schema I/O

Schema parse_schema(std::string_view text) {
  std::optional<std::string> target;
  std::optional<std::vector<std::string>> classes;
  std::vector<Feature> features;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = csv::trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidSchema, "line " + std::to_string(line_no) + ": expected '='");
    }
    const auto key = csv::trim(line.substr(0, eq));
    const auto value = csv::trim(line.substr(eq + 1));
    if (key == "target") {
      target = std::string(value);
    } else if (key == "classes") {
      classes = split_list(value);
    } else if (key.substr(0, 8) == "feature " || key.substr(0, 8) == "feature\t") {
      const std::string name(csv::trim(key.substr(8)));
      const auto space = value.find_first_of(" \t");
      const auto kind = value.substr(0, space);
      const auto rest = space == std::string_view::npos ? std::string_view{} : csv::trim(value.substr(space));
      if (kind == "continuous") {
        if (rest.empty()) {
          features.push_back({name, FeatureKind::continuous(kUnbounded, kUnbounded)});
        } else {
          std::istringstream bounds{std::string(rest)};
          std::string lo, hi, extra;
          bounds >> lo >> hi;
          const auto min = csv::parse_double(lo);
          const auto max = csv::parse_double(hi);
          if (!min || !max || (bounds >> extra)) {
            throw Error(ErrorCode::InvalidSchema,
                        "line " + std::to_string(line_no) + ": continuous bounds must be '<min> <max>'");
          }
          features.push_back({name, FeatureKind::continuous(*min, *max)});
        }
      } else if (kind == "categorical") {
        features.push_back({name, FeatureKind::categorical(split_list(rest))});
      } else {
        throw Error(ErrorCode::InvalidSchema,
                    "line " + std::to_string(line_no) + ": unknown feature kind '" + std::string(kind) + "'");
      }
    } else {
      throw Error(ErrorCode::InvalidSchema,
                  "line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (!target) throw Error(ErrorCode::InvalidSchema, "missing 'target'");
  if (!classes) throw Error(ErrorCode::InvalidSchema, "missing 'classes'");
  return Schema(std::move(features), std::move(*target), std::move(*classes));
}

Schema read_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open schema '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

std::string format_schema(const Schema& schema) {
  std::string out;
  out += "target = " + schema.target() + "\n";
  out += "classes = " + join_list(schema.class_labels()) + "\n";
  for (const auto& f : schema.features()) {
    out += "feature " + f.name + " = ";
    if (f.kind.is_categorical()) {
      out += "categorical " + join_list(f.kind.categories());
    } else if (f.kind.has_bounds()) {
      out += "continuous " + format_double(f.kind.min()) + " " + format_double(f.kind.max());
    } else {
      out += "continuous";
    }
    out += "\n";
  }
  return out;
}

void write_schema_file(const std::filesystem::path& path, const Schema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write schema '" + path.string() + "'");
  out << format_schema(schema);
}

// ------------------------------------------------------------------- loading

RawTable read_table(const std::filesystem::path& path, const Schema& schema) {
  const auto doc = csv::read(path);
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t c = 0; c < doc.header.size(); ++c) columns.emplace(doc.header[c], c);

  const auto column_of = [&](const std::string& name) {
    const auto it = columns.find(name);
    if (it == columns.end()) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in header");
    return it->second;
  };
  std::vector<std::size_t> feature_columns;
  for (const auto& f : schema.features()) feature_columns.push_back(column_of(f.name));
  const std::size_t target_column = column_of(schema.target());

  const std::size_t m = schema.size();
  RawTable table{schema, {}, {}};
  table.rows.reserve(doc.rows.size());
  table.labels.reserve(doc.rows.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& fields = doc.rows[r];
    const std::size_t row_no = doc.row_numbers[r];
    const auto field = [&](std::size_t column, const std::string& name) -> const std::string& {
      if (column >= fields.size()) throw Error(ErrorCode::UnparsableValue, "row is too short", row_no, name);
      if (fields[column].empty()) throw Error(ErrorCode::UnparsableValue, "missing value", row_no, name);
      return fields[column];
    };

    std::vector<double> values(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& feature = schema.feature(i);
      const auto& text = field(feature_columns[i], feature.name);
      if (feature.kind.is_categorical()) {
        const auto idx = feature.kind.category_index(text);
        if (!idx) throw Error(ErrorCode::UnknownCategory, "unknown category '" + text + "'", row_no, feature.name);
        values[i] = static_cast<double>(*idx);
      } else {
        const auto v = csv::parse_double(text);
        if (!v) throw Error(ErrorCode::UnparsableValue, "not a number: '" + text + "'", row_no, feature.name);
        values[i] = *v;
      }
    }
    const auto& label_text = field(target_column, schema.target());
    const auto label = schema.class_index(label_text);
    if (!label) {
      throw Error(ErrorCode::UnknownCategory, "unknown class label '" + label_text + "'", row_no, schema.target());
    }
    table.rows.push_back(std::move(values));
    table.labels.push_back(*label);
  }

  bool needs_bounds = false;
  for (const auto& f : schema.features()) needs_bounds |= !f.kind.has_bounds();
  if (needs_bounds) {
    std::vector<Feature> features = schema.features();
    for (std::size_t i = 0; i < m; ++i) {
      if (features[i].kind.has_bounds()) continue;
      if (table.rows.empty()) throw Error(ErrorCode::EmptyFile, "cannot fit bounds on a file with no rows");
      double lo = table.rows[0][i], hi = lo;
      for (const auto& row : table.rows) {
        lo = std::min(lo, row[i]);
        hi = std::max(hi, row[i]);
      }
      features[i].kind = FeatureKind::continuous(lo, hi);
    }
    table.schema = Schema(std::move(features), schema.target(), schema.class_labels());
  }
  return table;
}

Schema fit_bounds(const RawTable& table, std::span<const std::size_t> rows) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "cannot fit bounds on zero rows");
  std::vector<Feature> features = table.schema.features();
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].kind.is_categorical()) continue;
    double lo = table.rows.at(rows[0])[i], hi = lo;
    for (auto r : rows) {
      lo = std::min(lo, table.rows.at(r)[i]);
      hi = std::max(hi, table.rows.at(r)[i]);
    }
    features[i].kind = FeatureKind::continuous(lo, hi);
  }
  return Schema(std::move(features), table.schema.target(), table.schema.class_labels());
}

Dataset normalize(const RawTable& table, const Schema& schema) {
  if (schema.size() != table.schema.size()) throw Error(ErrorCode::InvalidSchema, "schema/table feature mismatch");
  std::vector<Instance> instances;
  instances.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    Instance inst{std::vector<double>(row.size())};
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& kind = schema.feature(i).kind;
      inst[i] = kind.is_categorical() ? row[i] : kind.normalize(row[i]);
    }
    instances.push_back(std::move(inst));
  }
  return Dataset(schema, std::move(instances), table.labels);
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  const auto table = read_table(path, schema);
  return normalize(table);
}

Schema infer_schema(const std::filesystem::path& path, std::string_view target, std::size_t categorical_threshold) {
  const auto doc = csv::read(path);
  if (doc.rows.empty()) throw Error(ErrorCode::EmptyFile, "'" + path.string() + "' has no data rows");
  const auto tit = std::find(doc.header.begin(), doc.header.end(), target);
  if (tit == doc.header.end()) {
    throw Error(ErrorCode::TargetNotFound, "target column '" + std::string(target) + "' not in header");
  }
  const std::size_t target_column = static_cast<std::size_t>(tit - doc.header.begin());

  const auto first_appearance = [&](std::size_t column) {
    std::vector<std::string> values;
    std::unordered_set<std::string> seen;
    for (const auto& row : doc.rows) {
      if (column >= row.size() || row[column].empty()) continue;
      if (seen.insert(row[column]).second) values.push_back(row[column]);
    }
    return values;
  };

  std::vector<Feature> features;
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    if (c == target_column) continue;
    const auto distinct = first_appearance(c);
    bool numeric = !distinct.empty();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& v : distinct) {
      const auto d = csv::parse_double(v);
      if (!d) {
        numeric = false;
        break;
      }
      lo = std::min(lo, *d);
      hi = std::max(hi, *d);
    }
    if (numeric && distinct.size() > categorical_threshold) {
      features.push_back({doc.header[c], FeatureKind::continuous(lo, hi)});
    } else {
      features.push_back({doc.header[c], FeatureKind::categorical(distinct)});
    }
  }
  return Schema(std::move(features), std::string(target), first_appearance(target_column));
}

// --------------------------------------------------------------------- split

SplitIndices split_indices(std::span<const std::size_t> labels, std::size_t num_classes, double test_fraction,
                           std::uint64_t seed, bool stratified) {
  if (labels.empty()) throw Error(ErrorCode::InvalidArgument, "cannot split an empty dataset");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "test fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<char> in_test(labels.size(), 0);
  const auto take = [&](std::vector<std::size_t> members, std::size_t lo, std::size_t hi) {
    auto count = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * test_fraction));
    count = std::clamp(count, lo, hi);
    rng.shuffle(members);
    for (std::size_t i = 0; i < count; ++i) in_test[members[i]] = 1;
  };

  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(labels[i]).push_back(i);
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (by_class[c].empty()) continue;
      if (by_class[c].size() < 2) {
        throw Error(ErrorCode::ClassTooSmall,
                    "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                        " member(s); stratified split needs at least 2");
      }
      const std::size_t n = by_class[c].size();
      take(std::move(by_class[c]), 1, n - 1);
    }
  } else {
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const std::size_t n = all.size();
    take(std::move(all), n >= 2 ? 1 : 0, n >= 2 ? n - 1 : n);
  }

  SplitIndices out;
  for (std::size_t i = 0; i < labels.size(); ++i) (in_test[i] ? out.test : out.train).push_back(i);
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                                  bool stratified) {
  const auto idx = split_indices(dataset.labels(), dataset.schema().num_classes(), test_fraction, seed, stratified);
  return {dataset.subset(idx.train), dataset.subset(idx.test)};
}

// ------------------------------------------------------------------ distance

double feature_delta(const Schema& schema, std::size_t feature, double a, double b) {
  if (schema.feature(feature).kind.is_categorical()) return a == b ? 0.0 : 1.0;
  return std::abs(a - b);
}

double distance(const Instance& a, const Instance& b, const Schema& schema) {
  double sum = 0.0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const double d = feature_delta(schema, i, a[i], b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace discern
