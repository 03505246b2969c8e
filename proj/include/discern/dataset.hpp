#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace discern {

enum class FeatureType { Continuous, Categorical };

// Continuous features carry raw-unit bounds used for min/max normalisation.
// Categorical features carry their category names; values are stored as the
// category index.
class FeatureKind {
 public:
  static FeatureKind continuous(double min, double max);
  static FeatureKind categorical(std::vector<std::string> categories);

  FeatureType type() const noexcept { return type_; }
  bool is_categorical() const noexcept { return type_ == FeatureType::Categorical; }
  bool is_continuous() const noexcept { return type_ == FeatureType::Continuous; }

  // False for a continuous feature declared without bounds (to be fitted).
  bool has_bounds() const noexcept;
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  bool is_constant() const noexcept { return min_ == max_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }

  // Raw value to [0,1], clamping values outside the bounds. Constant
  // features normalise to 0.
  double normalize(double raw) const;
  double denormalize(double normalized) const;
  std::optional<std::size_t> category_index(std::string_view name) const;

 private:
  FeatureType type_ = FeatureType::Continuous;
  double min_ = 0.0;
  double max_ = 0.0;
  std::vector<std::string> categories_;
};

bool operator==(const FeatureKind& a, const FeatureKind& b);

struct Feature {
  std::string name;
  FeatureKind kind;

  bool operator==(const Feature&) const = default;
};

class Schema {
 public:
  Schema(std::vector<Feature> features, std::string target, std::vector<std::string> class_labels);

  std::size_t size() const noexcept { return features_.size(); }
  const std::vector<Feature>& features() const noexcept { return features_; }
  const Feature& feature(std::size_t i) const { return features_.at(i); }
  const std::string& target() const noexcept { return target_; }
  const std::vector<std::string>& class_labels() const noexcept { return class_labels_; }
  std::size_t num_classes() const noexcept { return class_labels_.size(); }

  std::optional<std::size_t> feature_index(std::string_view name) const;
  std::optional<std::size_t> class_index(std::string_view label) const;

  bool operator==(const Schema&) const = default;

 private:
  std::vector<Feature> features_;
  std::string target_;
  std::vector<std::string> class_labels_;
};

// One feature vector in normalised space: continuous entries in [0,1],
// categorical entries hold the category index.
struct Instance {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::span<const double> span() const noexcept { return values; }

  bool operator==(const Instance&) const = default;
};

bool conforms(const Instance& instance, const Schema& schema);

class Dataset {
 public:
  Dataset(Schema schema, std::vector<Instance> instances, std::vector<std::size_t> labels);

  const Schema& schema() const noexcept { return schema_; }
  std::size_t size() const noexcept { return instances_.size(); }
  bool empty() const noexcept { return instances_.empty(); }
  const std::vector<Instance>& instances() const noexcept { return instances_; }
  const Instance& instance(std::size_t i) const { return instances_.at(i); }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  std::size_t label(std::size_t i) const { return labels_.at(i); }

  std::vector<std::size_t> class_counts() const;
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  Schema schema_;
  std::vector<Instance> instances_;
  std::vector<std::size_t> labels_;
};

// Parsed CSV rows in raw units (continuous) or category indices
// (categorical), before normalisation.
struct RawTable {
  Schema schema;
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> labels;

  RawTable subset(std::span<const std::size_t> indices) const;
};

// Schema text format, one declaration per line ('#' starts a comment):
//   target = <column>
//   classes = <label> | <label> | ...
//   feature <name> = continuous [<min> <max>]
//   feature <name> = categorical <cat> | <cat> | ...
// Continuous bounds may be omitted; they are then taken from the data.
Schema parse_schema(std::string_view text);
Schema read_schema_file(const std::filesystem::path& path);
std::string format_schema(const Schema& schema);
void write_schema_file(const std::filesystem::path& path, const Schema& schema);

// Reads a CSV against a schema. Columns are matched by header name; extra
// columns are ignored. Continuous features declared without bounds get the
// observed min/max of the file.
RawTable read_table(const std::filesystem::path& path, const Schema& schema);

// Replaces continuous bounds with the observed min/max over the given rows.
Schema fit_bounds(const RawTable& table, std::span<const std::size_t> rows);

// Normalises a raw table under `schema` (which must match the table's
// features apart from continuous bounds).
Dataset normalize(const RawTable& table, const Schema& schema);
inline Dataset normalize(const RawTable& table) { return normalize(table, table.schema); }

Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

// Non-numeric columns become categorical, as do numeric columns with at most
// `categorical_threshold` distinct values. Categories and class labels keep
// first-appearance order.
Schema infer_schema(const std::filesystem::path& path, std::string_view target,
                    std::size_t categorical_threshold = 0);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Each partition keeps input row order. Stratified splits round the
// per-class test count and keep at least one member of each class on both
// sides.
SplitIndices split_indices(std::span<const std::size_t> labels, std::size_t num_classes,
                           double test_fraction, std::uint64_t seed, bool stratified);
std::pair<Dataset, Dataset> split(const Dataset& dataset, double test_fraction, std::uint64_t seed,
                                  bool stratified);

// Per-feature difference: |a-b| for continuous, overlap (0/1) for categorical.
double feature_delta(const Schema& schema, std::size_t feature, double a, double b);

// Euclidean distance over per-feature differences.
double distance(const Instance& a, const Instance& b, const Schema& schema);

}  // namespace discern
