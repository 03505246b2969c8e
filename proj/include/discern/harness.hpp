#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "discern/classifier.hpp"
#include "discern/counterfactual.hpp"
#include "discern/dataset.hpp"
#include "discern/metrics.hpp"
#include "discern/random_forest.hpp"
#include "discern/relevance.hpp"

namespace discern {

// One column of the experiment matrix, e.g. DisCERN[SHAP, QRel].
struct CellSpec {
  RelevanceMethod method = RelevanceMethod::LIME;
  OrderingMode mode = OrderingMode::QRel;

  // RND always pairs with the Null mode; Chi2 weights are global so NRel
  // collapses to QRel.
  CellSpec normalized() const;
  std::string key() const;    // "SHAP-QRel"
  std::string label() const;  // "DisCERN[SHAP, QRel]"
  bool operator==(const CellSpec&) const = default;
};

// Accepts "RND", "Chi2", "LIME-QRel", "SHAP_C:nrel", ...
CellSpec parse_cell(std::string_view text);

enum class CaseBaseSource { Train, TrainAndTest };

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> schema;  // otherwise inferred
  std::string target;                           // used when inferring
  std::size_t categorical_threshold = 0;
  double test_fraction = 0.3;
  bool stratified = true;
  std::uint64_t seed = 0;
  // Extra master seeds for a multi-seed bench; empty runs `seed` only.
  std::vector<std::uint64_t> repeat_seeds;
  bool fit_bounds_on_train = true;

  ForestParams forest;
  std::optional<std::filesystem::path> model_file;     // saved forest to load instead of training
  std::optional<std::filesystem::path> external_model; // adapter file

  std::vector<CellSpec> cells;
  ExplainerConfig explainer;
  std::optional<std::string> desired_class;
  CaseBaseSource case_base = CaseBaseSource::Train;
  std::size_t max_queries = 0;  // 0: every eligible test row
  std::size_t threads = 1;
  std::filesystem::path output_dir = "discern-out";
  std::optional<std::filesystem::path> line_template;

  void validate() const;
};

// JSON config file; relative paths resolve against the file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Everything a run needs before the cells execute.
struct PreparedExperiment {
  ExperimentConfig config;
  std::shared_ptr<const Schema> schema;
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;
  std::shared_ptr<const Dataset> case_base;
  std::shared_ptr<const Classifier> model;
  const RandomForest* forest = nullptr;  // set when the model is an in-engine forest
  double accuracy = 0.0;
  std::optional<std::size_t> desired_class;
  std::vector<std::size_t> query_rows;  // positions in the test split
};

PreparedExperiment prepare_experiment(const ExperimentConfig& config);

struct QueryOutcome {
  std::size_t query = 0;     // position in the query list
  std::size_t test_row = 0;  // position in the test split
  std::optional<CounterfactualResult> result;
  std::string error;  // set when the query failed
};

struct CellReport {
  CellSpec cell;
  std::vector<QueryOutcome> outcomes;
  std::optional<MetricsReport> metrics;  // over successful queries
  std::size_t failures = 0;
  double wall_seconds = 0.0;
};

struct ExperimentReport {
  std::string engine_version;
  std::string config_echo;  // JSON
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double accuracy = 0.0;
  std::vector<Instance> queries;
  std::vector<CellReport> cells;
};

ExperimentReport run_experiment(const PreparedExperiment& prepared);
ExperimentReport run_experiment(const ExperimentConfig& config);

// Deterministic outputs: none of these include timings.
std::string format_report_table(const ExperimentReport& report);
std::string format_report_json(const ExperimentReport& report);
// One JSON object per (cell, query) with the full substitution trace.
std::string format_records(const ExperimentReport& report, const Schema& schema);
std::string format_explanations(const ExperimentReport& report, const Schema& schema,
                                std::optional<std::string_view> line_template = std::nullopt);

// Writes report.txt, report.json, records.jsonl, explanations.txt and
// schema.txt to `dir`; wall-clock timings go to timings.json.
void write_report(const ExperimentReport& report, const PreparedExperiment& prepared,
                  const std::filesystem::path& dir);

// Per-cell means of #F and $F across runs that differ only in seed.
struct SeedSummaryCell {
  std::string key;
  std::size_t runs = 0;  // runs in which the cell produced metrics
  double mean_changes = 0.0;
  double mean_amount = 0.0;
};
std::vector<SeedSummaryCell> summarize_seeds(const std::vector<ExperimentReport>& reports);
std::string format_seed_summary(const std::vector<std::uint64_t>& seeds,
                                const std::vector<ExperimentReport>& reports);

struct RecomputedCell {
  std::string key;
  MetricsReport metrics;
};

// Recomputes per-cell metrics from a records.jsonl dump.
std::vector<RecomputedCell> recompute_metrics(const std::filesystem::path& records, const Schema& schema);

}  // namespace discern
