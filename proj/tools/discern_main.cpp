// discern: command-line front end.
//
//   discern train   --config exp.json [--seed N] [--out DIR]
//   discern explain --config exp.json --query I [--method M --mode P] [--desired-class L]
//   discern bench   --config exp.json [--seed N] [--out DIR] [--method M --mode P] [--desired-class L]
//   discern metrics --in DIR/records.jsonl --schema DIR/schema.txt

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "discern/error.hpp"
#include "discern/harness.hpp"
#include "discern/rng.hpp"
#include "discern/textgen.hpp"
#include "discern/version.hpp"
#include "json.hpp"

namespace {

using namespace discern;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> method;
  std::optional<std::string> mode;
  std::optional<std::string> desired_class;
};

ExperimentConfig effective_config(const CommonOptions& o) {
  auto c = load_experiment_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  if (o.desired_class) c.desired_class = *o.desired_class;
  if (o.method) {
    const std::string text = o.mode ? *o.method + "-" + *o.mode : *o.method;
    c.cells = {parse_cell(text)};
  } else if (o.mode) {
    throw Error(ErrorCode::BadConfig, "--mode needs --method");
  }
  c.validate();
  return c;
}

std::optional<std::string> read_template(const ExperimentConfig& c) {
  if (!c.line_template) return std::nullopt;
  std::ifstream in(*c.line_template);
  if (!in) throw Error(ErrorCode::Io, "cannot read template '" + c.line_template->string() + "'");
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

int cmd_train(const CommonOptions& o) {
  const auto c = effective_config(o);
  const auto p = prepare_experiment(c);
  if (!p.forest) throw Error(ErrorCode::BadConfig, "train needs an in-engine forest, not an external model");
  std::filesystem::create_directories(c.output_dir);
  p.forest->save(c.output_dir / "model.forest");
  write_schema_file(c.output_dir / "schema.txt", *p.schema);
  std::printf("trained %zu trees on %zu rows; test accuracy %.4f\n", p.forest->trees().size(), p.train->size(),
              p.accuracy);
  std::printf("wrote %s\n", (c.output_dir / "model.forest").string().c_str());
  return 0;
}

int cmd_explain(const CommonOptions& o, std::size_t query_row) {
  auto c = effective_config(o);
  if (c.cells.size() != 1 && !o.method) c.cells.resize(1);
  const auto p = prepare_experiment(c);
  if (query_row >= p.test->size()) {
    throw Error(ErrorCode::InvalidArgument, "--query must be below the test size " + std::to_string(p.test->size()));
  }
  const auto cell = c.cells.front();
  ExplainerConfig explainer = c.explainer;
  explainer.seed = derive_seed(c.seed, "explainer");
  CounterfactualEngine engine(*p.case_base, *p.train, *p.model, explainer, c.threads);
  const auto& query = p.test->instance(query_row);
  const auto result = engine.explain(query, cell.method, cell.mode,
                                     derive_seed(explainer.seed, std::string(to_string(cell.method)), query_row),
                                     p.desired_class);
  const auto tmpl = read_template(c);
  std::cout << cell.label() << ", test row " << query_row << "\n";
  std::cout << render(result, query, *p.schema, p.schema->class_labels(),
                      tmpl ? std::optional<std::string_view>(*tmpl) : std::nullopt)
                   .str();
  nlohmann::ordered_json trace = nlohmann::ordered_json::array();
  for (const auto& ch : result.changes) {
    trace.push_back(nlohmann::ordered_json{{"feature", p.schema->feature(ch.feature).name}, {"from", ch.from}, {"to", ch.to}});
  }
  nlohmann::ordered_json j;
  j["nun_case"] = result.nun_used.case_index;
  j["nun_distance"] = result.nun_used.distance;
  j["n_changes"] = result.n_changes();
  j["amount"] = result.amount;
  j["trace"] = trace;
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_bench(const CommonOptions& o) {
  const auto c = effective_config(o);
  if (c.repeat_seeds.empty() || o.seed) {
    const auto p = prepare_experiment(c);
    const auto report = run_experiment(p);
    write_report(report, p, c.output_dir);
    std::cout << format_report_table(report);
    std::cout << "wrote " << c.output_dir.string() << "\n";
    return 0;
  }
  // One full run per seed in its own subdirectory, then the averages.
  std::vector<ExperimentReport> reports;
  for (const auto seed : c.repeat_seeds) {
    auto run = c;
    run.seed = seed;
    const auto p = prepare_experiment(run);
    reports.push_back(run_experiment(p));
    write_report(reports.back(), p, c.output_dir / ("seed-" + std::to_string(seed)));
  }
  const auto summary = format_seed_summary(c.repeat_seeds, reports);
  std::ofstream(c.output_dir / "summary.txt", std::ios::binary) << summary;
  std::cout << summary << "wrote " << c.output_dir.string() << "\n";
  return 0;
}

int cmd_metrics(const std::string& records, const std::string& schema_path) {
  const auto schema = read_schema_file(schema_path);
  const auto cells = recompute_metrics(records, schema);
  for (const auto& cell : cells) {
    std::printf("%-12s #F %.4f  $F %.6f  n %zu\n", cell.key.c_str(), cell.metrics.mean_changes,
                cell.metrics.mean_amount, cell.metrics.n_queries);
  }
  return 0;
}

void add_common(CLI::App* app, CommonOptions& o, bool selection) {
  app->add_option("--config", o.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "master seed, overrides the config (and its seed list)");
  app->add_option("--out", o.out, "output directory");
  if (selection) {
    app->add_option("--method", o.method, "RND, Chi2, LIME, SHAP, LIME_C or SHAP_C");
    app->add_option("--mode", o.mode, "qrel or nrel");
    app->add_option("--desired-class", o.desired_class, "class label the counterfactual must reach");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual explanations by nearest-unlike-neighbour feature substitution"};
  app.set_version_flag("--version", std::string(discern::kEngineVersion));
  app.require_subcommand(1);

  CommonOptions train_opts, explain_opts, bench_opts;
  auto* train = app.add_subcommand("train", "train a forest and write model.forest");
  add_common(train, train_opts, false);

  std::size_t query_row = 0;
  auto* explain = app.add_subcommand("explain", "explain one test-split row");
  add_common(explain, explain_opts, true);
  explain->add_option("--query", query_row, "row index in the test split")->required();

  auto* bench = app.add_subcommand("bench", "run the configured method matrix");
  add_common(bench, bench_opts, true);

  std::string records, schema;
  auto* metrics = app.add_subcommand("metrics", "recompute #F and $F from records.jsonl");
  metrics->add_option("--in", records, "records.jsonl from a bench run")->required()->check(CLI::ExistingFile);
  metrics->add_option("--schema", schema, "schema.txt from the same run")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*train) return cmd_train(train_opts);
    if (*explain) return cmd_explain(explain_opts, query_row);
    if (*bench) return cmd_bench(bench_opts);
    if (*metrics) return cmd_metrics(records, schema);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
