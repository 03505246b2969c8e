#include "discern/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "discern/error.hpp"
#include "discern/external_model.hpp"
#include "discern/parallel.hpp"
#include "discern/rng.hpp"
#include "discern/textgen.hpp"
#include "discern/version.hpp"
#include "json.hpp"

namespace discern {

using Json = nlohmann::ordered_json;

// ------------------------------------------------------------------ CellSpec

CellSpec CellSpec::normalized() const {
  if (method == RelevanceMethod::RND || mode == OrderingMode::RND) return {RelevanceMethod::RND, OrderingMode::RND};
  if (method == RelevanceMethod::Chi2) return {RelevanceMethod::Chi2, OrderingMode::QRel};
  return *this;
}

std::string CellSpec::key() const {
  const auto n = normalized();
  if (n.method == RelevanceMethod::RND) return "RND";
  if (n.method == RelevanceMethod::Chi2) return "Chi2";
  return std::string(to_string(n.method)) + "-" + std::string(to_string(n.mode));
}

std::string CellSpec::label() const {
  const auto n = normalized();
  if (n.method == RelevanceMethod::Chi2) return "DisCERN[Chi2]";
  return "DisCERN[" + std::string(to_string(n.method)) + ", " + std::string(to_string(n.mode)) + "]";
}

CellSpec parse_cell(std::string_view text) {
  const auto sep = text.find_first_of("-:/");
  const auto method_text = text.substr(0, sep);
  const auto method = parse_relevance_method(method_text);
  if (!method) throw Error(ErrorCode::BadConfig, "unknown relevance method '" + std::string(method_text) + "'");
  CellSpec cell{*method, OrderingMode::QRel};
  if (sep != std::string_view::npos) {
    const auto mode = parse_ordering_mode(text.substr(sep + 1));
    if (!mode) throw Error(ErrorCode::BadConfig, "unknown ordering mode in '" + std::string(text) + "'");
    cell.mode = *mode;
  } else if (*method != RelevanceMethod::RND && *method != RelevanceMethod::Chi2) {
    throw Error(ErrorCode::BadConfig, "cell '" + std::string(text) + "' needs a mode (QRel or NRel)");
  }
  return cell.normalized();
}

// -------------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (dataset.empty()) throw Error(ErrorCode::BadConfig, "'dataset' is required");
  if (!schema && target.empty()) throw Error(ErrorCode::BadConfig, "either 'schema' or 'target' is required");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw Error(ErrorCode::BadConfig, "test_fraction must be in (0,1)");
  if (cells.empty()) throw Error(ErrorCode::BadConfig, "'methods' must list at least one cell");
  if (model_file && external_model) throw Error(ErrorCode::BadConfig, "choose one of model 'file' or 'external'");
  if (forest.n_trees == 0) throw Error(ErrorCode::BadConfig, "n_trees must be >= 1");
  explainer.validate();
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "config must be a JSON object");
  const auto base = path.parent_path();

  ExperimentConfig c;
  c.dataset = resolve(base, get_or<std::string>(j, "dataset", ""));
  if (j.contains("schema")) c.schema = resolve(base, get_or<std::string>(j, "schema", ""));
  c.target = get_or<std::string>(j, "target", "");
  c.categorical_threshold = get_or<std::size_t>(j, "categorical_threshold", 0);
  c.test_fraction = get_or<double>(j, "test_fraction", 0.3);
  c.stratified = get_or<bool>(j, "stratified", true);
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.repeat_seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
  c.fit_bounds_on_train = get_or<bool>(j, "fit_bounds_on_train", true);
  c.threads = get_or<std::size_t>(j, "threads", 1);
  c.max_queries = get_or<std::size_t>(j, "max_queries", 0);
  c.output_dir = resolve(base, get_or<std::string>(j, "output_dir", "discern-out"));
  if (j.contains("desired_class")) c.desired_class = get_or<std::string>(j, "desired_class", "");
  if (j.contains("template")) c.line_template = resolve(base, get_or<std::string>(j, "template", ""));

  const auto case_base = get_or<std::string>(j, "case_base", "train");
  if (case_base == "train") c.case_base = CaseBaseSource::Train;
  else if (case_base == "train+test") c.case_base = CaseBaseSource::TrainAndTest;
  else throw Error(ErrorCode::BadConfig, "case_base must be 'train' or 'train+test'");

  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.forest.n_trees = get_or<std::size_t>(m, "n_trees", c.forest.n_trees);
    c.forest.max_depth = get_or<std::size_t>(m, "max_depth", c.forest.max_depth);
    c.forest.min_samples_leaf = get_or<std::size_t>(m, "min_samples_leaf", c.forest.min_samples_leaf);
    if (m.contains("file")) c.model_file = resolve(base, get_or<std::string>(m, "file", ""));
    if (m.contains("external")) c.external_model = resolve(base, get_or<std::string>(m, "external", ""));
  }
  if (j.contains("explainer")) {
    const auto& e = j.at("explainer");
    c.explainer.n_samples = get_or<std::size_t>(e, "n_samples", c.explainer.n_samples);
    if (e.contains("kernel_width")) c.explainer.kernel_width = get_or<double>(e, "kernel_width", 0.0);
    c.explainer.background_size = get_or<std::size_t>(e, "background_size", c.explainer.background_size);
    c.explainer.bins = get_or<std::size_t>(e, "bins", c.explainer.bins);
    c.explainer.absolute_order = get_or<bool>(e, "absolute_order", false);
    c.explainer.class_sample_limit = get_or<std::size_t>(e, "class_sample_limit", 0);
  }
  if (j.contains("methods")) {
    for (const auto& entry : j.at("methods")) {
      CellSpec cell;
      if (entry.is_string()) {
        cell = parse_cell(entry.get<std::string>());
      } else if (entry.is_object()) {
        const auto method = get_or<std::string>(entry, "method", "");
        const auto mode = get_or<std::string>(entry, "mode", "");
        cell = parse_cell(mode.empty() ? method : method + "-" + mode);
      } else {
        throw Error(ErrorCode::BadConfig, "'methods' entries must be strings or objects");
      }
      if (std::find(c.cells.begin(), c.cells.end(), cell) == c.cells.end()) c.cells.push_back(cell);
    }
  }
  c.validate();
  return c;
}

namespace {

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["dataset"] = c.dataset.filename().generic_string();
  if (c.schema) j["schema"] = c.schema->filename().generic_string();
  if (!c.target.empty()) j["target"] = c.target;
  j["categorical_threshold"] = c.categorical_threshold;
  j["test_fraction"] = c.test_fraction;
  j["stratified"] = c.stratified;
  j["seed"] = c.seed;
  if (!c.repeat_seeds.empty()) j["seeds"] = c.repeat_seeds;
  j["fit_bounds_on_train"] = c.fit_bounds_on_train;
  Json model;
  if (c.external_model) {
    model["external"] = c.external_model->filename().generic_string();
  } else if (c.model_file) {
    model["file"] = c.model_file->filename().generic_string();
  } else {
    model["n_trees"] = c.forest.n_trees;
    model["max_depth"] = c.forest.max_depth;
    model["min_samples_leaf"] = c.forest.min_samples_leaf;
  }
  j["model"] = model;
  Json methods = Json::array();
  for (const auto& cell : c.cells) methods.push_back(cell.key());
  j["methods"] = methods;
  Json e;
  e["n_samples"] = c.explainer.n_samples;
  if (c.explainer.kernel_width) e["kernel_width"] = *c.explainer.kernel_width;
  e["background_size"] = c.explainer.background_size;
  e["bins"] = c.explainer.bins;
  e["absolute_order"] = c.explainer.absolute_order;
  e["class_sample_limit"] = c.explainer.class_sample_limit;
  j["explainer"] = e;
  if (c.desired_class) j["desired_class"] = *c.desired_class;
  j["case_base"] = c.case_base == CaseBaseSource::Train ? "train" : "train+test";
  j["max_queries"] = c.max_queries;
  return j;
}

Dataset concatenate(const Dataset& a, const Dataset& b) {
  auto instances = a.instances();
  auto labels = a.labels();
  instances.insert(instances.end(), b.instances().begin(), b.instances().end());
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  return Dataset(a.schema(), std::move(instances), std::move(labels));
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::uint64_t explainer_master(std::uint64_t seed) { return derive_seed(seed, "explainer"); }

}  // namespace

// ----------------------------------------------------------------- prepare

PreparedExperiment prepare_experiment(const ExperimentConfig& config) {
  config.validate();
  PreparedExperiment p;
  p.config = config;

  const Schema declared =
      config.schema ? read_schema_file(*config.schema) : infer_schema(config.dataset, config.target,
                                                                      config.categorical_threshold);
  const RawTable raw = read_table(config.dataset, declared);
  const auto idx = split_indices(raw.labels, raw.schema.num_classes(), config.test_fraction,
                                 derive_seed(config.seed, "split"), config.stratified);
  if (idx.train.empty() || idx.test.empty()) throw Error(ErrorCode::BadConfig, "split produced an empty partition");
  p.schema = std::make_shared<const Schema>(config.fit_bounds_on_train ? fit_bounds(raw, idx.train) : raw.schema);
  p.train = std::make_shared<const Dataset>(normalize(raw.subset(idx.train), *p.schema));
  p.test = std::make_shared<const Dataset>(normalize(raw.subset(idx.test), *p.schema));
  p.case_base = config.case_base == CaseBaseSource::Train ? p.train
                                                          : std::make_shared<const Dataset>(concatenate(*p.train, *p.test));

  if (config.external_model) {
    p.model = external_model_adapter(*config.external_model);
  } else if (config.model_file) {
    auto forest = std::make_shared<const RandomForest>(RandomForest::load(*config.model_file));
    if (forest->num_features() != p.schema->size() || forest->num_classes() != p.schema->num_classes()) {
      throw Error(ErrorCode::BadModelFile, "model shape does not match the dataset schema");
    }
    p.forest = forest.get();
    p.model = std::move(forest);
  } else {
    ForestParams params = config.forest;
    params.seed = derive_seed(config.seed, "model");
    params.threads = config.threads;
    auto forest = std::make_shared<const RandomForest>(train_random_forest(*p.train, params));
    p.forest = forest.get();
    p.model = std::move(forest);
  }
  if (p.model->num_classes() != p.schema->num_classes()) {
    throw Error(ErrorCode::BadConfig, "model class count does not match the schema");
  }
  p.accuracy = evaluate_accuracy(*p.model, *p.test);

  if (config.desired_class) {
    p.desired_class = p.schema->class_index(*config.desired_class);
    if (!p.desired_class) throw Error(ErrorCode::BadConfig, "desired class '" + *config.desired_class + "' is not a label");
  }
  const auto predictions = predict_all(*p.model, *p.test, config.threads);
  for (std::size_t r = 0; r < predictions.size(); ++r) {
    if (!p.desired_class || predictions[r] != *p.desired_class) p.query_rows.push_back(r);
  }
  if (config.max_queries != 0 && p.query_rows.size() > config.max_queries) {
    Rng rng(derive_seed(config.seed, "queries"));
    rng.shuffle(p.query_rows);
    p.query_rows.resize(config.max_queries);
    std::sort(p.query_rows.begin(), p.query_rows.end());
  }
  return p;
}

// -------------------------------------------------------------------- run

ExperimentReport run_experiment(const PreparedExperiment& p) {
  const auto& config = p.config;
  ExperimentReport report;
  report.engine_version = kEngineVersion;
  report.config_echo = config_to_json(config).dump();
  report.n_train = p.train->size();
  report.n_test = p.test->size();
  report.accuracy = p.accuracy;

  const auto master = explainer_master(config.seed);
  ExplainerConfig explainer = config.explainer;
  explainer.seed = master;
  CounterfactualEngine engine(*p.case_base, *p.train, *p.model, explainer, config.threads);

  const std::size_t n = p.query_rows.size();
  report.queries.reserve(n);
  for (const auto r : p.query_rows) report.queries.push_back(p.test->instance(r));

  // NUN retrieval does not depend on the cell, so every cell reuses it.
  std::vector<std::size_t> query_class(n);
  std::vector<std::optional<NunResult>> nuns(n);
  std::vector<std::string> nun_errors(n);
  parallel_for(n, config.threads, [&](std::size_t q) {
    try {
      query_class[q] = p.model->predict(report.queries[q]);
      nuns[q] = engine.nun_for(report.queries[q], query_class[q], p.desired_class);
    } catch (const Error& e) {
      nun_errors[q] = e.what();
    }
  });

  for (const auto& cell : config.cells) {
    CellReport cr;
    cr.cell = cell.normalized();
    cr.outcomes.resize(n);
    const auto start = std::chrono::steady_clock::now();
    const std::string stream = std::string(to_string(cr.cell.method));
    parallel_for(n, config.threads, [&](std::size_t q) {
      auto& out = cr.outcomes[q];
      out.query = q;
      out.test_row = p.query_rows[q];
      if (!nuns[q]) {
        out.error = nun_errors[q];
        return;
      }
      try {
        out.result = engine.explain(report.queries[q], query_class[q], *nuns[q], cr.cell.method, cr.cell.mode,
                                    derive_seed(master, stream, q), p.desired_class);
      } catch (const Error& e) {
        out.error = e.what();
      }
    });
    cr.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::vector<Instance> cfs, qs;
    for (const auto& o : cr.outcomes) {
      if (o.result) {
        cfs.push_back(o.result->counterfactual);
        qs.push_back(report.queries[o.query]);
      } else {
        ++cr.failures;
      }
    }
    if (!cfs.empty()) cr.metrics = compute_metrics(cfs, qs, *p.schema);
    report.cells.push_back(std::move(cr));
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) { return run_experiment(prepare_experiment(config)); }

// ------------------------------------------------------------------ output

std::string format_report_table(const ExperimentReport& report) {
  std::ostringstream out;
  const auto config = Json::parse(report.config_echo);
  out << "discern " << report.engine_version << " experiment report\n";
  out << "dataset: " << config.value("dataset", "") << " (train " << report.n_train << ", test " << report.n_test
      << ")\n";
  out << "model accuracy: " << fixed(report.accuracy, 4) << "\n";
  out << "queries: " << report.queries.size() << "\n";
  if (config.contains("desired_class")) out << "desired class: " << config["desired_class"].get<std::string>() << "\n";
  out << "\n";

  std::size_t width = 8;
  for (const auto& c : report.cells) width = std::max(width, c.cell.label().size());
  const auto pad = [&](const std::string& s) { return s + std::string(width + 2 - s.size(), ' '); };
  const auto col = [](const std::string& s, std::size_t w) { return std::string(w - std::min(w, s.size()), ' ') + s; };
  out << pad("method") << col("#F", 8) << col("$F", 10) << col("ok", 8) << col("failed", 8) << "\n";
  for (const auto& c : report.cells) {
    const std::size_t ok = c.outcomes.size() - c.failures;
    out << pad(c.cell.label()) << col(c.metrics ? fixed(c.metrics->mean_changes, 2) : "-", 8)
        << col(c.metrics ? fixed(c.metrics->mean_amount, 4) : "-", 10) << col(std::to_string(ok), 8)
        << col(std::to_string(c.failures), 8) << "\n";
  }
  return out.str();
}

std::string format_report_json(const ExperimentReport& report) {
  Json j;
  j["engine_version"] = report.engine_version;
  j["config"] = Json::parse(report.config_echo);
  j["n_train"] = report.n_train;
  j["n_test"] = report.n_test;
  j["accuracy"] = report.accuracy;
  j["n_queries"] = report.queries.size();
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    Json cell;
    cell["cell"] = c.cell.key();
    cell["label"] = c.cell.label();
    cell["method"] = to_string(c.cell.method);
    cell["mode"] = to_string(c.cell.mode);
    cell["succeeded"] = c.outcomes.size() - c.failures;
    cell["failed"] = c.failures;
    if (c.metrics) {
      cell["mean_changes"] = c.metrics->mean_changes;
      cell["mean_amount"] = c.metrics->mean_amount;
    }
    cells.push_back(cell);
  }
  j["cells"] = cells;
  return j.dump(2) + "\n";
}

std::string format_records(const ExperimentReport& report, const Schema& schema) {
  std::string out;
  const auto& labels = schema.class_labels();
  for (const auto& c : report.cells) {
    for (const auto& o : c.outcomes) {
      Json r;
      r["cell"] = c.cell.key();
      r["query"] = o.query;
      r["test_row"] = o.test_row;
      r["query_values"] = report.queries[o.query].values;
      if (!o.result) {
        r["status"] = "error";
        r["error"] = o.error;
      } else {
        const auto& res = *o.result;
        r["status"] = "ok";
        r["query_class"] = labels.at(res.query_class);
        r["new_class"] = labels.at(res.new_class);
        r["nun_case"] = res.nun_used.case_index;
        r["nun_distance"] = res.nun_used.distance;
        Json trace = Json::array();
        for (const auto& ch : res.changes) trace.push_back(Json{{"feature", ch.feature}, {"from", ch.from}, {"to", ch.to}});
        r["trace"] = trace;
        r["counterfactual"] = res.counterfactual.values;
        r["n_changes"] = res.n_changes();
        r["amount"] = res.amount;
      }
      out += r.dump() + "\n";
    }
  }
  return out;
}

std::string format_explanations(const ExperimentReport& report, const Schema& schema,
                                std::optional<std::string_view> line_template) {
  std::string out;
  for (std::size_t q = 0; q < report.queries.size(); ++q) {
    for (const auto& c : report.cells) {
      const auto& o = c.outcomes.at(q);
      out += "[query " + std::to_string(q) + ", test row " + std::to_string(o.test_row) + "] " + c.cell.label() + "\n";
      if (o.result) {
        out += render(*o.result, report.queries[q], schema, schema.class_labels(), line_template).str();
      } else {
        out += "  failed: " + o.error + "\n";
      }
      out += "\n";
    }
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << content;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

void write_report(const ExperimentReport& report, const PreparedExperiment& prepared, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::optional<std::string> tmpl;
  if (prepared.config.line_template) {
    tmpl = read_file(*prepared.config.line_template);
    while (!tmpl->empty() && (tmpl->back() == '\n' || tmpl->back() == '\r')) tmpl->pop_back();
  }
  write_file(dir / "report.txt", format_report_table(report));
  write_file(dir / "report.json", format_report_json(report));
  write_file(dir / "records.jsonl", format_records(report, *prepared.schema));
  write_file(dir / "explanations.txt",
             format_explanations(report, *prepared.schema,
                                 tmpl ? std::optional<std::string_view>(*tmpl) : std::nullopt));
  write_schema_file(dir / "schema.txt", *prepared.schema);

  Json timings;
  for (const auto& c : report.cells) timings[c.cell.key()] = c.wall_seconds;
  write_file(dir / "timings.json", timings.dump(2) + "\n");
}

std::vector<SeedSummaryCell> summarize_seeds(const std::vector<ExperimentReport>& reports) {
  std::vector<SeedSummaryCell> out;
  if (reports.empty()) return out;
  for (const auto& c : reports.front().cells) out.push_back({c.cell.key()});
  for (const auto& report : reports) {
    for (std::size_t i = 0; i < out.size() && i < report.cells.size(); ++i) {
      const auto& m = report.cells[i].metrics;
      if (!m) continue;
      ++out[i].runs;
      out[i].mean_changes += m->mean_changes;
      out[i].mean_amount += m->mean_amount;
    }
  }
  for (auto& c : out) {
    if (c.runs == 0) continue;
    c.mean_changes /= static_cast<double>(c.runs);
    c.mean_amount /= static_cast<double>(c.runs);
  }
  return out;
}

std::string format_seed_summary(const std::vector<std::uint64_t>& seeds, const std::vector<ExperimentReport>& reports) {
  std::ostringstream out;
  out << "seeds:";
  for (const auto s : seeds) out << " " << s;
  out << "\n";
  double acc = 0.0;
  for (const auto& r : reports) acc += r.accuracy;
  if (!reports.empty()) out << "mean accuracy: " << fixed(acc / static_cast<double>(reports.size()), 4) << "\n";
  out << "\n";
  char line[128];
  std::snprintf(line, sizeof line, "%-14s %8s %10s %6s\n", "cell", "#F", "$F", "runs");
  out << line;
  for (const auto& c : summarize_seeds(reports)) {
    if (c.runs) {
      std::snprintf(line, sizeof line, "%-14s %8.2f %10.4f %6zu\n", c.key.c_str(), c.mean_changes, c.mean_amount,
                    c.runs);
    } else {
      std::snprintf(line, sizeof line, "%-14s %8s %10s %6zu\n", c.key.c_str(), "-", "-", c.runs);
    }
    out << line;
  }
  return out.str();
}

std::vector<RecomputedCell> recompute_metrics(const std::filesystem::path& records, const Schema& schema) {
  std::ifstream in(records);
  if (!in) throw Error(ErrorCode::Io, "cannot open records '" + records.string() + "'");
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<Instance>, std::vector<Instance>>> cells;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json r;
    try {
      r = Json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadConfig, records.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const auto key = r.at("cell").get<std::string>();
    if (!cells.count(key)) order.push_back(key);
    auto& [cfs, qs] = cells[key];
    if (r.at("status") != "ok") continue;
    Instance query{r.at("query_values").get<std::vector<double>>()};
    Instance cf = query;
    for (const auto& step : r.at("trace")) cf[step.at("feature").get<std::size_t>()] = step.at("to").get<double>();
    qs.push_back(std::move(query));
    cfs.push_back(std::move(cf));
  }
  std::vector<RecomputedCell> out;
  for (const auto& key : order) {
    const auto& [cfs, qs] = cells[key];
    if (qs.empty()) continue;
    out.push_back({key, compute_metrics(cfs, qs, schema)});
  }
  return out;
}

}  // namespace discern
