#include "discern/counterfactual.hpp"
#include "discern/error.hpp"
#include "discern/random_forest.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace discern;
using testsupport::continuous_schema;

namespace {

NunResult make_nun(Instance x, std::size_t cls) { return NunResult{std::move(x), cls, 0.0, 0}; }

RelevanceWeights weights(std::vector<double> w) {
  RelevanceWeights r;
  r.weights = std::move(w);
  return r;
}

}  // namespace

TEST_CASE("single differing feature") {
  const auto model = testsupport::binary_model([](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; });
  const auto schema = continuous_schema(2);
  const auto r = discern::discern(Instance{{0.2, 0.8}}, 0, make_nun(Instance{{0.9, 0.8}}, 1), model, schema,
                                  weights({0.0, 1.0}), OrderingMode::QRel);
  CHECK(r.n_changes() == 1);
  CHECK(r.counterfactual == Instance{{0.9, 0.8}});
  CHECK(r.new_class == 1);
  CHECK(r.amount == doctest::Approx(0.7));
}

TEST_CASE("conjunction model needs both features") {
  const auto model =
      testsupport::binary_model([](std::span<const double> x) { return x[0] > 0.5 && x[1] > 0.5 ? 1.0 : 0.0; });
  const auto schema = continuous_schema(4);
  const Instance q{{0.1, 0.1, 0.1, 0.1}};
  const auto nun = make_nun(Instance{{0.9, 0.9, 0.9, 0.9}}, 1);
  const auto late = discern::discern(q, 0, nun, model, schema, weights({0.1, 0.2, 0.9, 0.8}), OrderingMode::QRel);
  CHECK(late.n_changes() == 4);
  const auto early = discern::discern(q, 0, nun, model, schema, weights({0.9, 0.8, 0.1, 0.2}), OrderingMode::NRel);
  CHECK(early.n_changes() == 2);
  CHECK(early.changes[0].feature == 0);
  CHECK(early.changes[1].feature == 1);
}

TEST_CASE("features already equal are skipped") {
  const auto model = testsupport::binary_model([](std::span<const double> x) { return x[2] > 0.5 ? 1.0 : 0.0; });
  const auto schema = continuous_schema(3);
  const auto r = discern::discern(Instance{{0.3, 0.4, 0.1}}, 0, make_nun(Instance{{0.3, 0.4, 0.9}}, 1), model, schema,
                                  weights({1.0, 0.9, 0.0}), OrderingMode::QRel);
  REQUIRE(r.n_changes() == 1);
  CHECK(r.changes[0] == FeatureChange{2, 0.1, 0.9});
}

TEST_CASE("RND ordering is seeded") {
  const auto data = testsupport::make_planted_dataset(200, 6, 2, 3);
  ForestParams p;
  p.n_trees = 10;
  const auto forest = train_random_forest(data, p);
  const std::vector<std::size_t> preds = [&] {
    std::vector<std::size_t> v;
    for (const auto& x : data.instances()) v.push_back(forest.predict(x));
    return v;
  }();
  const auto& q = data.instance(0);
  const auto qc = forest.predict(q);
  const auto nun = find_nun(data, preds, q, qc);
  OrderingOptions opts;
  opts.seed = 5;
  const auto a = discern::discern(q, qc, nun, forest, data.schema(), RelevanceWeights{}, OrderingMode::RND, opts);
  const auto b = discern::discern(q, qc, nun, forest, data.schema(), RelevanceWeights{}, OrderingMode::RND, opts);
  CHECK(a.changes == b.changes);
}

TEST_CASE("NoFlip when the NUN is not unlike") {
  const auto model = testsupport::binary_model([](std::span<const double>) { return 0.0; });
  const auto schema = continuous_schema(2);
  CHECK_THROWS_AS(discern::discern(Instance{{0.1, 0.1}}, 0, make_nun(Instance{{0.9, 0.9}}, 1), model, schema,
                                   weights({1.0, 0.0}), OrderingMode::QRel),
                  Error);
}

TEST_CASE("multi-class flip must reach the desired class when one is given") {
  // Class by thresholds on x0: <0.33 -> 0, <0.66 -> 1, else 2. Feature 1 is ignored.
  const testsupport::FunctionModel model(3, [](std::span<const double> x) {
    std::vector<double> p(3, 0.0);
    p[x[0] < 0.33 ? 0 : x[0] < 0.66 ? 1 : 2] = 1.0;
    return p;
  });
  const auto schema = continuous_schema(2, 3);
  const auto r = substitute_until_flip(Instance{{0.1, 0.1}}, 0, make_nun(Instance{{0.5, 0.9}}, 1), model, schema,
                                       std::vector<std::size_t>{0, 1});
  CHECK(r.new_class == 1);
  CHECK_THROWS_AS(substitute_until_flip(Instance{{0.1, 0.1}}, 0, make_nun(Instance{{0.5, 0.9}}, 1), model, schema,
                                        std::vector<std::size_t>{0, 1}, 2),
                  Error);
}

TEST_CASE("explain_query") {
  const auto data = testsupport::make_planted_dataset(150, 4, 2, 8);
  ForestParams p;
  p.n_trees = 10;
  const auto forest = train_random_forest(data, p);
  ExplainerConfig cfg;
  cfg.n_samples = 200;
  cfg.background_size = 20;
  std::size_t q = 0;
  while (forest.predict(data.instance(q)) != 0) ++q;
  CHECK_THROWS_AS(explain_query(data, forest, data.instance(q), RelevanceMethod::SHAP, OrderingMode::QRel, cfg, 0),
                  Error);
  for (const auto method : {RelevanceMethod::LIME, RelevanceMethod::SHAP, RelevanceMethod::Chi2,
                            RelevanceMethod::LIME_C, RelevanceMethod::SHAP_C, RelevanceMethod::RND}) {
    for (const auto mode : {OrderingMode::QRel, OrderingMode::NRel}) {
      const auto r = explain_query(data, forest, data.instance(q), method, mode, cfg, 1);
      CHECK(r.new_class == 1);
      CHECK(forest.predict(r.counterfactual) == 1);
      CHECK(r.n_changes() >= 1);
      for (const auto& ch : r.changes) CHECK(r.counterfactual[ch.feature] == r.nun_used.nun[ch.feature]);
    }
  }
}

TEST_CASE("single-feature data: the counterfactual is the NUN") {
  const Dataset data(continuous_schema(1), {Instance{{0.1}}, Instance{{0.2}}, Instance{{0.8}}, Instance{{0.9}}},
                     {0, 0, 1, 1});
  const auto model = testsupport::binary_model([](std::span<const double> x) { return x[0] > 0.5 ? 1.0 : 0.0; });
  ExplainerConfig cfg;
  cfg.background_size = 4;
  const auto r = explain_query(data, model, Instance{{0.15}}, RelevanceMethod::SHAP, OrderingMode::QRel, cfg);
  CHECK(r.n_changes() == 1);
  CHECK(r.counterfactual == Instance{{0.8}});
}

TEST_CASE("QRel and NRel coincide under a constant explainer") {
  const auto data = testsupport::make_mixed_dataset(120, 3, 2, 2, 12);
  ForestParams p;
  p.n_trees = 8;
  const auto forest = train_random_forest(data, p);
  CounterfactualEngine engine(data, data, forest, ExplainerConfig{});
  for (std::size_t q = 0; q < 20; ++q) {
    const auto& x = data.instance(q);
    const auto qc = forest.predict(x);
    const auto nun = engine.nun_for(x, qc);
    const auto a = engine.explain(x, qc, nun, RelevanceMethod::Chi2, OrderingMode::QRel, 1);
    const auto b = engine.explain(x, qc, nun, RelevanceMethod::Chi2, OrderingMode::NRel, 1);
    CHECK(a.changes == b.changes);
  }
}

TEST_CASE("ordering modes parse") {
  CHECK(parse_ordering_mode("qrel") == OrderingMode::QRel);
  CHECK(parse_ordering_mode("NRel") == OrderingMode::NRel);
  CHECK(parse_ordering_mode("null") == OrderingMode::RND);
  CHECK_FALSE(parse_ordering_mode("both"));
}
