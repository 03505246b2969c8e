#include <algorithm>

#include "discern/error.hpp"
#include "discern/metrics.hpp"
#include "discern/rng.hpp"
#include "discern/textgen.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace discern;

TEST_CASE("metrics on a single query") {
  const auto schema = testsupport::continuous_schema(3);
  const std::vector<Instance> q{Instance{{0.2, 0.5, 0.5}}};
  const std::vector<Instance> cf{Instance{{0.3, 0.5, 0.8}}};
  const auto r = compute_metrics(cf, q, schema);
  CHECK(r.n_queries == 1);
  CHECK(r.mean_changes == 2.0);
  CHECK(r.mean_amount == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(r.per_query.size() == 1);
}

TEST_CASE("metrics errors") {
  const auto schema = testsupport::continuous_schema(1);
  const std::vector<Instance> one{Instance{{0.2}}};
  const std::vector<Instance> two{Instance{{0.2}}, Instance{{0.4}}};
  CHECK_THROWS_AS(compute_metrics(one, two, schema), Error);
  CHECK_THROWS_AS(compute_metrics(one, one, schema), Error);
}

TEST_CASE("metrics match the double-loop reference and are order invariant") {
  Rng rng(1234);
  for (int trial = 0; trial < 20; ++trial) {
    const auto data = testsupport::make_mixed_dataset(40, 3, 2, 2, rng.next());
    std::vector<Instance> qs = data.instances();
    std::vector<Instance> cfs = qs;
    for (auto& cf : cfs) {
      const auto i = rng.index(cf.size());
      cf[i] = data.schema().feature(i).kind.is_categorical()
                  ? static_cast<double>((static_cast<std::size_t>(cf[i]) + 1) %
                                        data.schema().feature(i).kind.categories().size())
                  : (cf[i] < 0.5 ? cf[i] + 0.4 : cf[i] - 0.4);
      if (rng.uniform() < 0.5) cf[(i + 1) % cf.size()] = data.instance(0)[(i + 1) % cf.size()];
    }
    // A query may coincide with instance 0 on the second edit; drop queries with no change.
    std::vector<Instance> q2, c2;
    for (std::size_t j = 0; j < qs.size(); ++j) {
      if (!(qs[j] == cfs[j])) {
        q2.push_back(qs[j]);
        c2.push_back(cfs[j]);
      }
    }
    const auto r = compute_metrics(c2, q2, data.schema());
    const auto ref = testsupport::reference_metrics(c2, q2, data.schema());
    CHECK(r.mean_changes == ref.mean_changes);
    CHECK(std::fabs(r.mean_amount - ref.mean_amount) <= 1e-12);

    std::reverse(q2.begin(), q2.end());
    std::reverse(c2.begin(), c2.end());
    const auto rev = compute_metrics(c2, q2, data.schema());
    CHECK(rev.mean_changes == r.mean_changes);
    CHECK(std::fabs(rev.mean_amount - r.mean_amount) <= 1e-12);
  }
}

namespace {

Schema income_schema() {
  return parse_schema(
      "target = income\nclasses = <=50K | >50K\n"
      "feature hours-per-week = continuous 0 100\n"
      "feature sector = categorical public | private\n"
      "feature age = continuous 17 90\n");
}

CounterfactualResult result_for(const Instance& q, const Instance& cf) {
  CounterfactualResult r;
  r.counterfactual = cf;
  r.query_class = 0;
  r.new_class = 1;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] != cf[i]) r.changes.push_back({i, q[i], cf[i]});
  }
  return r;
}

}  // namespace

TEST_CASE("default rendering") {
  const auto schema = income_schema();
  const Instance q{{0.4, 0.0, 0.5}};
  const auto text = render(result_for(q, Instance{{0.5, 0.0, 0.5}}), q, schema, schema.class_labels());
  REQUIRE(text.lines.size() == 1);
  CHECK(text.lines[0] == "increase hours-per-week from 40 to 50");
  CHECK(text.header == "The model predicts \"<=50K\". To be predicted \">50K\" instead:");
  CHECK(text.outcome == "With these changes the model predicts \">50K\".");

  const auto two = render(result_for(q, Instance{{0.3, 1.0, 0.5}}), q, schema, schema.class_labels());
  REQUIRE(two.lines.size() == 2);
  CHECK(two.lines[0] == "decrease hours-per-week from 40 to 30");
  CHECK(two.lines[1] == "change sector from public to private");
}

TEST_CASE("templates") {
  const auto schema = income_schema();
  const Instance q{{0.4, 0.0, 0.5}};
  const auto r = result_for(q, Instance{{0.5, 1.0, 0.5}});
  const auto text = render(r, q, schema, schema.class_labels(), "{feature}: {old} -> {new} ({outcome_to})");
  CHECK(text.lines[0] == "hours-per-week: 40 -> 50 (>50K)");
  CHECK_THROWS_AS(render(r, q, schema, schema.class_labels(), "{bogus}"), Error);
  CHECK_THROWS_AS(validate_template("{feature"), Error);
  CHECK_NOTHROW(validate_template("plain text"));
}

TEST_CASE("default lines parse back into the raw changes") {
  Rng rng(17);
  const auto schema = income_schema();
  for (int t = 0; t < 100; ++t) {
    const Instance q{{rng.uniform(), static_cast<double>(rng.index(2)), rng.uniform()}};
    Instance cf = q;
    for (std::size_t i = 0; i < 3; ++i) {
      if (rng.uniform() < 0.6) cf[i] = i == 1 ? 1.0 - q[1] : rng.uniform();
    }
    if (cf == q) cf[1] = 1.0 - q[1];
    const auto text = render(result_for(q, cf), q, schema, schema.class_labels());
    CHECK(parse_default_lines(text.lines, schema) == text.raw_changes);
  }
}

TEST_CASE("format_value uses four significant digits in raw units") {
  const auto kind = FeatureKind::continuous(0.0, 1000.0);
  CHECK(format_value(kind, 0.123456) == "123.5");
  CHECK(format_value(kind, 0.5) == "500");
  CHECK(format_value(FeatureKind::categorical({"x", "y"}), 1.0) == "y");
}
