#include "discern/metrics.hpp"

#include "discern/error.hpp"

namespace discern {

MetricsReport compute_metrics(std::span<const Instance> counterfactuals, std::span<const Instance> queries,
                              const Schema& schema) {
  if (counterfactuals.size() != queries.size()) {
    throw Error(ErrorCode::LengthMismatch, "one query per counterfactual is required");
  }
  if (queries.empty()) throw Error(ErrorCode::LengthMismatch, "metrics need at least one query");

  MetricsReport report;
  report.n_queries = queries.size();
  report.per_query.reserve(queries.size());
  std::size_t total_changes = 0;
  double total_amount = 0.0;
  for (std::size_t j = 0; j < queries.size(); ++j) {
    const auto& x = queries[j];
    const auto& cf = counterfactuals[j];
    if (x.size() != schema.size() || cf.size() != schema.size()) {
      throw Error(ErrorCode::LengthMismatch, "instance length differs from schema at query " + std::to_string(j));
    }
    QueryMetrics q;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (cf[i] == x[i]) continue;
      ++q.n_changes;
      q.amount += feature_delta(schema, i, cf[i], x[i]);
    }
    if (q.n_changes == 0) {
      throw Error(ErrorCode::InvalidArgument, "counterfactual " + std::to_string(j) + " equals its query");
    }
    total_changes += q.n_changes;
    total_amount += q.amount;
    report.per_query.push_back(q);
  }
  report.mean_changes = static_cast<double>(total_changes) / static_cast<double>(queries.size());
  report.mean_amount = total_amount / static_cast<double>(total_changes);
  return report;
}

MetricsReport compute_metrics(std::span<const CounterfactualResult> results, std::span<const Instance> queries,
                              const Schema& schema) {
  std::vector<Instance> counterfactuals;
  counterfactuals.reserve(results.size());
  for (const auto& r : results) counterfactuals.push_back(r.counterfactual);
  return compute_metrics(counterfactuals, queries, schema);
}

}  // namespace discern
