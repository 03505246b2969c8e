#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "discern/counterfactual.hpp"
#include "discern/dataset.hpp"

namespace discern {

struct QueryMetrics {
  std::size_t n_changes = 0;
  double amount = 0.0;
};

struct MetricsReport {
  std::size_t n_queries = 0;
  double mean_changes = 0.0;  // #F: changed features per counterfactual
  double mean_amount = 0.0;   // $F: total change over total changed features
  std::vector<QueryMetrics> per_query;
};

// Counts and deltas come from comparing each final counterfactual with its
// query. #F divides by the number of queries; $F divides the summed deltas
// by the total number of changed features across the batch.
MetricsReport compute_metrics(std::span<const Instance> counterfactuals, std::span<const Instance> queries,
                              const Schema& schema);
MetricsReport compute_metrics(std::span<const CounterfactualResult> results, std::span<const Instance> queries,
                              const Schema& schema);

}  // namespace discern
