#include "discern/neighbours.hpp"

#include <algorithm>

#include "discern/error.hpp"

namespace discern {

namespace {

bool is_candidate(std::size_t predicted, std::size_t query_class, std::optional<std::size_t> desired) {
  return predicted != query_class && (!desired || predicted == *desired);
}

void check_inputs(const Dataset& case_base, std::span<const std::size_t> predictions, const Instance& query) {
  if (case_base.empty()) throw Error(ErrorCode::InvalidArgument, "case base is empty");
  if (predictions.size() != case_base.size()) {
    throw Error(ErrorCode::LengthMismatch, "one prediction per case is required");
  }
  if (query.size() != case_base.schema().size()) {
    throw Error(ErrorCode::InvalidArgument, "query length differs from schema");
  }
}

}  // namespace

NunResult find_nun(const Dataset& case_base, std::span<const std::size_t> case_predictions, const Instance& query,
                   std::size_t query_class, std::optional<std::size_t> desired_class) {
  check_inputs(case_base, case_predictions, query);
  const auto& schema = case_base.schema();
  std::optional<std::size_t> best;
  double best_distance = 0.0;
  for (std::size_t i = 0; i < case_base.size(); ++i) {
    if (!is_candidate(case_predictions[i], query_class, desired_class)) continue;
    const double d = distance(query, case_base.instance(i), schema);
    if (!best || d < best_distance) {
      best = i;
      best_distance = d;
    }
  }
  if (!best) throw Error(ErrorCode::NoUnlikeNeighbour, "no case is predicted as an unlike class");
  return {case_base.instance(*best), case_predictions[*best], best_distance, *best};
}

NunResult find_nun(const Dataset& case_base, const Classifier& model, const Instance& query,
                   std::size_t query_class, std::optional<std::size_t> desired_class) {
  const auto predictions = predict_all(model, case_base);
  return find_nun(case_base, predictions, query, query_class, desired_class);
}

std::vector<NunResult> find_k_nuns(const Dataset& case_base, std::span<const std::size_t> case_predictions,
                                   const Instance& query, std::size_t query_class, std::size_t k,
                                   std::optional<std::size_t> desired_class) {
  check_inputs(case_base, case_predictions, query);
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<std::pair<double, std::size_t>> candidates;
  for (std::size_t i = 0; i < case_base.size(); ++i) {
    if (!is_candidate(case_predictions[i], query_class, desired_class)) continue;
    candidates.emplace_back(distance(query, case_base.instance(i), case_base.schema()), i);
  }
  if (candidates.empty()) throw Error(ErrorCode::NoUnlikeNeighbour, "no case is predicted as an unlike class");
  const auto keep = std::min(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end());
  std::vector<NunResult> out;
  out.reserve(keep);
  for (std::size_t j = 0; j < keep; ++j) {
    const auto [d, i] = candidates[j];
    out.push_back({case_base.instance(i), case_predictions[i], d, i});
  }
  return out;
}

std::vector<NunResult> find_k_nuns(const Dataset& case_base, const Classifier& model, const Instance& query,
                                   std::size_t query_class, std::size_t k, std::optional<std::size_t> desired_class) {
  const auto predictions = predict_all(model, case_base);
  return find_k_nuns(case_base, predictions, query, query_class, k, desired_class);
}

}  // namespace discern
