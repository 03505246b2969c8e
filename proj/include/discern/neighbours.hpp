#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "discern/classifier.hpp"
#include "discern/dataset.hpp"

namespace discern {

struct NunResult {
  Instance nun;
  std::size_t nun_class = 0;
  double distance = 0.0;
  std::size_t case_index = 0;
};

// Unlike-ness is judged on the model's prediction for each case, not on the
// stored label. `case_predictions[i]` must be model.predict(case_base[i]);
// the overloads taking a Classifier compute it on the fly.
//
// Candidates are cases predicted != query_class (and == desired_class when
// given); the nearest under `distance` wins, ties going to the lowest index.
NunResult find_nun(const Dataset& case_base, std::span<const std::size_t> case_predictions, const Instance& query,
                   std::size_t query_class, std::optional<std::size_t> desired_class = std::nullopt);
NunResult find_nun(const Dataset& case_base, const Classifier& model, const Instance& query,
                   std::size_t query_class, std::optional<std::size_t> desired_class = std::nullopt);

// Up to k unlike neighbours in ascending (distance, index) order.
std::vector<NunResult> find_k_nuns(const Dataset& case_base, std::span<const std::size_t> case_predictions,
                                   const Instance& query, std::size_t query_class, std::size_t k,
                                   std::optional<std::size_t> desired_class = std::nullopt);
std::vector<NunResult> find_k_nuns(const Dataset& case_base, const Classifier& model, const Instance& query,
                                   std::size_t query_class, std::size_t k,
                                   std::optional<std::size_t> desired_class = std::nullopt);

}  // namespace discern
