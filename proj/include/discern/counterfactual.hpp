#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "discern/classifier.hpp"
#include "discern/dataset.hpp"
#include "discern/neighbours.hpp"
#include "discern/relevance.hpp"

namespace discern {

// Which instance the relevance weights are computed on: the query (QRel),
// its nearest unlike neighbour (NRel), or neither (RND: a seeded random
// feature order).
enum class OrderingMode { QRel, NRel, RND };

std::string_view to_string(OrderingMode mode);
std::optional<OrderingMode> parse_ordering_mode(std::string_view name);

struct FeatureChange {
  std::size_t feature = 0;
  double from = 0.0;
  double to = 0.0;

  bool operator==(const FeatureChange&) const = default;
};

struct CounterfactualResult {
  Instance counterfactual;
  std::size_t query_class = 0;
  std::size_t new_class = 0;
  // Substitutions in execution order; the last one flipped the prediction.
  std::vector<FeatureChange> changes;
  // Sum of per-feature deltas over the changed features.
  double amount = 0.0;
  NunResult nun_used;

  std::size_t n_changes() const noexcept { return changes.size(); }
};

// Copies NUN values into the query one feature at a time, following
// `order`, skipping features that already agree, and stops at the first
// prediction that leaves `query_class` (and reaches `desired_class` when
// given). Throws NoFlip if the order is exhausted without a flip, which
// cannot happen when the model predicts the NUN as an unlike class.
CounterfactualResult substitute_until_flip(const Instance& query, std::size_t query_class, const NunResult& nun,
                                           const Classifier& model, const Schema& schema,
                                           std::span<const std::size_t> order,
                                           std::optional<std::size_t> desired_class = std::nullopt);

struct OrderingOptions {
  bool absolute = false;   // rank by |w|
  std::uint64_t seed = 0;  // RND permutation seed
};

// Greedy substitution with the feature order taken from `weights` (QRel,
// NRel) or from a seeded permutation (RND, which ignores `weights`).
CounterfactualResult discern(const Instance& query, std::size_t query_class, const NunResult& nun,
                             const Classifier& model, const Schema& schema, const RelevanceWeights& weights,
                             OrderingMode mode, const OrderingOptions& options = {},
                             std::optional<std::size_t> desired_class = std::nullopt);

// Holds everything shared across queries: case-base predictions, the global
// Chi2 weights, and the class-aggregate cache. Safe for concurrent explain
// calls.
class CounterfactualEngine {
 public:
  CounterfactualEngine(const Dataset& case_base, const Dataset& train, const Classifier& model,
                       ExplainerConfig config, std::size_t threads = 1);

  const Dataset& case_base() const noexcept { return case_base_; }
  const Dataset& train() const noexcept { return train_; }
  const Classifier& model() const noexcept { return model_; }
  const ExplainerConfig& config() const noexcept { return config_; }
  const std::vector<std::size_t>& case_predictions() const noexcept { return case_predictions_; }

  NunResult nun_for(const Instance& query, std::size_t query_class,
                    std::optional<std::size_t> desired_class = std::nullopt) const;

  // Weights on the instance dictated by `mode`. `seed` drives the
  // per-query explainer randomness.
  RelevanceWeights weights_for(RelevanceMethod method, OrderingMode mode, const Instance& query,
                               std::size_t query_class, const NunResult& nun, std::uint64_t seed);

  CounterfactualResult explain(const Instance& query, std::size_t query_class, const NunResult& nun,
                               RelevanceMethod method, OrderingMode mode, std::uint64_t seed,
                               std::optional<std::size_t> desired_class = std::nullopt);

  // predict -> nearest unlike neighbour -> weights -> greedy substitution.
  CounterfactualResult explain(const Instance& query, RelevanceMethod method, OrderingMode mode, std::uint64_t seed,
                               std::optional<std::size_t> desired_class = std::nullopt);

 private:
  const Dataset& case_base_;
  const Dataset& train_;
  const Classifier& model_;
  ExplainerConfig config_;
  std::vector<std::size_t> case_predictions_;
  RelevanceWeights chi2_;
  ClassAggregateCache aggregates_;
};

// One-shot composition of the engine; the explainer seed comes from
// config.seed.
CounterfactualResult explain_query(const Dataset& case_base, const Classifier& model, const Instance& query,
                                   RelevanceMethod method, OrderingMode mode, const ExplainerConfig& config,
                                   std::optional<std::size_t> desired_class = std::nullopt);

}  // namespace discern
