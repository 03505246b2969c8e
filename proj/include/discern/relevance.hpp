#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "discern/classifier.hpp"
#include "discern/dataset.hpp"

namespace discern {

enum class RelevanceMethod { LIME, SHAP, Chi2, LIME_C, SHAP_C, RND };

std::string_view to_string(RelevanceMethod method);
std::optional<RelevanceMethod> parse_relevance_method(std::string_view name);

// One signed weight per feature. Positive weights push towards
// `target_class`; global weighters (Chi2) leave it empty.
struct RelevanceWeights {
  std::vector<double> weights;
  std::optional<std::size_t> target_class;
  RelevanceMethod method = RelevanceMethod::LIME;

  std::size_t size() const noexcept { return weights.size(); }
};

struct ExplainerConfig {
  std::size_t n_samples = 1000;        // LIME perturbations / Shapley permutations
  std::optional<double> kernel_width;  // LIME; unset means 0.75 * sqrt(m)
  std::size_t background_size = 100;   // Shapley background rows
  std::size_t bins = 10;               // Chi2 equal-width bins over [0,1]
  std::uint64_t seed = 0;
  bool absolute_order = false;         // order by |w| instead of signed w
  std::size_t class_sample_limit = 0;  // class aggregates: 0 uses every member

  void validate() const;
  double kernel_width_for(std::size_t num_features) const;
};

// Local linear surrogate. Continuous features are perturbed with Gaussian
// noise scaled by the training standard deviation and clamped to [0,1];
// categorical features are resampled from the training marginal with
// probability 0.5 and enter the regression as "equals the instance value"
// indicators. The surrogate is a weighted least-squares fit with an
// intercept and an exponential kernel on the mixed distance. Features that
// never vary across the samples get weight 0.
//
// The regression target is the model's probability of `target_class`
// (default: the class the model predicts for `instance`).
RelevanceWeights lime_explain(const Classifier& model, const Dataset& train, const Instance& instance,
                              const ExplainerConfig& config,
                              std::optional<std::size_t> target_class = std::nullopt);

// Permutation-sampling Shapley values of the fixed model. Each of
// n_samples iterations draws a feature permutation and a background row,
// then switches features from the background value to the instance value in
// permutation order, crediting each switch with the change in the target
// class probability.
RelevanceWeights shap_explain(const Classifier& model, const Dataset& train, const Instance& instance,
                              const ExplainerConfig& config,
                              std::optional<std::size_t> target_class = std::nullopt);

// Global chi-squared statistic of the (bin or category) x class
// contingency table for each feature.
RelevanceWeights chi2_weights(const Dataset& train, std::size_t bins = 10);

// Mean of per-instance LIME or SHAP weights over the training members of
// `cls`, each explaining `cls`.
RelevanceWeights class_aggregate(RelevanceMethod method, const Classifier& model, const Dataset& train,
                                 std::size_t cls, const ExplainerConfig& config);

// Memoises class_aggregate per (method, class). Safe for concurrent use;
// each entry is computed once.
class ClassAggregateCache {
 public:
  ClassAggregateCache(const Classifier& model, const Dataset& train, ExplainerConfig config)
      : model_(model), train_(train), config_(std::move(config)) {}

  RelevanceWeights get(RelevanceMethod method, std::size_t cls);
  std::size_t computed() const;

 private:
  const Classifier& model_;
  const Dataset& train_;
  ExplainerConfig config_;
  mutable std::mutex mutex_;
  std::map<std::pair<RelevanceMethod, std::size_t>, RelevanceWeights> entries_;
};

// Weights that order features by a seeded random permutation.
RelevanceWeights random_weights(std::size_t num_features, std::uint64_t seed);

// Feature indices by descending weight (or |weight|); ties keep ascending
// index order.
std::vector<std::size_t> order_features(const RelevanceWeights& weights, bool absolute = false);

}  // namespace discern
