#include <algorithm>
#include <numeric>

#include "discern/error.hpp"
#include "discern/relevance.hpp"
#include "discern/rng.hpp"

namespace discern {

RelevanceWeights shap_explain(const Classifier& model, const Dataset& train, const Instance& instance,
                              const ExplainerConfig& config, std::optional<std::size_t> target_class) {
  config.validate();
  if (train.empty()) throw Error(ErrorCode::EmptyBackground, "Shapley estimation needs background rows");
  const std::size_t m = train.schema().size();
  if (instance.size() != m) throw Error(ErrorCode::InvalidArgument, "instance length differs from schema");
  const std::size_t target = target_class.value_or(model.predict(instance));
  if (target >= model.num_classes()) throw Error(ErrorCode::InvalidArgument, "target class out of range");

  Rng rng(config.seed);
  // Background: a seeded sample of distinct training rows (all rows when the
  // training set is no larger than background_size).
  std::vector<std::size_t> background(train.size());
  std::iota(background.begin(), background.end(), std::size_t{0});
  if (config.background_size < train.size()) {
    for (std::size_t i = 0; i < config.background_size; ++i) {
      std::swap(background[i], background[i + rng.index(train.size() - i)]);
    }
    background.resize(config.background_size);
  }

  const double target_at_instance = model.predict_proba(instance)[target];
  std::vector<double> phi(m, 0.0);
  Instance current;
  for (std::size_t s = 0; s < config.n_samples; ++s) {
    const auto order = rng.permutation(m);
    current = train.instance(background[rng.index(background.size())]);
    double previous = model.predict_proba(current)[target];
    std::size_t remaining = 0;
    for (std::size_t i = 0; i < m; ++i) remaining += current[i] != instance[i];
    for (const auto i : order) {
      if (current[i] == instance[i]) continue;
      current[i] = instance[i];
      const bool last = --remaining == 0;
      const double now = last ? target_at_instance : model.predict_proba(current)[target];
      phi[i] += now - previous;
      previous = now;
      if (last) break;
    }
  }
  for (auto& v : phi) v /= static_cast<double>(config.n_samples);
  return {std::move(phi), target, RelevanceMethod::SHAP};
}

}  // namespace discern
