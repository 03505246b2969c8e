#include "discern/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "discern/error.hpp"
#include "discern/rng.hpp"

namespace discern {

std::string_view to_string(RelevanceMethod method) {
  switch (method) {
    case RelevanceMethod::LIME: return "LIME";
    case RelevanceMethod::SHAP: return "SHAP";
    case RelevanceMethod::Chi2: return "Chi2";
    case RelevanceMethod::LIME_C: return "LIME_C";
    case RelevanceMethod::SHAP_C: return "SHAP_C";
    case RelevanceMethod::RND: return "RND";
  }
  return "?";
}

std::optional<RelevanceMethod> parse_relevance_method(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "LIME") return RelevanceMethod::LIME;
  if (upper == "SHAP") return RelevanceMethod::SHAP;
  if (upper == "CHI2") return RelevanceMethod::Chi2;
  if (upper == "LIME_C" || upper == "LIMEC") return RelevanceMethod::LIME_C;
  if (upper == "SHAP_C" || upper == "SHAPC") return RelevanceMethod::SHAP_C;
  if (upper == "RND" || upper == "RANDOM") return RelevanceMethod::RND;
  return std::nullopt;
}

void ExplainerConfig::validate() const {
  if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
  if (background_size == 0) throw Error(ErrorCode::InvalidArgument, "background_size must be >= 1");
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");
  if (kernel_width && !(*kernel_width > 0.0 && std::isfinite(*kernel_width))) {
    throw Error(ErrorCode::InvalidArgument, "kernel_width must be > 0");
  }
}

double ExplainerConfig::kernel_width_for(std::size_t num_features) const {
  return kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(num_features)));
}

RelevanceWeights chi2_weights(const Dataset& train, std::size_t bins) {
  if (train.empty()) throw Error(ErrorCode::InvalidArgument, "Chi2 needs a non-empty training set");
  if (bins == 0) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");
  const auto& schema = train.schema();
  const std::size_t k = schema.num_classes();
  const auto class_totals = train.class_counts();
  const double n = static_cast<double>(train.size());

  RelevanceWeights out{std::vector<double>(schema.size(), 0.0), std::nullopt, RelevanceMethod::Chi2};
  std::vector<std::size_t> table;
  for (std::size_t f = 0; f < schema.size(); ++f) {
    const auto& kind = schema.feature(f).kind;
    const std::size_t rows = kind.is_categorical() ? kind.categories().size() : bins;
    table.assign(rows * k, 0);
    for (std::size_t r = 0; r < train.size(); ++r) {
      const double v = train.instance(r)[f];
      const auto cell = kind.is_categorical()
                            ? static_cast<std::size_t>(v)
                            : std::min(bins - 1, static_cast<std::size_t>(std::floor(v * static_cast<double>(bins))));
      ++table[cell * k + train.label(r)];
    }
    double stat = 0.0;
    for (std::size_t row = 0; row < rows; ++row) {
      const auto row_total = std::accumulate(table.begin() + static_cast<std::ptrdiff_t>(row * k),
                                             table.begin() + static_cast<std::ptrdiff_t>((row + 1) * k), std::size_t{0});
      if (row_total == 0) continue;
      for (std::size_t c = 0; c < k; ++c) {
        if (class_totals[c] == 0) continue;
        const double expected = static_cast<double>(row_total) * static_cast<double>(class_totals[c]) / n;
        const double diff = static_cast<double>(table[row * k + c]) - expected;
        stat += diff * diff / expected;
      }
    }
    out.weights[f] = stat;
  }
  return out;
}

RelevanceWeights class_aggregate(RelevanceMethod method, const Classifier& model, const Dataset& train,
                                 std::size_t cls, const ExplainerConfig& config) {
  if (method != RelevanceMethod::LIME && method != RelevanceMethod::SHAP) {
    throw Error(ErrorCode::InvalidArgument, "class aggregation is defined for LIME and SHAP");
  }
  std::vector<std::size_t> members;
  for (std::size_t r = 0; r < train.size(); ++r) {
    if (train.label(r) == cls) members.push_back(r);
  }
  if (members.empty()) throw Error(ErrorCode::ClassAbsent, "class " + std::to_string(cls) + " has no training rows");
  if (config.class_sample_limit != 0 && members.size() > config.class_sample_limit) {
    Rng rng(derive_seed(config.seed, "class-sample", cls));
    rng.shuffle(members);
    members.resize(config.class_sample_limit);
    std::sort(members.begin(), members.end());
  }

  const std::size_t m = train.schema().size();
  std::vector<double> sum(m, 0.0);
  for (const auto r : members) {
    ExplainerConfig member_config = config;
    member_config.seed = derive_seed(config.seed, "class-member", r);
    const auto w = method == RelevanceMethod::LIME ? lime_explain(model, train, train.instance(r), member_config, cls)
                                                   : shap_explain(model, train, train.instance(r), member_config, cls);
    for (std::size_t i = 0; i < m; ++i) sum[i] += w.weights[i];
  }
  for (auto& v : sum) v /= static_cast<double>(members.size());
  return {std::move(sum), cls, method == RelevanceMethod::LIME ? RelevanceMethod::LIME_C : RelevanceMethod::SHAP_C};
}

RelevanceWeights ClassAggregateCache::get(RelevanceMethod method, std::size_t cls) {
  if (method == RelevanceMethod::LIME_C) method = RelevanceMethod::LIME;
  if (method == RelevanceMethod::SHAP_C) method = RelevanceMethod::SHAP;
  // Held across the computation so each entry is built exactly once.
  std::lock_guard lock(mutex_);
  const auto key = std::make_pair(method, cls);
  if (const auto it = entries_.find(key); it != entries_.end()) return it->second;
  auto weights = class_aggregate(method, model_, train_, cls, config_);
  entries_.emplace(key, weights);
  return weights;
}

std::size_t ClassAggregateCache::computed() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

RelevanceWeights random_weights(std::size_t num_features, std::uint64_t seed) {
  Rng rng(seed);
  const auto order = rng.permutation(num_features);
  std::vector<double> w(num_features);
  for (std::size_t rank = 0; rank < num_features; ++rank) w[order[rank]] = static_cast<double>(num_features - rank);
  return {std::move(w), std::nullopt, RelevanceMethod::RND};
}

std::vector<std::size_t> order_features(const RelevanceWeights& weights, bool absolute) {
  for (const auto w : weights.weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "relevance weights must be finite");
  }
  const auto key = [&](std::size_t i) { return absolute ? std::abs(weights.weights[i]) : weights.weights[i]; };
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
  return order;
}

}  // namespace discern
