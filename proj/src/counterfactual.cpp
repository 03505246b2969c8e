#include "discern/counterfactual.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "discern/error.hpp"

namespace discern {

std::string_view to_string(OrderingMode mode) {
  switch (mode) {
    case OrderingMode::QRel: return "QRel";
    case OrderingMode::NRel: return "NRel";
    case OrderingMode::RND: return "Null";
  }
  return "?";
}

std::optional<OrderingMode> parse_ordering_mode(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "qrel") return OrderingMode::QRel;
  if (lower == "nrel") return OrderingMode::NRel;
  if (lower == "null" || lower == "rnd" || lower == "none") return OrderingMode::RND;
  return std::nullopt;
}

CounterfactualResult substitute_until_flip(const Instance& query, std::size_t query_class, const NunResult& nun,
                                           const Classifier& model, const Schema& schema,
                                           std::span<const std::size_t> order,
                                           std::optional<std::size_t> desired_class) {
  const std::size_t m = schema.size();
  if (query.size() != m || nun.nun.size() != m) {
    throw Error(ErrorCode::InvalidArgument, "query and NUN must match the schema length");
  }
  if (order.size() != m) throw Error(ErrorCode::InvalidArgument, "feature order must cover every feature");

  CounterfactualResult result;
  result.counterfactual = query;
  result.query_class = query_class;
  result.new_class = query_class;
  result.nun_used = nun;
  for (const auto i : order) {
    if (i >= m) throw Error(ErrorCode::InvalidArgument, "feature order index out of range");
    if (result.counterfactual[i] == nun.nun[i]) continue;
    result.changes.push_back({i, result.counterfactual[i], nun.nun[i]});
    result.amount += feature_delta(schema, i, result.counterfactual[i], nun.nun[i]);
    result.counterfactual[i] = nun.nun[i];
    const auto predicted = model.predict(result.counterfactual);
    if (predicted != query_class && (!desired_class || predicted == *desired_class)) {
      result.new_class = predicted;
      return result;
    }
  }
  throw Error(ErrorCode::NoFlip, "substituting every NUN value did not change the prediction");
}

CounterfactualResult discern(const Instance& query, std::size_t query_class, const NunResult& nun,
                             const Classifier& model, const Schema& schema, const RelevanceWeights& weights,
                             OrderingMode mode, const OrderingOptions& options,
                             std::optional<std::size_t> desired_class) {
  const auto order = mode == OrderingMode::RND ? order_features(random_weights(schema.size(), options.seed))
                                               : order_features(weights, options.absolute);
  if (order.size() != schema.size()) throw Error(ErrorCode::InvalidArgument, "weights length differs from schema");
  return substitute_until_flip(query, query_class, nun, model, schema, order, desired_class);
}

// -------------------------------------------------------- CounterfactualEngine

CounterfactualEngine::CounterfactualEngine(const Dataset& case_base, const Dataset& train, const Classifier& model,
                                           ExplainerConfig config, std::size_t threads)
    : case_base_(case_base),
      train_(train),
      model_(model),
      config_(std::move(config)),
      case_predictions_(predict_all(model, case_base, threads)),
      chi2_(chi2_weights(train, config_.bins)),
      aggregates_(model, train, config_) {
  config_.validate();
}

NunResult CounterfactualEngine::nun_for(const Instance& query, std::size_t query_class,
                                        std::optional<std::size_t> desired_class) const {
  return find_nun(case_base_, case_predictions_, query, query_class, desired_class);
}

RelevanceWeights CounterfactualEngine::weights_for(RelevanceMethod method, OrderingMode mode, const Instance& query,
                                                   std::size_t query_class, const NunResult& nun,
                                                   std::uint64_t seed) {
  const std::size_t m = train_.schema().size();
  if (method == RelevanceMethod::RND || mode == OrderingMode::RND) return random_weights(m, seed);
  if (method == RelevanceMethod::Chi2) return chi2_;

  const bool on_query = mode == OrderingMode::QRel;
  const Instance& subject = on_query ? query : nun.nun;
  const std::size_t subject_class = on_query ? query_class : nun.nun_class;
  ExplainerConfig local = config_;
  local.seed = seed;
  switch (method) {
    case RelevanceMethod::LIME: return lime_explain(model_, train_, subject, local, subject_class);
    case RelevanceMethod::SHAP: return shap_explain(model_, train_, subject, local, subject_class);
    case RelevanceMethod::LIME_C:
    case RelevanceMethod::SHAP_C: return aggregates_.get(method, subject_class);
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "unsupported relevance method");
}

CounterfactualResult CounterfactualEngine::explain(const Instance& query, std::size_t query_class,
                                                   const NunResult& nun, RelevanceMethod method, OrderingMode mode,
                                                   std::uint64_t seed, std::optional<std::size_t> desired_class) {
  if (method == RelevanceMethod::RND) mode = OrderingMode::RND;
  if (mode == OrderingMode::RND && method != RelevanceMethod::RND) {
    throw Error(ErrorCode::InvalidArgument, "the Null ordering mode is only valid with RND");
  }
  const auto weights = weights_for(method, mode, query, query_class, nun, seed);
  OrderingOptions options;
  options.absolute = config_.absolute_order;
  options.seed = seed;
  return discern(query, query_class, nun, model_, train_.schema(), weights, mode, options, desired_class);
}

CounterfactualResult CounterfactualEngine::explain(const Instance& query, RelevanceMethod method, OrderingMode mode,
                                                   std::uint64_t seed, std::optional<std::size_t> desired_class) {
  const auto query_class = model_.predict(query);
  if (desired_class && query_class == *desired_class) {
    throw Error(ErrorCode::AlreadyDesiredClass, "the query is already predicted as the desired class");
  }
  const auto nun = nun_for(query, query_class, desired_class);
  return explain(query, query_class, nun, method, mode, seed, desired_class);
}

CounterfactualResult explain_query(const Dataset& case_base, const Classifier& model, const Instance& query,
                                   RelevanceMethod method, OrderingMode mode, const ExplainerConfig& config,
                                   std::optional<std::size_t> desired_class) {
  CounterfactualEngine engine(case_base, case_base, model, config);
  return engine.explain(query, method, mode, config.seed, desired_class);
}

}  // namespace discern
