#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "discern/error.hpp"
#include "discern/relevance.hpp"
#include "discern/rng.hpp"

namespace discern {

namespace {

std::vector<double> training_stddev(const Dataset& train) {
  const std::size_t m = train.schema().size();
  std::vector<double> mean(m, 0.0), sd(m, 0.0);
  const double n = static_cast<double>(train.size());
  for (const auto& x : train.instances()) {
    for (std::size_t i = 0; i < m; ++i) mean[i] += x[i];
  }
  for (auto& v : mean) v /= n;
  for (const auto& x : train.instances()) {
    for (std::size_t i = 0; i < m; ++i) sd[i] += (x[i] - mean[i]) * (x[i] - mean[i]);
  }
  for (auto& v : sd) v = std::sqrt(v / n);
  return sd;
}

}  // namespace

RelevanceWeights lime_explain(const Classifier& model, const Dataset& train, const Instance& instance,
                              const ExplainerConfig& config, std::optional<std::size_t> target_class) {
  config.validate();
  if (train.empty()) throw Error(ErrorCode::InvalidArgument, "LIME needs a non-empty training set");
  const auto& schema = train.schema();
  const std::size_t m = schema.size();
  if (instance.size() != m) throw Error(ErrorCode::InvalidArgument, "instance length differs from schema");
  const std::size_t target = target_class.value_or(model.predict(instance));
  if (target >= model.num_classes()) throw Error(ErrorCode::InvalidArgument, "target class out of range");

  const auto sd = training_stddev(train);
  const double width = config.kernel_width_for(m);
  const std::size_t n = config.n_samples;

  // Row 0 is the instance itself.
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  Eigen::VectorXd target_prob(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sample_weight(static_cast<Eigen::Index>(n));
  Rng rng(config.seed);
  Instance z = instance;
  for (std::size_t s = 0; s < n; ++s) {
    z = instance;
    if (s > 0) {
      for (std::size_t i = 0; i < m; ++i) {
        if (schema.feature(i).kind.is_categorical()) {
          if (rng.uniform() < 0.5) z[i] = train.instance(rng.index(train.size()))[i];
        } else {
          z[i] = std::clamp(instance[i] + sd[i] * rng.normal(), 0.0, 1.0);
        }
      }
    }
    const auto row = static_cast<Eigen::Index>(s);
    for (std::size_t i = 0; i < m; ++i) {
      const auto col = static_cast<Eigen::Index>(i);
      design(row, col) = schema.feature(i).kind.is_categorical() ? (z[i] == instance[i] ? 1.0 : 0.0) : z[i];
    }
    target_prob(row) = model.predict_proba(z)[target];
    const double d = distance(instance, z, schema);
    sample_weight(row) = std::exp(-(d * d) / (width * width));
  }

  // Columns that never vary carry no information and would make the normal
  // equations singular.
  std::vector<Eigen::Index> active;
  for (Eigen::Index c = 0; c < design.cols(); ++c) {
    if ((design.col(c).array() != design(0, c)).any()) active.push_back(c);
  }
  RelevanceWeights out{std::vector<double>(m, 0.0), target, RelevanceMethod::LIME};
  if (active.empty()) return out;
  const auto p = static_cast<Eigen::Index>(active.size()) + 1;
  if (static_cast<Eigen::Index>(n) < p) {
    throw Error(ErrorCode::DegenerateRegression, "fewer samples than regression coefficients");
  }

  const Eigen::VectorXd root_w = sample_weight.array().sqrt();
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), p);
  a.col(0) = root_w;
  for (Eigen::Index j = 0; j + 1 < p; ++j) a.col(j + 1) = design.col(active[j]).cwiseProduct(root_w);
  const Eigen::VectorXd b = target_prob.cwiseProduct(root_w);

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < p) throw Error(ErrorCode::DegenerateRegression, "weighted design matrix is rank deficient");
  const Eigen::VectorXd coef = qr.solve(b);
  for (Eigen::Index j = 0; j + 1 < p; ++j) out.weights[static_cast<std::size_t>(active[j])] = coef(j + 1);
  return out;
}

}  // namespace discern
