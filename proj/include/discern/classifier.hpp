#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "discern/dataset.hpp"

namespace discern {

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

// Black-box prediction contract. Explainers and the counterfactual search
// only ever see a model through this interface.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t num_classes() const = 0;

  std::vector<double> predict_proba(std::span<const double> x) const { return do_predict_proba(x); }
  std::vector<double> predict_proba(const Instance& x) const { return do_predict_proba(x.span()); }

  std::size_t predict(std::span<const double> x) const { return argmax(do_predict_proba(x)); }
  std::size_t predict(const Instance& x) const { return predict(x.span()); }

 protected:
  virtual std::vector<double> do_predict_proba(std::span<const double> x) const = 0;
};

// Fraction of rows whose predicted class equals the stored label.
double evaluate_accuracy(const Classifier& model, const Dataset& test);

// Predicted class for every instance of a dataset.
std::vector<std::size_t> predict_all(const Classifier& model, const Dataset& data, std::size_t threads = 1);

}  // namespace discern
