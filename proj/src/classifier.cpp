#include "discern/classifier.hpp"

#include "discern/error.hpp"
#include "discern/parallel.hpp"

namespace discern {

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double evaluate_accuracy(const Classifier& model, const Dataset& test) {
  if (test.empty()) throw Error(ErrorCode::EmptyTestSet, "cannot evaluate accuracy on an empty test set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += model.predict(test.instance(i)) == test.label(i);
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

std::vector<std::size_t> predict_all(const Classifier& model, const Dataset& data, std::size_t threads) {
  std::vector<std::size_t> out(data.size());
  parallel_for(data.size(), threads, [&](std::size_t i) { out[i] = model.predict(data.instance(i)); });
  return out;
}

}  // namespace discern
