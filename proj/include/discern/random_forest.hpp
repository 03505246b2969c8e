#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "discern/classifier.hpp"
#include "discern/dataset.hpp"

namespace discern {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0: grow until pure or min_samples_leaf binds
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // 0: hardware concurrency
};

enum class SplitKind : std::uint8_t { Leaf, Threshold, Equality };

struct TreeNode {
  SplitKind kind = SplitKind::Leaf;
  std::uint32_t feature = 0;
  // Threshold: go left when x <= value. Equality: go left when x == value.
  double value = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  // Leaf only: offset into the tree's histogram storage.
  std::uint32_t leaf = 0;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::size_t num_classes, std::vector<TreeNode> nodes, std::vector<std::uint32_t> leaf_counts);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;
  // Class histogram (bootstrap counts) of the leaf reached by x.
  std::span<const std::uint32_t> leaf_counts(std::span<const double> x) const;
  std::span<const std::uint32_t> leaf_counts_at(std::size_t node) const;
  // Adds the normalised leaf histogram for x into `acc`.
  void accumulate(std::span<const double> x, std::span<double> acc) const;

 private:
  std::size_t leaf_index(std::span<const double> x) const;

  std::size_t num_classes_ = 0;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint32_t> counts_;
  std::vector<double> distribution_;
};

// Bagged CART forest with Gini splits and soft voting.
class RandomForest final : public Classifier {
 public:
  RandomForest(std::size_t num_features, std::size_t num_classes, std::vector<DecisionTree> trees);

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t num_features() const noexcept { return num_features_; }
  std::size_t num_trees() const noexcept { return trees_.size(); }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  // Versioned text dump; doubles are written as hex floats so a reload
  // reproduces predictions bit-exactly.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static RandomForest load(std::istream& in);
  static RandomForest load(const std::filesystem::path& path);

 protected:
  std::vector<double> do_predict_proba(std::span<const double> x) const override;

 private:
  std::size_t num_features_;
  std::size_t num_classes_;
  std::vector<DecisionTree> trees_;
};

// Each tree is grown on a bootstrap resample with ceil(sqrt(m)) candidate
// features per split; tree t draws from derive_seed(seed, "tree", t), so the
// forest does not depend on the thread count.
RandomForest train_random_forest(const Dataset& train, const ForestParams& params);

}  // namespace discern
