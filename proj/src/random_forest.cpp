#include "discern/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "discern/error.hpp"
#include "discern/parallel.hpp"
#include "discern/rng.hpp"

namespace discern {

// --------------------------------------------------------------- DecisionTree

DecisionTree::DecisionTree(std::size_t num_classes, std::vector<TreeNode> nodes, std::vector<std::uint32_t> leaf_counts)
    : num_classes_(num_classes), nodes_(std::move(nodes)), counts_(std::move(leaf_counts)) {
  if (num_classes_ == 0 || nodes_.empty() || counts_.size() % num_classes_ != 0) {
    throw Error(ErrorCode::BadModelFile, "malformed decision tree");
  }
  const std::size_t n_leaves = counts_.size() / num_classes_;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    if (node.kind == SplitKind::Leaf) {
      if (node.leaf >= n_leaves) throw Error(ErrorCode::BadModelFile, "leaf offset out of range");
    } else if (node.left <= i || node.right <= i || node.left >= nodes_.size() || node.right >= nodes_.size()) {
      throw Error(ErrorCode::BadModelFile, "child index out of range");
    }
  }
  distribution_.resize(counts_.size());
  for (std::size_t leaf = 0; leaf < n_leaves; ++leaf) {
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes_; ++c) total += counts_[leaf * num_classes_ + c];
    if (total <= 0.0) throw Error(ErrorCode::BadModelFile, "empty leaf histogram");
    for (std::size_t c = 0; c < num_classes_; ++c) {
      distribution_[leaf * num_classes_ + c] = counts_[leaf * num_classes_ + c] / total;
    }
  }
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (true) {
    const auto& node = nodes_[i];
    switch (node.kind) {
      case SplitKind::Leaf:
        return node.leaf;
      case SplitKind::Threshold:
        i = x[node.feature] <= node.value ? node.left : node.right;
        break;
      case SplitKind::Equality:
        i = x[node.feature] == node.value ? node.left : node.right;
        break;
    }
  }
}

std::span<const std::uint32_t> DecisionTree::leaf_counts(std::span<const double> x) const {
  return std::span(counts_).subspan(leaf_index(x) * num_classes_, num_classes_);
}

std::span<const std::uint32_t> DecisionTree::leaf_counts_at(std::size_t node) const {
  const auto& n = nodes_.at(node);
  if (n.kind != SplitKind::Leaf) throw Error(ErrorCode::InvalidArgument, "node is not a leaf");
  return std::span(counts_).subspan(n.leaf * num_classes_, num_classes_);
}

void DecisionTree::accumulate(std::span<const double> x, std::span<double> acc) const {
  const double* dist = distribution_.data() + leaf_index(x) * num_classes_;
  for (std::size_t c = 0; c < num_classes_; ++c) acc[c] += dist[c];
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes_[i].kind != SplitKind::Leaf) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

// --------------------------------------------------------------- RandomForest

RandomForest::RandomForest(std::size_t num_features, std::size_t num_classes, std::vector<DecisionTree> trees)
    : num_features_(num_features), num_classes_(num_classes), trees_(std::move(trees)) {
  if (trees_.empty()) throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  for (const auto& tree : trees_) {
    for (const auto& node : tree.nodes()) {
      if (node.kind != SplitKind::Leaf && node.feature >= num_features_) {
        throw Error(ErrorCode::BadModelFile, "split feature out of range");
      }
    }
  }
}

std::vector<double> RandomForest::do_predict_proba(std::span<const double> x) const {
  if (x.size() != num_features_) throw Error(ErrorCode::InvalidArgument, "instance length differs from model");
  std::vector<double> acc(num_classes_, 0.0);
  for (const auto& tree : trees_) tree.accumulate(x, acc);
  const double n = static_cast<double>(trees_.size());
  for (auto& p : acc) p /= n;
  return acc;
}

namespace {

constexpr const char* kForestMagic = "discern-forest";
constexpr int kForestVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

[[noreturn]] void bad_file(const std::string& what) { throw Error(ErrorCode::BadModelFile, what); }

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) bad_file(std::string("expected ") + what);
  return v;
}

void expect_token(std::istream& in, const std::string& token) {
  std::string got;
  if (!(in >> got) || got != token) bad_file("expected '" + token + "', got '" + got + "'");
}

}  // namespace

void RandomForest::save(std::ostream& out) const {
  out << kForestMagic << ' ' << kForestVersion << '\n';
  out << "features " << num_features_ << '\n';
  out << "classes " << num_classes_ << '\n';
  out << "trees " << trees_.size() << '\n';
  for (const auto& tree : trees_) {
    out << "tree " << tree.nodes().size() << '\n';
    for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
      const auto& node = tree.nodes()[i];
      switch (node.kind) {
        case SplitKind::Leaf: {
          out << 'L';
          for (auto c : tree.leaf_counts_at(i)) out << ' ' << c;
          break;
        }
        case SplitKind::Threshold:
        case SplitKind::Equality:
          out << (node.kind == SplitKind::Threshold ? 'T' : 'E') << ' ' << node.feature << ' ' << hex(node.value)
              << ' ' << node.left << ' ' << node.right;
          break;
      }
      out << '\n';
    }
  }
  out << "end\n";
}

void RandomForest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write model '" + path.string() + "'");
  save(out);
}

RandomForest RandomForest::load(std::istream& in) {
  expect_token(in, kForestMagic);
  if (read_value<int>(in, "version") != kForestVersion) bad_file("unsupported forest version");
  expect_token(in, "features");
  const auto m = read_value<std::size_t>(in, "feature count");
  expect_token(in, "classes");
  const auto k = read_value<std::size_t>(in, "class count");
  expect_token(in, "trees");
  const auto n_trees = read_value<std::size_t>(in, "tree count");
  if (k < 2 || m == 0 || n_trees == 0) bad_file("invalid forest header");

  std::vector<DecisionTree> trees;
  trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    expect_token(in, "tree");
    const auto n_nodes = read_value<std::size_t>(in, "node count");
    std::vector<TreeNode> nodes(n_nodes);
    std::vector<std::uint32_t> counts;
    for (auto& node : nodes) {
      const auto tag = read_value<std::string>(in, "node tag");
      if (tag == "L") {
        node.kind = SplitKind::Leaf;
        node.leaf = static_cast<std::uint32_t>(counts.size() / k);
        for (std::size_t c = 0; c < k; ++c) counts.push_back(read_value<std::uint32_t>(in, "leaf count"));
      } else if (tag == "T" || tag == "E") {
        node.kind = tag == "T" ? SplitKind::Threshold : SplitKind::Equality;
        node.feature = read_value<std::uint32_t>(in, "split feature");
        const auto text = read_value<std::string>(in, "split value");
        char* end = nullptr;
        node.value = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) bad_file("bad split value '" + text + "'");
        node.left = read_value<std::uint32_t>(in, "left child");
        node.right = read_value<std::uint32_t>(in, "right child");
      } else {
        bad_file("unknown node tag '" + tag + "'");
      }
    }
    trees.emplace_back(k, std::move(nodes), std::move(counts));
  }
  expect_token(in, "end");
  return RandomForest(m, k, std::move(trees));
}

RandomForest RandomForest::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open model '" + path.string() + "'");
  return load(in);
}

// ------------------------------------------------------------------ training

namespace {

struct Candidate {
  double score = -std::numeric_limits<double>::infinity();
  SplitKind kind = SplitKind::Leaf;
  std::uint32_t feature = 0;
  double value = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestParams& params, std::uint64_t seed)
      : data_(data),
        params_(params),
        rng_(seed),
        m_(data.schema().size()),
        k_(data.schema().num_classes()),
        features_per_split_(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(m_))))),
        min_leaf_(std::max<std::size_t>(1, params.min_samples_leaf)) {}

  DecisionTree build() {
    const std::size_t n = data_.size();
    rows_.resize(n);
    for (auto& r : rows_) r = static_cast<std::uint32_t>(rng_.index(n));
    grow(0, n, 0);
    return DecisionTree(k_, std::move(nodes_), std::move(counts_));
  }

 private:
  double value(std::uint32_t row, std::size_t f) const { return data_.instance(row)[f]; }
  std::size_t label(std::uint32_t row) const { return data_.label(row); }

  static double purity(std::span<const std::size_t> counts, std::size_t n) {
    double s = 0.0;
    for (auto c : counts) s += static_cast<double>(c) * static_cast<double>(c);
    return s / static_cast<double>(n);
  }

  // Gini proxy: sum_c L_c^2/n_L + sum_c R_c^2/n_R. Maximising it maximises
  // the impurity decrease.
  double split_score(std::size_t n_left, std::size_t n) const {
    double l = 0.0, r = 0.0;
    for (std::size_t c = 0; c < k_; ++c) {
      const double lc = static_cast<double>(left_counts_[c]);
      const double rc = static_cast<double>(node_counts_[c] - left_counts_[c]);
      l += lc * lc;
      r += rc * rc;
    }
    return l / static_cast<double>(n_left) + r / static_cast<double>(n - n_left);
  }

  // Returns false when the feature is constant over the node.
  bool evaluate_continuous(std::size_t begin, std::size_t end, std::uint32_t f, Candidate& best) {
    const std::size_t n = end - begin;
    sorted_.resize(n);
    for (std::size_t i = 0; i < n; ++i) sorted_[i] = {value(rows_[begin + i], f), label(rows_[begin + i])};
    std::sort(sorted_.begin(), sorted_.end());
    if (sorted_.front().first == sorted_.back().first) return false;
    std::fill(left_counts_.begin(), left_counts_.end(), 0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_counts_[sorted_[i].second];
      const std::size_t n_left = i + 1;
      if (sorted_[i].first == sorted_[i + 1].first) continue;
      if (n_left < min_leaf_) continue;
      if (n - n_left < min_leaf_) break;
      const double score = split_score(n_left, n);
      if (score > best.score) {
        double threshold = 0.5 * (sorted_[i].first + sorted_[i + 1].first);
        if (!(threshold < sorted_[i + 1].first)) threshold = sorted_[i].first;
        best = {score, SplitKind::Threshold, f, threshold};
      }
    }
    return true;
  }

  bool evaluate_categorical(std::size_t begin, std::size_t end, std::uint32_t f, Candidate& best) {
    const std::size_t n = end - begin;
    const std::size_t n_cat = data_.schema().feature(f).kind.categories().size();
    category_counts_.assign(n_cat * k_, 0);
    category_totals_.assign(n_cat, 0);
    for (std::size_t i = begin; i < end; ++i) {
      const auto cat = static_cast<std::size_t>(value(rows_[i], f));
      ++category_counts_[cat * k_ + label(rows_[i])];
      ++category_totals_[cat];
    }
    std::size_t present = 0;
    for (auto t : category_totals_) present += t > 0;
    if (present < 2) return false;
    for (std::size_t cat = 0; cat < n_cat; ++cat) {
      const std::size_t n_left = category_totals_[cat];
      if (n_left < min_leaf_ || n - n_left < min_leaf_) continue;
      std::copy_n(category_counts_.begin() + static_cast<std::ptrdiff_t>(cat * k_), k_, left_counts_.begin());
      const double score = split_score(n_left, n);
      if (score > best.score) best = {score, SplitKind::Equality, f, static_cast<double>(cat)};
    }
    return true;
  }

  std::uint32_t make_leaf() {
    TreeNode node;
    node.kind = SplitKind::Leaf;
    node.leaf = static_cast<std::uint32_t>(counts_.size() / k_);
    for (auto c : node_counts_) counts_.push_back(static_cast<std::uint32_t>(c));
    nodes_.push_back(node);
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  std::uint32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    const std::size_t n = end - begin;
    node_counts_.assign(k_, 0);
    left_counts_.assign(k_, 0);
    for (std::size_t i = begin; i < end; ++i) ++node_counts_[label(rows_[i])];
    const bool pure = std::count(node_counts_.begin(), node_counts_.end(), 0) == static_cast<std::ptrdiff_t>(k_ - 1);
    if (pure || n < 2 * min_leaf_ || (params_.max_depth != 0 && depth >= params_.max_depth)) return make_leaf();

    // Draw features in random order; keep going past the subset size until a
    // non-constant feature has produced a valid split.
    Candidate best;
    std::size_t visited = 0;
    for (const auto f : rng_.permutation(m_)) {
      if (visited >= features_per_split_ && best.kind != SplitKind::Leaf) break;
      const bool varies = data_.schema().feature(f).kind.is_categorical()
                              ? evaluate_categorical(begin, end, static_cast<std::uint32_t>(f), best)
                              : evaluate_continuous(begin, end, static_cast<std::uint32_t>(f), best);
      if (varies) ++visited;
    }
    if (best.kind == SplitKind::Leaf) return make_leaf();

    const auto goes_left = [&](std::uint32_t row) {
      const double x = value(row, best.feature);
      return best.kind == SplitKind::Threshold ? x <= best.value : x == best.value;
    };
    const auto mid = std::stable_partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                           rows_.begin() + static_cast<std::ptrdiff_t>(end), goes_left);
    const auto split_at = static_cast<std::size_t>(mid - rows_.begin());

    const auto index = static_cast<std::uint32_t>(nodes_.size());
    TreeNode node;
    node.kind = best.kind;
    node.feature = best.feature;
    node.value = best.value;
    nodes_.push_back(node);
    const auto left = grow(begin, split_at, depth + 1);
    const auto right = grow(split_at, end, depth + 1);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  const Dataset& data_;
  const ForestParams& params_;
  Rng rng_;
  std::size_t m_;
  std::size_t k_;
  std::size_t features_per_split_;
  std::size_t min_leaf_;

  std::vector<std::uint32_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint32_t> counts_;

  std::vector<std::size_t> node_counts_;
  std::vector<std::size_t> left_counts_;
  std::vector<std::pair<double, std::size_t>> sorted_;
  std::vector<std::size_t> category_counts_;
  std::vector<std::size_t> category_totals_;
};

}  // namespace

RandomForest train_random_forest(const Dataset& train, const ForestParams& params) {
  if (train.empty()) throw Error(ErrorCode::InvalidArgument, "training set is empty");
  if (params.n_trees == 0) throw Error(ErrorCode::InvalidArgument, "n_trees must be >= 1");
  const auto counts = train.class_counts();
  if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2) {
    throw Error(ErrorCode::SingleClassTraining, "training labels contain a single class");
  }
  std::vector<DecisionTree> trees(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    TreeBuilder builder(train, params, derive_seed(params.seed, "tree", t));
    trees[t] = builder.build();
  });
  return RandomForest(train.schema().size(), train.schema().num_classes(), std::move(trees));
}

}  // namespace discern
