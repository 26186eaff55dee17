#include "chanlearn/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace chanlearn {

namespace {

constexpr std::uint64_t kTagTree = 0xF0;

struct TreeBuilder {
  const std::vector<const Sample*>& samples;  // row lookup
  int n_classes;
  std::size_t n_features;
  std::size_t features_per_node;
  RandomStream& rng;

  std::unique_ptr<RandomForest::Node> build(std::vector<std::size_t>& idx,
                                            std::size_t begin, std::size_t end) {
    auto node = std::make_unique<RandomForest::Node>();
    std::vector<int> counts(n_classes, 0);
    for (std::size_t i = begin; i < end; ++i) {
      counts[samples[idx[i]]->label] += 1;
    }
    const std::size_t n = end - begin;
    const bool pure = *std::max_element(counts.begin(), counts.end()) ==
                      static_cast<int>(n);
    if (pure || n < 2) {
      node->class_counts = std::move(counts);
      return node;
    }

    // Candidate features: ceil(sqrt(d)) drawn without replacement.
    std::vector<std::size_t> feats(n_features);
    std::iota(feats.begin(), feats.end(), 0);
    for (std::size_t i = 0; i < features_per_node; ++i) {
      std::swap(feats[i], feats[i + rng.uniform_index(n_features - i)]);
    }

    double best_gini = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, int>> vals(n);  // (value, label)
    std::vector<int> left_counts(n_classes);
    for (std::size_t fi = 0; fi < features_per_node; ++fi) {
      const std::size_t f = feats[fi];
      for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = *samples[idx[begin + i]];
        vals[i] = {s.features[f], s.label};
      }
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (vals.front().first == vals.back().first) continue;  // constant feature

      std::fill(left_counts.begin(), left_counts.end(), 0);
      std::size_t n_left = 0;
      // Split between consecutive distinct sorted values; weighted Gini of
      // the two children, threshold at the midpoint.
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_counts[vals[i].second] += 1;
        n_left += 1;
        if (vals[i].first == vals[i + 1].first) continue;
        const std::size_t n_right = n - n_left;
        double gl = 1.0, gr = 1.0;
        for (int c = 0; c < n_classes; ++c) {
          const double pl = static_cast<double>(left_counts[c]) / n_left;
          const double pr = static_cast<double>(counts[c] - left_counts[c]) / n_right;
          gl -= pl * pl;
          gr -= pr * pr;
        }
        const double gini = (n_left * gl + n_right * gr) / static_cast<double>(n);
        if (gini < best_gini) {
          best_gini = gini;
          best_feature = static_cast<int>(f);
          best_threshold = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
        }
      }
    }

    if (best_feature < 0) {
      // All candidate features constant on this node.
      node->class_counts = std::move(counts);
      return node;
    }

    const auto mid = std::partition(idx.begin() + begin, idx.begin() + end,
                                    [&](std::size_t i) {
                                      return samples[i]->features[best_feature] < best_threshold;
                                    });
    const std::size_t cut = static_cast<std::size_t>(mid - idx.begin());
    if (cut == begin || cut == end) {
      // Numerically possible when the midpoint collapses onto a value.
      node->class_counts = std::move(counts);
      return node;
    }
    node->feature = best_feature;
    node->threshold = best_threshold;
    node->left = build(idx, begin, cut);
    node->right = build(idx, cut, end);
    return node;
  }
};

const RandomForest::Node* descend(const RandomForest::Node* node,
                                  std::span<const double> features) {
  while (node->feature >= 0) {
    node = features[node->feature] < node->threshold ? node->left.get()
                                                     : node->right.get();
  }
  return node;
}

int leaf_vote(const RandomForest::Node* leaf) {
  int best = 0;
  for (std::size_t c = 1; c < leaf->class_counts.size(); ++c) {
    if (leaf->class_counts[c] > leaf->class_counts[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace

RandomForest RandomForest::fit(const Dataset& ds, int n_estimators, std::uint64_t seed) {
  if (ds.task != Task::classification) {
    throw std::invalid_argument("RandomForest::fit: classification dataset required");
  }
  if (n_estimators < 1) {
    throw std::invalid_argument("RandomForest::fit: n_estimators must be >= 1");
  }
  if (ds.samples.empty()) {
    throw std::invalid_argument("RandomForest::fit: empty dataset");
  }

  RandomForest forest;
  forest.n_classes_ = ds.n_classes;
  forest.n_features_ = ds.samples.front().features.size();
  forest.seed_ = seed;

  std::vector<const Sample*> rows;
  rows.reserve(ds.samples.size());
  for (const Sample& s : ds.samples) rows.push_back(&s);

  const std::size_t features_per_node = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(forest.n_features_))));

  forest.trees_.reserve(n_estimators);
  for (int t = 0; t < n_estimators; ++t) {
    RandomStream rng = RandomStream::derive(seed, {kTagTree, static_cast<std::uint64_t>(t)});
    std::vector<std::size_t> boot(rows.size());
    for (auto& i : boot) i = rng.uniform_index(rows.size());
    TreeBuilder builder{rows, forest.n_classes_, forest.n_features_, features_per_node, rng};
    forest.trees_.push_back(builder.build(boot, 0, boot.size()));
  }
  return forest;
}

int RandomForest::predict(std::span<const double> features) const {
  if (features.size() != n_features_) {
    throw std::invalid_argument("RandomForest::predict: feature width mismatch");
  }
  std::vector<int> votes(n_classes_, 0);
  for (const auto& tree : trees_) {
    votes[leaf_vote(descend(tree.get(), features))] += 1;
  }
  int best = 0;
  for (int c = 1; c < n_classes_; ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return best;
}

double RandomForest::accuracy(const Dataset& ds) const {
  std::size_t correct = 0;
  for (const Sample& s : ds.samples) {
    if (predict(s.features) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.samples.size());
}

std::vector<std::vector<int>> RandomForest::confusion(const Dataset& ds) const {
  std::vector<std::vector<int>> m(n_classes_, std::vector<int>(n_classes_, 0));
  for (const Sample& s : ds.samples) {
    m[s.label][predict(s.features)] += 1;
  }
  return m;
}

}  // namespace chanlearn
