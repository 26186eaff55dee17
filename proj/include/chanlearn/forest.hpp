#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "chanlearn/dataset.hpp"

namespace chanlearn {

/// Random-forest classifier: bootstrap resampling per tree, greedy Gini
/// splits over ceil(sqrt(d)) features per node, grown until pure or fewer
/// than two samples. Deterministic given the seed; trees own derived streams
/// so fitting order cannot change the result.
class RandomForest {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::unique_ptr<Node> left, right;
    std::vector<int> class_counts;  // populated at leaves
  };

  static RandomForest fit(const Dataset& ds, int n_estimators, std::uint64_t seed);

  /// Majority vote across trees; ties go to the lowest class index.
  int predict(std::span<const double> features) const;

  double accuracy(const Dataset& ds) const;
  std::vector<std::vector<int>> confusion(const Dataset& ds) const;

  int n_estimators() const { return static_cast<int>(trees_.size()); }
  int n_classes() const { return n_classes_; }
  std::size_t n_features() const { return n_features_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<std::unique_ptr<Node>> trees_;
  int n_classes_ = 0;
  std::size_t n_features_ = 0;
  std::uint64_t seed_ = 0;
};

}  // namespace chanlearn
