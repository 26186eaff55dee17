#include <doctest.h>

#include <cmath>

#include "chanlearn/forest.hpp"
#include "chanlearn/rng.hpp"

using namespace chanlearn;

namespace {

/// Feature 0 alone separates the classes; the rest is noise.
Dataset feature0_separable(int per_class, int n_classes, std::uint64_t seed) {
  Dataset ds;
  ds.task = Task::classification;
  ds.seq_len = 4;
  ds.n_classes = n_classes;
  ds.target_width = 1;
  RandomStream rng(seed);
  for (int c = 0; c < n_classes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.label = c;
      s.features = {static_cast<double>(c) + 0.4 * rng.uniform(), rng.uniform(),
                    rng.uniform(), rng.uniform()};
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("perfectly separable data trains to 100%") {
  const Dataset ds = feature0_separable(40, 3, 5);
  const RandomForest forest = RandomForest::fit(ds, 25, 7);
  CHECK(forest.accuracy(ds) == doctest::Approx(1.0));
}

TEST_CASE("single-class dataset yields single-leaf trees that always agree") {
  Dataset ds = feature0_separable(30, 1, 9);
  ds.n_classes = 3;  // room for other labels, but only class 0 present
  const RandomForest forest = RandomForest::fit(ds, 10, 11);
  for (const Sample& s : ds.samples) CHECK(forest.predict(s.features) == 0);
}

TEST_CASE("same seed, same predictions") {
  const Dataset ds = feature0_separable(50, 4, 13);
  const RandomForest a = RandomForest::fit(ds, 15, 17);
  const RandomForest b = RandomForest::fit(ds, 15, 17);
  RandomStream rng(19);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> probe{4.0 * rng.uniform(), rng.uniform(), rng.uniform(),
                                    rng.uniform()};
    CHECK(a.predict(probe) == b.predict(probe));
  }
}

TEST_CASE("confusion matrix trace matches accuracy") {
  const Dataset ds = feature0_separable(30, 3, 23);
  const RandomForest forest = RandomForest::fit(ds, 9, 29);
  const auto confusion = forest.confusion(ds);
  int trace = 0, total = 0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) total += confusion[i][j];
    trace += confusion[i][i];
  }
  CHECK(static_cast<double>(trace) / total == doctest::Approx(forest.accuracy(ds)));
}

TEST_CASE("invalid inputs rejected") {
  Dataset reg;
  reg.task = Task::regression;
  reg.seq_len = 3;
  reg.samples.push_back({{1.0, 2.0, 3.0}, -1, {0.5}, {}});
  CHECK_THROWS(RandomForest::fit(reg, 10, 1));

  const Dataset ds = feature0_separable(10, 2, 31);
  CHECK_THROWS(RandomForest::fit(ds, 0, 1));
  const RandomForest forest = RandomForest::fit(ds, 5, 1);
  const std::vector<double> short_probe{1.0, 2.0};
  CHECK_THROWS(forest.predict(short_probe));
}
