#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "chanlearn/architectures.hpp"
#include "chanlearn/experiments.hpp"

using namespace chanlearn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("lstm width bisection hits every parameter budget within 10%") {
  for (std::size_t target : {std::size_t{1000}, std::size_t{10000}, std::size_t{30000},
                             std::size_t{100000}, std::size_t{300000}}) {
    const double factor = lstm_width_factor_for(10, 5, target);
    const std::size_t actual = nn::param_count(lstm_classifier_scaled(10, 5, factor));
    const double rel = std::abs(static_cast<double>(actual) - static_cast<double>(target)) /
                       static_cast<double>(target);
    CHECK(rel <= 0.10);
  }
}

TEST_CASE("regression experiment at smoke scale writes a deterministic report") {
  const RunOverrides tiny{/*samples=*/400, /*epochs=*/4, /*batch=*/100, /*repeats=*/1};
  const RunReport a = run_regression(Scale::desk, tiny, 5);
  const RunReport b = run_regression(Scale::desk, tiny, 5);
  CHECK(a.metrics == b.metrics);
  CHECK(a.config == b.config);

  const auto dir_a = std::filesystem::temp_directory_path() / "chanlearn_rep_a";
  const auto dir_b = std::filesystem::temp_directory_path() / "chanlearn_rep_b";
  write_report(a, dir_a);
  write_report(b, dir_b);
  CHECK(slurp(dir_a / "report.json") == slurp(dir_b / "report.json"));
  CHECK(slurp(dir_a / "history.csv") == slurp(dir_b / "history.csv"));
  CHECK(a.metrics.contains("final_test_mse"));
  CHECK(a.metrics.contains("tiers"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("markovian forecast experiment echoes the 6-in/3-out shapes") {
  const RunOverrides tiny{/*samples=*/120, /*epochs=*/3, /*batch=*/32, /*repeats=*/1};
  const RunReport rep = run_forecast_markovian({0.5}, Scale::desk, tiny, 3);
  CHECK(rep.config.at("input_len").get<int>() == 6);
  CHECK(rep.config.at("target_len").get<int>() == 3);
  CHECK(rep.metrics.at("points").size() == 1);
}

TEST_CASE("experiment argument validation") {
  const RunOverrides none{};
  CHECK_THROWS(run_memory_binning({}, Scale::desk, none, 1));
  CHECK_THROWS(run_memory_binning({0.1}, Scale::desk, none, 1));
  CHECK_THROWS(run_forecast_markovian({1.5}, Scale::desk, none, 1));
  CHECK_THROWS(run_complexity_sweep({}, Scale::desk, none, 1));
  CHECK_THROWS(scale_from_name("huge"));
}
