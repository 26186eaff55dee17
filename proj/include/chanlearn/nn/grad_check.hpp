#pragma once

#include <cstdint>

#include "chanlearn/nn/spec.hpp"

namespace chanlearn::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;  // flat index into the concatenated parameters
  std::size_t checked = 0;      // scored parameters (resolvable gradients)
};

/// Central finite differences (step 1e-5) against the analytic backward pass
/// on up to max_checked randomly chosen parameters. Inputs, targets and
/// initialization derive from seed; every parameter is jittered off its init
/// value (zero biases sit exactly on ReLU kinks), and the dropout mask is
/// re-frozen before every forward so both loss evaluations see the same
/// network function. Relative error uses the max(|analytic|, |numeric|, 1e-8)
/// denominator; parameters whose gradient is below finite-difference
/// resolution (1e-6) on both sides count as vanishing and are not scored.
GradCheckResult gradient_check(const NetworkSpec& spec, std::uint64_t seed = 17,
                               std::size_t batch = 4, std::size_t max_checked = 200);

}  // namespace chanlearn::nn
