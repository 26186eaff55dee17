#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "chanlearn/rng.hpp"

namespace chanlearn {

/// Beta shape pair (alpha, beta), both > 0.
struct BetaParams {
  double alpha;
  double beta;
};

/// (mean, variance) of a distribution on (0, 1).
struct MomentSpec {
  double mean;
  double var;
};

MomentSpec moments_from_beta(const BetaParams& p);

/// Inverts moments_from_beta. Requires 0 < mean < 1 and
/// 0 < var < mean * (1 - mean); a zero variance is the caller's signal for
/// the degenerate (deterministic) branch and is rejected here.
BetaParams beta_from_moments(const MomentSpec& m);

/// Exact Beta(alpha, beta) draw, strictly inside (0, 1).
double sample_beta(const BetaParams& p, RandomStream& rng);

// --- channel classes -------------------------------------------------------

struct NonMarkovian {
  double mu;  // in [0.2, 6/11]: full weight vector (mu, mu/2, mu/3) sums <= 1
};
struct Markovian {
  double mu;  // in (0, 1); class datasets draw from (0.1, 1)
};
struct Memoryless {};
struct Compound {};
struct DeterministicCos {
  double a, b, delta;  // 0 < a,b < 0.5; 1 < delta < 10
};
struct DeterministicExp {
  double a, b, delta;  // 0 < a,b < 0.5; 10 < delta < 30
};

using ChannelKind = std::variant<NonMarkovian, Markovian, Memoryless, Compound,
                                 DeterministicCos, DeterministicExp>;

/// Five-way label alphabet; both deterministic forms map to Deterministic.
enum class ChannelClass { NonMarkovian, Markovian, Memoryless, Compound, Deterministic };

inline constexpr int kNumClasses = 5;

ChannelClass class_of(const ChannelKind& kind);
std::string_view class_label(ChannelClass cls);  // "NM", "M", "ML", "C", "D"
ChannelClass class_from_index(int index);        // fixed order NM, M, ML, C, D

bool is_deterministic(const ChannelKind& kind);

/// Throws if the kind's parameters violate its class invariants.
void validate_kind(const ChannelKind& kind);

// --- initialization --------------------------------------------------------

struct D1Init {
  BetaParams params;  // shapes on [1, 10]
};
struct D2Init {
  MomentSpec moments;  // mean on (0,1), var below d2_variance_bound(mean)
};
using InitSpec = std::variant<D1Init, D2Init>;

/// Largest variance for which beta_from_moments(mean, var) has alpha, beta > 1:
/// min( m(1-m)/(1 + 1/m), m(1-m)/(1 + 1/(1-m)) ).
double d2_variance_bound(double mean);

InitSpec sample_init_d1(RandomStream& rng);
InitSpec sample_init_d2(RandomStream& rng);

/// Prior moments implied by an InitSpec.
MomentSpec init_moments(const InitSpec& init);

// --- memory update ---------------------------------------------------------

/// Weights applied to the most recent eta values when forming the conditional
/// mean at step k >= 2. Deterministic kinds are rejected: they bypass the
/// stochastic update entirely.
std::vector<double> memory_weights(const ChannelKind& kind, int k);

/// Conditional moment update: mean = sum_i w_i * history_i + (1 - sum w) * mean1,
/// var = (1 - sum w) * var1. History is ordered newest-first.
MomentSpec next_moments(std::span<const double> weights,
                        std::span<const double> history_newest_first,
                        const MomentSpec& init);

/// Fixed transmissivity law for the deterministic kinds, k >= 1.
double deterministic_eta(const ChannelKind& kind, int k);

// --- sequence generation ---------------------------------------------------

/// Conditional variances below this are treated as a point mass: eta_k is
/// emitted as the conditional mean without sampling.
inline constexpr double kDegenerateVarianceThreshold = 1e-12;

struct EtaSequence {
  std::vector<double> values;
  ChannelKind kind;
  InitSpec init;
  std::uint64_t seed = 0;
};

/// Core generator drawing from an existing stream (used by dataset builders,
/// which derive one stream per sample).
std::vector<double> sample_eta_values(const ChannelKind& kind,
                                      const InitSpec& init, int length,
                                      RandomStream& rng);

/// Seeded wrapper recording provenance.
EtaSequence sample_eta_sequence(const ChannelKind& kind, const InitSpec& init,
                                int length, std::uint64_t seed);

/// Class-conditional parameter draw used by dataset builders: NonMarkovian
/// mu ~ U[0.2, 6/11], Markovian mu ~ U(0.1, 1), Deterministic picks cos/exp
/// with probability 1/2 and samples (a, b, delta) uniformly in range.
ChannelKind sample_kind_params(ChannelClass cls, RandomStream& rng);

}  // namespace chanlearn
