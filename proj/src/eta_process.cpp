#include "chanlearn/eta_process.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace chanlearn {

namespace {
constexpr double kNonMarkovianMuMax = 6.0 / 11.0;  // mu * (1 + 1/2 + 1/3) <= 1
}

MomentSpec moments_from_beta(const BetaParams& p) {
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) {
    throw std::invalid_argument("moments_from_beta: shapes must be > 0");
  }
  const double s = p.alpha + p.beta;
  return {p.alpha / s, p.alpha * p.beta / (s * s * (s + 1.0))};
}

BetaParams beta_from_moments(const MomentSpec& m) {
  if (!(m.mean > 0.0 && m.mean < 1.0)) {
    throw std::invalid_argument("beta_from_moments: mean must lie in (0, 1)");
  }
  const double cap = m.mean * (1.0 - m.mean);
  if (!(m.var > 0.0)) {
    throw std::invalid_argument("beta_from_moments: variance must be > 0 (zero means degenerate)");
  }
  if (!(m.var < cap)) {
    throw std::invalid_argument("beta_from_moments: variance must be < mean*(1-mean)");
  }
  const double scale = cap / m.var - 1.0;
  return {m.mean * scale, (1.0 - m.mean) * scale};
}

double sample_beta(const BetaParams& p, RandomStream& rng) {
  return rng.beta(p.alpha, p.beta);
}

ChannelClass class_of(const ChannelKind& kind) {
  return std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NonMarkovian>) return ChannelClass::NonMarkovian;
        if constexpr (std::is_same_v<T, Markovian>) return ChannelClass::Markovian;
        if constexpr (std::is_same_v<T, Memoryless>) return ChannelClass::Memoryless;
        if constexpr (std::is_same_v<T, Compound>) return ChannelClass::Compound;
        if constexpr (std::is_same_v<T, DeterministicCos> ||
                      std::is_same_v<T, DeterministicExp>) {
          return ChannelClass::Deterministic;
        }
      },
      kind);
}

std::string_view class_label(ChannelClass cls) {
  switch (cls) {
    case ChannelClass::NonMarkovian: return "NM";
    case ChannelClass::Markovian: return "M";
    case ChannelClass::Memoryless: return "ML";
    case ChannelClass::Compound: return "C";
    case ChannelClass::Deterministic: return "D";
  }
  throw std::logic_error("class_label: bad enum");
}

ChannelClass class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) {
    throw std::invalid_argument("class_from_index: index outside [0, 5)");
  }
  return static_cast<ChannelClass>(index);
}

bool is_deterministic(const ChannelKind& kind) {
  return class_of(kind) == ChannelClass::Deterministic;
}

void validate_kind(const ChannelKind& kind) {
  std::visit(
      [](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NonMarkovian>) {
          if (!(k.mu >= 0.2 && k.mu <= kNonMarkovianMuMax)) {
            throw std::invalid_argument("NonMarkovian: mu must lie in [0.2, 6/11]");
          }
        } else if constexpr (std::is_same_v<T, Markovian>) {
          // The update rule is valid for any mu in (0, 1); class datasets draw
          // from (0.1, 1) per sample_kind_params.
          if (!(k.mu > 0.0 && k.mu < 1.0)) {
            throw std::invalid_argument("Markovian: mu must lie in (0, 1)");
          }
        } else if constexpr (std::is_same_v<T, DeterministicCos>) {
          if (!(k.a > 0.0 && k.a < 0.5 && k.b > 0.0 && k.b < 0.5)) {
            throw std::invalid_argument("DeterministicCos: a, b must lie in (0, 0.5)");
          }
          if (!(k.delta > 1.0 && k.delta < 10.0)) {
            throw std::invalid_argument("DeterministicCos: delta must lie in (1, 10)");
          }
        } else if constexpr (std::is_same_v<T, DeterministicExp>) {
          if (!(k.a > 0.0 && k.a < 0.5 && k.b > 0.0 && k.b < 0.5)) {
            throw std::invalid_argument("DeterministicExp: a, b must lie in (0, 0.5)");
          }
          if (!(k.delta > 10.0 && k.delta < 30.0)) {
            throw std::invalid_argument("DeterministicExp: delta must lie in (10, 30)");
          }
        }
      },
      kind);
}

double d2_variance_bound(double mean) {
  if (!(mean > 0.0 && mean < 1.0)) {
    throw std::invalid_argument("d2_variance_bound: mean must lie in (0, 1)");
  }
  const double cap = mean * (1.0 - mean);
  return std::min(cap / (1.0 + 1.0 / mean), cap / (1.0 + 1.0 / (1.0 - mean)));
}

InitSpec sample_init_d1(RandomStream& rng) {
  const double alpha = rng.uniform(1.0, 10.0);
  const double beta = rng.uniform(1.0, 10.0);
  return D1Init{{alpha, beta}};
}

InitSpec sample_init_d2(RandomStream& rng) {
  const double mean = rng.uniform_open();
  const double var = rng.uniform() * d2_variance_bound(mean);
  // var == 0 would be degenerate; nudge into the open interval.
  return D2Init{{mean, std::max(var, 1e-300)}};
}

MomentSpec init_moments(const InitSpec& init) {
  if (const auto* d1 = std::get_if<D1Init>(&init)) {
    return moments_from_beta(d1->params);
  }
  return std::get<D2Init>(init).moments;
}

std::vector<double> memory_weights(const ChannelKind& kind, int k) {
  if (k < 2) throw std::invalid_argument("memory_weights: k must be >= 2");
  if (is_deterministic(kind)) {
    throw std::invalid_argument("memory_weights: deterministic kinds bypass the stochastic update");
  }
  if (const auto* nm = std::get_if<NonMarkovian>(&kind)) {
    // Only min(3, k-1) past values exist during warm-up.
    const int n = std::min(3, k - 1);
    std::vector<double> w;
    w.reserve(n);
    for (int i = 1; i <= n; ++i) w.push_back(nm->mu / i);
    return w;
  }
  if (const auto* m = std::get_if<Markovian>(&kind)) return {m->mu};
  if (std::holds_alternative<Compound>(kind)) return {1.0};
  return {};  // Memoryless
}

MomentSpec next_moments(std::span<const double> weights,
                        std::span<const double> history_newest_first,
                        const MomentSpec& init) {
  if (history_newest_first.size() < weights.size()) {
    throw std::invalid_argument("next_moments: history shorter than weight vector");
  }
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (wsum > 1.0) {
    throw std::invalid_argument("next_moments: weights must sum to <= 1");
  }
  double mean = (1.0 - wsum) * init.mean;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    mean += weights[i] * history_newest_first[i];
  }
  return {mean, (1.0 - wsum) * init.var};
}

double deterministic_eta(const ChannelKind& kind, int k) {
  if (k < 1) throw std::invalid_argument("deterministic_eta: k must be >= 1");
  if (const auto* e = std::get_if<DeterministicExp>(&kind)) {
    const double t = static_cast<double>(k - 1);
    return e->a + e->b * std::exp(-t * t / e->delta);
  }
  if (const auto* c = std::get_if<DeterministicCos>(&kind)) {
    const double t = static_cast<double>(k - 1);
    return c->a + c->b * std::abs(std::cos(t / c->delta));
  }
  throw std::invalid_argument("deterministic_eta: kind is not deterministic");
}

std::vector<double> sample_eta_values(const ChannelKind& kind,
                                      const InitSpec& init, int length,
                                      RandomStream& rng) {
  if (length < 1) throw std::invalid_argument("sample_eta_values: length must be >= 1");
  validate_kind(kind);

  std::vector<double> values;
  values.reserve(length);

  if (is_deterministic(kind)) {
    for (int k = 1; k <= length; ++k) values.push_back(deterministic_eta(kind, k));
    return values;
  }

  const MomentSpec prior = init_moments(init);
  const BetaParams first = std::holds_alternative<D1Init>(init)
                               ? std::get<D1Init>(init).params
                               : beta_from_moments(prior);
  values.push_back(sample_beta(first, rng));

  for (int k = 2; k <= length; ++k) {
    const auto weights = memory_weights(kind, k);
    // History newest-first: eta_{k-1}, eta_{k-2}, ...
    std::vector<double> history(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
      history[i] = values[values.size() - 1 - i];
    }
    MomentSpec m = next_moments(weights, history, prior);
    // Keep the conditional distribution a valid uni-modal Beta: clamp the
    // variance below the alpha,beta > 1 bound at the current mean.
    if (m.mean > 0.0 && m.mean < 1.0) {
      m.var = std::min(m.var, 0.999 * d2_variance_bound(m.mean));
    } else {
      m.var = 0.0;
    }
    if (m.var < kDegenerateVarianceThreshold) {
      values.push_back(m.mean);
    } else {
      values.push_back(sample_beta(beta_from_moments(m), rng));
    }
  }
  return values;
}

EtaSequence sample_eta_sequence(const ChannelKind& kind, const InitSpec& init,
                                int length, std::uint64_t seed) {
  RandomStream rng(seed);
  return {sample_eta_values(kind, init, length, rng), kind, init, seed};
}

ChannelKind sample_kind_params(ChannelClass cls, RandomStream& rng) {
  switch (cls) {
    case ChannelClass::NonMarkovian:
      return NonMarkovian{rng.uniform(0.2, kNonMarkovianMuMax)};
    case ChannelClass::Markovian: {
      double mu;
      do {
        mu = rng.uniform(0.1, 1.0);
      } while (mu <= 0.1);  // open interval
      return Markovian{mu};
    }
    case ChannelClass::Memoryless:
      return Memoryless{};
    case ChannelClass::Compound:
      return Compound{};
    case ChannelClass::Deterministic: {
      // Open intervals throughout, matching the class invariants.
      const bool use_cos = rng.uniform() < 0.5;
      const double a = 0.5 * rng.uniform_open();
      const double b = 0.5 * rng.uniform_open();
      if (use_cos) return DeterministicCos{a, b, 1.0 + 9.0 * rng.uniform_open()};
      return DeterministicExp{a, b, 10.0 + 20.0 * rng.uniform_open()};
    }
  }
  throw std::logic_error("sample_kind_params: bad enum");
}

}  // namespace chanlearn
