#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskshare/allocate.hpp"
#include "riskshare/allocation.hpp"
#include "riskshare/error.hpp"
#include "riskshare/infconv.hpp"
#include "riskshare/riskmetric.hpp"

namespace riskshare {

enum class SampleMode { Comonotonic, Unconstrained, TailRandomized };

inline const char* sample_mode_name(SampleMode m) {
  switch (m) {
    case SampleMode::Comonotonic: return "comonotonic";
    case SampleMode::Unconstrained: return "unconstrained";
    case SampleMode::TailRandomized: return "tail";
  }
  return "comonotonic";
}

// splitmix64 finaliser over (seed, index); every trial owns an independent
// generator so results do not depend on evaluation order.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// splitmix64 stream: unlike mt19937_64 it costs nothing to seed, and every
// sample is drawn from a freshly seeded generator.
class TrialRng {
 public:
  using result_type = std::uint64_t;
  explicit TrialRng(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

namespace detail {

// Uniform on [lo, hi]; rationals come from a 2^-16 lattice so that exact
// arithmetic stays cheap.
template <Scalar S, class Rng>
S uniform_scalar(Rng& rng, const S& lo, const S& hi) {
  if constexpr (is_exact_v<S>) {
    constexpr std::int64_t steps = 1 << 16;
    std::int64_t k = std::uniform_int_distribution<std::int64_t>(0, steps)(rng);
    return lo + (hi - lo) * ratio<S>(k, steps);
  } else {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }
}

// Random point of the simplex written into w; a quarter of the draws are
// vertices, the rest have integer weights in [0, 8]. Base-9 digits of one
// 64-bit draw supply up to 19 weights.
template <Scalar S, class Rng>
void random_simplex(Rng& rng, std::vector<S>& w) {
  const std::size_t n = w.size();
  std::uint64_t word = rng();
  if (word % 4 == 0) {
    std::fill(w.begin(), w.end(), S(0));
    w[(word / 4) % n] = S(1);
    return;
  }
  word /= 4;
  std::size_t left = 19;
  std::int64_t total = 0;
  while (total == 0) {
    for (auto& v : w) {
      if (left-- == 0) {
        word = rng();
        left = 19;
      }
      auto d = static_cast<std::int64_t>(word % 9);
      word /= 9;
      v = S(d);
      total += d;
    }
  }
  const S inv = S(1) / S(total);
  for (auto& v : w) v *= inv;
}

template <Scalar S, class Rng>
std::vector<S> random_simplex(Rng& rng, std::size_t n) {
  std::vector<S> w(n);
  random_simplex(rng, w);
  return w;
}

template <Scalar S>
S spread_of(const DiscreteRv<S>& x) {
  S r = x[x.order_desc().front()] - x[x.order_desc().back()];
  return r > 0 ? r : S(1);
}

// Constants summing to zero.
template <Scalar S, class Rng>
std::vector<S> zero_sum_noise(Rng& rng, std::size_t n, const S& scale) {
  std::vector<S> c(n);
  S mean(0);
  for (auto& v : c) {
    v = uniform_scalar(rng, S(-scale), scale);
    mean += v;
  }
  mean /= S(static_cast<std::int64_t>(n));
  for (auto& v : c) v -= mean;
  return c;
}

// Walks X upward; each gap between distinct values is split by a fresh
// simplex draw, so every part is increasing in X.
template <Scalar S, class Rng>
Allocation<S> sample_comonotonic(const DiscreteRv<S>& x, std::size_t n, Rng& rng) {
  auto base = random_simplex<S>(rng, n);
  auto shift = zero_sum_noise(rng, n, spread_of(x));
  std::vector<std::vector<S>> parts(n, std::vector<S>(x.size()));
  std::vector<S> cur(n), w(n);
  const auto& order = x.order_desc();
  const S* prev = nullptr;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const S& v = x[*it];
    if (!prev) {
      for (std::size_t i = 0; i < n; ++i) cur[i] = shift[i] + base[i] * v;
    } else if (v != *prev) {
      random_simplex(rng, w);
      S gap = v - *prev;
      for (std::size_t i = 0; i < n; ++i) cur[i] += w[i] * gap;
    }
    for (std::size_t i = 0; i < n; ++i) parts[i][*it] = cur[i];
    prev = &v;
  }
  return Allocation<S>(x, std::move(parts));
}

// Random linear shares of X plus statewise noise projected onto the
// sum-zero subspace.
template <Scalar S, class Rng>
std::vector<std::vector<S>> noise_parts(const DiscreteRv<S>& x, std::size_t n, Rng& rng, const S& scale) {
  std::vector<std::vector<S>> parts(n, std::vector<S>(x.size()));
  for (std::size_t s = 0; s < x.size(); ++s) {
    auto e = zero_sum_noise(rng, n, scale);
    for (std::size_t i = 0; i < n; ++i) parts[i][s] = e[i];
  }
  return parts;
}

template <Scalar S, class Rng>
Allocation<S> sample_unconstrained(const DiscreteRv<S>& x, std::size_t n, Rng& rng) {
  auto w = random_simplex<S>(rng, n);
  auto parts = noise_parts(x, n, rng, spread_of(x));
  for (std::size_t s = 0; s < x.size(); ++s)
    for (std::size_t i = 0; i < n; ++i) parts[i][s] += w[i] * x[s];
  return Allocation<S>(x, std::move(parts));
}

// Whole right and left tail blocks to single agents, the middle split
// linearly, then optionally a small projected perturbation.
template <Scalar S, class Rng>
Allocation<S> sample_tail(const DiscreteRv<S>& x, std::size_t n, Rng& rng) {
  const std::size_t n_states = x.size();
  const auto& order = x.order_desc();
  std::vector<std::size_t> owner(n_states, TailAssignment<S>::npos);
  std::size_t top = 0, bottom = n_states;
  std::size_t budget = n_states / 2;
  std::vector<std::size_t> agents(n);
  std::iota(agents.begin(), agents.end(), std::size_t{0});
  std::shuffle(agents.begin(), agents.end(), rng);
  for (std::size_t i : agents) {
    std::size_t cap = std::min<std::size_t>(budget, std::max<std::size_t>(1, n_states / (2 * n) + 1));
    std::size_t ka = std::uniform_int_distribution<std::size_t>(0, cap)(rng);
    for (std::size_t j = 0; j < ka && top < bottom; ++j) owner[order[top++]] = i;
    for (std::size_t j = 0; j < ka && top < bottom; ++j) owner[order[--bottom]] = i;
    budget -= std::min(budget, ka);
  }
  S lo = quantile(x, ratio<S>(1, 2), QuantileSide::Left);
  S hi = quantile(x, ratio<S>(1, 2), QuantileSide::Right);
  S c = uniform_scalar(rng, lo, hi);
  auto a = random_simplex<S>(rng, n);
  auto cs = zero_sum_noise(rng, n, spread_of(x));
  std::vector<std::vector<S>> parts(n, std::vector<S>(n_states));
  for (std::size_t s = 0; s < n_states; ++s) {
    S dev = x[s] - c;
    for (std::size_t i = 0; i < n; ++i) {
      S share = owner[s] == TailAssignment<S>::npos ? S(a[i] * dev) : (owner[s] == i ? dev : S(0));
      parts[i][s] = share + cs[i] + c / S(static_cast<std::int64_t>(n));
    }
  }
  if (std::uniform_int_distribution<int>(0, 1)(rng) == 1) {
    auto e = noise_parts(x, n, rng, S(spread_of(x) * ratio<S>(1, 100)));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t s = 0; s < n_states; ++s) parts[i][s] += e[i][s];
  }
  return Allocation<S>(x, std::move(parts));
}

}  // namespace detail

// Allocation number `index` of the seeded stream for `mode`.
template <Scalar S>
Allocation<S> sample_allocation(const DiscreteRv<S>& x, std::size_t n, SampleMode mode, std::uint64_t seed,
                                std::uint64_t index) {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "no agents to sample for");
  if (n == 1) return Allocation<S>(x, {x.values()});
  TrialRng rng(trial_seed(seed, index));
  switch (mode) {
    case SampleMode::Comonotonic: return detail::sample_comonotonic(x, n, rng);
    case SampleMode::Unconstrained: return detail::sample_unconstrained(x, n, rng);
    case SampleMode::TailRandomized: return detail::sample_tail(x, n, rng);
  }
  throw Error(ErrorCode::InvalidInput, "unknown sample mode");
}

template <Scalar S>
std::vector<Allocation<S>> sample_allocations(const DiscreteRv<S>& x, std::size_t n, SampleMode mode,
                                              std::size_t count, std::uint64_t seed) {
  if (count == 0) throw Error(ErrorCode::InvalidInput, "sample count must be positive");
  std::vector<Allocation<S>> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(sample_allocation(x, n, mode, seed, k));
  return out;
}

template <Scalar S>
struct VerificationReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_gap = 0;
  double tolerance = 0;
  std::vector<Allocation<S>> witnesses;
  std::vector<double> witness_gaps;

  static constexpr std::size_t max_witnesses = 5;

  bool passed() const { return violations == 0; }

  void record(double gap, bool violated, const Allocation<S>& a) {
    if (trials == 0 || gap < worst_gap) worst_gap = gap;
    ++trials;
    if (!violated) return;
    ++violations;
    if (witnesses.size() < max_witnesses) {
      witnesses.push_back(a);
      witness_gaps.push_back(gap);
    }
  }

  void merge(const VerificationReport& other) {
    if (other.trials == 0) return;
    if (trials == 0 || other.worst_gap < worst_gap) worst_gap = other.worst_gap;
    trials += other.trials;
    violations += other.violations;
    for (std::size_t k = 0; k < other.witnesses.size() && witnesses.size() < max_witnesses; ++k) {
      witnesses.push_back(other.witnesses[k]);
      witness_gaps.push_back(other.witness_gaps[k]);
    }
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "trials " << trials << "\n"
       << "violations " << violations << "\n"
       << "worst_gap " << worst_gap << "\n"
       << "tolerance " << tolerance << "\n"
       << "result " << (passed() ? "PASS" : "FAIL") << "\n";
    return os.str();
  }

  nlohmann::json to_json() const {
    return {{"trials", trials},         {"violations", violations},
            {"worst_gap", worst_gap},   {"tolerance", tolerance},
            {"witness_gaps", witness_gaps}, {"passed", passed()}};
  }
};

template <Scalar S>
class WelfareEvaluator {
 public:
  // With `order` (states by decreasing X), parts are read in that order, so
  // comonotonic allocations arrive already sorted.
  WelfareEvaluator(const std::vector<AgentSpec<S>>& agents, std::size_t n_states,
                   std::vector<std::size_t> order = {})
      : order_(std::move(order)) {
    for (const auto& a : agents) {
      evals_.emplace_back(a.distortion, n_states);
      weights_.push_back(a.weight);
    }
  }

  S operator()(const Allocation<S>& a) {
    S total(0);
    for (std::size_t i = 0; i < evals_.size(); ++i) total += weights_[i] * agent(i, a);
    return total;
  }

  S agent(std::size_t i, const Allocation<S>& a) {
    const auto& v = a.part_values(i);
    if (order_.empty()) return evals_[i](v, scratch_);
    scratch_.resize(v.size());
    for (std::size_t r = 0; r < v.size(); ++r) scratch_[r] = v[order_[r]];
    return evals_[i].sort_and_sum(scratch_);
  }

 private:
  std::vector<ChoquetEvaluator<S>> evals_;
  std::vector<S> weights_;
  std::vector<std::size_t> order_;
  std::vector<S> scratch_;
};

// Samples `trials` allocations per mode and flags any whose weighted welfare
// falls below `value` by more than tol * max(1, |value|).
template <Scalar S>
VerificationReport<S> dominance_check(const DiscreteRv<S>& x, const std::vector<AgentSpec<S>>& agents, const S& value,
                                      std::size_t trials, std::uint64_t seed, const std::vector<SampleMode>& modes,
                                      double tol = 1e-9) {
  VerificationReport<S> report;
  report.tolerance = tol;
  WelfareEvaluator<S> w(agents, x.size(), x.order_desc());
  const double target = to_double(value);
  const double slack = tol * std::max(1.0, std::abs(target));
  for (std::size_t m = 0; m < modes.size(); ++m) {
    for (std::size_t k = 0; k < trials; ++k) {
      auto a = sample_allocation(x, agents.size(), modes[m], trial_seed(seed, m), k);
      double gap = to_double(S(w(a) - value));
      report.record(gap, gap < -slack, a);
    }
  }
  return report;
}

// Modes that stay inside the feasible set of `regime`.
inline std::vector<SampleMode> modes_for(Regime regime) {
  if (regime == Regime::ComonotonicEnvelope) return {SampleMode::Comonotonic};
  return {SampleMode::Comonotonic, SampleMode::Unconstrained, SampleMode::TailRandomized};
}

template <Scalar S>
VerificationReport<S> dominance_check(const DiscreteRv<S>& x, const std::vector<AgentSpec<S>>& agents,
                                      const InfconvResult<S>& closed, std::size_t trials, std::uint64_t seed,
                                      double tol = 1e-9) {
  return dominance_check(x, agents, closed.value_at(x), trials, seed, modes_for(closed.regime), tol);
}

// Flags candidates that no agent likes less and some agent likes better by
// more than `tol`. Gaps record the largest strict improvement (negated).
template <Scalar S>
VerificationReport<S> pareto_check(const Allocation<S>& a, const std::vector<AgentSpec<S>>& agents,
                                   const std::vector<Allocation<S>>& candidates, double tol = 1e-9) {
  VerificationReport<S> report;
  report.tolerance = tol;
  WelfareEvaluator<S> w(agents, a.states());
  std::vector<double> base;
  for (std::size_t i = 0; i < agents.size(); ++i) base.push_back(to_double(w.agent(i, a)));
  for (const auto& c : candidates) {
    if (c.total().values() != a.total().values())
      throw Error(ErrorCode::InvalidInput, "candidate allocates a different total");
    bool weak = true;
    double best = 0;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      double d = to_double(w.agent(i, c)) - base[i];
      if (d > tol * std::max(1.0, std::abs(base[i]))) weak = false;
      best = std::min(best, d);
    }
    bool strict = best < -tol;
    report.record(weak ? best : 0.0, weak && strict, c);
  }
  return report;
}

// Exhaustive minimum over allocations in which agent 1 takes grid values
// state by state; an upper bound on the two-agent infimum.
template <Scalar S>
S bruteforce_infconv(const DiscreteRv<S>& x, const std::vector<AgentSpec<S>>& agents, const std::vector<S>& grid) {
  constexpr double max_cost = 244140625.0;  // 25^6
  if (agents.size() != 2) throw Error(ErrorCode::TooLarge, "brute force supports exactly two agents");
  if (x.size() > 6) throw Error(ErrorCode::TooLarge, "brute force supports at most 6 states");
  if (grid.empty()) throw Error(ErrorCode::InvalidInput, "empty value grid");
  if (std::pow(static_cast<double>(grid.size()), static_cast<double>(x.size())) > max_cost)
    throw Error(ErrorCode::TooLarge, "grid^N exceeds 25^6 evaluations");
  const std::size_t n_states = x.size();
  ChoquetEvaluator<S> e1(agents[0].distortion, n_states), e2(agents[1].distortion, n_states);
  std::vector<S> p1(n_states), p2(n_states), scratch;
  std::vector<std::size_t> idx(n_states, 0);
  bool have = false;
  S best(0);
  for (;;) {
    for (std::size_t s = 0; s < n_states; ++s) {
      p1[s] = grid[idx[s]];
      p2[s] = x[s] - p1[s];
    }
    S v = agents[0].weight * e1(p1, scratch) + agents[1].weight * e2(p2, scratch);
    if (!have || v < best) {
      best = v;
      have = true;
    }
    std::size_t s = 0;
    while (s < n_states && ++idx[s] == grid.size()) idx[s++] = 0;
    if (s == n_states) break;
  }
  return best;
}

struct MonteCarloEstimate {
  double estimate;
  double standard_error;
};

// Choquet integral of the empirical law of m draws; the standard error
// comes from ten equal batches.
inline MonteCarloEstimate monte_carlo_choquet(const DistortionFunction<double>& h,
                                              const std::function<double(std::mt19937_64&)>& sampler,
                                              std::size_t m, std::uint64_t seed) {
  if (m < 100) throw Error(ErrorCode::InvalidInput, "at least 100 draws required");
  constexpr std::size_t batches = 10;
  std::mt19937_64 rng(trial_seed(seed, 0));
  std::vector<double> draws(m);
  for (auto& d : draws) d = sampler(rng);
  double est = choquet(h, DiscreteRv<double>(draws));
  const std::size_t b = m / batches;
  std::vector<double> means;
  for (std::size_t k = 0; k < batches; ++k) {
    std::vector<double> part(draws.begin() + static_cast<std::ptrdiff_t>(k * b),
                             draws.begin() + static_cast<std::ptrdiff_t>((k + 1) * b));
    means.push_back(choquet(h, DiscreteRv<double>(part)));
  }
  double mu = std::accumulate(means.begin(), means.end(), 0.0) / batches;
  double var = 0;
  for (double v : means) var += (v - mu) * (v - mu);
  var /= (batches - 1);
  return {est, std::sqrt(var / batches)};
}

}  // namespace riskshare
