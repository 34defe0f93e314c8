#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskshare/beliefs.hpp"
#include "riskshare/distortion.hpp"
#include "riskshare/error.hpp"
#include "riskshare/riskmetric.hpp"

namespace riskshare {

// n parts over the states of X that add up to X state by state.
template <Scalar S>
class Allocation {
 public:
  Allocation(DiscreteRv<S> total, std::vector<std::vector<S>> parts)
      : total_(std::move(total)), parts_(std::move(parts)) {
    if (parts_.empty()) throw Error(ErrorCode::InvalidInput, "allocation with no agents");
    for (const auto& p : parts_)
      if (p.size() != total_.size()) throw Error(ErrorCode::InvalidInput, "part length differs from state count");
    for (std::size_t s = 0; s < total_.size(); ++s) {
      S sum(0), mag(1);
      for (const auto& p : parts_) {
        sum += p[s];
        mag += abs_of(p[s]);
      }
      bool ok;
      if constexpr (is_exact_v<S>) {
        ok = sum == total_[s];
      } else {
        ok = std::abs(sum - total_[s]) <= 1e-9 * (mag + std::abs(total_[s]));
      }
      if (!ok) throw Error(ErrorCode::InvalidInput, "parts do not sum to the total at state " + std::to_string(s));
    }
  }

  const DiscreteRv<S>& total() const { return total_; }
  const std::vector<std::vector<S>>& parts() const { return parts_; }
  const std::vector<S>& part_values(std::size_t i) const { return parts_[i]; }
  DiscreteRv<S> part(std::size_t i) const { return DiscreteRv<S>(parts_[i]); }
  std::size_t agents() const { return parts_.size(); }
  std::size_t states() const { return total_.size(); }

 private:
  DiscreteRv<S> total_;
  std::vector<std::vector<S>> parts_;
};

template <Scalar S>
struct AgentSpec {
  std::string name;
  DistortionFunction<S> distortion;
  S weight{1};
  std::optional<BeliefMeasure<S>> belief;
};

template <Scalar S>
std::vector<DistortionFunction<S>> weighted_distortions(const std::vector<AgentSpec<S>>& agents) {
  std::vector<DistortionFunction<S>> out;
  for (const auto& a : agents) out.push_back(scale(a.distortion, a.weight));
  return out;
}

enum class TieRule { EqualSplit, MinIndex, MaxIndex };

enum class Region { A, B, Middle };

// Right tail A (largest values) and left tail B (smallest values), each split
// into consecutive per-agent blocks.
template <Scalar S>
struct TailAssignment {
  std::vector<std::size_t> a, b;
  std::vector<std::vector<std::size_t>> parts_a, parts_b;
  S beta{0};

  std::vector<Region> regions(std::size_t n_states) const {
    std::vector<Region> r(n_states, Region::Middle);
    for (std::size_t s : a) r[s] = Region::A;
    for (std::size_t s : b) r[s] = Region::B;
    return r;
  }

  // Agent owning each tail state, or npos in the middle.
  std::vector<std::size_t> owners(std::size_t n_states) const {
    std::vector<std::size_t> o(n_states, npos);
    for (std::size_t i = 0; i < parts_a.size(); ++i)
      for (std::size_t s : parts_a[i]) o[s] = i;
    for (std::size_t i = 0; i < parts_b.size(); ++i)
      for (std::size_t s : parts_b[i]) o[s] = i;
    return o;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

inline const char* region_name(Region r) {
  switch (r) {
    case Region::A: return "A";
    case Region::B: return "B";
    case Region::Middle: return "middle";
  }
  return "middle";
}

// Along decreasing X every part is non-increasing, and tied states of X carry
// identical parts.
template <Scalar S>
bool is_comonotonic(const Allocation<S>& alloc, const S& tol = S(0)) {
  const auto& x = alloc.total();
  const auto& order = x.order_desc();
  for (std::size_t r = 1; r < order.size(); ++r) {
    std::size_t hi = order[r - 1], lo = order[r];
    bool tie = x[hi] == x[lo];
    for (const auto& p : alloc.parts()) {
      if (tie ? abs_of(S(p[hi] - p[lo])) > tol : p[hi] < p[lo] - tol) return false;
    }
  }
  return true;
}

template <Scalar S>
struct WelfareResult {
  std::vector<S> per_agent;
  S weighted_sum{0};
};

template <Scalar S>
WelfareResult<S> welfare(const Allocation<S>& alloc, const std::vector<AgentSpec<S>>& agents) {
  if (agents.size() != alloc.agents()) throw Error(ErrorCode::InvalidInput, "one agent per part required");
  WelfareResult<S> r;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& ag = agents[i];
    S v = ag.belief ? choquet_under(ag.distortion, alloc.part_values(i), *ag.belief)
                    : choquet(ag.distortion, alloc.part(i));
    r.per_agent.push_back(v);
    r.weighted_sum += ag.weight * v;
  }
  return r;
}

template <Scalar S>
struct ScenarioReport {
  std::vector<S> weighted_at_one;
  bool mixed_sign = false;
  bool unequal_at_one = false;
  bool normalization_suggested = false;
  std::vector<std::string> messages;

  bool passed() const { return !mixed_sign && !unequal_at_one; }
};

// Sign and level checks on lambda_i h_i(1). Mixed signs rule out any Pareto
// optimum; unequal levels make the comonotonic problem unbounded below.
template <Scalar S>
ScenarioReport<S> validate_scenario(const std::vector<AgentSpec<S>>& agents) {
  ScenarioReport<S> r;
  bool pos = false, neg = false, zero = false;
  for (const auto& a : agents) {
    S v = a.weight * value_at_one(a.distortion);
    r.weighted_at_one.push_back(v);
    if (near(v, S(0))) {
      zero = true;
    } else if (v > 0) {
      pos = true;
    } else {
      neg = true;
    }
  }
  r.mixed_sign = (pos && neg) || (zero && (pos || neg));
  for (const S& v : r.weighted_at_one)
    if (!near(v, r.weighted_at_one.front())) r.unequal_at_one = true;
  r.normalization_suggested = pos || neg;
  if (r.mixed_sign) r.messages.push_back("h_i(1) values mix signs or zero with nonzero: no Pareto optimum exists");
  if (r.unequal_at_one)
    r.messages.push_back("weighted h_i(1) values differ: the comonotonic inf-convolution is unbounded below");
  if (r.normalization_suggested)
    r.messages.push_back("nonzero h_i(1): normalize to h/|h(1)| before comparing Pareto optima");
  return r;
}

}  // namespace riskshare
