#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "riskshare/distortion.hpp"
#include "riskshare/error.hpp"
#include "riskshare/riskmetric.hpp"

namespace riskshare {

template <Scalar S>
class BeliefMeasure {
 public:
  BeliefMeasure() = default;

  explicit BeliefMeasure(std::vector<S> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw Error(ErrorCode::InvalidInput, "belief over zero states");
    S total(0);
    for (const S& p : probs_) {
      if (p < 0) throw Error(ErrorCode::InvalidInput, "negative belief probability");
      total += p;
    }
    if (!near(total, S(1))) throw Error(ErrorCode::InvalidInput, "belief probabilities sum to " + to_string(total));
  }

  static BeliefMeasure uniform(std::size_t n) {
    return BeliefMeasure(std::vector<S>(n, S(1) / S(static_cast<std::int64_t>(n))));
  }

  std::size_t size() const { return probs_.size(); }
  const std::vector<S>& probs() const { return probs_; }
  const S& operator[](std::size_t s) const { return probs_[s]; }

  friend bool operator==(const BeliefMeasure& a, const BeliefMeasure& b) { return a.probs_ == b.probs_; }

 private:
  std::vector<S> probs_;
};

// Arithmetic average; every input is absolutely continuous with respect to it.
template <Scalar S>
BeliefMeasure<S> common_measure(const std::vector<BeliefMeasure<S>>& beliefs) {
  if (beliefs.empty()) throw Error(ErrorCode::InvalidInput, "no beliefs to average");
  std::size_t n = beliefs.front().size();
  std::vector<S> avg(n, S(0));
  for (const auto& b : beliefs) {
    if (b.size() != n) throw Error(ErrorCode::InvalidInput, "beliefs over different state counts");
    for (std::size_t s = 0; s < n; ++s) avg[s] += b[s];
  }
  S k(static_cast<std::int64_t>(beliefs.size()));
  for (S& p : avg) p /= k;
  return BeliefMeasure<S>(std::move(avg));
}

template <Scalar S>
S choquet_under(const DistortionFunction<S>& h, const std::vector<S>& values, const BeliefMeasure<S>& p) {
  return choquet_weighted(h, values, p.probs());
}

// g(t) = h(P0(X > Q^P_t(X))): a right-continuous staircase over the
// P-survival levels of X. Evaluating g under P reproduces h under P0 for
// every increasing transform of X.
template <Scalar S>
DistortionFunction<S> transform_distortion(const DistortionFunction<S>& h, const BeliefMeasure<S>& p0,
                                           const BeliefMeasure<S>& p, const DiscreteRv<S>& x) {
  const std::size_t n = x.size();
  if (p0.size() != n || p.size() != n) throw Error(ErrorCode::InvalidInput, "belief and variable sizes differ");
  std::vector<std::size_t> charged;
  for (std::size_t s = 0; s < n; ++s) {
    if (p[s] > 0) {
      charged.push_back(s);
    } else if (p0[s] > 0) {
      throw Error(ErrorCode::AbsContViolated, "state " + std::to_string(s) + " has zero reference probability");
    }
  }
  std::sort(charged.begin(), charged.end(), [&](std::size_t a, std::size_t b) { return x[a] > x[b]; });
  for (std::size_t k = 1; k < charged.size(); ++k)
    if (x[charged[k - 1]] == x[charged[k]])
      throw Error(ErrorCode::DensityViolated, "tied values on charged states");

  std::vector<S> bps{S(0)};
  std::vector<Quadratic<S>> segs;
  std::vector<S> pvs{S(0)};
  S level(0), level0(0);
  for (std::size_t k = 0; k + 1 < charged.size(); ++k) {
    level += p[charged[k]];
    level0 += p0[charged[k]];
    S v = h(std::min(level0, S(1)));
    segs.push_back({pvs.back(), 0, 0});
    bps.push_back(level);
    pvs.push_back(v);
  }
  segs.push_back({pvs.back(), 0, 0});
  bps.push_back(S(1));
  pvs.push_back(value_at_one(h));
  return DistortionFunction<S>(std::move(bps), std::move(segs), std::move(pvs));
}

}  // namespace riskshare
