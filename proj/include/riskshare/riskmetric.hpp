#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <utility>
#include <vector>

#include "riskshare/distortion.hpp"
#include "riskshare/error.hpp"
#include "riskshare/scalar.hpp"

namespace riskshare {

// A random loss on N equiprobable states.
template <Scalar S>
class DiscreteRv {
 public:
  DiscreteRv() : DiscreteRv(std::vector<S>{S(0)}) {}

  explicit DiscreteRv(std::vector<S> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorCode::InvalidInput, "a random variable needs at least one state");
    order_.resize(values_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [this](std::size_t a, std::size_t b) { return values_[a] > values_[b]; });
    rank_.resize(values_.size());
    for (std::size_t r = 0; r < order_.size(); ++r) rank_[order_[r]] = r;
  }

  std::size_t size() const { return values_.size(); }
  const std::vector<S>& values() const { return values_; }
  const S& operator[](std::size_t s) const { return values_[s]; }

  // States by decreasing value, ties by increasing state index.
  const std::vector<std::size_t>& order_desc() const { return order_; }
  // Position of a state in order_desc().
  std::size_t rank(std::size_t state) const { return rank_[state]; }

  std::vector<S> sorted_ascending() const {
    std::vector<S> v;
    v.reserve(values_.size());
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) v.push_back(values_[*it]);
    return v;
  }

  DiscreteRv negated() const {
    std::vector<S> v;
    for (const S& x : values_) v.push_back(-x);
    return DiscreteRv(std::move(v));
  }

 private:
  std::vector<S> values_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_;
};

enum class QuantileSide { Left, Right };

// Quantiles count losses from large to small:
//   Left:  inf{x : P(X <= x) >= 1 - t}
//   Right: inf{x : P(X <= x) >  1 - t}
// clamped to the essential range at t = 0 and t = 1.
template <Scalar S>
S quantile(const DiscreteRv<S>& x, const S& t, QuantileSide side) {
  if (t < 0 || t > 1) throw Error(ErrorCode::DomainError, "quantile level outside [0,1]");
  const auto n = static_cast<std::int64_t>(x.size());
  S scaled = (S(1) - t) * S(n);
  std::int64_t j;
  if (std::int64_t k; as_integer(scaled, k)) {
    j = side == QuantileSide::Left ? k : k + 1;
  } else {
    j = side == QuantileSide::Left ? ceil_to_int(scaled) : floor_to_int(scaled) + 1;
  }
  j = std::clamp<std::int64_t>(j, 1, n);
  // j-th smallest is the (n - j + 1)-th largest.
  return x[x.order_desc()[static_cast<std::size_t>(n - j)]];
}

// Survival staircase over arbitrary state probabilities. States with zero
// probability do not affect the law and are skipped.
template <Scalar S>
S choquet_weighted(const DistortionFunction<S>& h, const std::vector<S>& values, const std::vector<S>& probs) {
  if (values.size() != probs.size() || values.empty())
    throw Error(ErrorCode::InvalidInput, "values and probabilities must have equal nonzero length");
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < values.size(); ++s) {
    if (probs[s] < 0) throw Error(ErrorCode::InvalidInput, "negative probability");
    if (probs[s] > 0) idx.push_back(s);
  }
  if (idx.empty()) throw Error(ErrorCode::InvalidInput, "probabilities sum to zero");
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  // Walk from the top; `above` is P(X > current value).
  S total(0), above(0);
  for (std::size_t s : idx) total += probs[s];
  if (!near(total, S(1))) throw Error(ErrorCode::InvalidInput, "probabilities must sum to 1");
  S acc(0);
  std::size_t k = 0;
  while (k < idx.size()) {
    const S& v = values[idx[k]];
    std::size_t l = k;
    S mass(0);
    while (l < idx.size() && values[idx[l]] == v) mass += probs[idx[l++]];
    if (k > 0) acc += (values[idx[k - 1]] - v) * h(above);
    above += mass;
    k = l;
  }
  return acc + values[idx.back()] * value_at_one(h);
}

template <Scalar S>
S choquet(const DistortionFunction<S>& h, const DiscreteRv<S>& x) {
  const auto& order = x.order_desc();
  const auto n = static_cast<std::int64_t>(x.size());
  S acc(0);
  std::int64_t above = 0;
  std::size_t k = 0;
  while (k < order.size()) {
    const S& v = x[order[k]];
    std::size_t l = k;
    while (l < order.size() && x[order[l]] == v) ++l;
    if (k > 0) acc += (x[order[k - 1]] - v) * h(ratio<S>(above, n));
    above = static_cast<std::int64_t>(l);
    k = l;
  }
  return acc + x[order.back()] * value_at_one(h);
}

// Repeated evaluation on a fixed grid size: h is tabulated at k/N once.
template <Scalar S>
class ChoquetEvaluator {
 public:
  ChoquetEvaluator(const DistortionFunction<S>& h, std::size_t n) : levels_(n + 1) {
    for (std::size_t k = 0; k <= n; ++k)
      levels_[k] = h(ratio<S>(static_cast<std::int64_t>(k), static_cast<std::int64_t>(n)));
  }

  std::size_t size() const { return levels_.size() - 1; }

  // `scratch` is overwritten with the values sorted in decreasing order.
  S operator()(const std::vector<S>& values, std::vector<S>& scratch) const {
    scratch.assign(values.begin(), values.end());
    return sort_and_sum(scratch);
  }

  // Sorts `v` in place, cheaply when it is already nearly decreasing.
  S sort_and_sum(std::vector<S>& v) const {
    if (!std::is_sorted(v.begin(), v.end(), std::greater<S>())) std::sort(v.begin(), v.end(), std::greater<S>());
    S acc(0);
    for (std::size_t k = 1; k < v.size(); ++k)
      if (v[k - 1] != v[k]) acc += (v[k - 1] - v[k]) * levels_[k];
    return acc + v.back() * levels_.back();
  }

  S operator()(const std::vector<S>& values) const {
    std::vector<S> scratch;
    return (*this)(values, scratch);
  }

 private:
  std::vector<S> levels_;
};

// Stieltjes form over dh with quantiles as the integrand. Valid when h is
// right-continuous (uses right quantiles) or left-continuous (left
// quantiles) at every interior breakpoint.
template <Scalar S>
S choquet_via_quantiles(const DistortionFunction<S>& h, const DiscreteRv<S>& x) {
  const auto& bps = h.breakpoints();
  const auto& segs = h.segments();
  const auto& pvs = h.point_values();
  bool right_cont = true, left_cont = true;
  for (std::size_t k = 1; k + 1 < bps.size(); ++k) {
    if (!near(pvs[k], h.right_limit(bps[k]))) right_cont = false;
    if (!near(pvs[k], h.left_limit(bps[k]))) left_cont = false;
  }
  if (!right_cont && !left_cont)
    throw Error(ErrorCode::HypothesisUnmet, "distortion is neither left- nor right-continuous; use choquet");
  QuantileSide side = right_cont ? QuantileSide::Right : QuantileSide::Left;
  const auto n = static_cast<std::int64_t>(x.size());
  auto asc = x.sorted_ascending();

  S acc(0);
  // Continuous part, cell by cell: on ((n-j)/n, (n-j+1)/n) both quantiles
  // equal the j-th smallest value.
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const S& a = bps[k];
    const S& b = bps[k + 1];
    std::vector<S> cuts{a};
    for (std::int64_t g = ceil_to_int(S(a * S(n))); g <= floor_to_int(S(b * S(n))); ++g) {
      S u = ratio<S>(g, n);
      if (u > a && u < b) cuts.push_back(u);
    }
    cuts.push_back(b);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      S mid = (cuts[c] + cuts[c + 1]) / S(2);
      std::int64_t j = ceil_to_int(S((S(1) - mid) * S(n)));
      acc += asc[static_cast<std::size_t>(j - 1)] * (segs[k](cuts[c + 1]) - segs[k](cuts[c]));
    }
  }
  // Jumps: interior ones, plus the endpoint jumps from h(0) and into h(1).
  acc += (h.right_limit(S(0)) - pvs.front()) * quantile(x, S(0), QuantileSide::Left);
  for (std::size_t k = 1; k + 1 < bps.size(); ++k)
    acc += (h.right_limit(bps[k]) - h.left_limit(bps[k])) * quantile(x, bps[k], side);
  acc += (pvs.back() - h.left_limit(S(1))) * quantile(x, S(1), QuantileSide::Right);
  return acc;
}

// 1/2 E|X - X'| from order statistics.
template <Scalar S>
S gd(const DiscreteRv<S>& x) {
  auto asc = x.sorted_ascending();
  const auto n = static_cast<std::int64_t>(asc.size());
  S acc(0);
  for (std::int64_t j = 1; j <= n; ++j) acc += asc[static_cast<std::size_t>(j - 1)] * S(2 * j - n - 1);
  return acc / S(n * n);
}

// E|X - m| with m the left median.
template <Scalar S>
S mmd(const DiscreteRv<S>& x) {
  S m = quantile(x, ratio<S>(1, 2), QuantileSide::Left);
  S acc(0);
  for (const S& v : x.values()) acc += abs_of(S(v - m));
  return acc / S(static_cast<std::int64_t>(x.size()));
}

template <Scalar S>
S iqd(const DiscreteRv<S>& x, const S& alpha) {
  if (alpha < 0) throw Error(ErrorCode::ParamOutOfRange, "IQD level must be nonnegative");
  if (alpha >= ratio<S>(1, 2)) return S(0);
  return quantile(x, alpha, QuantileSide::Left) - quantile(x, S(1 - alpha), QuantileSide::Right);
}

// Integral of the left quantile over [0, t]: mean of the top values.
template <Scalar S>
S integrated_quantile(const DiscreteRv<S>& x, const S& t) {
  if (t < 0 || t > 1) throw Error(ErrorCode::DomainError, "level outside [0,1]");
  const auto n = static_cast<std::int64_t>(x.size());
  const auto& order = x.order_desc();
  S scaled = t * S(n);
  std::int64_t k;
  if (!as_integer(scaled, k)) k = floor_to_int(scaled);
  k = std::min<std::int64_t>(k, n);
  S acc(0);
  for (std::int64_t j = 0; j < k; ++j) acc += x[order[static_cast<std::size_t>(j)]];
  acc /= S(n);
  if (k < n) acc += (t - ratio<S>(k, n)) * x[order[static_cast<std::size_t>(k)]];
  return acc;
}

// X <=_cx Y: equal means and every top-mass integral of X at most that of Y.
// Both integrals are piecewise linear, so the union of grid knots suffices.
template <Scalar S>
bool convex_order_leq(const DiscreteRv<S>& x, const DiscreteRv<S>& y, const S& tol = S(0)) {
  const auto nx = static_cast<std::int64_t>(x.size());
  const auto ny = static_cast<std::int64_t>(y.size());
  std::vector<S> knots;
  for (std::int64_t k = 0; k <= nx; ++k) knots.push_back(ratio<S>(k, nx));
  if (ny != nx) {
    std::vector<S> other;
    for (std::int64_t k = 0; k <= ny; ++k) other.push_back(ratio<S>(k, ny));
    std::vector<S> merged;
    std::merge(knots.begin(), knots.end(), other.begin(), other.end(), std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    knots = std::move(merged);
  }
  auto prefix = [](const DiscreteRv<S>& z) {
    std::vector<S> p{S(0)};
    for (std::size_t s : z.order_desc()) p.push_back(p.back() + z[s]);
    return p;
  };
  auto px = prefix(x), py = prefix(y);
  auto mu = [](const DiscreteRv<S>& z, const std::vector<S>& p, const S& t) {
    const auto n = static_cast<std::int64_t>(z.size());
    S scaled = t * S(n);
    std::int64_t k;
    if (!as_integer(scaled, k)) k = floor_to_int(scaled);
    k = std::min<std::int64_t>(k, n);
    S v = p[static_cast<std::size_t>(k)] / S(n);
    if (k < n) v += (t - ratio<S>(k, n)) * z[z.order_desc()[static_cast<std::size_t>(k)]];
    return v;
  };
  for (const S& t : knots)
    if (mu(x, px, t) > mu(y, py, t) + tol) return false;
  return abs_of(S(mu(x, px, S(1)) - mu(y, py, S(1)))) <= tol;
}

}  // namespace riskshare
