#pragma once

// Random generators and reference implementations shared by the tests. The
// oracles here deliberately avoid the library's own evaluation paths.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "riskshare/riskshare.hpp"

namespace rt {

using riskshare::Rational;
using Q = riskshare::Rational;

template <class S>
S frac(std::int64_t p, std::int64_t q) {
  return riskshare::ratio<S>(p, q);
}

// Values k/den with k uniform in [lo*den, hi*den].
template <class S>
std::vector<S> lattice_values(std::mt19937_64& rng, std::size_t n, std::int64_t lo, std::int64_t hi,
                              std::int64_t den = 1) {
  std::uniform_int_distribution<std::int64_t> d(lo * den, hi * den);
  std::vector<S> v(n);
  for (auto& x : v) x = frac<S>(d(rng), den);
  return v;
}

template <class S>
std::vector<S> distinct_values(std::mt19937_64& rng, std::size_t n, std::int64_t den = 7) {
  std::vector<std::int64_t> k(n);
  std::iota(k.begin(), k.end(), std::int64_t{0});
  std::shuffle(k.begin(), k.end(), rng);
  std::uniform_int_distribution<std::int64_t> gap(1, 5);
  std::vector<S> v(n);
  std::int64_t acc = -static_cast<std::int64_t>(n);
  std::vector<std::int64_t> levels(n);
  for (auto& l : levels) l = (acc += gap(rng));
  for (std::size_t s = 0; s < n; ++s) v[s] = frac<S>(levels[static_cast<std::size_t>(k[s])], den);
  return v;
}

// 0 -> 1 on [0,p], flat, back to 0 on [1-p,1]: concave with h(1) = 0.
template <class S>
riskshare::DistortionFunction<S> trapezoid(const S& p) {
  S one(1);
  return riskshare::DistortionFunction<S>({S(0), p, S(one - p), one},
                                          {{0, one / p, 0}, {one, 0, 0}, {one / p, -one / p, 0}},
                                          {S(0), one, one, S(0)});
}

// Random nonnegative combination of GD, MMD and a trapezoid.
template <class S>
riskshare::DistortionFunction<S> random_deviation(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> w(0, 4), p(1, 4);
  int a = w(rng), b = w(rng), c = w(rng);
  if (a + b + c == 0) a = 1;
  auto h = riskshare::scale(riskshare::make_gd<S>(), S(a));
  h = riskshare::add(h, riskshare::scale(riskshare::make_mmd<S>(), S(b)));
  h = riskshare::add(h, riskshare::scale(trapezoid(frac<S>(p(rng), 10)), S(c)));
  return riskshare::scale(h, frac<S>(1, a + b + c));
}

// Concave, possibly with h(1) != 0.
template <class S>
riskshare::DistortionFunction<S> random_concave(std::mt19937_64& rng) {
  auto h = random_deviation<S>(rng);
  std::uniform_int_distribution<int> m(0, 3);
  return riskshare::add(h, riskshare::scale(riskshare::make_mean<S>(), S(m(rng))));
}

// Bounded variation, typically neither monotone nor concave.
template <class S>
riskshare::DistortionFunction<S> random_bv(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> k(1, 4), v(-3, 3), c(-2, 2);
  int m = k(rng) + 1;
  std::vector<S> bps{S(0)};
  for (int j = 1; j < m; ++j) bps.push_back(frac<S>(j, m));
  bps.push_back(S(1));
  std::vector<riskshare::Quadratic<S>> segs;
  std::vector<S> pvs{S(0)};
  for (int j = 0; j < m; ++j) segs.push_back({S(v(rng)), S(c(rng)), S(c(rng))});
  for (int j = 1; j <= m; ++j) pvs.push_back(S(v(rng)));
  return riskshare::DistortionFunction<S>(bps, segs, pvs);
}

// Belief with probabilities k_s / sum k, k_s in [lo, 6]; lo = 0 allows null
// states.
template <class S>
riskshare::BeliefMeasure<S> random_belief(std::mt19937_64& rng, std::size_t n, int lo) {
  std::uniform_int_distribution<int> d(lo, 6);
  std::vector<std::int64_t> k(n);
  std::int64_t total = 0;
  while (total == 0) {
    total = 0;
    for (auto& v : k) total += (v = d(rng));
  }
  std::vector<S> p;
  for (auto v : k) p.push_back(frac<S>(v, total));
  return riskshare::BeliefMeasure<S>(p);
}

// Increasing piecewise-linear map a x + c + sum_j w_j (x - k_j)+ with
// a, w_j >= 0; zero slopes produce ties in the image.
template <class S>
struct IncreasingMap {
  S a, c;
  std::vector<std::pair<S, S>> kinks;

  S operator()(const S& x) const {
    S y = a * x + c;
    for (const auto& [k, w] : kinks)
      if (x > k) y += w * (x - k);
    return y;
  }

  std::vector<S> operator()(const std::vector<S>& v) const {
    std::vector<S> out;
    for (const S& x : v) out.push_back((*this)(x));
    return out;
  }

  static IncreasingMap random(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> s(0, 4), k(-10, 10);
    IncreasingMap f{frac<S>(s(rng), 2), S(k(rng)), {}};
    for (int j = 0; j < 3; ++j) f.kinks.push_back({frac<S>(k(rng), 2), frac<S>(s(rng), 3)});
    return f;
  }
};

// ---- oracles ----------------------------------------------------------------

// Weighted order statistics: sum_j x_(j) [h((N-j+1)/N) - h((N-j)/N)] with
// x_(1) <= ... <= x_(N).
template <class S>
S choquet_oracle(const riskshare::DistortionFunction<S>& h, std::vector<S> v) {
  std::sort(v.begin(), v.end());
  const auto n = static_cast<std::int64_t>(v.size());
  S acc(0);
  for (std::int64_t j = 1; j <= n; ++j)
    acc += v[static_cast<std::size_t>(j - 1)] * (h(frac<S>(n - j + 1, n)) - h(frac<S>(n - j, n)));
  return acc;
}

// Half the mean absolute difference over all ordered pairs.
template <class S>
S gd_oracle(const std::vector<S>& v) {
  S acc(0);
  for (const S& a : v)
    for (const S& b : v) acc += riskshare::abs_of(S(a - b));
  S n(static_cast<std::int64_t>(v.size()));
  return acc / (S(2) * n * n);
}

// min_x E|X - x|, attained at a data point.
template <class S>
S mmd_oracle(const std::vector<S>& v) {
  S best(0);
  bool first = true;
  for (const S& m : v) {
    S acc(0);
    for (const S& a : v) acc += riskshare::abs_of(S(a - m));
    if (first || acc < best) best = acc;
    first = false;
  }
  return best / S(static_cast<std::int64_t>(v.size()));
}

// inf{x : P(X <= x) >= 1 - t} by scanning the distribution function.
template <class S>
S left_quantile_oracle(const std::vector<S>& v, const S& t) {
  std::vector<S> asc = v;
  std::sort(asc.begin(), asc.end());
  S n(static_cast<std::int64_t>(v.size()));
  for (const S& x : asc) {
    std::int64_t below = std::count_if(v.begin(), v.end(), [&](const S& y) { return y <= x; });
    if (S(below) / n >= S(1) - t) return x;
  }
  return asc.back();
}

// Q^-_a(X) + Q^-_a(-X).
template <class S>
S iqd_oracle(const std::vector<S>& v, const S& a) {
  if (a >= frac<S>(1, 2)) return S(0);
  std::vector<S> neg;
  for (const S& x : v) neg.push_back(-x);
  return left_quantile_oracle(v, a) + left_quantile_oracle(neg, a);
}

// Convex order by pairwise stop-loss transforms E(X - d)+ <= E(Y - d)+ at
// every data point of either variable, plus equal means.
template <class S>
bool convex_leq_oracle(const std::vector<S>& x, const std::vector<S>& y) {
  auto mean = [](const std::vector<S>& v) {
    S a(0);
    for (const S& e : v) a += e;
    return a / S(static_cast<std::int64_t>(v.size()));
  };
  auto stop_loss = [](const std::vector<S>& v, const S& d) {
    S a(0);
    for (const S& e : v)
      if (e > d) a += e - d;
    return a / S(static_cast<std::int64_t>(v.size()));
  };
  if (mean(x) != mean(y)) return false;
  for (const auto* src : {&x, &y})
    for (const S& d : *src)
      if (stop_loss(x, d) > stop_loss(y, d)) return false;
  return true;
}

template <class S>
std::vector<S> sum_parts(const std::vector<std::vector<S>>& parts) {
  std::vector<S> s(parts.front().size(), S(0));
  for (const auto& p : parts)
    for (std::size_t k = 0; k < p.size(); ++k) s[k] += p[k];
  return s;
}

}  // namespace rt
