#pragma once

#include <algorithm>
#include <vector>

#include "riskshare/scalar.hpp"

namespace riskshare {

// c0 + c1 t + c2 t^2, coefficients in absolute t (not local to a segment).
template <Scalar S>
struct Quadratic {
  S c0{0}, c1{0}, c2{0};

  S operator()(const S& t) const { return c0 + t * (c1 + t * c2); }
  S derivative(const S& t) const { return c1 + S(2) * c2 * t; }
  bool is_zero() const { return c0 == 0 && c1 == 0 && c2 == 0; }

  friend bool operator==(const Quadratic& a, const Quadratic& b) {
    return a.c0 == b.c0 && a.c1 == b.c1 && a.c2 == b.c2;
  }
  friend Quadratic operator+(const Quadratic& a, const Quadratic& b) {
    return {a.c0 + b.c0, a.c1 + b.c1, a.c2 + b.c2};
  }
  friend Quadratic operator-(const Quadratic& a, const Quadratic& b) {
    return {a.c0 - b.c0, a.c1 - b.c1, a.c2 - b.c2};
  }
  friend Quadratic operator*(const S& k, const Quadratic& a) { return {k * a.c0, k * a.c1, k * a.c2}; }

  // q(t) = p(t - d)
  Quadratic shifted(const S& d) const {
    return {c0 - c1 * d + c2 * d * d, c1 - S(2) * c2 * d, c2};
  }
};

// Real roots of p lying strictly inside (lo, hi), ascending. A polynomial that
// vanishes identically has no isolated roots and yields none.
template <Scalar S>
std::vector<S> roots_in(const Quadratic<S>& p, const S& lo, const S& hi) {
  std::vector<S> found;
  if (p.c2 == 0) {
    if (p.c1 != 0) found.push_back(S(-p.c0 / p.c1));
  } else {
    S disc = p.c1 * p.c1 - S(4) * p.c2 * p.c0;
    if (disc == 0) {
      found.push_back(S(-p.c1 / (S(2) * p.c2)));
    } else if (disc > 0) {
      S s = sqrt_of(disc);
      if constexpr (is_exact_v<S>) {
        found.push_back(S((-p.c1 - s) / (S(2) * p.c2)));
        found.push_back(S((-p.c1 + s) / (S(2) * p.c2)));
      } else {
        // Cancellation-free pair.
        double q = -0.5 * (p.c1 + (p.c1 >= 0 ? s : -s));
        found.push_back(q / p.c2);
        if (q != 0) found.push_back(p.c0 / q);
      }
    }
  }
  std::vector<S> inside;
  for (const S& r : found) {
    if (r > lo && r < hi && !near(r, lo) && !near(r, hi)) inside.push_back(r);
  }
  std::sort(inside.begin(), inside.end());
  inside.erase(std::unique(inside.begin(), inside.end(), [](const S& a, const S& b) { return near(a, b); }),
               inside.end());
  return inside;
}

}  // namespace riskshare
