#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <vector>

#include "riskshare/scalar.hpp"

namespace riskshare::detail {

template <Scalar S>
S pivot_epsilon() {
  if constexpr (is_exact_v<S>) {
    return S(0);
  } else {
    return 1e-10;
  }
}

// Some x >= 0 with A x <= b, or nullopt when none exists. Phase-one simplex
// on a dense tableau; Bland's rule guarantees termination.
template <Scalar S>
std::optional<std::vector<S>> feasible_point(std::vector<std::vector<S>> a, std::vector<S> b) {
  const std::size_t m = a.size();
  const std::size_t n = m ? a.front().size() : 0;
  if constexpr (!is_exact_v<S>) {
    for (std::size_t i = 0; i < m; ++i) {
      double scale = std::abs(b[i]);
      for (double v : a[i]) scale = std::max(scale, std::abs(v));
      if (scale > 0) {
        for (double& v : a[i]) v /= scale;
        b[i] /= scale;
      }
    }
  }
  const S eps = pivot_epsilon<S>();
  // Columns: structural [0,n), slack [n, n+m), artificial [n+m, n+m+m_art).
  std::vector<std::size_t> art_row;
  for (std::size_t i = 0; i < m; ++i)
    if (b[i] < 0) art_row.push_back(i);
  const std::size_t cols = n + m + art_row.size();
  std::vector<std::vector<S>> t(m, std::vector<S>(cols + 1, S(0)));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    S sign = b[i] < 0 ? S(-1) : S(1);
    for (std::size_t j = 0; j < n; ++j) t[i][j] = sign * a[i][j];
    t[i][n + i] = sign;
    t[i][cols] = sign * b[i];
    basis[i] = n + i;
  }
  std::vector<S> obj(cols + 1, S(0));
  for (std::size_t k = 0; k < art_row.size(); ++k) {
    std::size_t i = art_row[k];
    t[i][n + m + k] = S(1);
    basis[i] = n + m + k;
    for (std::size_t j = 0; j <= cols; ++j)
      if (j < n + m || j == cols) obj[j] -= t[i][j];
  }
  for (;;) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols; ++j)
      if (obj[j] < -eps) {
        enter = j;
        break;
      }
    if (enter == cols) break;
    std::size_t leave = m;
    S best(0);
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] > eps) {
        S r = t[i][cols] / t[i][enter];
        if (leave == m || r < best || (r == best && basis[i] < basis[leave])) {
          leave = i;
          best = r;
        }
      }
    }
    if (leave == m) break;  // unbounded direction; cannot happen in phase one
    S p = t[leave][enter];
    for (S& v : t[leave]) v /= p;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave || t[i][enter] == 0) continue;
      S f = t[i][enter];
      for (std::size_t j = 0; j <= cols; ++j)
        if (t[leave][j] != 0) t[i][j] -= f * t[leave][j];
    }
    if (obj[enter] != 0) {
      S f = obj[enter];
      for (std::size_t j = 0; j <= cols; ++j)
        if (t[leave][j] != 0) obj[j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
  S infeasibility = -obj[cols];
  if (infeasibility > eps * S(static_cast<std::int64_t>(std::max<std::size_t>(m, 1)))) return std::nullopt;
  std::vector<S> x(n, S(0));
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) x[basis[i]] = std::max(S(0), t[i][cols]);
  return x;
}

}  // namespace riskshare::detail
