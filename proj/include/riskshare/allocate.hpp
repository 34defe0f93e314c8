#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskshare/allocation.hpp"
#include "riskshare/beliefs.hpp"
#include "riskshare/detail/simplex.hpp"
#include "riskshare/distortion.hpp"
#include "riskshare/error.hpp"
#include "riskshare/riskmetric.hpp"

namespace riskshare {

// Increasing, piecewise-linear maps f_i with sum_i f_i(x) = x and f_i(0) = 0,
// tabulated at the distinct values of the shared risk.
template <Scalar S>
struct TransferFunctions {
  std::vector<S> knots;
  std::vector<std::vector<S>> values;  // values[i][k] = f_i(knots[k])

  S operator()(std::size_t agent, const S& x) const {
    auto it = std::lower_bound(knots.begin(), knots.end(), x);
    std::size_t k = static_cast<std::size_t>(it - knots.begin());
    if (k < knots.size() && knots[k] == x) return values[agent][k];
    throw Error(ErrorCode::DomainError, "transfer functions are tabulated at knots only");
  }
};

template <Scalar S>
std::vector<S> split_weights(const std::vector<DistortionFunction<S>>& hs, const S& level, TieRule rule) {
  auto idx = argmin_at(hs, level);
  std::vector<S> w(hs.size(), S(0));
  switch (rule) {
    case TieRule::EqualSplit:
      for (std::size_t i : idx) w[i] = S(1) / S(static_cast<std::int64_t>(idx.size()));
      break;
    case TieRule::MinIndex:
      w[idx.front()] = S(1);
      break;
    case TieRule::MaxIndex:
      w[idx.back()] = S(1);
      break;
  }
  return w;
}

// Each slice between consecutive distinct values goes to the minimisers of
// the (already weighted) distortions at the slice's survival level. `probs`
// defaults to equiprobable states.
template <Scalar S>
TransferFunctions<S> comonotonic_transfer(const std::vector<S>& values, const std::vector<S>* probs,
                                          const std::vector<DistortionFunction<S>>& hs, TieRule rule) {
  const std::size_t n_states = values.size();
  std::vector<std::size_t> order(n_states);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  auto p = [&](std::size_t s) { return probs ? (*probs)[s] : ratio<S>(1, static_cast<std::int64_t>(n_states)); };

  TransferFunctions<S> tf;
  std::vector<S> survival;  // survival[k] = P(X > knots[k])
  S below(0);
  for (std::size_t r = 0; r < n_states;) {
    const S& v = values[order[r]];
    while (r < n_states && values[order[r]] == v) below += p(order[r++]);
    tf.knots.push_back(v);
    survival.push_back(r == n_states ? S(0) : S(1 - below));
  }
  if constexpr (is_exact_v<S>) {
    // Recompute from the top so that levels are exact sums of state masses.
    S above(0);
    std::size_t r = n_states;
    for (std::size_t k = tf.knots.size(); k-- > 0;) {
      survival[k] = above;
      while (r > 0 && values[order[r - 1]] == tf.knots[k]) above += p(order[--r]);
    }
  }
  const std::size_t m = tf.knots.size();
  const std::size_t n = hs.size();
  // F_i is the cumulative share from the smallest knot.
  std::vector<std::vector<S>> cum(n, std::vector<S>(m, S(0)));
  std::vector<std::vector<S>> slice_w;
  for (std::size_t k = 0; k + 1 < m; ++k) {
    slice_w.push_back(split_weights(hs, survival[k], rule));
    S gap = tf.knots[k + 1] - tf.knots[k];
    for (std::size_t i = 0; i < n; ++i) cum[i][k + 1] = cum[i][k] + gap * slice_w.back()[i];
  }
  // F_i(0), so that f_i = F_i - F_i(0) vanishes at the origin.
  std::vector<S> at_zero(n, S(0));
  const S zero(0);
  if (zero <= tf.knots.front()) {
    auto w = split_weights(hs, S(1), rule);
    for (std::size_t i = 0; i < n; ++i) at_zero[i] = (zero - tf.knots.front()) * w[i];
  } else if (zero >= tf.knots.back()) {
    auto w = split_weights(hs, S(0), rule);
    for (std::size_t i = 0; i < n; ++i) at_zero[i] = cum[i][m - 1] + (zero - tf.knots.back()) * w[i];
  } else {
    std::size_t k = static_cast<std::size_t>(std::upper_bound(tf.knots.begin(), tf.knots.end(), zero) -
                                             tf.knots.begin()) - 1;
    for (std::size_t i = 0; i < n; ++i) at_zero[i] = cum[i][k] + (zero - tf.knots[k]) * slice_w[k][i];
  }
  tf.values.assign(n, std::vector<S>(m));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < m; ++k) tf.values[i][k] = cum[i][k] - at_zero[i];
  return tf;
}

template <Scalar S>
std::vector<std::vector<S>> apply_transfer(const TransferFunctions<S>& tf, const std::vector<S>& values) {
  std::vector<std::vector<S>> parts(tf.values.size(), std::vector<S>(values.size()));
  for (std::size_t s = 0; s < values.size(); ++s) {
    std::size_t k = static_cast<std::size_t>(std::lower_bound(tf.knots.begin(), tf.knots.end(), values[s]) -
                                             tf.knots.begin());
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i][s] = tf.values[i][k];
  }
  return parts;
}

template <Scalar S>
struct ComonotonicResult {
  Allocation<S> allocation;
  S value;
  TransferFunctions<S> transfer;
};

template <Scalar S>
void require_equal_levels_at_one(const std::vector<DistortionFunction<S>>& weighted_hs) {
  for (const auto& h : weighted_hs)
    if (!near(value_at_one(h), value_at_one(weighted_hs.front())))
      throw Error(ErrorCode::UnboundedProblem,
                  "weighted h_i(1) differ (" + to_string(value_at_one(h)) + " vs " +
                      to_string(value_at_one(weighted_hs.front())) + "); the comonotonic infimum is -infinity");
}

// Sum-optimal comonotonic allocation. With `common` set, survival levels and
// the returned value are taken under that measure instead of equiprobable.
template <Scalar S>
ComonotonicResult<S> comonotonic_allocation(const DiscreteRv<S>& x, const std::vector<AgentSpec<S>>& agents,
                                            TieRule rule = TieRule::EqualSplit,
                                            const BeliefMeasure<S>* common = nullptr) {
  if (agents.empty()) throw Error(ErrorCode::InvalidInput, "no agents");
  if (common && common->size() != x.size()) throw Error(ErrorCode::InvalidInput, "belief size differs from X");
  auto hs = weighted_distortions(agents);
  require_equal_levels_at_one(hs);
  auto tf = comonotonic_transfer(x.values(), common ? &common->probs() : nullptr, hs, rule);
  Allocation<S> alloc(x, apply_transfer(tf, x.values()));
  S value(0);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    S v = common ? choquet_under(agents[i].distortion, alloc.part_values(i), *common)
                 : choquet(agents[i].distortion, alloc.part(i));
    value += agents[i].weight * v;
  }
  return {std::move(alloc), value, std::move(tf)};
}

namespace detail {

inline std::int64_t gcd64(std::int64_t a, std::int64_t b) { return std::gcd(a, b); }

// Per-agent tail sizes alpha_i * beta / alpha * N with beta = alpha ^ 1/2.
template <Scalar S>
std::vector<std::int64_t> tail_sizes(std::size_t n_states, const std::vector<S>& alphas, S& beta_out) {
  S alpha(0);
  for (const S& a : alphas) alpha += a;
  S beta = std::min(alpha, ratio<S>(1, 2));
  beta_out = beta;
  std::vector<std::int64_t> sizes(alphas.size(), 0);
  if (alpha == 0) return sizes;
  const S n(static_cast<std::int64_t>(n_states));
  bool ok = true;
  std::vector<S> raw;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    raw.push_back(alphas[i] * beta / alpha * n);
    if (!as_integer(raw.back(), sizes[i])) ok = false;
  }
  if (ok) return sizes;
  // Smallest multiple of N on which every size is an integer.
  BigInt lcm = 1;
  for (const S& r : raw) {
    Rational q;
    if constexpr (is_exact_v<S>) {
      q = r;
    } else {
      q = approximate_rational(r, 1000000);
    }
    BigInt d = denominator(q);
    lcm = lcm / boost::multiprecision::gcd(lcm, d) * d;
  }
  BigInt suggested = lcm * BigInt(static_cast<long long>(n_states));
  std::string msg = "tail sizes alpha_i*beta/alpha*N are not integers on N=" + std::to_string(n_states) +
                    "; smallest refinement N'=" + suggested.str();
  throw Error::grid(msg, suggested.template convert_to<std::size_t>());
}

template <Scalar S>
TailAssignment<S> make_tail_assignment(const DiscreteRv<S>& x, const std::vector<std::int64_t>& sizes, const S& beta) {
  TailAssignment<S> t;
  t.beta = beta;
  const auto& order = x.order_desc();
  std::size_t total = 0;
  for (auto k : sizes) total += static_cast<std::size_t>(k);
  if (2 * total > x.size()) throw Error(ErrorCode::InvalidInput, "tails overlap");
  std::size_t top = 0, bottom = x.size();
  for (auto k : sizes) {
    std::vector<std::size_t> pa, pb;
    for (std::int64_t j = 0; j < k; ++j) {
      pa.push_back(order[top++]);
      pb.push_back(order[--bottom]);
    }
    t.a.insert(t.a.end(), pa.begin(), pa.end());
    t.b.insert(t.b.end(), pb.begin(), pb.end());
    t.parts_a.push_back(std::move(pa));
    t.parts_b.push_back(std::move(pb));
  }
  return t;
}

template <Scalar S>
S checked_median(const DiscreteRv<S>& x, const std::optional<S>& c) {
  S lo = quantile(x, ratio<S>(1, 2), QuantileSide::Left);
  S hi = quantile(x, ratio<S>(1, 2), QuantileSide::Right);
  if (!c) return lo;
  if ((*c < lo && !near(*c, lo)) || (*c > hi && !near(*c, hi)))
    throw Error(ErrorCode::MedianOutOfRange,
                "c=" + to_string(*c) + " outside the median interval [" + to_string(lo) + ", " + to_string(hi) + "]");
  return *c;
}

template <Scalar S>
std::vector<S> checked_constants(const S& c, std::size_t n, const std::optional<std::vector<S>>& cs) {
  if (!cs) return std::vector<S>(n, c / S(static_cast<std::int64_t>(n)));
  if (cs->size() != n) throw Error(ErrorCode::ParamOutOfRange, "one constant c_i per agent required");
  S sum(0);
  for (const S& v : *cs) sum += v;
  if (!near(sum, c)) throw Error(ErrorCode::ParamOutOfRange, "constants c_i must sum to c=" + to_string(c));
  return *cs;
}

}  // namespace detail

template <Scalar S>
struct IqdOptions {
  std::optional<S> c;
  std::optional<std::vector<S>> constants;  // c_i
  std::optional<std::vector<S>> middle_weights;  // a_i
};

template <Scalar S>
struct TailResult {
  Allocation<S> allocation;
  TailAssignment<S> tails;
  S value;
};

// Tails go whole to single agents (pairwise counter-monotonic blocks); the
// middle is split proportionally to a_i. Default a_i put the middle on the
// agents with the smallest weight.
template <Scalar S>
TailResult<S> iqd_allocation(const DiscreteRv<S>& x, const std::vector<S>& alphas, const std::vector<S>& lambdas,
                             const IqdOptions<S>& opts = {}) {
  const std::size_t n = alphas.size();
  if (n == 0 || lambdas.size() != n) throw Error(ErrorCode::InvalidInput, "one weight per IQD level required");
  for (const S& a : alphas)
    if (a < 0 || a >= ratio<S>(1, 2)) throw Error(ErrorCode::ParamOutOfRange, "IQD level outside [0, 1/2)");
  for (const S& l : lambdas)
    if (l < 0) throw Error(ErrorCode::ParamOutOfRange, "negative weight");
  S beta;
  auto sizes = detail::tail_sizes(x.size(), alphas, beta);
  S c = detail::checked_median(x, opts.c);
  auto cs = detail::checked_constants(c, n, opts.constants);
  std::vector<S> a;
  if (opts.middle_weights) {
    a = *opts.middle_weights;
    if (a.size() != n) throw Error(ErrorCode::ParamOutOfRange, "one middle weight per agent required");
    S sum(0);
    for (const S& v : a) {
      if (v < 0) throw Error(ErrorCode::ParamOutOfRange, "negative middle weight");
      sum += v;
    }
    if (!near(sum, S(1))) throw Error(ErrorCode::ParamOutOfRange, "middle weights must sum to 1");
  } else {
    S lmin = *std::min_element(lambdas.begin(), lambdas.end());
    std::int64_t count = std::count(lambdas.begin(), lambdas.end(), lmin);
    for (const S& l : lambdas) a.push_back(l == lmin ? S(1) / S(count) : S(0));
  }
  auto tails = detail::make_tail_assignment(x, sizes, beta);
  auto owner = tails.owners(x.size());
  std::vector<std::vector<S>> parts(n, std::vector<S>(x.size()));
  for (std::size_t s = 0; s < x.size(); ++s) {
    S dev = x[s] - c;
    for (std::size_t i = 0; i < n; ++i) {
      S tail = owner[s] == i ? dev : S(0);
      S mid = owner[s] == TailAssignment<S>::npos ? S(a[i] * dev) : S(0);
      parts[i][s] = tail + mid + cs[i];
    }
  }
  Allocation<S> alloc(x, std::move(parts));
  S value(0);
  for (std::size_t i = 0; i < n; ++i) value += lambdas[i] * iqd(alloc.part(i), alphas[i]);
  return {std::move(alloc), std::move(tails), value};
}

template <Scalar S>
struct MixedOptions {
  std::optional<S> c;
  std::optional<std::vector<S>> constants;
};

enum class RoleKind { Iqd, Concave };

template <Scalar S>
struct Role {
  RoleKind kind;
  S alpha{0};
};

// IQD agents by exact shape match, concave agents otherwise. Anything else
// has no known unconstrained solution.
template <Scalar S>
std::vector<Role<S>> classify_roles(const std::vector<AgentSpec<S>>& agents) {
  std::vector<Role<S>> roles;
  for (const auto& ag : agents) {
    if (auto lvl = iqd_level(ag.distortion)) {
      roles.push_back({RoleKind::Iqd, *lvl});
    } else if (is_concave(ag.distortion)) {
      roles.push_back({RoleKind::Concave, S(0)});
    } else {
      throw Error(ErrorCode::Unsupported,
                  "agent '" + ag.name + "' is neither IQD nor concave; no unconstrained solution is available");
    }
  }
  require_equal_levels_at_one(weighted_distortions(agents));
  return roles;
}

// IQD agents take whole tail blocks; the middle of X - c is shared
// comonotonically, IQD agents there acting as the constant lambda_i on (0,1).
template <Scalar S>
TailResult<S> mixed_allocation(const DiscreteRv<S>& x, const std::vector<AgentSpec<S>>& agents,
                               TieRule rule = TieRule::EqualSplit, const MixedOptions<S>& opts = {}) {
  if (agents.empty()) throw Error(ErrorCode::InvalidInput, "no agents");
  for (const auto& ag : agents)
    if (ag.weight < 0) throw Error(ErrorCode::ParamOutOfRange, "negative weight");
  auto roles = classify_roles(agents);
  const std::size_t n = agents.size();
  bool any_iqd = std::any_of(roles.begin(), roles.end(), [](const auto& r) { return r.kind == RoleKind::Iqd; });
  if (!any_iqd) {
    auto r = comonotonic_allocation(x, agents, rule);
    TailAssignment<S> empty;
    empty.parts_a.assign(n, {});
    empty.parts_b.assign(n, {});
    return {std::move(r.allocation), std::move(empty), r.value};
  }
  std::vector<S> alphas;
  for (const auto& r : roles) alphas.push_back(r.kind == RoleKind::Iqd ? r.alpha : S(0));
  S beta;
  auto sizes = detail::tail_sizes(x.size(), alphas, beta);
  S c = detail::checked_median(x, opts.c);
  auto cs = detail::checked_constants(c, n, opts.constants);
  auto tails = detail::make_tail_assignment(x, sizes, beta);
  auto owner = tails.owners(x.size());

  std::vector<S> middle(x.size());
  for (std::size_t s = 0; s < x.size(); ++s)
    middle[s] = owner[s] == TailAssignment<S>::npos ? S(x[s] - c) : S(0);
  std::vector<DistortionFunction<S>> inner;
  for (std::size_t i = 0; i < n; ++i)
    inner.push_back(roles[i].kind == RoleKind::Iqd ? scale(make_range<S>(), agents[i].weight)
                                                   : scale(agents[i].distortion, agents[i].weight));
  auto tf = comonotonic_transfer(middle, static_cast<const std::vector<S>*>(nullptr), inner, rule);
  auto shares = apply_transfer(tf, middle);

  std::vector<std::vector<S>> parts(n, std::vector<S>(x.size()));
  for (std::size_t s = 0; s < x.size(); ++s)
    for (std::size_t i = 0; i < n; ++i)
      parts[i][s] = (owner[s] == i ? S(x[s] - c) : S(0)) + shares[i][s] + cs[i];
  Allocation<S> alloc(x, std::move(parts));
  S value(0);
  for (std::size_t i = 0; i < n; ++i) value += agents[i].weight * choquet(agents[i].distortion, alloc.part(i));
  return {std::move(alloc), std::move(tails), value};
}

// Comonotonic allocation whose parts are each no riskier in convex order
// than the input parts. Comonotonic candidates are parametrised by how each
// gap of X is split among agents; the convex-order constraints are linear in
// those splits, and a feasible split is found by phase-one simplex.
template <Scalar S>
Allocation<S> comonotonic_improvement(const Allocation<S>& input) {
  if (is_comonotonic(input) || input.agents() == 1) return input;
  const auto& x = input.total();
  const std::size_t n = input.agents();
  const std::size_t n_states = x.size();
  const auto& order = x.order_desc();
  const S big_n(static_cast<std::int64_t>(n_states));

  // Blocks of equal X in decreasing order: value, cumulative count W_k.
  std::vector<S> block_value;
  std::vector<std::int64_t> cum_count;
  std::vector<std::size_t> block_of(n_states);
  for (std::size_t r = 0; r < n_states; ++r) {
    if (r == 0 || x[order[r]] != block_value.back()) {
      block_value.push_back(x[order[r]]);
      cum_count.push_back(0);
    }
    cum_count.back() = static_cast<std::int64_t>(r + 1);
    block_of[order[r]] = block_value.size() - 1;
  }
  const std::size_t k_blocks = block_value.size();
  const std::size_t gaps = k_blocks - 1;

  // Top-W_k sums of each input part.
  std::vector<std::vector<S>> top(n, std::vector<S>(k_blocks));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<S> v = input.part_values(i);
    std::sort(v.begin(), v.end(), std::greater<S>());
    S acc(0);
    std::size_t r = 0;
    for (std::size_t k = 0; k < k_blocks; ++k) {
      while (r < static_cast<std::size_t>(cum_count[k])) acc += v[r++];
      top[i][k] = acc;
    }
  }

  std::vector<S> gap(gaps);
  for (std::size_t g = 0; g < gaps; ++g) gap[g] = block_value[g] - block_value[g + 1];
  // Kernel N*min(W_k, W_g) - W_k*W_g and slack N*T_i(k) - W_k*T_i(K).
  auto kernel = [&](std::size_t k, std::size_t g) {
    std::int64_t wk = cum_count[k], wg = cum_count[g];
    return S(big_n * S(std::min(wk, wg)) - S(wk) * S(wg));
  };
  auto slack = [&](std::size_t i, std::size_t k) {
    return S(big_n * top[i][k] - S(cum_count[k]) * top[i][k_blocks - 1]);
  };

  std::vector<std::vector<S>> shares(n, std::vector<S>(gaps, S(0)));
  if (gaps > 0) {
    const std::size_t vars = (n - 1) * gaps;
    std::vector<std::vector<S>> a;
    std::vector<S> b;
    for (std::size_t i = 0; i + 1 < n; ++i)
      for (std::size_t k = 0; k < gaps; ++k) {
        std::vector<S> row(vars, S(0));
        for (std::size_t g = 0; g < gaps; ++g) row[i * gaps + g] = kernel(k, g);
        a.push_back(std::move(row));
        b.push_back(slack(i, k));
      }
    for (std::size_t k = 0; k < gaps; ++k) {
      std::vector<S> row(vars, S(0));
      S rhs = slack(n - 1, k);
      for (std::size_t g = 0; g < gaps; ++g) {
        S kg = kernel(k, g);
        rhs -= kg * gap[g];
        for (std::size_t i = 0; i + 1 < n; ++i) row[i * gaps + g] = -kg;
      }
      a.push_back(std::move(row));
      b.push_back(rhs);
    }
    for (std::size_t g = 0; g < gaps; ++g) {
      std::vector<S> row(vars, S(0));
      for (std::size_t i = 0; i + 1 < n; ++i) row[i * gaps + g] = S(1);
      a.push_back(std::move(row));
      b.push_back(gap[g]);
    }
    auto sol = detail::feasible_point(std::move(a), std::move(b));
    if (!sol) throw Error(ErrorCode::InvalidInput, "no comonotonic improvement found (numerical failure)");
    for (std::size_t g = 0; g < gaps; ++g) {
      S rest = gap[g];
      for (std::size_t i = 0; i + 1 < n; ++i) {
        shares[i][g] = std::min((*sol)[i * gaps + g], rest);
        rest -= shares[i][g];
      }
      shares[n - 1][g] = std::max(rest, S(0));
    }
  }

  // Part i on block l: b_i + sum of its shares of the gaps below l, with b_i
  // fixing the mean.
  std::vector<std::vector<S>> parts(n, std::vector<S>(n_states));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<S> level(k_blocks, S(0));
    for (std::size_t l = k_blocks - 1; l-- > 0;) level[l] = level[l + 1] + shares[i][l];
    S weighted(0);
    for (std::size_t l = 0; l < k_blocks; ++l) {
      std::int64_t m = cum_count[l] - (l ? cum_count[l - 1] : 0);
      weighted += S(m) * level[l];
    }
    S base = (top[i][k_blocks - 1] - weighted) / big_n;
    for (std::size_t s = 0; s < n_states; ++s) parts[i][s] = base + level[block_of[s]];
  }
  return Allocation<S>(x, std::move(parts));
}

}  // namespace riskshare
