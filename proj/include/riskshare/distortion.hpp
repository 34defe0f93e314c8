#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskshare/error.hpp"
#include "riskshare/piecewise.hpp"
#include "riskshare/scalar.hpp"

namespace riskshare {

// A distortion function of bounded variation with h(0) = 0.
template <Scalar S>
class DistortionFunction {
 public:
  DistortionFunction() = default;

  explicit DistortionFunction(Piecewise<S> f) : f_(std::move(f)) {
    if (f_.point_values().front() != 0)
      throw Error(ErrorCode::InvalidInput, "distortion functions must vanish at 0");
  }

  DistortionFunction(std::vector<S> breakpoints, std::vector<Quadratic<S>> segments, std::vector<S> point_values)
      : DistortionFunction(Piecewise<S>(std::move(breakpoints), std::move(segments), std::move(point_values))) {}

  const Piecewise<S>& piecewise() const { return f_; }
  const std::vector<S>& breakpoints() const { return f_.breakpoints(); }
  const std::vector<Quadratic<S>>& segments() const { return f_.segments(); }
  const std::vector<S>& point_values() const { return f_.point_values(); }

  S operator()(const S& t) const { return f_(t); }
  S left_limit(const S& t) const { return f_.left_limit(t); }
  S right_limit(const S& t) const { return f_.right_limit(t); }

  friend bool operator==(const DistortionFunction& a, const DistortionFunction& b) { return a.f_ == b.f_; }

 private:
  Piecewise<S> f_;
};

template <Scalar S>
S eval(const DistortionFunction<S>& h, const S& t) {
  return h(t);
}

template <Scalar S>
S value_at_one(const DistortionFunction<S>& h) {
  return h.point_values().back();
}

// ---- named distortions ----------------------------------------------------

template <Scalar S>
DistortionFunction<S> make_mean() {
  return DistortionFunction<S>(Piecewise<S>::polynomial({0, 1, 0}));
}

template <Scalar S>
DistortionFunction<S> make_gd() {
  return DistortionFunction<S>(Piecewise<S>::polynomial({0, 1, -1}));
}

template <Scalar S>
DistortionFunction<S> make_mmd() {
  S half = ratio<S>(1, 2);
  return DistortionFunction<S>({S(0), half, S(1)}, {{0, 1, 0}, {1, -1, 0}}, {S(0), half, S(0)});
}

// Indicator of the open interval (alpha, 1 - alpha).
template <Scalar S>
DistortionFunction<S> make_iqd(const S& alpha) {
  if (alpha < 0 || alpha >= ratio<S>(1, 2))
    throw Error(ErrorCode::ParamOutOfRange, "IQD level " + to_string(alpha) + " outside [0, 1/2)");
  if (alpha == 0) return DistortionFunction<S>({S(0), S(1)}, {{1, 0, 0}}, {S(0), S(0)});
  return DistortionFunction<S>({S(0), alpha, S(1 - alpha), S(1)}, {{0, 0, 0}, {1, 0, 0}, {0, 0, 0}},
                               {S(0), S(0), S(0), S(0)});
}

template <Scalar S>
DistortionFunction<S> make_range() {
  return make_iqd<S>(S(0));
}

template <Scalar S>
DistortionFunction<S> make_zero() {
  return DistortionFunction<S>(Piecewise<S>::constant(S(0)));
}

// ---- algebra ---------------------------------------------------------------

template <Scalar S>
DistortionFunction<S> scale(const DistortionFunction<S>& h, const S& lambda) {
  if (lambda < 0) throw Error(ErrorCode::ParamOutOfRange, "negative scale factor " + to_string(lambda));
  return DistortionFunction<S>(lambda * h.piecewise());
}

template <Scalar S>
DistortionFunction<S> add(const DistortionFunction<S>& a, const DistortionFunction<S>& b) {
  return DistortionFunction<S>(a.piecewise() + b.piecewise());
}

// h / |h(1)|, or h itself when h(1) = 0.
template <Scalar S>
DistortionFunction<S> normalize(const DistortionFunction<S>& h) {
  S one = value_at_one(h);
  if (one == 0) return h;
  return DistortionFunction<S>(S(1 / abs_of(one)) * h.piecewise());
}

// t + gamma * D(t)
template <Scalar S>
DistortionFunction<S> make_mean_plus(const S& gamma, const DistortionFunction<S>& deviation) {
  if (gamma < 0) throw Error(ErrorCode::ParamOutOfRange, "MeanPlus needs gamma >= 0");
  return add(make_mean<S>(), scale(deviation, gamma));
}

// a * h1 + (1 - a) * h2
template <Scalar S>
DistortionFunction<S> make_mixture(const S& a, const DistortionFunction<S>& h1, const DistortionFunction<S>& h2) {
  if (a < 0 || a > 1) throw Error(ErrorCode::ParamOutOfRange, "mixture weight " + to_string(a) + " outside [0,1]");
  return add(scale(h1, a), scale(h2, S(1 - a)));
}

template <Scalar S>
DistortionFunction<S> envelope_min(const std::vector<DistortionFunction<S>>& hs) {
  if (hs.empty()) throw Error(ErrorCode::InvalidInput, "envelope of an empty family");
  Piecewise<S> acc = hs.front().piecewise();
  for (std::size_t i = 1; i < hs.size(); ++i) acc = min_of(acc, hs[i].piecewise());
  return DistortionFunction<S>(std::move(acc));
}

template <Scalar S>
std::vector<DistortionFunction<S>> weighted(const std::vector<DistortionFunction<S>>& hs, const std::vector<S>& lambdas) {
  if (hs.size() != lambdas.size()) throw Error(ErrorCode::InvalidInput, "one weight per distortion required");
  std::vector<DistortionFunction<S>> out;
  for (std::size_t i = 0; i < hs.size(); ++i) out.push_back(scale(hs[i], lambdas[i]));
  return out;
}

// One piece of the argmin partition: either the single point lo == hi or the
// open interval (lo, hi).
template <Scalar S>
struct ArgminPiece {
  S lo, hi;
  bool is_point;
  std::vector<std::size_t> indices;
};

template <Scalar S>
std::vector<std::size_t> argmin_at(const std::vector<DistortionFunction<S>>& hs, const S& t) {
  std::vector<S> v;
  for (const auto& h : hs) v.push_back(h(t));
  S best = *std::min_element(v.begin(), v.end());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (near(v[i], best)) idx.push_back(i);
  return idx;
}

template <Scalar S>
std::vector<ArgminPiece<S>> argmin_sets(const std::vector<DistortionFunction<S>>& hs) {
  if (hs.empty()) throw Error(ErrorCode::InvalidInput, "argmin of an empty family");
  std::vector<S> nodes{S(0), S(1)};
  for (const auto& h : hs) nodes = detail::merge_nodes(nodes, h.breakpoints());
  std::vector<S> refined;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    S mid = detail::midpoint(nodes[k], nodes[k + 1]);
    std::vector<S> cuts;
    for (std::size_t i = 0; i < hs.size(); ++i)
      for (std::size_t j = i + 1; j < hs.size(); ++j) {
        auto r = roots_in(hs[i].piecewise().segment_at(mid) - hs[j].piecewise().segment_at(mid), nodes[k],
                          nodes[k + 1]);
        cuts.insert(cuts.end(), r.begin(), r.end());
      }
    std::sort(cuts.begin(), cuts.end());
    detail::push_node(refined, nodes[k]);
    for (const S& c : cuts) detail::push_node(refined, c);
  }
  detail::push_node(refined, S(1));
  refined.back() = S(1);

  std::vector<ArgminPiece<S>> pieces;
  auto emit = [&](ArgminPiece<S> p) {
    // Fuse (a,b) {t=b} (b,c) into (a,c) when all three carry the same set.
    if (!p.is_point && pieces.size() >= 2) {
      auto& pt = pieces[pieces.size() - 1];
      auto& iv = pieces[pieces.size() - 2];
      if (pt.is_point && !iv.is_point && pt.indices == p.indices && iv.indices == p.indices) {
        iv.hi = p.hi;
        pieces.pop_back();
        return;
      }
    }
    pieces.push_back(std::move(p));
  };
  for (std::size_t k = 0; k < refined.size(); ++k) {
    const S& t = refined[k];
    std::vector<S> v;
    for (const auto& h : hs) v.push_back(h.piecewise().node_value(t));
    S best = *std::min_element(v.begin(), v.end());
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (near(v[i], best)) idx.push_back(i);
    emit({t, t, true, std::move(idx)});
    if (k + 1 < refined.size()) {
      S mid = detail::midpoint(t, refined[k + 1]);
      emit({t, refined[k + 1], false, argmin_at(hs, mid)});
    }
  }
  return pieces;
}

template <Scalar S>
std::vector<ArgminPiece<S>> argmin_sets(const std::vector<DistortionFunction<S>>& hs, const std::vector<S>& lambdas) {
  return argmin_sets(weighted(hs, lambdas));
}

// ---- shape ------------------------------------------------------------------

// Concavity on [0,1]: concave segments, continuity with non-increasing slope
// at interior breakpoints, and endpoint values no larger than the adjacent
// one-sided limits.
template <Scalar S>
bool is_concave(const DistortionFunction<S>& h) {
  const auto& bps = h.breakpoints();
  const auto& segs = h.segments();
  const auto& pvs = h.point_values();
  for (const auto& q : segs)
    if (q.c2 > 0 && !near(q.c2, S(0))) return false;
  for (std::size_t k = 1; k + 1 < bps.size(); ++k) {
    const S& t = bps[k];
    S left = segs[k - 1](t), right = segs[k](t);
    if (!near(left, pvs[k]) || !near(right, pvs[k])) return false;
    S dl = segs[k - 1].derivative(t), dr = segs[k].derivative(t);
    if (dr > dl && !near(dr, dl)) return false;
  }
  if (pvs.front() > segs.front()(S(0)) && !near(pvs.front(), segs.front()(S(0)))) return false;
  if (pvs.back() > segs.back()(S(1)) && !near(pvs.back(), segs.back()(S(1)))) return false;
  return true;
}

template <Scalar S>
S total_variation(const DistortionFunction<S>& h) {
  const auto& bps = h.breakpoints();
  const auto& segs = h.segments();
  const auto& pvs = h.point_values();
  S tv(0);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& q = segs[k];
    S a = bps[k], b = bps[k + 1];
    std::vector<S> pts{a};
    if (q.c2 != 0) {
      S v = -q.c1 / (S(2) * q.c2);
      if (v > a && v < b) pts.push_back(v);
    }
    pts.push_back(b);
    for (std::size_t j = 0; j + 1 < pts.size(); ++j) tv += abs_of(S(q(pts[j + 1]) - q(pts[j])));
    tv += abs_of(S(q(a) - pvs[k]));
    tv += abs_of(S(pvs[k + 1] - q(b)));
  }
  return tv;
}

// ---- G transform ------------------------------------------------------------

// t -> (h(t - alpha) ^ h(t + alpha) ^ cap) on (alpha, 1 - alpha), zero
// elsewhere; no cap when `cap` is empty. Shifts read h as 0 off [0,1].
template <Scalar S>
DistortionFunction<S> g_transform(const DistortionFunction<S>& h, const S& alpha, const std::optional<S>& cap) {
  if (alpha < 0) throw Error(ErrorCode::ParamOutOfRange, "G transform needs alpha >= 0");
  if (cap && *cap < 0) throw Error(ErrorCode::ParamOutOfRange, "G transform needs a nonnegative cap");
  if (!is_concave(h)) throw Error(ErrorCode::NotConcave, "G transform requires a concave distortion");
  if (!near(value_at_one(h), S(0)))
    throw Error(ErrorCode::NotConcave, "G transform requires h(1) = 0, got " + to_string(value_at_one(h)));
  if (alpha >= ratio<S>(1, 2)) return make_zero<S>();
  Piecewise<S> m = min_of(shifted(h.piecewise(), alpha), shifted(h.piecewise(), S(-alpha)));
  if (cap) m = min_of(m, Piecewise<S>::constant(*cap));
  return DistortionFunction<S>(masked_open(m, alpha, S(1 - alpha)));
}

// If h is exactly the IQD indicator for some level, that level.
template <Scalar S>
std::optional<S> iqd_level(const DistortionFunction<S>& h) {
  const auto& bps = h.breakpoints();
  S alpha = bps.size() == 4 ? bps[1] : S(0);
  if (bps.size() != 2 && bps.size() != 4) return std::nullopt;
  if (alpha >= ratio<S>(1, 2)) return std::nullopt;
  if (h == make_iqd(alpha)) return alpha;
  return std::nullopt;
}

}  // namespace riskshare
