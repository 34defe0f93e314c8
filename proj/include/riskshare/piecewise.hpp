#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "riskshare/error.hpp"
#include "riskshare/polynomial.hpp"
#include "riskshare/scalar.hpp"

namespace riskshare {

// Piecewise quadratic function on [0,1] with explicit values at breakpoints.
// Segment k lives on the open interval (t_k, t_{k+1}); point_values[k] is the
// value at t_k, independent of the one-sided limits.
template <Scalar S>
class Piecewise {
 public:
  Piecewise() : Piecewise(constant(S(0))) {}

  Piecewise(std::vector<S> breakpoints, std::vector<Quadratic<S>> segments, std::vector<S> point_values)
      : breakpoints_(std::move(breakpoints)), segments_(std::move(segments)), point_values_(std::move(point_values)) {
    validate();
    canonicalize();
  }

  static Piecewise constant(const S& c) { return Piecewise({S(0), S(1)}, {Quadratic<S>{c, 0, 0}}, {c, c}); }

  static Piecewise polynomial(const Quadratic<S>& q) { return Piecewise({S(0), S(1)}, {q}, {q(S(0)), q(S(1))}); }

  const std::vector<S>& breakpoints() const { return breakpoints_; }
  const std::vector<Quadratic<S>>& segments() const { return segments_; }
  const std::vector<S>& point_values() const { return point_values_; }

  S operator()(const S& t) const {
    check_domain(t);
    if (t == 1) return point_values_.back();
    std::size_t k = floor_index(t);
    if (breakpoints_[k] == t) return point_values_[k];
    return segments_[k](t);
  }

  S right_limit(const S& t) const {
    check_domain(t);
    if (t == 1) throw Error(ErrorCode::DomainError, "no right limit at 1");
    return segments_[floor_index(t)](t);
  }

  S left_limit(const S& t) const {
    check_domain(t);
    if (t == 0) throw Error(ErrorCode::DomainError, "no left limit at 0");
    auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    return segments_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1](t);
  }

  // Segment whose closed-open span [t_k, t_{k+1}) holds t (the last one for t=1).
  const Quadratic<S>& segment_at(const S& t) const { return segments_[floor_index(t)]; }

  // Value at a node of a refined partition: snaps to a stored breakpoint when
  // the node coincides with one up to tolerance.
  S node_value(const S& t) const {
    std::size_t k = floor_index(t);
    if (near(breakpoints_[k], t)) return point_values_[k];
    if (k + 1 < breakpoints_.size() && near(breakpoints_[k + 1], t)) return point_values_[k + 1];
    return segments_[k](t);
  }

  friend bool operator==(const Piecewise& a, const Piecewise& b) {
    return a.breakpoints_ == b.breakpoints_ && a.segments_ == b.segments_ && a.point_values_ == b.point_values_;
  }

 private:
  void check_domain(const S& t) const {
    if (t < 0 || t > 1) throw Error(ErrorCode::DomainError, "argument " + to_string(t) + " outside [0,1]");
  }

  std::size_t floor_index(const S& t) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
    std::size_t k = static_cast<std::size_t>(it - breakpoints_.begin());
    k = k == 0 ? 0 : k - 1;
    return std::min(k, segments_.size() - 1);
  }

  void validate() const {
    if (breakpoints_.size() < 2 || segments_.size() + 1 != breakpoints_.size() ||
        point_values_.size() != breakpoints_.size())
      throw Error(ErrorCode::InvalidInput, "piecewise function needs m+1 breakpoints, m segments, m+1 point values");
    if (breakpoints_.front() != 0 || breakpoints_.back() != 1)
      throw Error(ErrorCode::InvalidInput, "breakpoints must start at 0 and end at 1");
    for (std::size_t k = 1; k < breakpoints_.size(); ++k)
      if (!(breakpoints_[k - 1] < breakpoints_[k]))
        throw Error(ErrorCode::InvalidInput, "breakpoints must be strictly increasing");
  }

  void canonicalize() {
    std::vector<S> bps{breakpoints_.front()};
    std::vector<Quadratic<S>> segs{segments_.front()};
    std::vector<S> pvs{point_values_.front()};
    for (std::size_t k = 1; k < segments_.size(); ++k) {
      const S& t = breakpoints_[k];
      if (segments_[k] == segs.back() && near(point_values_[k], segs.back()(t))) continue;
      bps.push_back(t);
      segs.push_back(segments_[k]);
      pvs.push_back(point_values_[k]);
    }
    bps.push_back(breakpoints_.back());
    pvs.push_back(point_values_.back());
    breakpoints_ = std::move(bps);
    segments_ = std::move(segs);
    point_values_ = std::move(pvs);
  }

  std::vector<S> breakpoints_;
  std::vector<Quadratic<S>> segments_;
  std::vector<S> point_values_;
};

namespace detail {

template <Scalar S>
void push_node(std::vector<S>& nodes, const S& t) {
  if (nodes.empty() || !near(nodes.back(), t)) nodes.push_back(t);
}

template <Scalar S>
std::vector<S> merge_nodes(const std::vector<S>& a, const std::vector<S>& b) {
  std::vector<S> all;
  all.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(all));
  std::vector<S> out;
  for (const S& t : all) push_node(out, t);
  out.back() = S(1);
  return out;
}

template <Scalar S>
S midpoint(const S& u, const S& v) {
  return (u + v) / S(2);
}

}  // namespace detail

template <Scalar S, class SegOp, class PointOp>
Piecewise<S> combine(const Piecewise<S>& a, const Piecewise<S>& b, SegOp seg_op, PointOp point_op) {
  std::vector<S> nodes = detail::merge_nodes(a.breakpoints(), b.breakpoints());
  std::vector<Quadratic<S>> segs;
  std::vector<S> pvs;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    pvs.push_back(point_op(a.node_value(nodes[k]), b.node_value(nodes[k])));
    if (k + 1 < nodes.size()) {
      S mid = detail::midpoint(nodes[k], nodes[k + 1]);
      segs.push_back(seg_op(a.segment_at(mid), b.segment_at(mid)));
    }
  }
  return Piecewise<S>(std::move(nodes), std::move(segs), std::move(pvs));
}

template <Scalar S>
Piecewise<S> operator+(const Piecewise<S>& a, const Piecewise<S>& b) {
  return combine(a, b, [](const auto& p, const auto& q) { return p + q; },
                 [](const S& x, const S& y) { return S(x + y); });
}

template <Scalar S>
Piecewise<S> operator-(const Piecewise<S>& a, const Piecewise<S>& b) {
  return combine(a, b, [](const auto& p, const auto& q) { return p - q; },
                 [](const S& x, const S& y) { return S(x - y); });
}

template <Scalar S>
Piecewise<S> operator*(const S& k, const Piecewise<S>& a) {
  std::vector<Quadratic<S>> segs;
  for (const auto& q : a.segments()) segs.push_back(k * q);
  std::vector<S> pvs;
  for (const S& v : a.point_values()) pvs.push_back(k * v);
  return Piecewise<S>(a.breakpoints(), std::move(segs), std::move(pvs));
}

// Exact pointwise minimum; segments are split at every interior crossing.
template <Scalar S>
Piecewise<S> min_of(const Piecewise<S>& a, const Piecewise<S>& b) {
  std::vector<S> base = detail::merge_nodes(a.breakpoints(), b.breakpoints());
  std::vector<S> nodes;
  for (std::size_t k = 0; k + 1 < base.size(); ++k) {
    detail::push_node(nodes, base[k]);
    S mid = detail::midpoint(base[k], base[k + 1]);
    for (const S& r : roots_in(a.segment_at(mid) - b.segment_at(mid), base[k], base[k + 1]))
      detail::push_node(nodes, r);
  }
  detail::push_node(nodes, base.back());
  nodes.back() = S(1);
  std::vector<Quadratic<S>> segs;
  std::vector<S> pvs;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    pvs.push_back(std::min(a.node_value(nodes[k]), b.node_value(nodes[k])));
    if (k + 1 < nodes.size()) {
      S mid = detail::midpoint(nodes[k], nodes[k + 1]);
      const auto& p = a.segment_at(mid);
      const auto& q = b.segment_at(mid);
      segs.push_back(q(mid) < p(mid) ? q : p);
    }
  }
  return Piecewise<S>(std::move(nodes), std::move(segs), std::move(pvs));
}

// t -> f(t - d), taken as 0 where t - d falls outside [0,1].
template <Scalar S>
Piecewise<S> shifted(const Piecewise<S>& f, const S& d) {
  if (d == 0) return f;
  std::vector<S> raw{S(0)};
  for (const S& t : f.breakpoints()) {
    S u = t + d;
    if (u > 0 && u < 1) raw.push_back(u);
  }
  raw.push_back(S(1));
  std::vector<S> nodes;
  for (const S& t : raw) detail::push_node(nodes, t);
  nodes.back() = S(1);
  auto inside = [](const S& s) { return (s > 0 || near(s, S(0))) && (s < 1 || near(s, S(1))); };
  auto clamp = [](const S& s) { return std::clamp(s, S(0), S(1)); };
  std::vector<Quadratic<S>> segs;
  std::vector<S> pvs;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    S src = nodes[k] - d;
    pvs.push_back(inside(src) ? f.node_value(clamp(src)) : S(0));
    if (k + 1 < nodes.size()) {
      S mid = detail::midpoint(nodes[k], nodes[k + 1]) - d;
      bool in = mid > 0 && mid < 1;
      segs.push_back(in ? f.segment_at(mid).shifted(d) : Quadratic<S>{});
    }
  }
  return Piecewise<S>(std::move(nodes), std::move(segs), std::move(pvs));
}

// f on the open interval (a, b), zero elsewhere including at a and b.
template <Scalar S>
Piecewise<S> masked_open(const Piecewise<S>& f, const S& a, const S& b) {
  std::vector<S> cut{S(0)};
  if (a > 0 && a < 1) cut.push_back(a);
  if (b > 0 && b < 1 && b > a) cut.push_back(b);
  cut.push_back(S(1));
  std::vector<S> nodes = detail::merge_nodes(f.breakpoints(), cut);
  std::vector<Quadratic<S>> segs;
  std::vector<S> pvs;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const S& t = nodes[k];
    bool in = t > a && t < b && !near(t, a) && !near(t, b);
    pvs.push_back(in ? f.node_value(t) : S(0));
    if (k + 1 < nodes.size()) {
      S mid = detail::midpoint(nodes[k], nodes[k + 1]);
      segs.push_back(mid > a && mid < b ? f.segment_at(mid) : Quadratic<S>{});
    }
  }
  return Piecewise<S>(std::move(nodes), std::move(segs), std::move(pvs));
}

}  // namespace riskshare
