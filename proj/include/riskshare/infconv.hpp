#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "riskshare/allocate.hpp"
#include "riskshare/allocation.hpp"
#include "riskshare/distortion.hpp"
#include "riskshare/error.hpp"
#include "riskshare/riskmetric.hpp"

namespace riskshare {

enum class Regime { ComonotonicEnvelope, IqdUnconstrained, MixedUnconstrained };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::ComonotonicEnvelope: return "comonotonic";
    case Regime::IqdUnconstrained: return "iqd";
    case Regime::MixedUnconstrained: return "mixed";
  }
  return "comonotonic";
}

// The group behaves as a single agent with the representative distortion.
template <Scalar S>
struct InfconvResult {
  DistortionFunction<S> representative;
  Regime regime;

  S value_at(const DiscreteRv<S>& x) const { return choquet(representative, x); }
};

template <Scalar S>
InfconvResult<S> infconv_comonotonic(const std::vector<DistortionFunction<S>>& hs, const std::vector<S>& lambdas) {
  if (hs.empty() || hs.size() != lambdas.size()) throw Error(ErrorCode::InvalidInput, "one weight per distortion");
  auto scaled = weighted(hs, lambdas);
  require_equal_levels_at_one(scaled);
  return {envelope_min(scaled), Regime::ComonotonicEnvelope};
}

template <Scalar S>
InfconvResult<S> infconv_comonotonic(const std::vector<AgentSpec<S>>& agents) {
  std::vector<DistortionFunction<S>> hs;
  std::vector<S> ls;
  for (const auto& a : agents) {
    hs.push_back(a.distortion);
    ls.push_back(a.weight);
  }
  return infconv_comonotonic(hs, ls);
}

namespace detail {

template <Scalar S>
void check_iqd_params(const std::vector<S>& alphas, const std::vector<S>& lambdas) {
  if (alphas.empty() || alphas.size() != lambdas.size())
    throw Error(ErrorCode::InvalidInput, "one weight per IQD level");
  for (const S& a : alphas)
    if (a < 0 || a >= ratio<S>(1, 2)) throw Error(ErrorCode::ParamOutOfRange, "IQD level outside [0, 1/2)");
  for (const S& l : lambdas)
    if (l < 0) throw Error(ErrorCode::ParamOutOfRange, "negative weight");
}

// lambda * IQD(alpha), zero once alpha reaches 1/2.
template <Scalar S>
DistortionFunction<S> scaled_iqd(const S& lambda, const S& alpha) {
  if (alpha >= ratio<S>(1, 2)) return make_zero<S>();
  return scale(make_iqd(alpha), lambda);
}

}  // namespace detail

template <Scalar S>
InfconvResult<S> infconv_iqd(const std::vector<S>& alphas, const std::vector<S>& lambdas) {
  detail::check_iqd_params(alphas, lambdas);
  S alpha(0);
  for (const S& a : alphas) alpha += a;
  S lambda = *std::min_element(lambdas.begin(), lambdas.end());
  return {detail::scaled_iqd(lambda, alpha), Regime::IqdUnconstrained};
}

// IQD agents (exact IQD shape) pool their levels and cap the G transform of
// the concave agents' envelope at the smallest IQD weight.
template <Scalar S>
InfconvResult<S> infconv_mixed(const std::vector<AgentSpec<S>>& agents) {
  if (agents.empty()) throw Error(ErrorCode::InvalidInput, "no agents");
  for (const auto& a : agents)
    if (a.weight < 0) throw Error(ErrorCode::ParamOutOfRange, "negative weight");
  auto roles = classify_roles(agents);
  std::vector<S> alphas, iqd_lambdas;
  std::vector<DistortionFunction<S>> concave;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (roles[i].kind == RoleKind::Iqd) {
      alphas.push_back(roles[i].alpha);
      iqd_lambdas.push_back(agents[i].weight);
    } else {
      concave.push_back(scale(agents[i].distortion, agents[i].weight));
    }
  }
  if (alphas.empty()) return {envelope_min(concave), Regime::ComonotonicEnvelope};
  if (concave.empty()) return infconv_iqd(alphas, iqd_lambdas);
  S alpha(0);
  for (const S& a : alphas) alpha += a;
  S cap = *std::min_element(iqd_lambdas.begin(), iqd_lambdas.end());
  return {g_transform(envelope_min(concave), alpha, std::optional<S>(cap)), Regime::MixedUnconstrained};
}

// Comonotonic minus unconstrained optimum for an IQD group.
template <Scalar S>
S welfare_gap(const DiscreteRv<S>& x, const std::vector<S>& alphas, const std::vector<S>& lambdas) {
  detail::check_iqd_params(alphas, lambdas);
  S lambda = *std::min_element(lambdas.begin(), lambdas.end());
  S widest = *std::max_element(alphas.begin(), alphas.end());
  S como = choquet(detail::scaled_iqd(lambda, widest), x);
  return como - infconv_iqd(alphas, lambdas).value_at(x);
}

}  // namespace riskshare
