#include <gtest/gtest.h>

#include "support.hpp"

using namespace riskshare;
using rt::frac;
using rt::Q;

namespace {

AgentSpec<Q> agent(DistortionFunction<Q> h, Q w = Q(1)) { return {"a", std::move(h), w, std::nullopt}; }

// Pointwise agreement on a 1000-point grid plus both sets of breakpoints.
::testing::AssertionResult same_function(const DistortionFunction<Q>& a, const DistortionFunction<Q>& b) {
  std::vector<Q> ts;
  for (int k = 0; k <= 1000; ++k) ts.push_back(frac<Q>(k, 1000));
  for (const auto* f : {&a, &b})
    for (const Q& t : f->breakpoints()) ts.push_back(t);
  for (const Q& t : ts)
    if (!near(a(t), b(t)))
      return ::testing::AssertionFailure() << "differ at t=" << to_string(t) << ": " << to_string(a(t)) << " vs "
                                           << to_string(b(t));
  return ::testing::AssertionSuccess();
}

DiscreteRv<Q> descending(int n) {
  std::vector<Q> v;
  for (int k = n; k >= 1; --k) v.push_back(Q(k));
  return DiscreteRv<Q>(v);
}

}  // namespace

TEST(InfconvComonotonic, IdenticalAgents) {
  auto r = infconv_comonotonic<Q>({make_gd<Q>(), make_gd<Q>()}, {Q(1), Q(1)});
  EXPECT_EQ(r.representative, make_gd<Q>());
  EXPECT_EQ(r.regime, Regime::ComonotonicEnvelope);
}

TEST(InfconvComonotonic, IqdFamilyPoolsToWidestLevel) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> a(0, 24), l(1, 9);
  for (int k = 0; k < 50; ++k) {
    std::vector<DistortionFunction<Q>> hs;
    std::vector<Q> alphas, lambdas;
    for (int i = 0; i < 1 + k % 4; ++i) {
      alphas.push_back(frac<Q>(a(rng), 50));
      lambdas.push_back(frac<Q>(l(rng), 4));
      hs.push_back(make_iqd(alphas.back()));
    }
    auto r = infconv_comonotonic(hs, lambdas);
    auto want = scale(make_iqd(*std::max_element(alphas.begin(), alphas.end())),
                      *std::min_element(lambdas.begin(), lambdas.end()));
    ASSERT_TRUE(same_function(r.representative, want));
  }
}

TEST(InfconvComonotonic, GdMmdCrossings) {
  auto r = infconv_comonotonic<Q>({make_gd<Q>(), make_mmd<Q>()}, {frac<Q>(3, 5), frac<Q>(2, 5)});
  EXPECT_EQ(r.representative.breakpoints(), (std::vector<Q>{Q(0), frac<Q>(1, 3), frac<Q>(2, 3), Q(1)}));
  EXPECT_EQ(r.representative(frac<Q>(1, 2)), frac<Q>(3, 20));
  EXPECT_EQ(r.representative(frac<Q>(1, 6)), frac<Q>(1, 15));
}

TEST(InfconvComonotonic, UnequalLevelsRejected) {
  try {
    infconv_comonotonic<Q>({make_mean<Q>(), make_gd<Q>()}, {Q(1), Q(1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnboundedProblem);
  }
}

TEST(InfconvIqd, Examples) {
  EXPECT_EQ(infconv_iqd<Q>({frac<Q>(1, 5)}, {Q(3)}).representative, scale(make_iqd(frac<Q>(1, 5)), Q(3)));
  auto r = infconv_iqd<Q>({frac<Q>(1, 8), frac<Q>(1, 8)}, {Q(1), Q(1)});
  EXPECT_EQ(r.representative, make_iqd(frac<Q>(1, 4)));
  EXPECT_EQ(r.regime, Regime::IqdUnconstrained);
  EXPECT_EQ(infconv_iqd<Q>({frac<Q>(3, 10), frac<Q>(3, 10)}, {Q(1), Q(1)}).representative, make_zero<Q>());
  EXPECT_THROW(infconv_iqd<Q>({frac<Q>(1, 2)}, {Q(1)}), Error);
  EXPECT_THROW(infconv_iqd<Q>({frac<Q>(1, 4)}, {Q(-1)}), Error);
}

TEST(InfconvMixed, ReducesToPureRegimes) {
  std::vector<AgentSpec<Q>> concave{agent(make_gd<Q>(), frac<Q>(3, 5)), agent(make_mmd<Q>(), frac<Q>(2, 5))};
  auto m = infconv_mixed(concave);
  EXPECT_EQ(m.regime, Regime::ComonotonicEnvelope);
  EXPECT_EQ(m.representative, infconv_comonotonic(concave).representative);
  std::vector<AgentSpec<Q>> iqds{agent(make_iqd(frac<Q>(1, 8)), Q(2)), agent(make_iqd(frac<Q>(1, 10)), Q(3))};
  auto i = infconv_mixed(iqds);
  EXPECT_EQ(i.regime, Regime::IqdUnconstrained);
  EXPECT_EQ(i.representative, scale(make_iqd(frac<Q>(9, 40)), Q(2)));
}

TEST(InfconvMixed, OneIqdOneConcaveIsGTransform) {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 60; ++k) {
    auto h = rt::random_deviation<Q>(rng);
    Q alpha = frac<Q>(1 + k % 9, 20), lam = frac<Q>(1 + k % 5, 4);
    auto r = infconv_mixed<Q>({agent(make_iqd(alpha), lam), agent(h)});
    ASSERT_EQ(r.regime, Regime::MixedUnconstrained);
    ASSERT_TRUE(same_function(r.representative, g_transform(h, alpha, std::optional<Q>(lam))));
  }
}

TEST(InfconvMixed, AssociativeOverTheIqdGroup) {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 40; ++k) {
    auto h = rt::random_deviation<Q>(rng);
    Q a1 = frac<Q>(1 + k % 5, 40), a2 = frac<Q>(1 + k % 7, 40);
    Q l1 = frac<Q>(1 + k % 3, 2), l2 = frac<Q>(1 + k % 4, 3);
    auto pooled = infconv_iqd<Q>({a1, a2}, {l1, l2});
    auto lmin = std::min(l1, l2);
    // The pooled group acts as lmin * IQD(a1 + a2), i.e. an IQD agent of weight lmin.
    auto staged = infconv_mixed<Q>({agent(make_iqd(Q(a1 + a2)), lmin), agent(h)});
    ASSERT_TRUE(same_function(scale(make_iqd(Q(a1 + a2)), lmin), pooled.representative));
    auto direct = infconv_mixed<Q>({agent(make_iqd(a1), l1), agent(make_iqd(a2), l2), agent(h)});
    ASSERT_TRUE(same_function(staged.representative, direct.representative));
  }
}

TEST(InfconvMixed, AttainedByMixedAllocation) {
  std::mt19937_64 rng(24);
  for (int k = 0; k < 30; ++k) {
    std::vector<AgentSpec<Q>> agents{agent(rt::random_deviation<Q>(rng), frac<Q>(1 + k % 3, 2)),
                                     agent(make_iqd(frac<Q>(1, 10)), frac<Q>(1 + k % 4, 3)),
                                     agent(rt::random_deviation<Q>(rng))};
    DiscreteRv<Q> x(rt::lattice_values<Q>(rng, 20, -5, 5, 4));
    auto closed = infconv_mixed(agents);
    ASSERT_EQ(mixed_allocation(x, agents).value, closed.value_at(x));
  }
}

TEST(InfconvMixed, RejectsUnsupportedAgents) {
  DistortionFunction<Q> convex({Q(0), Q(1)}, {{0, 0, 1}}, {Q(0), Q(1)});
  try {
    infconv_mixed<Q>({agent(convex), agent(make_mean<Q>())});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Unsupported);
  }
}

TEST(WelfareGap, Examples) {
  EXPECT_EQ(welfare_gap<Q>(DiscreteRv<Q>({Q(4), Q(4), Q(4)}), {frac<Q>(1, 8), frac<Q>(1, 8)}, {Q(1), Q(1)}), Q(0));
  EXPECT_EQ(welfare_gap<Q>(descending(8), {frac<Q>(1, 8), frac<Q>(1, 8)}, {Q(1), Q(1)}), Q(2));
  EXPECT_EQ(welfare_gap<Q>(descending(8), {frac<Q>(1, 8)}, {Q(5)}), Q(0));
}

TEST(WelfareGap, PositiveOnDistinctValues) {
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> a(1, 24);
  for (int k = 0; k < 300; ++k) {
    std::size_t n = 2 + k % 3;
    std::vector<Q> alphas, lambdas;
    for (std::size_t i = 0; i < n; ++i) {
      alphas.push_back(frac<Q>(a(rng), 50));
      lambdas.push_back(frac<Q>(1 + a(rng), 5));
    }
    // Fine enough grid that the smallest level resolves.
    DiscreteRv<Q> x(rt::distinct_values<Q>(rng, 60));
    ASSERT_GT(welfare_gap(x, alphas, lambdas), 0);
    DiscreteRv<Q> tied(rt::lattice_values<Q>(rng, 10, 0, 2));
    ASSERT_GE(welfare_gap(tied, alphas, lambdas), 0);
  }
}
