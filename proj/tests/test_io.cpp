#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace riskshare;
using rt::frac;
using rt::Q;

TEST(DistortionRecord, RoundTripsExactly) {
  std::mt19937_64 rng(61);
  for (int k = 0; k < 100; ++k) {
    auto h = k % 2 ? rt::random_bv<Q>(rng) : rt::random_concave<Q>(rng);
    auto text = write_distortion(h);
    EXPECT_EQ(text.rfind("riskshare-distortion 1\n", 0), 0u);
    ASSERT_EQ(read_distortion<Q>(text), h);
    ASSERT_EQ(distortion_from_json<Q>(distortion_to_json(h)), h);
  }
  auto e = envelope_min<Q>({make_gd<Q>(), scale(make_iqd(frac<Q>(1, 5)), frac<Q>(1, 7))});
  EXPECT_EQ(read_distortion<Q>(write_distortion(e)), e);
}

TEST(DistortionRecord, DoubleRoundTripIsBitExact) {
  auto h = scale(make_gd<double>(), 0.1);
  auto back = read_distortion<double>(write_distortion(h));
  for (double t : {0.0, 0.1, 0.3, 0.77, 1.0}) EXPECT_EQ(back(t), h(t));
}

TEST(DistortionRecord, RejectsMalformedText) {
  EXPECT_THROW(read_distortion<Q>("node 0 0\n"), Error);
  EXPECT_THROW(read_distortion<Q>("riskshare-distortion 1\nnode 0 0\n"), Error);
  EXPECT_THROW(read_distortion<Q>("riskshare-distortion 1\nnode 0 0\nsegment 1 2\nnode 1 0\n"), Error);
  EXPECT_THROW(read_distortion<Q>("riskshare-distortion 1\nnode 0 0\nwhat 1 2 3\nnode 1 0\n"), Error);
}

TEST(DistortionSpec, NamedForms) {
  EXPECT_EQ(parse_distortion_spec<Q>("gd"), make_gd<Q>());
  EXPECT_EQ(parse_distortion_spec<Q>(" mmd "), make_mmd<Q>());
  EXPECT_EQ(parse_distortion_spec<Q>("mean"), make_mean<Q>());
  EXPECT_EQ(parse_distortion_spec<Q>("range"), make_range<Q>());
  EXPECT_EQ(parse_distortion_spec<Q>("zero"), make_zero<Q>());
  EXPECT_EQ(parse_distortion_spec<Q>("iqd:0.25"), make_iqd(frac<Q>(1, 4)));
  EXPECT_EQ(parse_distortion_spec<Q>("iqd:1/8"), make_iqd(frac<Q>(1, 8)));
  EXPECT_EQ(parse_distortion_spec<Q>("mix:a=0.5:gd+mmd"), make_mixture(frac<Q>(1, 2), make_gd<Q>(), make_mmd<Q>()));
  EXPECT_EQ(parse_distortion_spec<Q>("meanplus:g=0.5:gd"), make_mean_plus(frac<Q>(1, 2), make_gd<Q>()));
  EXPECT_EQ(parse_distortion_spec<Q>("scale:l=3:iqd:0.1"), scale(make_iqd(frac<Q>(1, 10)), Q(3)));
  for (const char* bad : {"", "gdd", "iqd:", "mix:a=0.5:gd", "meanplus:gd", "iqd:0.7"})
    EXPECT_THROW(parse_distortion_spec<Q>(bad), Error) << bad;
}

TEST(DistortionJson, RawRecordsAndScalars) {
  auto j = nlohmann::json::parse(R"({"breakpoints":[0,"1/2",1],"segments":[[0,2,0],[2,-2,0]],"values":[0,1,0]})");
  auto h = distortion_from_json<Q>(j);
  EXPECT_EQ(h(frac<Q>(1, 4)), frac<Q>(1, 2));
  EXPECT_EQ(h, make_mixture(Q(0), make_gd<Q>(), scale(make_mmd<Q>(), Q(2))));
  EXPECT_EQ(json_scalar<Q>(nlohmann::json(0.25)), frac<Q>(1, 4));
  EXPECT_EQ(json_scalar<Q>(nlohmann::json("2/6")), frac<Q>(1, 3));
  EXPECT_THROW(json_scalar<Q>(nlohmann::json::array()), Error);
  EXPECT_THROW(distortion_from_json<Q>(nlohmann::json::object()), Error);
}

TEST(DistributionCsv, PlainValues) {
  std::istringstream in("value\n3\n1\n# comment\n2\n");
  auto d = read_distribution_csv<Q>(in);
  EXPECT_EQ(d.x.values(), (std::vector<Q>{Q(3), Q(1), Q(2)}));
  EXPECT_TRUE(d.beliefs.empty());
  std::istringstream bare("5\n6\n");
  EXPECT_EQ(read_distribution_csv<Q>(bare).x.size(), 2u);
}

TEST(DistributionCsv, ProbabilitiesExpandToEquiprobableGrid) {
  std::istringstream in("x,prob\n10,1/2\n20,0.25\n30,1/4\n");
  auto d = read_distribution_csv<Q>(in);
  EXPECT_EQ(d.x.values(), (std::vector<Q>{Q(10), Q(10), Q(20), Q(30)}));
  std::istringstream bad("x,p\n1,0.5\n2,0.4\n");
  EXPECT_THROW(read_distribution_csv<Q>(bad), Error);
}

TEST(DistributionCsv, BeliefColumnsAreSplitWithTheStates) {
  std::istringstream in("x,p,anne,bob\n1,1/2,0.2,1/2\n0,1/2,0.8,1/2\n");
  auto d = read_distribution_csv<Q>(in);
  ASSERT_EQ(d.beliefs.size(), 2u);
  EXPECT_EQ(d.beliefs.at("anne").probs(), (std::vector<Q>{frac<Q>(1, 5), frac<Q>(4, 5)}));
  std::istringstream dup("x,p,anne\n1,1/2,0.2\n0,1/4,0.4\n0,1/4,0.4\n");
  auto e = read_distribution_csv<Q>(dup);
  EXPECT_EQ(e.x.size(), 4u);
  EXPECT_EQ(e.beliefs.at("anne").probs(), (std::vector<Q>{frac<Q>(1, 10), frac<Q>(1, 10), frac<Q>(2, 5), frac<Q>(2, 5)}));
}

TEST(DistributionCsv, Errors) {
  std::istringstream empty("");
  EXPECT_THROW(read_distribution_csv<Q>(empty), Error);
  std::istringstream ragged("x,p\n1,1/2\n2\n");
  EXPECT_THROW(read_distribution_csv<Q>(ragged), Error);
  std::istringstream unnamed("1,2,3\n");
  EXPECT_THROW(read_distribution_csv<Q>(unnamed), Error);
}

TEST(AllocationCsv, RoundTrip) {
  DiscreteRv<Q> x({Q(1), Q(5), Q(3)});
  Allocation<Q> a(x, {{frac<Q>(1, 3), Q(4), Q(1)}, {frac<Q>(2, 3), Q(1), Q(2)}});
  std::vector<Region> regions{Region::B, Region::A, Region::Middle};
  std::ostringstream out;
  write_allocation_csv(out, a, {"anne", "bob"}, &regions);
  EXPECT_EQ(out.str(), "state,X,anne,bob,region\n1,5,4,1,A\n2,3,1,2,middle\n0,1,1/3,2/3,B\n");
  std::istringstream in(out.str());
  auto back = read_allocation_csv<Q>(in);
  EXPECT_EQ(back.names, (std::vector<std::string>{"anne", "bob"}));
  EXPECT_EQ(back.allocation.parts(), a.parts());
  EXPECT_EQ(back.allocation.total().values(), x.values());
}

TEST(AllocationCsv, Errors) {
  std::istringstream bad_header("s,X,a\n0,1,1\n");
  EXPECT_THROW(read_allocation_csv<Q>(bad_header), Error);
  std::istringstream bad_sum("state,X,a,b\n0,1,1,1\n");
  EXPECT_THROW(read_allocation_csv<Q>(bad_sum), Error);
  std::istringstream dup("state,X,a,b\n0,1,1,0\n0,1,1,0\n");
  EXPECT_THROW(read_allocation_csv<Q>(dup), Error);
}
