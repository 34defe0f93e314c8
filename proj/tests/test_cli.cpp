#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace riskshare;
using rt::frac;
using rt::Q;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("riskshare_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  std::string scenario(const json& j) { return write("scenario.json", j.dump()); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "riskshare");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    ::testing::internal::CaptureStdout();
    ::testing::internal::CaptureStderr();
    int code = cli::run(static_cast<int>(argv.size()), argv.data());
    out_ = ::testing::internal::GetCapturedStdout();
    err_ = ::testing::internal::GetCapturedStderr();
    return code;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(dir_ / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  std::vector<std::vector<std::string>> csv(const std::string& name) const {
    std::istringstream in(read(name));
    return detail::read_rows(in);
  }

  std::string out() const { return (dir_ / "out").string(); }
  std::string outfile(const std::string& name) const { return "out/" + name; }

  fs::path dir_;
  std::string out_, err_;
};

json values_1_to(int n) {
  json v = json::array();
  for (int k = 1; k <= n; ++k) v.push_back(k);
  return v;
}

}  // namespace

TEST_F(Cli, EvalOnUniformGrid) {
  auto sc = scenario({{"distribution", {{"uniform", {{"n", 10000}}}}},
                      {"agents", {{{"name", "gd"}, {"distortion", "gd"}}, {{"name", "mmd"}, {"distortion", "mmd"}}}}});
  ASSERT_EQ(run({"eval", "--scenario", sc, "--out", out()}), 0) << err_;
  auto rows = csv(outfile("eval.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"agent", "value"}));
  EXPECT_NEAR(std::stod(rows[1][1]), 1.0 / 6, 1e-3);
  EXPECT_NEAR(std::stod(rows[2][1]), 0.25, 1e-3);
}

TEST_F(Cli, ValidateFlagsMixedSigns) {
  auto bad = scenario({{"distribution", {{"values", {1, 2}}}},
                       {"agents", {{{"distortion", "mean"}}, {{"distortion", "gd"}}}}});
  EXPECT_EQ(run({"validate", "--scenario", bad, "--out", out()}), 2);
  auto j = json::parse(read(outfile("validate.json")));
  EXPECT_TRUE(j["mixed_sign"].get<bool>());
  auto good = scenario({{"distribution", {{"values", {1, 2}}}},
                        {"agents", {{{"distortion", "gd"}}, {{"distortion", "iqd:0.25"}}}}});
  EXPECT_EQ(run({"validate", "--scenario", good, "--out", out()}), 0);
}

TEST_F(Cli, InfconvWritesReadableRepresentative) {
  auto sc = scenario({{"exact", true},
                      {"distribution", {{"values", values_1_to(8)}}},
                      {"mode", "unconstrained"},
                      {"agents", {{{"distortion", "iqd:1/8"}}, {{"distortion", "iqd:1/8"}}}}});
  ASSERT_EQ(run({"infconv", "--scenario", sc, "--out", out()}), 0) << err_;
  EXPECT_EQ(read_distortion<Q>(read(outfile("representative.txt"))), make_iqd(frac<Q>(1, 4)));
  auto rows = csv(outfile("infconv.csv"));
  EXPECT_EQ(rows[1], (std::vector<std::string>{"iqd", "3"}));
}

TEST_F(Cli, GdMmdAllocationHasDeductibleWithLimit) {
  auto sc = scenario({{"exact", true},
                      {"distribution", {{"values", values_1_to(100)}}},
                      {"agents",
                       {{{"name", "gd"}, {"distortion", "gd"}, {"weight", "0.6"}},
                        {{"name", "mmd"}, {"distortion", "mmd"}, {"weight", "0.4"}}}}});
  ASSERT_EQ(run({"allocate", "--scenario", sc, "--out", out()}), 0) << err_;
  auto rows = csv(outfile("transfer.csv"));
  ASSERT_EQ(rows[0], (std::vector<std::string>{"x", "gd", "mmd"}));
  // f_gd is flat below Q_{2/3} = 34, has slope one up to Q_{1/3} = 67 and is flat above.
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Q x = parse_scalar<Q>(rows[r][0]), f = parse_scalar<Q>(rows[r][1]);
    Q want = std::max(Q(0), std::min(x, Q(67)) - 34);
    ASSERT_EQ(f - want, parse_scalar<Q>(rows[1][1]) - std::max(Q(0), std::min(Q(1), Q(67)) - 34)) << "x=" << rows[r][0];
  }
  auto welfare_rows = csv(outfile("welfare.csv"));
  auto env = envelope_min<Q>({scale(make_gd<Q>(), frac<Q>(3, 5)), scale(make_mmd<Q>(), frac<Q>(2, 5))});
  std::vector<Q> v;
  for (int k = 1; k <= 100; ++k) v.push_back(Q(k));
  EXPECT_EQ(parse_scalar<Q>(welfare_rows.back()[2]), choquet(env, DiscreteRv<Q>(v)));
}

TEST_F(Cli, AllocationRoundTripsThroughVerify) {
  auto sc = scenario({{"exact", true},
                      {"distribution", {{"values", {5, 1, 4, 2, 3, 9, 0, 7, 6, 8}}}},
                      {"mode", "mixed"},
                      {"options", {{"trials", 200}, {"seed", 3}}},
                      {"agents",
                       {{{"name", "anne"}, {"distortion", "gd"}},
                        {{"name", "bob"}, {"distortion", "mmd"}, {"weight", 2}},
                        {{"name", "carole"}, {"distortion", "iqd:0.1"}, {"weight", "1/4"}}}}});
  ASSERT_EQ(run({"allocate", "--scenario", sc, "--out", out()}), 0) << err_;
  auto total = csv(outfile("welfare.csv")).back()[2];
  auto alloc = csv(outfile("allocation.csv"));
  EXPECT_EQ(alloc[0], (std::vector<std::string>{"state", "X", "anne", "bob", "carole", "region"}));
  EXPECT_EQ(alloc[1][5], "A");
  EXPECT_EQ(alloc.back()[5], "B");
  ASSERT_EQ(run({"verify", "--scenario", sc, "--out", out(), "--allocation", (dir_ / outfile("allocation.csv")).string()}),
            0)
      << out_ << err_;
  auto j = json::parse(read(outfile("verify.json")));
  EXPECT_EQ(j["welfare"].get<std::string>(), total);
  EXPECT_EQ(j["value"].get<std::string>(), total);
  EXPECT_EQ(j["dominance"]["violations"], 0);
  EXPECT_EQ(j["pareto"]["violations"], 0);
  EXPECT_NE(read(outfile("verify.txt")).find("result PASS"), std::string::npos);
}

TEST_F(Cli, VerifyIsDeterministicUnderSeed) {
  auto sc = scenario({{"distribution", {{"values", values_1_to(12)}}},
                      {"agents", {{{"distortion", "gd"}}, {{"distortion", "mmd"}}}}});
  ASSERT_EQ(run({"verify", "--scenario", sc, "--out", out(), "--seed", "9", "--trials", "300"}), 0);
  auto first = read(outfile("verify.json"));
  ASSERT_EQ(run({"verify", "--scenario", sc, "--out", out(), "--seed", "9", "--trials", "300"}), 0);
  EXPECT_EQ(read(outfile("verify.json")), first);
}

TEST_F(Cli, ImproveProducesComonotonicAllocation) {
  auto in = write("alloc.csv", "state,X,a,b\n0,2,2,0\n1,2,0,2\n2,4,1,3\n");
  ASSERT_EQ(run({"improve", "--allocation", in, "--out", out(), "--exact"}), 0) << err_;
  std::istringstream is(read(outfile("improved.csv")));
  auto got = read_allocation_csv<Q>(is);
  EXPECT_TRUE(is_comonotonic(got.allocation));
  EXPECT_EQ(got.names, (std::vector<std::string>{"a", "b"}));
  EXPECT_NE(out_.find("comonotonic yes"), std::string::npos);
}

TEST_F(Cli, PlotEmitsGTransformCurve) {
  // GD weight 1, MMD weight 2, IQD(1/8) weight 1/4: GD governs the whole middle.
  auto sc = scenario({{"exact", true},
                      {"distribution", {{"values", values_1_to(16)}}},
                      {"mode", "mixed"},
                      {"agents",
                       {{{"distortion", "gd"}}, {{"distortion", "mmd"}, {"weight", 2}},
                        {{"distortion", "iqd:1/8"}, {"weight", "1/4"}}}}});
  ASSERT_EQ(run({"plot", "--scenario", sc, "--out", out(), "--points", "81"}), 0) << err_;
  auto rows = csv(outfile("distortions.csv"));
  ASSERT_EQ(rows.size(), 82u);
  ASSERT_EQ(rows[0].back(), "representative");
  const Q a = frac<Q>(1, 8);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    Q t = parse_scalar<Q>(rows[r][0]);
    Q want = t > a && t < 1 - a ? std::min((t - a) * (1 + a - t), (t + a) * (1 - a - t)) : Q(0);
    ASSERT_EQ(parse_scalar<Q>(rows[r].back()), want) << "t=" << rows[r][0];
  }
  EXPECT_EQ(csv(outfile("parts.csv")).size(), 17u);
}

TEST_F(Cli, GapCommand) {
  auto sc = scenario({{"exact", true},
                      {"distribution", {{"values", values_1_to(8)}}},
                      {"agents", {{{"distortion", "iqd:1/8"}}, {{"distortion", "iqd:1/8"}}}}});
  ASSERT_EQ(run({"gap", "--scenario", sc, "--out", out()}), 0);
  EXPECT_EQ(csv(outfile("gap.csv"))[1], (std::vector<std::string>{"5", "3", "2"}));
  auto not_iqd = scenario({{"distribution", {{"values", {1, 2}}}}, {"agents", {{{"distortion", "gd"}}}}});
  EXPECT_EQ(run({"gap", "--scenario", not_iqd, "--out", out()}), 3);
}

TEST_F(Cli, ExitCodesMirrorErrors) {
  EXPECT_EQ(run({"frobnicate"}), 1);
  EXPECT_EQ(run({"eval", "--tie-rule", "sideways"}), 1);
  auto grid = scenario({{"distribution", {{"values", values_1_to(8)}}},
                        {"mode", "unconstrained"},
                        {"agents", {{{"distortion", "iqd:0.1"}}, {{"distortion", "iqd:0.1"}}}}});
  EXPECT_EQ(run({"allocate", "--scenario", grid, "--out", out()}), 4);
  auto err = json::parse(err_.substr(err_.find('{')));
  EXPECT_EQ(err["error"], "GridIncompatible");
  EXPECT_EQ(err["suggested_N"], 40);
  auto convex = scenario({{"distribution", {{"values", {1, 2, 3, 4}}}},
                          {"mode", "unconstrained"},
                          {"agents",
                           {{{"distortion", {{"breakpoints", {0, 1}}, {"segments", {{0, 0, 1}}}, {"values", {0, 1}}}}},
                            {{"distortion", "mean"}}}}});
  EXPECT_EQ(run({"infconv", "--scenario", convex, "--out", out()}), 3);
  auto belief = scenario({{"distribution", {{"values", {1, 2}}}},
                          {"mode", "unconstrained"},
                          {"agents", {{{"distortion", "gd"}, {"belief", {0.5, 0.5}}}, {{"distortion", "mmd"}}}}});
  EXPECT_EQ(run({"allocate", "--scenario", belief, "--out", out()}), 3);
  auto unbounded = scenario({{"distribution", {{"values", {1, 2}}}},
                             {"agents", {{{"distortion", "mean"}}, {{"distortion", "gd"}}}}});
  EXPECT_EQ(run({"infconv", "--scenario", unbounded, "--out", out()}), 2);
  EXPECT_EQ(json::parse(err_)["error"], "UnboundedProblem");
  EXPECT_EQ(run({"eval", "--scenario", (dir_ / "missing.json").string()}), 2);
}

TEST_F(Cli, HeterogeneousBeliefsFromCsv) {
  write("dist.csv", "x,p,anne,bob\n3,1/4,0.1,0.4\n2,1/4,0.2,0.3\n1,1/4,0.3,0.2\n0,1/4,0.4,0.1\n");
  auto sc = scenario({{"exact", true},
                      {"distribution", {{"csv", "dist.csv"}}},
                      {"agents",
                       {{{"name", "anne"}, {"distortion", "gd"}, {"belief", "anne"}},
                        {{"name", "bob"}, {"distortion", "mmd"}, {"belief", "bob"}}}}});
  ASSERT_EQ(run({"eval", "--scenario", sc, "--out", out()}), 0) << err_;
  auto rows = csv(outfile("eval.csv"));
  std::vector<Q> x{Q(3), Q(2), Q(1), Q(0)};
  EXPECT_EQ(parse_scalar<Q>(rows[1][1]),
            choquet_weighted(make_gd<Q>(), x, {frac<Q>(1, 10), frac<Q>(1, 5), frac<Q>(3, 10), frac<Q>(2, 5)}));
  ASSERT_EQ(run({"allocate", "--scenario", sc, "--out", out()}), 0) << err_;
  EXPECT_EQ(csv(outfile("allocation.csv")).size(), 5u);
}
