#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riskshare/riskshare.hpp"

namespace riskshare::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int { Ok = 0, Usage = 1, ValidationFailure = 2, UnsupportedRegime = 3, GridIncompatibility = 4 };

struct Options {
  std::string command;
  std::string scenario;
  std::string out = ".";
  std::string allocation;
  std::string mode;
  std::string tie_rule;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<double> tol;
  std::size_t points = 1001;
  bool exact = false;
};

template <Scalar S>
struct Scenario {
  DiscreteRv<S> x;
  std::vector<AgentSpec<S>> agents;
  std::string mode = "comonotonic";
  TieRule tie = TieRule::EqualSplit;
  std::optional<S> c;
  std::optional<std::vector<S>> cs, as;
  std::uint64_t seed = 1;
  std::size_t trials = 1000;
  double tol = 1e-9;

  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& a : agents) n.push_back(a.name);
    return n;
  }
};

inline TieRule parse_tie_rule(const std::string& s) {
  if (s == "equal") return TieRule::EqualSplit;
  if (s == "min") return TieRule::MinIndex;
  if (s == "max") return TieRule::MaxIndex;
  throw Error(ErrorCode::InvalidInput, "tie rule must be equal, min or max");
}

inline std::string check_mode(const std::string& m) {
  if (m != "comonotonic" && m != "unconstrained" && m != "mixed")
    throw Error(ErrorCode::InvalidInput, "mode must be comonotonic, unconstrained or mixed");
  return m;
}

template <Scalar S>
std::vector<S> scalar_list(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::InvalidInput, "expected an array, got " + j.dump());
  std::vector<S> v;
  for (const auto& e : j) v.push_back(json_scalar<S>(e));
  return v;
}

template <Scalar S>
Distribution<S> load_distribution(const json& d, const fs::path& base) {
  if (d.contains("values")) return {DiscreteRv<S>(scalar_list<S>(d.at("values"))), {}};
  if (d.contains("csv")) {
    fs::path p = d.at("csv").get<std::string>();
    if (p.is_relative()) p = base / p;
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + p.string());
    return read_distribution_csv<S>(in);
  }
  if (d.contains("uniform")) {
    const auto& u = d.at("uniform");
    auto n = u.at("n").get<std::int64_t>();
    if (n <= 0) throw Error(ErrorCode::InvalidInput, "uniform grid needs n >= 1");
    S lo = u.contains("lo") ? json_scalar<S>(u.at("lo")) : S(0);
    S hi = u.contains("hi") ? json_scalar<S>(u.at("hi")) : S(1);
    std::vector<S> v;
    for (std::int64_t k = 0; k < n; ++k) v.push_back(lo + (hi - lo) * ratio<S>(2 * k + 1, 2 * n));
    return {DiscreteRv<S>(std::move(v)), {}};
  }
  throw Error(ErrorCode::InvalidInput, "distribution needs values, csv or uniform");
}

template <Scalar S>
Scenario<S> load_scenario(const json& j, const fs::path& base, const Options& opt) {
  Scenario<S> sc;
  auto dist = load_distribution<S>(j.at("distribution"), base);
  sc.x = dist.x;
  std::size_t k = 0;
  for (const auto& a : j.at("agents")) {
    AgentSpec<S> spec{a.value("name", "agent" + std::to_string(++k)), distortion_from_json<S>(a.at("distortion")),
                      a.contains("weight") ? json_scalar<S>(a.at("weight")) : S(1), std::nullopt};
    if (a.contains("belief")) {
      const auto& b = a.at("belief");
      if (b.is_string()) {
        auto it = dist.beliefs.find(b.get<std::string>());
        if (it == dist.beliefs.end()) throw Error(ErrorCode::InvalidInput, "unknown belief column " + b.dump());
        spec.belief = it->second;
      } else {
        spec.belief = BeliefMeasure<S>(scalar_list<S>(b));
      }
      if (spec.belief->size() != sc.x.size()) throw Error(ErrorCode::InvalidInput, "belief length differs from X");
    }
    sc.agents.push_back(std::move(spec));
  }
  if (sc.agents.empty()) throw Error(ErrorCode::InvalidInput, "scenario has no agents");
  sc.mode = check_mode(opt.mode.empty() ? j.value("mode", std::string("comonotonic")) : opt.mode);
  const json o = j.value("options", json::object());
  sc.tie = parse_tie_rule(opt.tie_rule.empty() ? o.value("tie_rule", std::string("equal")) : opt.tie_rule);
  if (o.contains("c")) sc.c = json_scalar<S>(o.at("c"));
  if (o.contains("c_i")) sc.cs = scalar_list<S>(o.at("c_i"));
  if (o.contains("a_i")) sc.as = scalar_list<S>(o.at("a_i"));
  sc.seed = opt.seed.value_or(o.value("seed", std::uint64_t{1}));
  sc.trials = opt.trials.value_or(o.value("trials", std::size_t{1000}));
  sc.tol = opt.tol.value_or(o.value("tol", 1e-9));
  return sc;
}

inline std::ofstream open_out(const Options& opt, const std::string& file) {
  fs::create_directories(opt.out);
  std::ofstream f(fs::path(opt.out) / file);
  if (!f) throw Error(ErrorCode::InvalidInput, "cannot write " + (fs::path(opt.out) / file).string());
  return f;
}

template <Scalar S>
bool has_beliefs(const Scenario<S>& sc) {
  for (const auto& a : sc.agents)
    if (a.belief) return true;
  return false;
}

template <Scalar S>
bool unconstrained(const Scenario<S>& sc) {
  return sc.mode != "comonotonic";
}

template <Scalar S>
InfconvResult<S> solve_infconv(const Scenario<S>& sc) {
  if (!unconstrained(sc)) return infconv_comonotonic(sc.agents);
  if (has_beliefs(sc)) throw Error(ErrorCode::Unsupported, "beliefs are supported in comonotonic mode only");
  return infconv_mixed(sc.agents);
}

template <Scalar S>
struct Solved {
  Allocation<S> allocation;
  std::optional<TailAssignment<S>> tails;
  std::optional<TransferFunctions<S>> transfer;
};

// Comonotonic mode under heterogeneous beliefs moves every agent to the
// averaged measure through its transformed distortion.
template <Scalar S>
Solved<S> solve_allocation(const Scenario<S>& sc) {
  if (unconstrained(sc)) {
    if (has_beliefs(sc)) throw Error(ErrorCode::Unsupported, "beliefs are supported in comonotonic mode only");
    auto r = mixed_allocation(sc.x, sc.agents, sc.tie, MixedOptions<S>{sc.c, sc.cs});
    bool any_tail = !r.tails.a.empty();
    if (sc.as) {
      std::vector<S> alphas, lambdas;
      for (const auto& a : sc.agents) {
        auto lvl = iqd_level(a.distortion);
        if (!lvl) throw Error(ErrorCode::InvalidInput, "a_i applies only when every agent is IQD");
        alphas.push_back(*lvl);
        lambdas.push_back(a.weight);
      }
      auto t = iqd_allocation(sc.x, alphas, lambdas, IqdOptions<S>{sc.c, sc.cs, sc.as});
      return {t.allocation, t.tails, std::nullopt};
    }
    return {r.allocation, any_tail ? std::optional<TailAssignment<S>>(r.tails) : std::nullopt, std::nullopt};
  }
  if (!has_beliefs(sc)) {
    auto r = comonotonic_allocation(sc.x, sc.agents, sc.tie);
    return {r.allocation, std::nullopt, r.transfer};
  }
  std::vector<BeliefMeasure<S>> beliefs;
  for (const auto& a : sc.agents) beliefs.push_back(a.belief.value_or(BeliefMeasure<S>::uniform(sc.x.size())));
  auto common = common_measure(beliefs);
  std::vector<AgentSpec<S>> moved;
  for (std::size_t i = 0; i < sc.agents.size(); ++i)
    moved.push_back({sc.agents[i].name, transform_distortion(sc.agents[i].distortion, beliefs[i], common, sc.x),
                     sc.agents[i].weight, std::nullopt});
  auto r = comonotonic_allocation(sc.x, moved, sc.tie, &common);
  return {r.allocation, std::nullopt, r.transfer};
}

template <Scalar S>
void write_welfare(std::ostream& os, const std::vector<AgentSpec<S>>& agents, const WelfareResult<S>& w) {
  os << "agent,weight,value\n";
  for (std::size_t i = 0; i < agents.size(); ++i)
    os << agents[i].name << "," << to_string(agents[i].weight) << "," << to_string(w.per_agent[i]) << "\n";
  os << "total,," << to_string(w.weighted_sum) << "\n";
}

// Unequal positive (or negative) levels at 1 are rescaled to |h(1)| = 1.
template <Scalar S>
void normalize_if_needed(Scenario<S>& sc) {
  auto rep = validate_scenario(sc.agents);
  if (rep.mixed_sign) throw Error(ErrorCode::HypothesisUnmet, rep.messages.front());
  if (!rep.unequal_at_one) return;
  std::cerr << "note: rescaling agents to |h(1)| = 1 with unit weights\n";
  for (auto& a : sc.agents) {
    a.distortion = normalize(a.distortion);
    a.weight = S(1);
  }
}

template <Scalar S>
int cmd_eval(const Scenario<S>& sc, const Options& opt) {
  auto f = open_out(opt, "eval.csv");
  f << "agent,value\n";
  std::cout << "agent,value\n";
  for (const auto& a : sc.agents) {
    S v = a.belief ? choquet_under(a.distortion, sc.x.values(), *a.belief) : choquet(a.distortion, sc.x);
    f << a.name << "," << to_string(v) << "\n";
    std::cout << a.name << "," << to_string(v) << "\n";
  }
  return Ok;
}

template <Scalar S>
int cmd_validate(const Scenario<S>& sc, const Options& opt) {
  auto rep = validate_scenario(sc.agents);
  json j;
  j["passed"] = rep.passed();
  j["mixed_sign"] = rep.mixed_sign;
  j["unequal_at_one"] = rep.unequal_at_one;
  j["normalization_suggested"] = rep.normalization_suggested;
  j["weighted_at_one"] = json::array();
  for (const S& v : rep.weighted_at_one) j["weighted_at_one"].push_back(to_string(v));
  j["messages"] = rep.messages;
  if (rep.passed() && unconstrained(sc)) {
    // Grid integrality of the tail blocks, reported before any solve.
    std::vector<S> alphas;
    for (const auto& r : classify_roles(sc.agents)) alphas.push_back(r.kind == RoleKind::Iqd ? r.alpha : S(0));
    S beta;
    detail::tail_sizes(sc.x.size(), alphas, beta);
  }
  open_out(opt, "validate.json") << j.dump(2) << "\n";
  std::cout << j.dump(2) << "\n";
  return rep.passed() ? Ok : ValidationFailure;
}

template <Scalar S>
int cmd_infconv(const Scenario<S>& sc, const Options& opt) {
  auto r = solve_infconv(sc);
  S v = r.value_at(sc.x);
  open_out(opt, "representative.txt") << write_distortion(r.representative);
  open_out(opt, "infconv.csv") << "regime,value\n" << regime_name(r.regime) << "," << to_string(v) << "\n";
  std::cout << "regime " << regime_name(r.regime) << "\nvalue " << to_string(v) << "\n";
  return Ok;
}

template <Scalar S>
int cmd_allocate(Scenario<S> sc, const Options& opt) {
  normalize_if_needed(sc);
  auto solved = solve_allocation(sc);
  std::vector<Region> regions;
  if (solved.tails) regions = solved.tails->regions(sc.x.size());
  auto f = open_out(opt, "allocation.csv");
  write_allocation_csv(f, solved.allocation, sc.names(), solved.tails ? &regions : nullptr);
  if (solved.transfer) {
    auto t = open_out(opt, "transfer.csv");
    t << "x";
    for (const auto& n : sc.names()) t << "," << n;
    t << "\n";
    for (std::size_t k = 0; k < solved.transfer->knots.size(); ++k) {
      t << to_string(solved.transfer->knots[k]);
      for (std::size_t i = 0; i < sc.agents.size(); ++i) t << "," << to_string(solved.transfer->values[i][k]);
      t << "\n";
    }
  }
  auto w = welfare(solved.allocation, sc.agents);
  auto wf = open_out(opt, "welfare.csv");
  write_welfare(wf, sc.agents, w);
  write_welfare(std::cout, sc.agents, w);
  return Ok;
}

template <Scalar S>
NamedAllocation<S> load_allocation(const Options& opt) {
  if (opt.allocation.empty()) throw Error(ErrorCode::InvalidInput, "--allocation is required");
  std::ifstream in(opt.allocation);
  if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + opt.allocation);
  return read_allocation_csv<S>(in);
}

template <Scalar S>
int cmd_improve(const std::optional<Scenario<S>>& sc, const Options& opt) {
  auto in = load_allocation<S>(opt);
  auto out = comonotonic_improvement(in.allocation);
  auto f = open_out(opt, "improved.csv");
  write_allocation_csv(f, out, in.names);
  std::cout << "comonotonic " << (is_comonotonic(out) ? "yes" : "no") << "\n";
  if (sc) {
    std::cout << "before\n";
    write_welfare(std::cout, sc->agents, welfare(in.allocation, sc->agents));
    std::cout << "after\n";
    write_welfare(std::cout, sc->agents, welfare(out, sc->agents));
  }
  return Ok;
}

template <Scalar S>
int cmd_verify(const Scenario<S>& sc, const Options& opt) {
  auto closed = solve_infconv(sc);
  auto rep = dominance_check(sc.x, sc.agents, closed, sc.trials, sc.seed, sc.tol);
  json j;
  j["dominance"] = rep.to_json();
  j["value"] = to_string(closed.value_at(sc.x));
  std::string text = "[dominance]\n" + rep.to_text();
  bool ok = rep.passed();
  for (std::size_t k = 0; k < rep.witnesses.size(); ++k) {
    auto f = open_out(opt, "witness_" + std::to_string(k) + ".csv");
    write_allocation_csv(f, rep.witnesses[k], sc.names());
  }
  if (!opt.allocation.empty()) {
    auto given = load_allocation<S>(opt);
    auto w = welfare(given.allocation, sc.agents);
    std::ostringstream ws;
    write_welfare(ws, sc.agents, w);
    text += "[welfare]\n" + ws.str();
    j["welfare"] = to_string(w.weighted_sum);
    std::vector<Allocation<S>> cands;
    for (auto mode : modes_for(closed.regime))
      for (auto& a : sample_allocations(given.allocation.total(), sc.agents.size(), mode, sc.trials, sc.seed))
        cands.push_back(std::move(a));
    auto par = pareto_check(given.allocation, sc.agents, cands, sc.tol);
    text += "[pareto]\n" + par.to_text();
    j["pareto"] = par.to_json();
    ok = ok && par.passed();
  }
  open_out(opt, "verify.txt") << text;
  open_out(opt, "verify.json") << j.dump(2) << "\n";
  std::cout << text;
  return ok ? Ok : ValidationFailure;
}

template <Scalar S>
int cmd_plot(const Scenario<S>& sc, const Options& opt) {
  if (opt.points < 2) throw Error(ErrorCode::InvalidInput, "need at least 2 plot points");
  std::vector<DistortionFunction<S>> curves;
  std::vector<std::string> header;
  for (const auto& a : sc.agents) {
    curves.push_back(scale(a.distortion, a.weight));
    header.push_back(a.name);
  }
  std::optional<InfconvResult<S>> rep;
  try {
    rep = solve_infconv(sc);
  } catch (const Error& e) {
    std::cerr << "note: no representative curve (" << e.what() << ")\n";
  }
  if (rep) {
    curves.push_back(rep->representative);
    header.push_back(rep->regime == Regime::ComonotonicEnvelope ? "envelope" : "representative");
  }
  auto f = open_out(opt, "distortions.csv");
  f << "t";
  for (const auto& h : header) f << "," << h;
  f << "\n";
  const auto last = static_cast<std::int64_t>(opt.points - 1);
  for (std::int64_t k = 0; k <= last; ++k) {
    S t = ratio<S>(k, last);
    f << to_string(t);
    for (const auto& c : curves) f << "," << to_string(c(t));
    f << "\n";
  }
  // Parts against X: the transfer functions of the solved allocation.
  try {
    auto solved = solve_allocation(sc);
    auto p = open_out(opt, "parts.csv");
    p << "x";
    for (const auto& n : sc.names()) p << "," << n;
    p << "\n";
    const auto& a = solved.allocation;
    for (auto it = a.total().order_desc().rbegin(); it != a.total().order_desc().rend(); ++it) {
      p << to_string(a.total()[*it]);
      for (std::size_t i = 0; i < a.agents(); ++i) p << "," << to_string(a.part_values(i)[*it]);
      p << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "note: no allocation curve (" << e.what() << ")\n";
  }
  std::cout << "wrote " << (fs::path(opt.out) / "distortions.csv").string() << "\n";
  return Ok;
}

template <Scalar S>
int cmd_gap(const Scenario<S>& sc, const Options& opt) {
  std::vector<S> alphas, lambdas;
  for (const auto& a : sc.agents) {
    auto lvl = iqd_level(a.distortion);
    if (!lvl) throw Error(ErrorCode::Unsupported, "gap needs IQD agents only; '" + a.name + "' is not IQD");
    alphas.push_back(*lvl);
    lambdas.push_back(a.weight);
  }
  S gap = welfare_gap(sc.x, alphas, lambdas);
  S uncon = infconv_iqd(alphas, lambdas).value_at(sc.x);
  open_out(opt, "gap.csv") << "comonotonic,unconstrained,gap\n"
                           << to_string(S(uncon + gap)) << "," << to_string(uncon) << "," << to_string(gap) << "\n";
  std::cout << "gap " << to_string(gap) << "\n";
  return Ok;
}

template <Scalar S>
int dispatch(const Options& opt, const std::optional<json>& scenario_json, const fs::path& base) {
  std::optional<Scenario<S>> sc;
  if (scenario_json) sc = load_scenario<S>(*scenario_json, base, opt);
  if (opt.command == "improve") return cmd_improve(sc, opt);
  if (!sc) throw Error(ErrorCode::InvalidInput, "--scenario is required for " + opt.command);
  if (opt.command == "eval") return cmd_eval(*sc, opt);
  if (opt.command == "validate") return cmd_validate(*sc, opt);
  if (opt.command == "infconv") return cmd_infconv(*sc, opt);
  if (opt.command == "allocate") return cmd_allocate(*sc, opt);
  if (opt.command == "verify") return cmd_verify(*sc, opt);
  if (opt.command == "plot") return cmd_plot(*sc, opt);
  if (opt.command == "gap") return cmd_gap(*sc, opt);
  throw Error(ErrorCode::InvalidInput, "unknown command " + opt.command);
}

inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::Unsupported: return UnsupportedRegime;
    case ErrorCode::GridIncompatible: return GridIncompatibility;
    default: return ValidationFailure;
  }
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"Risk sharing with distortion riskmetrics"};
  app.require_subcommand(1, 1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"eval", "Riskmetric value per agent"},
      {"validate", "Check h(1) signs and levels"},
      {"infconv", "Representative distortion and inf-convolution value"},
      {"allocate", "Optimal allocation and welfare"},
      {"improve", "Comonotonic improvement of an allocation"},
      {"verify", "Randomized dominance and Pareto checks"},
      {"plot", "Curve data as CSV"},
      {"gap", "Comonotonic minus unconstrained IQD optimum"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--scenario", opt.scenario, "Scenario JSON file");
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--allocation", opt.allocation, "Allocation CSV");
    sub->add_option("--seed", opt.seed, "Random seed");
    sub->add_option("--trials", opt.trials, "Samples per mode");
    sub->add_option("--tol", opt.tol, "Tolerance");
    sub->add_option("--tie-rule", opt.tie_rule, "equal, min or max")
        ->check(CLI::IsMember({"equal", "min", "max"}));
    sub->add_option("--mode", opt.mode, "comonotonic, unconstrained or mixed")
        ->check(CLI::IsMember({"comonotonic", "unconstrained", "mixed"}));
    sub->add_option("--points", opt.points, "Plot grid size");
    sub->add_flag("--exact", opt.exact, "Rational arithmetic");
    sub->final_callback([&opt, name = name] { opt.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? Ok : Usage;
  }
  try {
    std::optional<json> scenario_json;
    fs::path base = ".";
    if (!opt.scenario.empty()) {
      std::ifstream in(opt.scenario);
      if (!in) throw Error(ErrorCode::InvalidInput, "cannot open " + opt.scenario);
      try {
        scenario_json = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidInput, std::string("scenario JSON: ") + e.what());
      }
      base = fs::path(opt.scenario).parent_path();
      opt.exact = opt.exact || scenario_json->value("exact", false);
    }
    return opt.exact ? dispatch<Rational>(opt, scenario_json, base) : dispatch<double>(opt, scenario_json, base);
  } catch (const Error& e) {
    json j{{"error", std::string(to_string(e.code()))}, {"message", e.what()}};
    if (e.suggested_grid()) j["suggested_N"] = *e.suggested_grid();
    std::cerr << j.dump() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    std::cerr << json{{"error", "InvalidInput"}, {"message", e.what()}}.dump() << "\n";
    return ValidationFailure;
  }
}

}  // namespace riskshare::cli
