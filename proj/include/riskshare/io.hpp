#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskshare/allocation.hpp"
#include "riskshare/beliefs.hpp"
#include "riskshare/distortion.hpp"
#include "riskshare/error.hpp"
#include "riskshare/riskmetric.hpp"

namespace riskshare {

// ---- distortion records -----------------------------------------------------
//
//   riskshare-distortion 1
//   node <t> <h(t)>
//   segment <c0> <c1> <c2>      h = c0 + c1 t + c2 t^2 until the next node
//   node ...

inline constexpr std::string_view distortion_header = "riskshare-distortion 1";

template <Scalar S>
std::string write_distortion(const DistortionFunction<S>& h) {
  std::ostringstream os;
  os << distortion_header << "\n";
  const auto& bps = h.breakpoints();
  for (std::size_t k = 0; k < bps.size(); ++k) {
    os << "node " << to_string(bps[k]) << " " << to_string(h.point_values()[k]) << "\n";
    if (k + 1 < bps.size()) {
      const auto& q = h.segments()[k];
      os << "segment " << to_string(q.c0) << " " << to_string(q.c1) << " " << to_string(q.c2) << "\n";
    }
  }
  return os.str();
}

template <Scalar S>
DistortionFunction<S> read_distortion(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != distortion_header)
    throw Error(ErrorCode::InvalidInput, "missing '" + std::string(distortion_header) + "' header");
  std::vector<S> bps, pvs;
  std::vector<Quadratic<S>> segs;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    std::vector<std::string> f;
    for (std::string w; ls >> w;) f.push_back(w);
    if (kind == "node" && f.size() == 2) {
      bps.push_back(parse_scalar<S>(f[0]));
      pvs.push_back(parse_scalar<S>(f[1]));
    } else if (kind == "segment" && f.size() == 3) {
      segs.push_back({parse_scalar<S>(f[0]), parse_scalar<S>(f[1]), parse_scalar<S>(f[2])});
    } else {
      throw Error(ErrorCode::InvalidInput, "bad distortion record line: " + line);
    }
  }
  if (bps.size() < 2 || segs.size() + 1 != bps.size())
    throw Error(ErrorCode::InvalidInput, "distortion record needs alternating nodes and segments");
  return DistortionFunction<S>(std::move(bps), std::move(segs), std::move(pvs));
}

// ---- named distortion specs ---------------------------------------------------

template <Scalar S>
DistortionFunction<S> parse_distortion_spec(std::string_view spec) {
  std::string_view s = detail::trim(spec);
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::InvalidInput, "distortion spec '" + std::string(s) + "': " + why);
  };
  // "<key>=<number>:" prefix after the head.
  auto keyed = [&](std::string_view rest, std::string_view key) -> std::pair<S, std::string_view> {
    auto colon = rest.find(':');
    if (rest.substr(0, key.size() + 1) != std::string(key) + "=" || colon == std::string_view::npos)
      throw bad("expected " + std::string(key) + "=<value>:");
    return {parse_scalar<S>(rest.substr(key.size() + 1, colon - key.size() - 1)), rest.substr(colon + 1)};
  };
  if (s == "gd") return make_gd<S>();
  if (s == "mmd") return make_mmd<S>();
  if (s == "mean") return make_mean<S>();
  if (s == "range") return make_range<S>();
  if (s == "zero") return make_zero<S>();
  if (s.starts_with("iqd:")) return make_iqd(parse_scalar<S>(s.substr(4)));
  if (s.starts_with("mix:")) {
    auto [a, rest] = keyed(s.substr(4), "a");
    auto plus = rest.find('+');
    if (plus == std::string_view::npos) throw bad("expected <spec>+<spec>");
    return make_mixture(a, parse_distortion_spec<S>(rest.substr(0, plus)),
                        parse_distortion_spec<S>(rest.substr(plus + 1)));
  }
  if (s.starts_with("meanplus:")) {
    auto [g, rest] = keyed(s.substr(9), "g");
    return make_mean_plus(g, parse_distortion_spec<S>(rest));
  }
  if (s.starts_with("scale:")) {
    auto [l, rest] = keyed(s.substr(6), "l");
    return scale(parse_distortion_spec<S>(rest), l);
  }
  throw bad("unknown name");
}

// JSON scalars may be numbers or strings ("1/3").
template <Scalar S>
S json_scalar(const nlohmann::json& j) {
  if (j.is_string()) return parse_scalar<S>(j.get<std::string>());
  if (j.is_number_integer()) return S(j.get<std::int64_t>());
  if (j.is_number()) return parse_scalar<S>(j.dump());
  throw Error(ErrorCode::InvalidInput, "expected a number, got " + j.dump());
}

// Either a named spec string or
//   {"breakpoints": [...], "segments": [[c0,c1,c2], ...], "values": [...]}
template <Scalar S>
DistortionFunction<S> distortion_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_distortion_spec<S>(j.get<std::string>());
  if (!j.is_object() || !j.contains("breakpoints") || !j.contains("segments") || !j.contains("values"))
    throw Error(ErrorCode::InvalidInput, "raw distortion needs breakpoints, segments and values");
  std::vector<S> bps, pvs;
  std::vector<Quadratic<S>> segs;
  for (const auto& v : j.at("breakpoints")) bps.push_back(json_scalar<S>(v));
  for (const auto& v : j.at("values")) pvs.push_back(json_scalar<S>(v));
  for (const auto& c : j.at("segments")) {
    if (!c.is_array() || c.size() != 3) throw Error(ErrorCode::InvalidInput, "segments are [c0, c1, c2]");
    segs.push_back({json_scalar<S>(c[0]), json_scalar<S>(c[1]), json_scalar<S>(c[2])});
  }
  return DistortionFunction<S>(std::move(bps), std::move(segs), std::move(pvs));
}

template <Scalar S>
nlohmann::json distortion_to_json(const DistortionFunction<S>& h) {
  nlohmann::json j;
  j["breakpoints"] = nlohmann::json::array();
  j["values"] = nlohmann::json::array();
  j["segments"] = nlohmann::json::array();
  for (const S& t : h.breakpoints()) j["breakpoints"].push_back(to_string(t));
  for (const S& v : h.point_values()) j["values"].push_back(to_string(v));
  for (const auto& q : h.segments()) j["segments"].push_back({to_string(q.c0), to_string(q.c1), to_string(q.c2)});
  return j;
}

// ---- CSV -------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto comma = line.find(',', start);
    out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool looks_numeric(const std::string& f) {
  try {
    (void)parse_scalar<Rational>(f);
    return true;
  } catch (const Error&) {
    return false;
  }
}

inline std::vector<std::vector<std::string>> read_rows(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);) {
    if (trim(line).empty() || trim(line).front() == '#') continue;
    rows.push_back(split_csv(line));
  }
  return rows;
}

}  // namespace detail

template <Scalar S>
struct Distribution {
  DiscreteRv<S> x;
  std::map<std::string, BeliefMeasure<S>> beliefs;
};

// One state per row. Columns: value (first column, or "value"/"x"), an
// optional "prob"/"p" column, and any further columns as named beliefs.
// Probabilities are expanded to an equiprobable grid over their common
// denominator (at most 10^6).
template <Scalar S>
Distribution<S> read_distribution_csv(std::istream& in) {
  auto rows = detail::read_rows(in);
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "empty distribution file");
  std::vector<std::string> header;
  if (!detail::looks_numeric(rows.front().front())) {
    header = rows.front();
    rows.erase(rows.begin());
  }
  if (rows.empty()) throw Error(ErrorCode::InvalidInput, "distribution file has no data rows");
  const std::size_t cols = rows.front().size();
  std::size_t value_col = 0;
  std::optional<std::size_t> prob_col;
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == "value" || header[c] == "x" || header[c] == "X") value_col = c;
      if (header[c] == "prob" || header[c] == "p") prob_col = c;
    }
  } else if (cols == 2) {
    prob_col = 1;
  } else if (cols > 2) {
    throw Error(ErrorCode::InvalidInput, "belief columns need a header row");
  }
  std::vector<std::string> belief_names;
  std::vector<std::size_t> belief_cols;
  for (std::size_t c = 0; c < cols; ++c) {
    if (c == value_col || (prob_col && c == *prob_col)) continue;
    belief_names.push_back(header[c]);
    belief_cols.push_back(c);
  }
  std::vector<Rational> probs;
  std::vector<S> values;
  std::vector<std::vector<S>> belief_raw(belief_cols.size());
  for (const auto& r : rows) {
    if (r.size() != cols) throw Error(ErrorCode::InvalidInput, "ragged distribution row");
    values.push_back(parse_scalar<S>(r[value_col]));
    if (prob_col) probs.push_back(parse_scalar<Rational>(r[*prob_col]));
    for (std::size_t b = 0; b < belief_cols.size(); ++b) belief_raw[b].push_back(parse_scalar<S>(r[belief_cols[b]]));
  }
  std::vector<std::int64_t> copies(values.size(), 1);
  if (prob_col) {
    Rational total = 0;
    BigInt den = 1;
    for (const auto& p : probs) {
      if (p < 0) throw Error(ErrorCode::InvalidInput, "negative probability");
      total += p;
      den = den / boost::multiprecision::gcd(den, denominator(p)) * denominator(p);
      if (den > 1000000) throw Error(ErrorCode::InvalidInput, "probabilities need a common denominator above 10^6");
    }
    if (total != 1) throw Error(ErrorCode::InvalidInput, "probabilities sum to " + total.str());
    for (std::size_t s = 0; s < probs.size(); ++s)
      copies[s] = Rational(probs[s] * Rational(den)).convert_to<std::int64_t>();
  }
  std::vector<S> grid;
  std::vector<std::vector<S>> beliefs(belief_cols.size());
  for (std::size_t s = 0; s < values.size(); ++s) {
    for (std::int64_t k = 0; k < copies[s]; ++k) {
      grid.push_back(values[s]);
      for (std::size_t b = 0; b < belief_cols.size(); ++b) beliefs[b].push_back(belief_raw[b][s] / S(copies[s]));
    }
  }
  Distribution<S> d{DiscreteRv<S>(std::move(grid)), {}};
  for (std::size_t b = 0; b < belief_cols.size(); ++b)
    d.beliefs.emplace(belief_names[b], BeliefMeasure<S>(std::move(beliefs[b])));
  return d;
}

// Header: state,X,<agent names...>,region. Rows by decreasing X.
template <Scalar S>
void write_allocation_csv(std::ostream& out, const Allocation<S>& a, const std::vector<std::string>& names,
                          const std::vector<Region>* regions = nullptr) {
  if (names.size() != a.agents()) throw Error(ErrorCode::InvalidInput, "one name per agent required");
  out << "state,X";
  for (const auto& n : names) out << "," << n;
  out << ",region\n";
  for (std::size_t s : a.total().order_desc()) {
    out << s << "," << to_string(a.total()[s]);
    for (std::size_t i = 0; i < a.agents(); ++i) out << "," << to_string(a.part_values(i)[s]);
    out << "," << (regions ? region_name((*regions)[s]) : "middle") << "\n";
  }
}

template <Scalar S>
struct NamedAllocation {
  Allocation<S> allocation;
  std::vector<std::string> names;
};

template <Scalar S>
NamedAllocation<S> read_allocation_csv(std::istream& in) {
  auto rows = detail::read_rows(in);
  if (rows.size() < 2) throw Error(ErrorCode::InvalidInput, "allocation file needs a header and rows");
  const auto header = rows.front();
  if (header.size() < 3 || header[0] != "state" || header[1] != "X")
    throw Error(ErrorCode::InvalidInput, "allocation header must start with state,X");
  std::size_t agent_end = header.back() == "region" ? header.size() - 1 : header.size();
  std::vector<std::string> names(header.begin() + 2, header.begin() + static_cast<std::ptrdiff_t>(agent_end));
  const std::size_t n_states = rows.size() - 1;
  std::vector<S> x(n_states);
  std::vector<std::vector<S>> parts(names.size(), std::vector<S>(n_states));
  std::vector<bool> seen(n_states, false);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) throw Error(ErrorCode::InvalidInput, "ragged allocation row");
    auto s = static_cast<std::size_t>(parse_scalar<Rational>(rows[r][0]).convert_to<std::int64_t>());
    if (s >= n_states || seen[s]) throw Error(ErrorCode::InvalidInput, "state indices must be 0..N-1, each once");
    seen[s] = true;
    x[s] = parse_scalar<S>(rows[r][1]);
    for (std::size_t i = 0; i < names.size(); ++i) parts[i][s] = parse_scalar<S>(rows[r][2 + i]);
  }
  return {Allocation<S>(DiscreteRv<S>(std::move(x)), std::move(parts)), std::move(names)};
}

}  // namespace riskshare
