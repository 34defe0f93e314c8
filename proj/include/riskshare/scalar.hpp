#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

#include <boost/multiprecision/gmp.hpp>

#include "riskshare/error.hpp"

namespace riskshare {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;

// Every template in the library is instantiated for exactly these two
// types: double for fast paths, Rational where identities must hold exactly.
template <class S>
concept Scalar = std::same_as<S, double> || std::same_as<S, Rational>;

template <Scalar S>
constexpr bool is_exact_v = std::same_as<S, Rational>;

// Comparison slack. Rational arithmetic is exact except where an irrational
// crossing point had to be approximated (see sqrt_of), which is refined far
// below this threshold.
template <Scalar S>
inline S tolerance() {
  if constexpr (is_exact_v<S>) {
    static const Rational tol = Rational(1) / Rational(boost::multiprecision::pow(BigInt(10), 30));
    return tol;
  } else {
    return 1e-12;
  }
}

template <Scalar S>
inline S abs_of(const S& x) {
  return x < 0 ? S(-x) : x;
}

template <Scalar S>
inline bool near(const S& a, const S& b) {
  if (a == b) return true;
  S scale = std::max({S(1), abs_of(a), abs_of(b)});
  return abs_of(S(a - b)) <= tolerance<S>() * scale;
}

template <Scalar S>
inline S ratio(std::int64_t num, std::int64_t den) {
  if constexpr (is_exact_v<S>) {
    return Rational(num) / Rational(den);
  } else {
    return static_cast<double>(num) / static_cast<double>(den);
  }
}

template <Scalar S>
inline double to_double(const S& x) {
  if constexpr (is_exact_v<S>) {
    return x.template convert_to<double>();
  } else {
    return x;
  }
}

template <Scalar S>
inline S from_double(double x) {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidInput, "non-finite value");
  return S(x);
}

template <Scalar S>
inline S convert(const Rational& x) {
  if constexpr (is_exact_v<S>) {
    return x;
  } else {
    return x.convert_to<double>();
  }
}

inline BigInt floor_div(const BigInt& num, const BigInt& den) {
  BigInt q = num / den;
  if ((num % den != 0) && ((num < 0) != (den < 0))) q -= 1;
  return q;
}

template <Scalar S>
inline std::int64_t floor_to_int(const S& x) {
  if constexpr (is_exact_v<S>) {
    BigInt q = floor_div(numerator(x), denominator(x));
    return q.template convert_to<std::int64_t>();
  } else {
    return static_cast<std::int64_t>(std::floor(x));
  }
}

template <Scalar S>
inline std::int64_t ceil_to_int(const S& x) {
  return -floor_to_int<S>(S(-x));
}

// Integer test; doubles get a relative slack of 1e-9 because grid sizes are
// usually products of decimal inputs.
template <Scalar S>
inline bool as_integer(const S& x, std::int64_t& out) {
  if constexpr (is_exact_v<S>) {
    if (denominator(x) != 1) return false;
    out = numerator(x).template convert_to<std::int64_t>();
    return true;
  } else {
    double r = std::round(x);
    if (std::abs(x - r) > 1e-9 * std::max(1.0, std::abs(x))) return false;
    out = static_cast<std::int64_t>(r);
    return true;
  }
}

// Best rational approximation with bounded denominator (continued fractions).
inline Rational approximate_rational(double x, std::int64_t max_den) {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidInput, "non-finite value");
  BigInt p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    double a = std::floor(r);
    BigInt ai(static_cast<long long>(a));
    BigInt p2 = ai * p1 + p0;
    BigInt q2 = ai * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double frac = r - a;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return Rational(p1) / Rational(q1);
}

// Square root of a nonnegative scalar. For rationals the result is exact when
// numerator and denominator are perfect squares; otherwise Newton iteration
// from the double estimate, rounded onto a 2^-200 lattice.
template <Scalar S>
inline S sqrt_of(const S& x, bool* exact = nullptr) {
  if (x < 0) throw Error(ErrorCode::DomainError, "square root of a negative value");
  if constexpr (is_exact_v<S>) {
    BigInt n = numerator(x), d = denominator(x);
    BigInt sn = boost::multiprecision::sqrt(n), sd = boost::multiprecision::sqrt(d);
    if (sn * sn == n && sd * sd == d) {
      if (exact) *exact = true;
      return Rational(sn) / Rational(sd);
    }
    if (exact) *exact = false;
    Rational r(std::sqrt(x.template convert_to<double>()));
    if (r == 0) r = Rational(1, 1000000000);
    for (int i = 0; i < 3; ++i) r = (r + x / r) / 2;
    BigInt scale = BigInt(1) << 200;
    BigInt num = numerator(r) * scale;
    BigInt rounded = floor_div(num * 2 + denominator(r), denominator(r) * 2);
    return Rational(rounded) / Rational(scale);
  } else {
    if (exact) *exact = false;
    return std::sqrt(x);
  }
}

template <Scalar S>
inline std::string to_string(const S& x) {
  if constexpr (is_exact_v<S>) {
    return x.str();
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

// Decimal literal (optional sign, fraction, exponent) to an exact rational.
inline Rational parse_decimal(std::string_view s) {
  std::string_view orig = s;
  auto fail = [&] { return Error(ErrorCode::InvalidInput, "cannot parse number '" + std::string(orig) + "'"); };
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s.remove_prefix(1);
  }
  std::string digits;
  std::int64_t exp10 = 0;
  bool seen_digit = false, seen_point = false;
  std::size_t i = 0;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) --exp10;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw fail();
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw fail();
    std::string_view e = s.substr(i + 1);
    if (!e.empty() && e[0] == '+') e.remove_prefix(1);
    std::int64_t ev = 0;
    auto [ptr, ec] = std::from_chars(e.data(), e.data() + e.size(), ev);
    if (ec != std::errc() || ptr != e.data() + e.size() || e.empty()) throw fail();
    exp10 += ev;
  }
  if (exp10 > 4000 || exp10 < -4000) throw fail();
  // A leading zero would select octal in the string constructor.
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  BigInt mant(digits);
  BigInt p10 = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(exp10 < 0 ? -exp10 : exp10));
  Rational r = exp10 >= 0 ? Rational(mant * p10) : Rational(mant) / Rational(p10);
  return neg ? Rational(-r) : r;
}

}  // namespace detail

// Accepts decimals ("0.25", "-1e-3") and fractions ("1/3"). Decimal input is
// read exactly when S is Rational.
template <Scalar S>
inline S parse_scalar(std::string_view text) {
  std::string_view s = detail::trim(text);
  if (s.empty()) throw Error(ErrorCode::InvalidInput, "empty number");
  auto slash = s.find('/');
  Rational value;
  if (slash != std::string_view::npos) {
    Rational num = detail::parse_decimal(detail::trim(s.substr(0, slash)));
    Rational den = detail::parse_decimal(detail::trim(s.substr(slash + 1)));
    if (den == 0) throw Error(ErrorCode::InvalidInput, "zero denominator in '" + std::string(s) + "'");
    value = num / den;
  } else {
    if constexpr (!is_exact_v<S>) {
      double d = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
      if (ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(d)) return d;
    }
    value = detail::parse_decimal(s);
  }
  return convert<S>(value);
}

}  // namespace riskshare
