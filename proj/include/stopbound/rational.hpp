#pragma once

#include <cctype>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "stopbound/errors.hpp"

namespace stopbound {

// Exact rational number in canonical form: den > 0, gcd(|num|, den) = 1.
// Arithmetic is checked; results that leave the int64 range throw
// std::overflow_error.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT(implicit)
  Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }

  double to_double() const noexcept {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }
  bool is_integer() const noexcept { return den_ == 1; }

  // Accepts "p", "p/q", and finite decimals such as "-1.5" or "0.2" (read
  // exactly, so "0.2" is 1/5).
  static Rational parse(std::string_view text);

  std::string to_string() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.den_ +
                         static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.den_ -
                         static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(static_cast<__int128>(a.num_) * b.num_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return from_wide(static_cast<__int128>(a.num_) * b.den_,
                     static_cast<__int128>(a.den_) * b.num_);
  }
  Rational operator-() const { return Rational(-num_, den_); }
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }

  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    return lhs <=> rhs;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
    return os << r.to_string();
  }

 private:
  void assign(std::int64_t n, std::int64_t d) {
    *this = from_wide(n, d);
  }

  static Rational from_wide(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) {
      n = -n;
      d = -d;
    }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) {
      const __int128 r = a % b;
      a = b;
      b = r;
    }
    if (a > 1) {
      n /= a;
      d /= a;
    }
    constexpr __int128 kMax = INT64_MAX;
    if (n > kMax || n < -kMax || d > kMax) {
      throw std::overflow_error("rational arithmetic overflow");
    }
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline Rational abs(const Rational& r) { return r.num() < 0 ? -r : r; }

// Largest rational g with a/g and b/g both integers (gcd(0, b) = |b|).
inline Rational rational_gcd(const Rational& a, const Rational& b) {
  const std::int64_t l = std::lcm(a.den(), b.den());
  const std::int64_t an = (l / a.den()) * a.num();
  const std::int64_t bn = (l / b.den()) * b.num();
  return Rational(std::gcd(an, bn), l);
}

inline Rational Rational::parse(std::string_view text) {
  auto fail = [&](const char* why) -> Rational {
    throw ParseError("invalid rational \"" + std::string(text) + "\": " + why);
  };
  auto trim = [](std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  };
  // Parses an optionally signed decimal "[-+]digits[.digits]".
  auto decimal = [&](std::string_view s) -> Rational {
    s = trim(s);
    if (s.empty()) return fail("empty component");
    bool neg = false;
    if (s.front() == '-' || s.front() == '+') {
      neg = s.front() == '-';
      s.remove_prefix(1);
    }
    if (s.empty()) return fail("sign without digits");
    __int128 n = 0;
    __int128 d = 1;
    bool seen_dot = false;
    bool seen_digit = false;
    for (char c : s) {
      if (c == '.') {
        if (seen_dot) return fail("two decimal points");
        seen_dot = true;
        continue;
      }
      if (!std::isdigit(static_cast<unsigned char>(c))) return fail("unexpected character");
      seen_digit = true;
      n = n * 10 + (c - '0');
      if (seen_dot) d *= 10;
      if (n > INT64_MAX || d > INT64_MAX) return fail("too many digits");
    }
    if (!seen_digit) return fail("no digits");
    return from_wide(neg ? -n : n, d);
  };
  text = trim(text);
  const auto slash = text.find('/');
  try {
    if (slash == std::string_view::npos) return decimal(text);
    const Rational d = decimal(text.substr(slash + 1));
    if (d.num() == 0) return fail("zero denominator");
    return decimal(text.substr(0, slash)) / d;
  } catch (const std::overflow_error&) {
    return fail("out of range");
  }
}

}  // namespace stopbound
