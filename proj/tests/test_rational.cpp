#include <gtest/gtest.h>

#include <random>

#include "stopbound/rational.hpp"

using stopbound::ParseError;
using stopbound::Rational;

TEST(Rational, CanonicalForm) {
  const Rational r(6, -4);
  EXPECT_EQ(r.num(), -3);
  EXPECT_EQ(r.den(), 2);
  EXPECT_EQ(Rational(0, 7).den(), 1);
  EXPECT_THROW(Rational(1, 0), std::domain_error);
}

TEST(Rational, ParseForms) {
  EXPECT_EQ(Rational::parse("3"), Rational(3));
  EXPECT_EQ(Rational::parse("-24/85"), Rational(-24, 85));
  EXPECT_EQ(Rational::parse(" 10/4 "), Rational(5, 2));
  EXPECT_EQ(Rational::parse("0.2"), Rational(1, 5));
  EXPECT_EQ(Rational::parse("-1.5"), Rational(-3, 2));
  EXPECT_EQ(Rational::parse("+7"), Rational(7));
  for (const char* bad : {"", "1/", "/2", "a", "1.2.3", "1/0", "1e-3", "--1"}) {
    EXPECT_THROW(Rational::parse(bad), ParseError) << bad;
  }
}

TEST(Rational, RoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> num(-100000, 100000), den(1, 100000);
  for (int i = 0; i < 500; ++i) {
    const Rational r(num(rng), den(rng));
    EXPECT_EQ(Rational::parse(r.to_string()), r);
  }
}

TEST(Rational, ArithmeticIsExact) {
  const Rational a(24, 85), b(25, 68), c(7, 20);
  EXPECT_EQ(a + b + c, Rational(1));
  EXPECT_EQ(Rational(1, 3) * Rational(3), Rational(1));
  EXPECT_EQ(Rational(1, 2) - Rational(3, 4), Rational(-1, 4));
  EXPECT_EQ(Rational(1, 2) / Rational(1, 4), Rational(2));
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_EQ(abs(Rational(-3, 7)), Rational(3, 7));
}

TEST(Rational, Gcd) {
  EXPECT_EQ(stopbound::rational_gcd(Rational(-3, 2), Rational(1, 5)), Rational(1, 10));
  EXPECT_EQ(stopbound::rational_gcd(Rational(0), Rational(3, 4)), Rational(3, 4));
  EXPECT_EQ(stopbound::rational_gcd(Rational(-1), Rational(1)), Rational(1));
}

TEST(Rational, OverflowIsReported) {
  const Rational big(INT64_MAX / 2 + 1);
  EXPECT_THROW(big * Rational(4), std::overflow_error);
  EXPECT_THROW(Rational(1, INT64_MAX) + Rational(1, INT64_MAX - 1), std::overflow_error);
}
