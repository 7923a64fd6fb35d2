#include "coz/rational.hpp"

#include <doctest.h>

#include <stdexcept>

using coz::Rational;

TEST_CASE("rational normalizes sign and lowest terms") {
    const Rational r(6, -4);
    CHECK(r.num() == -3);
    CHECK(r.den() == 2);
    CHECK(r.to_string() == "-3/2");
    CHECK(Rational(8, 4).to_string() == "2");
    CHECK(Rational(8, 4).is_integer());
    CHECK_THROWS(Rational(1, 0));
}

TEST_CASE("rational arithmetic and ordering") {
    CHECK(Rational(1, 3) + Rational(1, 6) == Rational(1, 2));
    CHECK(Rational(1, 3) - Rational(1, 2) == Rational(-1, 6));
    CHECK(Rational(2, 3) * Rational(9, 4) == Rational(3, 2));
    CHECK(Rational(2, 3) / Rational(4, 9) == Rational(3, 2));
    CHECK(Rational(1, 3) < Rational(1, 2));
    CHECK(Rational(-7, 2).floor() == -4);
    CHECK(Rational(7, 2).floor() == 3);
    CHECK(Rational(255, 256).to_double() == doctest::Approx(255.0 / 256.0));
}

TEST_CASE("rational parse round trip") {
    for (const Rational r : {Rational(0), Rational(5), Rational(-3, 7), Rational(1023, 4)}) {
        CHECK(Rational::parse(r.to_string()) == r);
    }
    CHECK_THROWS(Rational::parse("abc"));
    CHECK_THROWS(Rational::parse("1/0"));
}

TEST_CASE("checked_pow detects overflow") {
    CHECK(coz::checked_pow(4, 4) == 256);
    CHECK(coz::checked_pow(7, 0) == 1);
    CHECK_THROWS_AS(coz::checked_pow(4, 40), std::overflow_error);
}
