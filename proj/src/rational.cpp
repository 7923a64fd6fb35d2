#include "coz/rational.hpp"

#include <charconv>
#include <numeric>
#include <stdexcept>

namespace coz {

namespace {

std::int64_t mul_checked(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw std::overflow_error("rational arithmetic overflow");
    }
    return out;
}

std::int64_t add_checked(std::int64_t a, std::int64_t b) {
    std::int64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw std::overflow_error("rational arithmetic overflow");
    }
    return out;
}

std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument("invalid rational literal: " + std::string(s));
    }
    return v;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
    if (den == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num, den);
    num_ = num / g;
    den_ = den / g;
}

std::int64_t Rational::floor() const {
    std::int64_t q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) {
        --q;
    }
    return q;
}

std::string Rational::to_string() const {
    if (den_ == 1) {
        return std::to_string(num_);
    }
    return std::to_string(num_) + "/" + std::to_string(den_);
}

Rational Rational::parse(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        return Rational(parse_int(text));
    }
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
}

Rational operator+(const Rational& a, const Rational& b) {
    const std::int64_t g = std::gcd(a.den_, b.den_);
    const std::int64_t lhs = mul_checked(a.num_, b.den_ / g);
    const std::int64_t rhs = mul_checked(b.num_, a.den_ / g);
    return Rational(add_checked(lhs, rhs), mul_checked(a.den_ / g, b.den_));
}

Rational operator-(const Rational& a, const Rational& b) {
    return a + Rational(-b.num_, b.den_);
}

Rational operator*(const Rational& a, const Rational& b) {
    const std::int64_t g1 = std::gcd(a.num_, b.den_);
    const std::int64_t g2 = std::gcd(b.num_, a.den_);
    const std::int64_t n1 = g1 == 0 ? a.num_ : a.num_ / g1;
    const std::int64_t d2 = g1 == 0 ? b.den_ : b.den_ / g1;
    const std::int64_t n2 = g2 == 0 ? b.num_ : b.num_ / g2;
    const std::int64_t d1 = g2 == 0 ? a.den_ : a.den_ / g2;
    return Rational(mul_checked(n1, n2), mul_checked(d1, d2));
}

Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) {
        throw std::domain_error("rational division by zero");
    }
    return a * Rational(b.den_, b.num_);
}

std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
}

std::int64_t checked_pow(std::int64_t base, int exponent) {
    if (exponent < 0) {
        throw std::domain_error("negative exponent");
    }
    std::int64_t out = 1;
    for (int i = 0; i < exponent; ++i) {
        out = mul_checked(out, base);
    }
    return out;
}

}  // namespace coz
