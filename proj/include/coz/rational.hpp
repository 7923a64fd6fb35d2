#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace coz {

/// Exact rational number with a positive denominator, always stored in lowest
/// terms. Used for zoom geometry so that telescoping crops never drift.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1);

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }
    bool is_integer() const { return den_ == 1; }
    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// floor(num / den) as an integer.
    std::int64_t floor() const;

    /// "p" when integral, "p/q" otherwise.
    std::string to_string() const;
    static Rational parse(std::string_view text);

    friend Rational operator+(const Rational& a, const Rational& b);
    friend Rational operator-(const Rational& a, const Rational& b);
    friend Rational operator*(const Rational& a, const Rational& b);
    friend Rational operator/(const Rational& a, const Rational& b);

    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Integer power with overflow detection (throws std::overflow_error).
std::int64_t checked_pow(std::int64_t base, int exponent);

}  // namespace coz
