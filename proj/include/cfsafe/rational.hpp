#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <variant>

namespace cfsafe {

using Rational = boost::multiprecision::cpp_rational;

// A probability that is either an exact rational (when the model source gave
// a rational literal) or a double (for models assembled in memory with
// floating-point weights). Arithmetic stays exact as long as both operands
// are exact; mixing with a double demotes the result to double.
class Prob {
  public:
    Prob() : value_(Rational(0)) {}
    Prob(const Rational& r) : value_(r) {}
    Prob(Rational&& r) : value_(std::move(r)) {}
    explicit Prob(double d) : value_(d) {}
    static Prob exact(std::int64_t num, std::int64_t den) { return Prob(Rational(num, den)); }

    bool is_exact() const { return std::holds_alternative<Rational>(value_); }
    const Rational& rational() const { return std::get<Rational>(value_); }

    double to_double() const {
        if (is_exact()) return rational().convert_to<double>();
        return std::get<double>(value_);
    }

    Prob operator+(const Prob& other) const {
        if (is_exact() && other.is_exact()) return Prob(rational() + other.rational());
        return Prob(to_double() + other.to_double());
    }
    Prob operator-(const Prob& other) const {
        if (is_exact() && other.is_exact()) return Prob(rational() - other.rational());
        return Prob(to_double() - other.to_double());
    }
    Prob operator*(const Prob& other) const {
        if (is_exact() && other.is_exact()) return Prob(rational() * other.rational());
        return Prob(to_double() * other.to_double());
    }
    Prob operator/(const Prob& other) const {
        if (is_exact() && other.is_exact()) return Prob(rational() / other.rational());
        return Prob(to_double() / other.to_double());
    }

    Prob& operator+=(const Prob& other) { return *this = *this + other; }

    // Value comparison; exact vs. double compares through doubles.
    bool operator==(const Prob& other) const {
        if (is_exact() && other.is_exact()) return rational() == other.rational();
        return to_double() == other.to_double();
    }
    bool operator<(const Prob& other) const {
        if (is_exact() && other.is_exact()) return rational() < other.rational();
        return to_double() < other.to_double();
    }
    bool operator>(const Prob& other) const { return other < *this; }

    bool is_zero() const { return is_exact() ? rational() == 0 : to_double() == 0.0; }
    bool is_one() const { return is_exact() ? rational() == 1 : to_double() == 1.0; }

    // Lowest-terms "n/d" (plain "n" when d == 1) for exact values, 17
    // significant digits for doubles. Used by the dtmc dump and the emitter.
    std::string str() const;

  private:
    std::variant<Rational, double> value_;
};

std::string format_double17(double v);
// Shortest decimal string that round-trips to the same double.
std::string format_double_shortest(double v);

}  // namespace cfsafe
