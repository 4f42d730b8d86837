#pragma once

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <boost/rational.hpp>
#include <cstdint>
#include <string>

namespace mmpir {

/// Exact rational arithmetic for loads and capacities. All quantities in
/// scope are small ratios of parameter-sized integers.
using Rational = boost::rational<std::int64_t>;

/// 50-significant-digit decimal float for the irrational-exponent load
/// accounting.
using Real = boost::multiprecision::cpp_dec_float_50;

inline std::string to_string(const Rational &r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

inline Real to_real(const Rational &r) {
    return Real(r.numerator()) / Real(r.denominator());
}

inline double to_double(const Rational &r) {
    return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

} // namespace mmpir
