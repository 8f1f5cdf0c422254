#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace waffle {

// Minimal arbitrary-precision unsigned integer: just what the exact binomial
// tail needs (add, multiply, compare, powers, decimal I/O).
class BigUint {
public:
    BigUint() = default;
    explicit BigUint(std::uint64_t v);

    static BigUint from_decimal(const std::string& digits);
    static BigUint pow(std::uint64_t base, std::uint32_t exp);

    bool is_zero() const { return limbs_.empty(); }
    int compare(const BigUint& o) const;  // -1, 0, 1

    BigUint& add(const BigUint& o);
    BigUint mul(const BigUint& o) const;
    BigUint& mul_small(std::uint32_t v);
    // In-place divide by a small value; returns the remainder. v >= 1.
    std::uint32_t divmod_small(std::uint32_t v);

    std::string to_decimal() const;
    double to_double() const;  // may overflow to +inf

    bool operator==(const BigUint& o) const { return compare(o) == 0; }
    bool operator<=(const BigUint& o) const { return compare(o) <= 0; }
    bool operator<(const BigUint& o) const { return compare(o) < 0; }

private:
    void trim();
    std::vector<std::uint32_t> limbs_;  // little-endian, no trailing zeros
};

// Exact nonnegative rational, used for the confidence budget epsilon.
struct BigRational {
    BigUint num;
    BigUint den;  // > 0
};

// Accepts "2^-64", plain decimals ("0.4", "1"), and scientific ("1e-6").
BigRational parse_epsilon(const std::string& text);

}  // namespace waffle
