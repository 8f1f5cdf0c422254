#include "waffle/verify/threshold.hpp"

#include <cmath>
#include <vector>

#include "waffle/core/error.hpp"

namespace waffle {

ThresholdResult compute_t_acc(int n, int m, const BigRational& eps) {
    if (n < 1) throw ConfigError("compute_t_acc: n must be >= 1");
    if (m < 2) throw ConfigError("compute_t_acc: m must be >= 2");
    if (eps.num.is_zero() || eps.den.is_zero())
        throw ConfigError("compute_t_acc: epsilon must be > 0");

    // Vacuous budget: every accuracy is within eps.
    if (eps.den <= eps.num) return {0, n, 0.0};

    // P[X >= k] = S_k / m^n with S_k = sum_{i=k..n} C(n,i) (m-1)^(n-i).
    // Binomials via a Pascal row; everything exact.
    std::vector<BigUint> row(static_cast<std::size_t>(n) + 1);
    row[0] = BigUint(1);
    for (int r = 1; r <= n; ++r)
        for (int i = r; i >= 1; --i) row[i].add(row[i - 1]);

    std::vector<BigUint> terms(static_cast<std::size_t>(n) + 1);
    BigUint q_pow(1);  // (m-1)^(n-i), built from i=n downward
    for (int i = n; i >= 0; --i) {
        terms[i] = row[i].mul(q_pow);
        if (i > 0) q_pow.mul_small(static_cast<std::uint32_t>(m - 1));
    }

    // right = eps * m^n; find smallest k with m * S_k * eps.den <= right.
    BigUint right = eps.num.mul(BigUint::pow(static_cast<std::uint64_t>(m),
                                             static_cast<std::uint32_t>(n)));
    BigUint suffix;  // S_k accumulated from the top
    int found = -1;
    for (int k = n; k >= 0; --k) {
        suffix.add(terms[k]);
        BigUint lhs = suffix.mul(eps.den);
        lhs.mul_small(static_cast<std::uint32_t>(m));
        if (lhs <= right) {
            found = k;  // keep going: we want the smallest such k
        } else {
            break;  // S_k grows as k decreases, so no smaller k can pass
        }
    }
    if (found < 0) {
        // Even k = n misses the budget; minimum achievable tail is m^(1-n).
        double log10_min = (1.0 - n) * std::log10(static_cast<double>(m));
        double mant = std::pow(10.0, log10_min - std::floor(log10_min));
        throw ConfigError("compute_t_acc: epsilon too small for n=" + std::to_string(n) +
                          "; minimum achievable tail is " + std::to_string(mant) + "e" +
                          std::to_string(static_cast<long>(std::floor(log10_min))));
    }
    return {found, n, static_cast<double>(found) / n};
}

ThresholdResult compute_t_acc(int n, int m, const std::string& eps_text) {
    return compute_t_acc(n, m, parse_epsilon(eps_text));
}

}  // namespace waffle
