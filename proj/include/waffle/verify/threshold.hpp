#pragma once

#include <string>

#include "waffle/verify/bigint.hpp"

namespace waffle {

struct ThresholdResult {
    int k_star = 0;  // minimum correct count
    int n = 0;
    double value = 0.0;  // k_star / n
};

// Ownership threshold: the smallest k such that a model matching watermark
// labels by chance (each of n trials hits with probability 1/m) reaches k
// or more hits with probability at most eps, the chance-match budget being
// spread over the m candidate classes:
//
//     m * P[X >= k] <= eps,   X ~ Binomial(n, 1/m)
//
// evaluated in exact integer arithmetic. eps >= 1 returns 0 (any accuracy
// passes). Throws ConfigError when no k <= n satisfies the bound, reporting
// the minimum achievable tail.
ThresholdResult compute_t_acc(int n, int m, const BigRational& eps);
ThresholdResult compute_t_acc(int n, int m, const std::string& eps_text);

}  // namespace waffle
