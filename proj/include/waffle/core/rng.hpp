#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace waffle {

// Deterministic RNG with hand-rolled distributions. std::mt19937_64 output is
// pinned by the standard, but the std:: distributions are not, so uniform /
// normal / shuffle are implemented here to keep results identical across
// toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Independent substream keyed by (seed, tag, args). Streams for different
    // keys are unrelated, so e.g. partitioning never perturbs training noise.
    static Rng derive(std::uint64_t seed, std::string_view tag,
                      std::initializer_list<std::uint64_t> args = {});
    static std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                     std::initializer_list<std::uint64_t> args = {});

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [0, bound), bound >= 1. Unbiased (rejection).
    std::uint64_t uniform_u64(std::uint64_t bound);
    int uniform_int(int lo, int hi_inclusive);  // uniform in [lo, hi]

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (cached spare).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_u64(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), in draw order.
    std::vector<int> sample_without_replacement(int n, int k);

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace waffle
