#include "waffle/core/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <stdexcept>

#include "waffle/core/digest.hpp"

namespace waffle {

std::uint64_t Rng::derive_seed(std::uint64_t seed, std::string_view tag,
                               std::initializer_list<std::uint64_t> args) {
    std::vector<std::uint8_t> buf;
    buf.reserve(8 + tag.size() + 8 * args.size());
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(seed >> (8 * i)));
    buf.insert(buf.end(), tag.begin(), tag.end());
    for (std::uint64_t a : args)
        for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>(a >> (8 * i)));
    Sha256 d = sha256(buf);
    std::uint64_t s = 0;
    for (int i = 0; i < 8; ++i) s |= static_cast<std::uint64_t>(d[i]) << (8 * i);
    return s;
}

Rng Rng::derive(std::uint64_t seed, std::string_view tag,
                std::initializer_list<std::uint64_t> args) {
    return Rng(derive_seed(seed, tag, args));
}

std::uint64_t Rng::uniform_u64(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("uniform_u64: bound must be >= 1");
    // Rejection sampling over the top of the range keeps the draw unbiased.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = gen_();
    } while (x >= limit);
    return x % bound;
}

int Rng::uniform_int(int lo, int hi_inclusive) {
    if (hi_inclusive < lo) throw std::invalid_argument("uniform_int: empty range");
    return lo + static_cast<int>(uniform_u64(
                    static_cast<std::uint64_t>(hi_inclusive) - lo + 1));
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1, u2;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::vector<int> Rng::sample_without_replacement(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(uniform_u64(n - i));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

}  // namespace waffle
