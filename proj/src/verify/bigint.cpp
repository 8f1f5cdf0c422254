#include "waffle/verify/bigint.hpp"

#include <algorithm>
#include <cmath>

#include "waffle/core/error.hpp"

namespace waffle {

BigUint::BigUint(std::uint64_t v) {
    if (v) limbs_.push_back(static_cast<std::uint32_t>(v));
    if (v >> 32) limbs_.push_back(static_cast<std::uint32_t>(v >> 32));
}

void BigUint::trim() {
    while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
}

int BigUint::compare(const BigUint& o) const {
    if (limbs_.size() != o.limbs_.size()) return limbs_.size() < o.limbs_.size() ? -1 : 1;
    for (std::size_t i = limbs_.size(); i-- > 0;)
        if (limbs_[i] != o.limbs_[i]) return limbs_[i] < o.limbs_[i] ? -1 : 1;
    return 0;
}

BigUint& BigUint::add(const BigUint& o) {
    std::size_t n = std::max(limbs_.size(), o.limbs_.size());
    limbs_.resize(n, 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t s = carry + limbs_[i] + (i < o.limbs_.size() ? o.limbs_[i] : 0);
        limbs_[i] = static_cast<std::uint32_t>(s);
        carry = s >> 32;
    }
    if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
    return *this;
}

BigUint BigUint::mul(const BigUint& o) const {
    if (is_zero() || o.is_zero()) return BigUint();
    BigUint r;
    r.limbs_.assign(limbs_.size() + o.limbs_.size(), 0);
    for (std::size_t i = 0; i < limbs_.size(); ++i) {
        std::uint64_t carry = 0;
        for (std::size_t j = 0; j < o.limbs_.size(); ++j) {
            std::uint64_t cur = r.limbs_[i + j] +
                                static_cast<std::uint64_t>(limbs_[i]) * o.limbs_[j] + carry;
            r.limbs_[i + j] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
        }
        std::size_t k = i + o.limbs_.size();
        while (carry) {
            std::uint64_t cur = r.limbs_[k] + carry;
            r.limbs_[k] = static_cast<std::uint32_t>(cur);
            carry = cur >> 32;
            ++k;
        }
    }
    r.trim();
    return r;
}

BigUint& BigUint::mul_small(std::uint32_t v) {
    if (v == 0 || is_zero()) {
        limbs_.clear();
        return *this;
    }
    std::uint64_t carry = 0;
    for (auto& l : limbs_) {
        std::uint64_t cur = static_cast<std::uint64_t>(l) * v + carry;
        l = static_cast<std::uint32_t>(cur);
        carry = cur >> 32;
    }
    while (carry) {
        limbs_.push_back(static_cast<std::uint32_t>(carry));
        carry >>= 32;
    }
    return *this;
}

std::uint32_t BigUint::divmod_small(std::uint32_t v) {
    if (v == 0) throw ConfigError("BigUint: division by zero");
    std::uint64_t rem = 0;
    for (std::size_t i = limbs_.size(); i-- > 0;) {
        std::uint64_t cur = (rem << 32) | limbs_[i];
        limbs_[i] = static_cast<std::uint32_t>(cur / v);
        rem = cur % v;
    }
    trim();
    return static_cast<std::uint32_t>(rem);
}

BigUint BigUint::pow(std::uint64_t base, std::uint32_t exp) {
    BigUint r(1);
    BigUint b(base);
    while (exp) {
        if (exp & 1) r = r.mul(b);
        exp >>= 1;
        if (exp) b = b.mul(b);
    }
    return r;
}

BigUint BigUint::from_decimal(const std::string& digits) {
    if (digits.empty()) throw ConfigError("BigUint: empty decimal");
    BigUint r;
    for (char c : digits) {
        if (c < '0' || c > '9') throw ConfigError("BigUint: bad decimal digit");
        r.mul_small(10);
        r.add(BigUint(static_cast<std::uint64_t>(c - '0')));
    }
    return r;
}

std::string BigUint::to_decimal() const {
    if (is_zero()) return "0";
    BigUint tmp = *this;
    std::string out;
    while (!tmp.is_zero()) out.push_back(static_cast<char>('0' + tmp.divmod_small(10)));
    std::reverse(out.begin(), out.end());
    return out;
}

double BigUint::to_double() const {
    double r = 0.0;
    for (std::size_t i = limbs_.size(); i-- > 0;) r = r * 4294967296.0 + limbs_[i];
    return r;
}

BigRational parse_epsilon(const std::string& text) {
    if (text.empty()) throw ConfigError("epsilon: empty");
    BigRational r;
    if (text.rfind("2^-", 0) == 0) {
        int k = std::stoi(text.substr(3));
        if (k < 0 || k > 100000) throw ConfigError("epsilon: bad power-of-two exponent");
        r.num = BigUint(1);
        r.den = BigUint::pow(2, static_cast<std::uint32_t>(k));
        return r;
    }
    std::string mantissa = text;
    long exp10 = 0;
    if (auto e = text.find_first_of("eE"); e != std::string::npos) {
        mantissa = text.substr(0, e);
        exp10 = std::stol(text.substr(e + 1));
    }
    std::string digits;
    long frac_len = 0;
    bool seen_dot = false;
    for (char c : mantissa) {
        if (c == '.') {
            if (seen_dot) throw ConfigError("epsilon: malformed number");
            seen_dot = true;
            continue;
        }
        if (c < '0' || c > '9') throw ConfigError("epsilon: malformed number: " + text);
        digits.push_back(c);
        if (seen_dot) ++frac_len;
    }
    if (digits.empty()) throw ConfigError("epsilon: malformed number: " + text);
    r.num = BigUint::from_decimal(digits);
    r.den = BigUint(1);
    long net = exp10 - frac_len;
    if (net > 0)
        r.num = r.num.mul(BigUint::pow(10, static_cast<std::uint32_t>(net)));
    else if (net < 0)
        r.den = BigUint::pow(10, static_cast<std::uint32_t>(-net));
    if (r.num.is_zero()) throw ConfigError("epsilon must be > 0");
    return r;
}

}  // namespace waffle
