#include "waffle/core/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace waffle {

Sha256 sha256(const void* data, std::size_t len) {
    Sha256Stream s;
    s.update(data, len);
    return s.finish();
}

Sha256 sha256(const std::vector<std::uint8_t>& bytes) {
    return sha256(bytes.data(), bytes.size());
}

Sha256 sha256(const std::string& s) {
    return sha256(s.data(), s.size());
}

std::string to_hex(const Sha256& d) {
    static const char* k = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : d) {
        out.push_back(k[b >> 4]);
        out.push_back(k[b & 0xf]);
    }
    return out;
}

Sha256Stream::Sha256Stream() {
    EVP_MD_CTX* c = EVP_MD_CTX_new();
    if (!c || EVP_DigestInit_ex(c, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 init failed");
    ctx_ = c;
}

Sha256Stream::~Sha256Stream() {
    if (ctx_) EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha256Stream::update(const void* data, std::size_t len) {
    if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len) != 1)
        throw std::runtime_error("sha256 update failed");
}

Sha256 Sha256Stream::finish() {
    Sha256 out{};
    unsigned int n = 0;
    if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &n) != 1 || n != 32)
        throw std::runtime_error("sha256 final failed");
    return out;
}

}  // namespace waffle
