#include <atomic>
#include <cstdlib>

#include "waffle/core/error.hpp"
#include "waffle/kernels/kernels.hpp"

namespace waffle::kernels {

#ifdef WAFFLE_BUILD_AVX2
const Backend* avx2_backend_impl();
#endif

const Backend* avx2_backend() {
#ifdef WAFFLE_BUILD_AVX2
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return supported ? avx2_backend_impl() : nullptr;
#else
    return nullptr;
#endif
}

std::vector<std::string> available_backends() {
    std::vector<std::string> out{"scalar"};
    if (avx2_backend()) out.emplace_back("avx2");
    return out;
}

namespace {

std::atomic<const Backend*> g_active{nullptr};

const Backend* resolve(const std::string& name) {
    if (name == "auto") return avx2_backend() ? avx2_backend() : &scalar_backend();
    if (name == "scalar") return &scalar_backend();
    if (name == "avx2") {
        const Backend* b = avx2_backend();
        if (!b) throw ConfigError("kernel backend 'avx2' not available on this machine");
        return b;
    }
    throw ConfigError("unknown kernel backend '" + name + "' (expected auto|scalar|avx2)");
}

const Backend* initial() {
    const char* env = std::getenv("WAFFLE_BACKEND");
    return resolve(env && *env ? env : "auto");
}

}  // namespace

const Backend& active() {
    const Backend* b = g_active.load(std::memory_order_acquire);
    if (!b) {
        b = initial();
        g_active.store(b, std::memory_order_release);
    }
    return *b;
}

void set_backend(const std::string& name) {
    g_active.store(resolve(name), std::memory_order_release);
}

}  // namespace waffle::kernels
