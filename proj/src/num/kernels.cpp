#include "kgda/num/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kgda/errors.hpp"

namespace kgda::num::kernels {
namespace {

std::atomic<const Ops*> g_active{nullptr};

const Ops* pick() {
    const char* env = std::getenv("KGDA_KERNELS");
    if (env) {
        if (std::strcmp(env, "scalar") == 0) return &scalar_ops();
        if (std::strcmp(env, "avx2") == 0 && avx2_available()) return avx2_ops();
    }
    if (avx2_available()) return avx2_ops();
    return &scalar_ops();
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
    return avx2_ops() != nullptr && __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Ops& active() {
    const Ops* p = g_active.load(std::memory_order_acquire);
    if (!p) {
        p = pick();
        g_active.store(p, std::memory_order_release);
    }
    return *p;
}

void force_backend(Backend b) {
    if (b == Backend::scalar) {
        g_active.store(&scalar_ops(), std::memory_order_release);
        return;
    }
    if (!avx2_available()) throw ConfigError("avx2 backend not available on this machine");
    g_active.store(avx2_ops(), std::memory_order_release);
}

void reset_backend() { g_active.store(nullptr, std::memory_order_release); }

}  // namespace kgda::num::kernels
