#include <atomic>
#include <cstdlib>

#include "lawin/kernels.hpp"

namespace lawin::kernels {

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* best_available() {
    if (const KernelTable* t = avx2_table()) return t;
    if (const KernelTable* t = neon_table()) return t;
    return &scalar_table();
}

const KernelTable* resolve_from_env() {
    const char* env = std::getenv("LAWIN_KERNELS");
    if (env == nullptr || std::string(env) == "auto") return best_available();
    const std::string want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2" && avx2_table()) return avx2_table();
    if (want == "neon" && neon_table()) return neon_table();
    // Unknown or unavailable request falls back to the safe default.
    return &scalar_table();
}

}  // namespace

const KernelTable& active() {
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    if (t == nullptr) {
        t = resolve_from_env();
        g_active.store(t, std::memory_order_release);
    }
    return *t;
}

bool set_active(const std::string& name) {
    if (name == "auto") {
        g_active.store(best_available(), std::memory_order_release);
        return true;
    }
    if (name == "scalar") {
        g_active.store(&scalar_table(), std::memory_order_release);
        return true;
    }
    if (name == "avx2" && avx2_table()) {
        g_active.store(avx2_table(), std::memory_order_release);
        return true;
    }
    if (name == "neon" && neon_table()) {
        g_active.store(neon_table(), std::memory_order_release);
        return true;
    }
    return false;
}

std::vector<const KernelTable*> available_tables() {
    std::vector<const KernelTable*> out{&scalar_table()};
    if (avx2_table()) out.push_back(avx2_table());
    if (neon_table()) out.push_back(neon_table());
    return out;
}

}  // namespace lawin::kernels
