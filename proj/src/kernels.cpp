// Runtime kernel selection. The active table defaults to the best
// implementation the CPU supports and can be pinned via CUSPVB_ISA or
// select().

#include "cuspvb/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace cuspvb::kernels {

namespace detail {
extern const Ops scalar_ops;
#ifdef CUSPVB_HAVE_AVX2
extern const Ops avx2_ops;
#endif
}  // namespace detail

namespace {

bool cpu_has_avx2() {
#if defined(CUSPVB_HAVE_AVX2) && defined(__GNUC__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Isa pick_default() {
    if (const char* env = std::getenv("CUSPVB_ISA")) {
        std::string v(env);
        if (v == "scalar") return Isa::scalar;
        if (v == "avx2" && available(Isa::avx2)) return Isa::avx2;
    }
    return available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& active_slot() {
    static std::atomic<Isa> slot{pick_default()};
    return slot;
}

}  // namespace

bool available(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return true;
        case Isa::avx2: return cpu_has_avx2();
    }
    return false;
}

const Ops& ops_for(Isa isa) {
    if (!available(isa))
        throw std::invalid_argument("kernel implementation unavailable: " +
                                    std::string(name(isa)));
    switch (isa) {
#ifdef CUSPVB_HAVE_AVX2
        case Isa::avx2: return detail::avx2_ops;
#endif
        default: return detail::scalar_ops;
    }
}

const Ops& ops() noexcept { return ops_for(active_slot().load(std::memory_order_relaxed)); }

Isa active() noexcept { return active_slot().load(std::memory_order_relaxed); }

void select(Isa isa) {
    ops_for(isa);  // validates availability
    active_slot().store(isa, std::memory_order_relaxed);
}

std::string_view name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
    }
    return "?";
}

}  // namespace cuspvb::kernels
