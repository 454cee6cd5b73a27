#include "neumatc/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "neumatc/errors.hpp"

namespace neumatc::kernels {

namespace {

const KernelTable kScalar{
    Isa::Scalar,       "scalar",          scalar::dot,     scalar::axpy,
    scalar::sum_squares, scalar::sum_sq_diff, scalar::gemm_nn, scalar::gemm_tn,
    scalar::gemm_nt,
};

#if defined(NEUMATC_HAVE_AVX2)
const KernelTable kAvx2{
    Isa::Avx2,       "avx2",          avx2::dot,     avx2::axpy,
    avx2::sum_squares, avx2::sum_sq_diff, avx2::gemm_nn, avx2::gemm_tn,
    avx2::gemm_nt,
};
#endif

bool cpu_has_avx2() {
#if defined(NEUMATC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* initial_table() {
    const bool avx2_ok = cpu_has_avx2();
    if (const char* env = std::getenv("NEUMATC_SIMD")) {
        const std::string v(env);
        if (v == "scalar") return &kScalar;
#if defined(NEUMATC_HAVE_AVX2)
        if (v == "avx2" && avx2_ok) return &kAvx2;
#endif
    }
#if defined(NEUMATC_HAVE_AVX2)
    if (avx2_ok) return &kAvx2;
#endif
    return &kScalar;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(NEUMATC_HAVE_AVX2)
    return &kAvx2;
#else
    return nullptr;
#endif
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2: return cpu_has_avx2();
    }
    return false;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
    if (!isa_supported(isa))
        throw ArgumentError("ISA not supported on this CPU/build: " + std::string(isa_name(isa)));
#if defined(NEUMATC_HAVE_AVX2)
    current().store(isa == Isa::Avx2 ? &kAvx2 : &kScalar, std::memory_order_release);
#else
    current().store(&kScalar, std::memory_order_release);
#endif
}

Isa parse_isa(std::string_view name) {
    if (name == "scalar") return Isa::Scalar;
    if (name == "avx2") return Isa::Avx2;
    throw ArgumentError("unknown ISA '" + std::string(name) + "' (valid: scalar, avx2)");
}

std::string_view isa_name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

ScopedIsa::ScopedIsa(Isa isa) : previous_(active().isa) { select(isa); }
ScopedIsa::~ScopedIsa() { select(previous_); }

}  // namespace neumatc::kernels
