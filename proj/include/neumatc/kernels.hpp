#pragma once
// Data-parallel inner loops used by the tensor, model and training code.
//
// Every kernel has a scalar reference implementation and an AVX2+FMA variant
// compiled in a separate translation unit. The variant is chosen once at
// startup from CPUID (override with NEUMATC_SIMD=scalar|avx2 or select()).
//
// Summation order contract: for the gemm kernels every output element is the
// sequential chain c = a(i,0)b(0,j); c += a(i,1)b(1,j); ... in increasing p,
// regardless of blocking. The AVX2 variant evaluates the chain with fused
// multiply-add (tails use std::fma), so a given ISA is bit-reproducible across
// blockings and batch sizes, and the two ISAs agree to rounding.

#include <cstddef>
#include <string_view>

namespace neumatc::kernels {

enum class Isa { Scalar, Avx2 };

struct KernelTable {
    Isa isa;
    const char* name;

    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*sum_squares)(const double* a, std::size_t n);
    // sum (a_i - b_i)^2
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);

    // C(m x n) = [C +] A(m x k) * B(k x n), all row-major with leading dims.
    void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    std::size_t lda, const double* b, std::size_t ldb, double* c,
                    std::size_t ldc, bool accumulate);
    // C(m x n) = [C +] A(k x m)^T * B(k x n)
    void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    std::size_t lda, const double* b, std::size_t ldb, double* c,
                    std::size_t ldc, bool accumulate);
    // C(m x n) = [C +] A(m x k) * B(n x k)^T, one dot product per element
    void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                    std::size_t lda, const double* b, std::size_t ldb, double* c,
                    std::size_t ldc, bool accumulate);
};

const KernelTable& scalar_table();
/// nullptr when the build has no AVX2 variant.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);

/// Currently selected table.
const KernelTable& active();

/// Switch the active table. Throws ArgumentError if the ISA is unsupported.
void select(Isa isa);

Isa parse_isa(std::string_view name);
std::string_view isa_name(Isa isa);

/// RAII guard that restores the previous ISA on scope exit.
class ScopedIsa {
public:
    explicit ScopedIsa(Isa isa);
    ~ScopedIsa();
    ScopedIsa(const ScopedIsa&) = delete;
    ScopedIsa& operator=(const ScopedIsa&) = delete;

private:
    Isa previous_;
};

}  // namespace neumatc::kernels
