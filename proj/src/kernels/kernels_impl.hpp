#pragma once
// Private declarations shared by the per-ISA translation units.

#include <cstddef>

#define NEUMATC_KERNEL_DECLS                                                                  \
    double dot(const double* a, const double* b, std::size_t n);                             \
    void axpy(double alpha, const double* x, double* y, std::size_t n);                      \
    double sum_squares(const double* a, std::size_t n);                                       \
    double sum_sq_diff(const double* a, const double* b, std::size_t n);                     \
    void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,               \
                 std::size_t lda, const double* b, std::size_t ldb, double* c,               \
                 std::size_t ldc, bool accumulate);                                           \
    void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,               \
                 std::size_t lda, const double* b, std::size_t ldb, double* c,               \
                 std::size_t ldc, bool accumulate);                                           \
    void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,               \
                 std::size_t lda, const double* b, std::size_t ldb, double* c,               \
                 std::size_t ldc, bool accumulate);

namespace neumatc::kernels::scalar {
NEUMATC_KERNEL_DECLS
}

#if defined(NEUMATC_HAVE_AVX2)
namespace neumatc::kernels::avx2 {
NEUMATC_KERNEL_DECLS
}
#endif
