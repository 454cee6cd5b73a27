#pragma once
// Direct and randomized solvers. They generate training targets and serve as
// the pointwise comparators in benchmarks.

#include <cstdint>
#include <span>
#include <vector>

#include "neumatc/sparse.hpp"
#include "neumatc/tensor.hpp"

namespace neumatc {

// ------------------------------------------------------------------------ LU

/// LU with partial pivoting, PA = LU packed in one matrix.
class LuFactorization {
public:
    /// Throws SingularityError when a pivot falls below tol * max|A|.
    explicit LuFactorization(DenseMatrix a, double tol = 1e-14);

    std::vector<double> solve(std::span<const double> b) const;
    DenseMatrix solve(const DenseMatrix& b) const;
    DenseMatrix inverse() const;

    std::size_t size() const noexcept { return lu_.rows(); }

private:
    DenseMatrix lu_;
    std::vector<std::size_t> perm_;
};

DenseMatrix lu_invert(const DenseMatrix& a);
std::vector<double> lu_solve(const DenseMatrix& a, std::span<const double> b);

// ----------------------------------------------------------------------- SVD

/// Thin SVD: A (m x n) = U diag(s) V^T with U m x k, V n x k, k = min(m, n),
/// or truncated to fewer columns by the randomized variants.
struct SvdResult {
    DenseMatrix u;
    std::vector<double> s;
    DenseMatrix v;

    DenseMatrix reconstruct() const;
};

/// One-sided Jacobi. Singular values descending, U and V with orthonormal
/// columns (null-space columns of U are completed to an orthonormal set).
/// Throws ConvergenceError after max_sweeps.
SvdResult dense_svd(const DenseMatrix& a, int max_sweeps = 80);

/// Halko-Martinsson-Tropp sketch -> orthonormalize -> small SVD.
/// Requires rank + oversample <= min(m, n) (ArgumentError otherwise).
SvdResult rsvd(const DenseMatrix& a, std::size_t rank, std::size_t oversample,
               std::size_t power_iters, std::uint64_t seed);

/// Randomized SVD with a single Gaussian test matrix shared across the family.
std::vector<SvdResult> crsvd(std::span<const DenseMatrix> inputs, std::size_t rank,
                             std::size_t oversample, std::uint64_t seed,
                             std::size_t power_iters = 0);

// -------------------------------------------------------- QR / Cholesky / expm

/// Thin Householder QR, Q m x k and R k x n (k = min(m, n)), normalized so the
/// diagonal of R is nonnegative (unique for full column rank, and continuous
/// along a smooth family).
struct QrResult {
    DenseMatrix q;
    DenseMatrix r;
};
QrResult qr_decompose(const DenseMatrix& a);

/// Lower-triangular L with positive diagonal, A = L L^T. Reads the lower
/// triangle only. Throws DefinitenessError naming the failing leading minor
/// (1-based order).
DenseMatrix cholesky(const DenseMatrix& a);

/// Scaling and squaring with Pade approximants up to degree 13 (Higham 2005).
DenseMatrix expm(const DenseMatrix& a);

/// min ||F X - Y||_F via Householder QR of F (rows >= cols). When F has fewer
/// rows than columns the minimum-norm solution is returned and
/// `underdetermined` is set.
struct LeastSquaresResult {
    DenseMatrix x;
    bool underdetermined = false;
    double rcond = 1.0;  // min |R_ii| / max |R_ii| of the QR used
};
LeastSquaresResult least_squares(const DenseMatrix& f, const DenseMatrix& y);

// ------------------------------------------------------------------- Krylov

enum class KrylovMethod { Cg, BiCgStab };

struct SparseSolveResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
};

/// Stops when ||Ax - b|| / ||b|| <= tol. Throws ConvergenceError (carrying the
/// final residual) on breakdown or when max_iter is reached.
SparseSolveResult sparse_solve(const SparseCsr& a, std::span<const double> b,
                               KrylovMethod method, double tol, std::size_t max_iter,
                               std::span<const double> x0 = {});

}  // namespace neumatc
