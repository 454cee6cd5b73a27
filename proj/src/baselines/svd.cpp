#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "neumatc/baselines.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

DenseMatrix SvdResult::reconstruct() const {
    DenseMatrix us = u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= s[j];
    return matmul_nt(us, v);
}

namespace {

// Jacobi on a tall matrix (m >= n). Columns are kept contiguous by working on
// the transpose: wt is n x m, vt is n x n.
SvdResult jacobi_tall(const DenseMatrix& a, int max_sweeps) {
    const std::size_t m = a.rows(), n = a.cols();
    DenseMatrix wt = a.transposed();
    DenseMatrix vt = DenseMatrix::identity(n);
    const double tol = static_cast<double>(std::max<std::size_t>(m, 1)) *
                       std::numeric_limits<double>::epsilon();
    const auto& kern = kernels::active();

    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) norms[i] = kern.sum_squares(wt.row(i).data(), m);

    bool converged = (n < 2);
    for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double* wi = wt.row(i).data();
                double* wj = wt.row(j).data();
                const double alpha = norms[i];
                const double beta = norms[j];
                const double gamma = kern.dot(wi, wj, m);
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double x = wi[r], y = wj[r];
                    wi[r] = c * x - s * y;
                    wj[r] = s * x + c * y;
                }
                double* vi = vt.row(i).data();
                double* vj = vt.row(j).data();
                for (std::size_t r = 0; r < n; ++r) {
                    const double x = vi[r], y = vj[r];
                    vi[r] = c * x - s * y;
                    vj[r] = s * x + c * y;
                }
                norms[i] = kern.sum_squares(wi, m);
                norms[j] = kern.sum_squares(wj, m);
            }
        }
        converged = !rotated;
    }
    if (!converged) {
        double worst = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (norms[i] > 0 && norms[j] > 0)
                    worst = std::max(worst, std::abs(kern.dot(wt.row(i).data(), wt.row(j).data(), m)) /
                                                std::sqrt(norms[i] * norms[j]));
        throw ConvergenceError("dense_svd: Jacobi did not converge in " +
                                   std::to_string(max_sweeps) + " sweeps",
                               worst);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sigma(n);
    for (std::size_t i = 0; i < n; ++i) sigma[i] = std::sqrt(kern.sum_squares(wt.row(i).data(), m));
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SvdResult out{DenseMatrix(m, n), std::vector<double>(n), DenseMatrix(n, n)};
    const double smax = n ? sigma[order[0]] : 0.0;
    const double null_tol = smax * static_cast<double>(std::max(m, n)) *
                            std::numeric_limits<double>::epsilon();
    std::vector<bool> filled(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = order[k];
        out.s[k] = sigma[src];
        for (std::size_t r = 0; r < n; ++r) out.v(r, k) = vt(src, r);
        if (sigma[src] > null_tol && sigma[src] > 0.0) {
            for (std::size_t r = 0; r < m; ++r) out.u(r, k) = wt(src, r) / sigma[src];
            filled[k] = true;
        }
    }
    // Complete U on the numerical null space with Gram-Schmidt on e_1, e_2, ...
    std::size_t candidate = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (filled[k]) continue;
        while (candidate < m) {
            std::vector<double> e(m, 0.0);
            e[candidate++] = 1.0;
            for (int pass = 0; pass < 2; ++pass)
                for (std::size_t c = 0; c < n; ++c) {
                    if (!filled[c]) continue;
                    double d = 0.0;
                    for (std::size_t r = 0; r < m; ++r) d += out.u(r, c) * e[r];
                    for (std::size_t r = 0; r < m; ++r) e[r] -= d * out.u(r, c);
                }
            double nrm = 0.0;
            for (double x : e) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 0.5) {
                for (std::size_t r = 0; r < m; ++r) out.u(r, k) = e[r] / nrm;
                filled[k] = true;
                break;
            }
        }
    }
    return out;
}

DenseMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    DenseMatrix g(rows, cols);
    for (double& x : g.data()) x = nd(rng);
    return g;
}

SvdResult sketch_svd(const DenseMatrix& a, const DenseMatrix& omega, std::size_t rank,
                     std::size_t power_iters) {
    DenseMatrix q = qr_decompose(matmul(a, omega)).q;
    for (std::size_t it = 0; it < power_iters; ++it) {
        DenseMatrix z = qr_decompose(matmul_tn(a, q)).q;
        q = qr_decompose(matmul(a, z)).q;
    }
    DenseMatrix b = matmul_tn(q, a);  // l x n
    SvdResult small = dense_svd(b);
    DenseMatrix u_full = matmul(q, small.u);
    SvdResult out{DenseMatrix(a.rows(), rank), std::vector<double>(rank), DenseMatrix(a.cols(), rank)};
    for (std::size_t k = 0; k < rank; ++k) {
        out.s[k] = small.s[k];
        for (std::size_t r = 0; r < a.rows(); ++r) out.u(r, k) = u_full(r, k);
        for (std::size_t r = 0; r < a.cols(); ++r) out.v(r, k) = small.v(r, k);
    }
    return out;
}

void check_sketch_size(std::size_t m, std::size_t n, std::size_t rank, std::size_t oversample) {
    if (rank == 0) throw ArgumentError("rsvd: rank must be positive");
    if (rank + oversample > std::min(m, n))
        throw ArgumentError("rsvd: rank + oversample = " + std::to_string(rank + oversample) +
                            " exceeds min(m, n) = " + std::to_string(std::min(m, n)));
}

}  // namespace

SvdResult dense_svd(const DenseMatrix& a, int max_sweeps) {
    if (!a.all_finite()) throw DomainError("dense_svd: non-finite input");
    if (a.rows() >= a.cols()) return jacobi_tall(a, max_sweeps);
    SvdResult t = jacobi_tall(a.transposed(), max_sweeps);
    return {std::move(t.v), std::move(t.s), std::move(t.u)};
}

SvdResult rsvd(const DenseMatrix& a, std::size_t rank, std::size_t oversample,
               std::size_t power_iters, std::uint64_t seed) {
    check_sketch_size(a.rows(), a.cols(), rank, oversample);
    std::mt19937_64 rng(seed);
    const DenseMatrix omega = gaussian_matrix(a.cols(), rank + oversample, rng);
    return sketch_svd(a, omega, rank, power_iters);
}

std::vector<SvdResult> crsvd(std::span<const DenseMatrix> inputs, std::size_t rank,
                             std::size_t oversample, std::uint64_t seed,
                             std::size_t power_iters) {
    std::vector<SvdResult> out;
    if (inputs.empty()) return out;
    const std::size_t m = inputs.front().rows(), n = inputs.front().cols();
    for (const auto& a : inputs)
        if (a.rows() != m || a.cols() != n) throw DimensionError("crsvd: non-uniform shapes");
    check_sketch_size(m, n, rank, oversample);
    std::mt19937_64 rng(seed);
    const DenseMatrix omega = gaussian_matrix(n, rank + oversample, rng);
    out.reserve(inputs.size());
    for (const auto& a : inputs) out.push_back(sketch_svd(a, omega, rank, power_iters));
    return out;
}

}  // namespace neumatc
