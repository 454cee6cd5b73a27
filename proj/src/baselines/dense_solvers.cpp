#include <algorithm>
#include <cmath>
#include <string>

#include "neumatc/baselines.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

// ------------------------------------------------------------------------ LU

LuFactorization::LuFactorization(DenseMatrix a, double tol) : lu_(std::move(a)) {
    const std::size_t n = lu_.rows();
    if (lu_.cols() != n) throw DimensionError("LU requires a square matrix");
    perm_.resize(n);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;

    double scale = 0.0;
    for (double x : lu_.data()) scale = std::max(scale, std::abs(x));
    const double threshold = tol * (scale > 0.0 ? scale : 1.0);
    const auto& kern = kernels::active();

    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        double best = std::abs(lu_(k, k));
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(lu_(i, k)) > best) {
                best = std::abs(lu_(i, k));
                piv = i;
            }
        if (best <= threshold)
            throw SingularityError("LU: zero pivot at index " + std::to_string(k), k);
        if (piv != k) {
            std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(piv).begin());
            std::swap(perm_[k], perm_[piv]);
        }
        const double inv_pivot = 1.0 / lu_(k, k);
        const double* urow = lu_.row(k).data() + k + 1;
        for (std::size_t i = k + 1; i < n; ++i) {
            const double l = lu_(i, k) * inv_pivot;
            lu_(i, k) = l;
            if (l != 0.0) kern.axpy(-l, urow, lu_.row(i).data() + k + 1, n - k - 1);
        }
    }
}

std::vector<double> LuFactorization::solve(std::span<const double> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw DimensionError("LU solve: rhs length mismatch");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
        x[i] = s / lu_(i, i);
    }
    return x;
}

DenseMatrix LuFactorization::solve(const DenseMatrix& b) const {
    const std::size_t n = size();
    if (b.rows() != n) throw DimensionError("LU solve: rhs rows mismatch");
    const std::size_t m = b.cols();
    const auto& kern = kernels::active();
    DenseMatrix x(n, m);
    for (std::size_t i = 0; i < n; ++i)
        std::copy(b.row(perm_[i]).begin(), b.row(perm_[i]).end(), x.row(i).begin());
    // Row-oriented substitution keeps the inner loop an axpy over the rhs width.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const double l = lu_(i, j);
            if (l != 0.0) kern.axpy(-l, x.row(j).data(), x.row(i).data(), m);
        }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double u = lu_(i, j);
            if (u != 0.0) kern.axpy(-u, x.row(j).data(), x.row(i).data(), m);
        }
        const double inv = 1.0 / lu_(i, i);
        for (double& v : x.row(i)) v *= inv;
    }
    return x;
}

DenseMatrix LuFactorization::inverse() const { return solve(DenseMatrix::identity(size())); }

DenseMatrix lu_invert(const DenseMatrix& a) { return LuFactorization(a).inverse(); }

std::vector<double> lu_solve(const DenseMatrix& a, std::span<const double> b) {
    return LuFactorization(a).solve(b);
}

// ------------------------------------------------------------------------ QR

namespace {

struct Householder {
    DenseMatrix work;                       // R in the upper triangle
    std::vector<std::vector<double>> vs;    // unit reflector vectors, v_j acts on rows j..m-1
};

Householder householder(const DenseMatrix& a) {
    Householder h{a, {}};
    auto& w = h.work;
    const std::size_t m = w.rows(), n = w.cols(), k = std::min(m, n);
    h.vs.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> v(m - j);
        double norm2 = 0.0;
        for (std::size_t i = j; i < m; ++i) {
            v[i - j] = w(i, j);
            norm2 += v[i - j] * v[i - j];
        }
        const double norm = std::sqrt(norm2);
        if (norm == 0.0) {
            h.vs[j].assign(m - j, 0.0);
            continue;
        }
        const double alpha = v[0] >= 0.0 ? -norm : norm;
        v[0] -= alpha;
        double vnorm = 0.0;
        for (double x : v) vnorm += x * x;
        vnorm = std::sqrt(vnorm);
        if (vnorm == 0.0) {
            h.vs[j].assign(m - j, 0.0);
            continue;
        }
        for (double& x : v) x /= vnorm;
        for (std::size_t c = j; c < n; ++c) {
            double s = 0.0;
            for (std::size_t i = j; i < m; ++i) s += v[i - j] * w(i, c);
            s *= 2.0;
            for (std::size_t i = j; i < m; ++i) w(i, c) -= s * v[i - j];
        }
        for (std::size_t i = j + 1; i < m; ++i) w(i, j) = 0.0;
        h.vs[j] = std::move(v);
    }
    return h;
}

// Q (m x cols) = H_0 H_1 ... H_{k-1} applied to the first `cols` columns of I.
DenseMatrix form_q(const Householder& h, std::size_t m, std::size_t cols) {
    DenseMatrix q = DenseMatrix::identity(m, cols);
    for (std::size_t j = h.vs.size(); j-- > 0;) {
        const auto& v = h.vs[j];
        for (std::size_t c = 0; c < cols; ++c) {
            double s = 0.0;
            for (std::size_t i = j; i < m; ++i) s += v[i - j] * q(i, c);
            if (s == 0.0) continue;
            s *= 2.0;
            for (std::size_t i = j; i < m; ++i) q(i, c) -= s * v[i - j];
        }
    }
    return q;
}

}  // namespace

QrResult qr_decompose(const DenseMatrix& a) {
    const std::size_t m = a.rows(), n = a.cols(), k = std::min(m, n);
    auto h = householder(a);
    DenseMatrix q = form_q(h, m, k);
    DenseMatrix r(k, n);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < n; ++j) r(i, j) = h.work(i, j);
    for (std::size_t i = 0; i < k; ++i) {
        if (r(i, i) < 0.0) {
            for (std::size_t j = i; j < n; ++j) r(i, j) = -r(i, j);
            for (std::size_t row = 0; row < m; ++row) q(row, i) = -q(row, i);
        }
    }
    return {std::move(q), std::move(r)};
}

// ------------------------------------------------------------------ Cholesky

DenseMatrix cholesky(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("cholesky requires a square matrix");
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > 0.0))
            throw DefinitenessError(
                "cholesky: leading minor of order " + std::to_string(j + 1) + " is not positive",
                j + 1);
        const double ljj = std::sqrt(d);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

// ------------------------------------------------------------- least squares

LeastSquaresResult least_squares(const DenseMatrix& f, const DenseMatrix& y) {
    if (f.rows() != y.rows()) throw DimensionError("least_squares: row mismatch");
    const std::size_t rows = f.rows(), d = f.cols(), c = y.cols();
    LeastSquaresResult out;
    if (rows >= d) {
        auto [q, r] = qr_decompose(f);
        double rmax = 0.0;
        for (std::size_t i = 0; i < d; ++i) rmax = std::max(rmax, std::abs(r(i, i)));
        for (std::size_t i = 0; i < d; ++i)
            if (std::abs(r(i, i)) <= 1e-14 * rmax || rmax == 0.0)
                throw SingularityError("least_squares: rank-deficient design matrix", i);
        double rmin = rmax;
        for (std::size_t i = 0; i < d; ++i) rmin = std::min(rmin, std::abs(r(i, i)));
        out.rcond = rmin / rmax;
        DenseMatrix x = matmul_tn(q, y);  // d x c
        for (std::size_t i = d; i-- > 0;) {
            for (std::size_t j = i + 1; j < d; ++j) {
                const double rij = r(i, j);
                for (std::size_t k = 0; k < c; ++k) x(i, k) -= rij * x(j, k);
            }
            const double inv = 1.0 / r(i, i);
            for (std::size_t k = 0; k < c; ++k) x(i, k) *= inv;
        }
        out.x = std::move(x);
        return out;
    }
    // Minimum norm: F^T = Q R, F = R^T Q^T, X = Q R^{-T} Y.
    auto [q, r] = qr_decompose(f.transposed());  // q: d x rows, r: rows x rows
    DenseMatrix z = y;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double rji = r(j, i);
            for (std::size_t k = 0; k < c; ++k) z(i, k) -= rji * z(j, k);
        }
        if (r(i, i) == 0.0) throw SingularityError("least_squares: rank-deficient design", i);
        const double inv = 1.0 / r(i, i);
        for (std::size_t k = 0; k < c; ++k) z(i, k) *= inv;
    }
    out.x = matmul(q, z);
    out.underdetermined = true;
    return out;
}

}  // namespace neumatc
