#include <cmath>
#include <string>

#include "neumatc/baselines.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

namespace {

double norm2(const std::vector<double>& v) {
    return std::sqrt(kernels::active().sum_squares(v.data(), v.size()));
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    return kernels::active().dot(a.data(), b.data(), a.size());
}

double true_relres(const SparseCsr& a, std::span<const double> b, const std::vector<double>& x,
                   double bnorm) {
    auto ax = a.multiply(x);
    double s = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) s += (ax[i] - b[i]) * (ax[i] - b[i]);
    return std::sqrt(s) / bnorm;
}

SparseSolveResult conjugate_gradient(const SparseCsr& a, std::span<const double> b, double tol,
                                     std::size_t max_iter, std::vector<double> x) {
    const auto& k = kernels::active();
    const std::size_t n = b.size();
    const double bnorm = std::sqrt(k.sum_squares(b.data(), n));
    std::vector<double> r(n), ap(n);
    a.multiply(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    std::vector<double> p = r;
    double rr = dotv(r, r);
    if (std::sqrt(rr) / bnorm <= tol) return {std::move(x), 0, std::sqrt(rr) / bnorm};
    for (std::size_t it = 1; it <= max_iter; ++it) {
        a.multiply(p, ap);
        const double pap = dotv(p, ap);
        if (!(pap > 0.0))
            throw ConvergenceError("cg: breakdown (matrix not positive definite?)",
                                   std::sqrt(rr) / bnorm);
        const double alpha = rr / pap;
        k.axpy(alpha, p.data(), x.data(), n);
        k.axpy(-alpha, ap.data(), r.data(), n);
        const double rr_new = dotv(r, r);
        if (std::sqrt(rr_new) / bnorm <= tol) {
            const double res = true_relres(a, b, x, bnorm);
            if (res <= tol) return {std::move(x), it, res};
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    const double res = true_relres(a, b, x, bnorm);
    throw ConvergenceError("cg: no convergence in " + std::to_string(max_iter) + " iterations", res);
}

SparseSolveResult bicgstab(const SparseCsr& a, std::span<const double> b, double tol,
                           std::size_t max_iter, std::vector<double> x) {
    const auto& k = kernels::active();
    const std::size_t n = b.size();
    const double bnorm = std::sqrt(k.sum_squares(b.data(), n));
    std::vector<double> r(n), v(n, 0.0), p(n, 0.0), s(n), t(n);
    a.multiply(x, t);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
    const std::vector<double> rhat = r;
    if (norm2(r) / bnorm <= tol) return {std::move(x), 0, norm2(r) / bnorm};
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    for (std::size_t it = 1; it <= max_iter; ++it) {
        const double rho_new = dotv(rhat, r);
        if (rho_new == 0.0 || omega == 0.0)
            throw ConvergenceError("bicgstab: breakdown", norm2(r) / bnorm);
        const double beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        a.multiply(p, v);
        const double rv = dotv(rhat, v);
        if (rv == 0.0) throw ConvergenceError("bicgstab: breakdown", norm2(r) / bnorm);
        alpha = rho / rv;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) / bnorm <= tol) {
            k.axpy(alpha, p.data(), x.data(), n);
            const double res = true_relres(a, b, x, bnorm);
            if (res <= tol) return {std::move(x), it, res};
            // Recurrence drifted; restart the residual from the true value.
            a.multiply(x, t);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
            continue;
        }
        a.multiply(s, t);
        const double tt = dotv(t, t);
        omega = tt > 0.0 ? dotv(t, s) / tt : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i] + omega * s[i];
            r[i] = s[i] - omega * t[i];
        }
        if (norm2(r) / bnorm <= tol) {
            const double res = true_relres(a, b, x, bnorm);
            if (res <= tol) return {std::move(x), it, res};
            a.multiply(x, t);
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
        }
    }
    const double res = true_relres(a, b, x, bnorm);
    throw ConvergenceError("bicgstab: no convergence in " + std::to_string(max_iter) + " iterations",
                           res);
}

}  // namespace

SparseSolveResult sparse_solve(const SparseCsr& a, std::span<const double> b, KrylovMethod method,
                               double tol, std::size_t max_iter, std::span<const double> x0) {
    if (a.rows() != a.cols()) throw DimensionError("sparse_solve: matrix must be square");
    if (b.size() != a.rows()) throw DimensionError("sparse_solve: rhs length mismatch");
    if (!(tol > 0.0)) throw ArgumentError("sparse_solve: tol must be positive");
    std::vector<double> x(a.rows(), 0.0);
    if (!x0.empty()) {
        if (x0.size() != x.size()) throw DimensionError("sparse_solve: x0 length mismatch");
        x.assign(x0.begin(), x0.end());
    }
    double bn = 0.0;
    for (double v : b) bn += v * v;
    if (bn == 0.0) return {std::vector<double>(a.rows(), 0.0), 0, 0.0};
    return method == KrylovMethod::Cg ? conjugate_gradient(a, b, tol, max_iter, std::move(x))
                                      : bicgstab(a, b, tol, max_iter, std::move(x));
}

}  // namespace neumatc
