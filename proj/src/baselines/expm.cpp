#include <array>
#include <cmath>

#include "neumatc/baselines.hpp"
#include "neumatc/errors.hpp"

namespace neumatc {

namespace {

constexpr std::array<double, 14> kB13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
    129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
    1323241920.0,        40840800.0,          960960.0,           16380.0,
    182.0,               1.0};

struct LowOrder {
    int degree;
    double theta;
    std::array<double, 10> b;
};

constexpr std::array<LowOrder, 4> kLow = {{
    {3, 1.495585217958292e-2, {120.0, 60.0, 12.0, 1.0}},
    {5, 2.539398330063230e-1, {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0}},
    {7, 9.504178996162932e-1,
     {17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0}},
    {9, 2.097847961257068e0,
     {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0,
      3960.0, 90.0, 1.0}},
}};

constexpr double kTheta13 = 5.371920351148152e0;

void add_scaled(DenseMatrix& acc, double s, const DenseMatrix& m) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data()[i] += s * m.data()[i];
}

DenseMatrix pade_solve(const DenseMatrix& u, const DenseMatrix& v) {
    // (V - U) X = (V + U)
    return LuFactorization(v - u).solve(v + u);
}

}  // namespace

DenseMatrix expm(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("expm requires a square matrix");
    if (!a.all_finite()) throw DomainError("expm: non-finite input");
    if (n == 0) return {};
    const DenseMatrix eye = DenseMatrix::identity(n);
    const double norm1 = l1_operator_norm(a);

    for (const auto& lo : kLow) {
        if (norm1 > lo.theta) continue;
        // Even powers A^0, A^2, ..., A^(degree-1).
        std::vector<DenseMatrix> even{eye};
        const DenseMatrix a2 = matmul(a, a);
        for (int p = 2; p < lo.degree; p += 2) even.push_back(p == 2 ? a2 : matmul(even.back(), a2));
        DenseMatrix uodd(n, n), v(n, n);
        for (std::size_t k = 0; k < even.size(); ++k) {
            add_scaled(uodd, lo.b[2 * k + 1], even[k]);
            add_scaled(v, lo.b[2 * k], even[k]);
        }
        return pade_solve(matmul(a, uodd), v);
    }

    int s = 0;
    if (norm1 > kTheta13) s = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    DenseMatrix as = a;
    if (s > 0) as *= std::ldexp(1.0, -s);
    const DenseMatrix a2 = matmul(as, as);
    const DenseMatrix a4 = matmul(a2, a2);
    const DenseMatrix a6 = matmul(a4, a2);
    const auto& b = kB13;

    DenseMatrix inner_u(n, n);
    add_scaled(inner_u, b[13], a6);
    add_scaled(inner_u, b[11], a4);
    add_scaled(inner_u, b[9], a2);
    DenseMatrix tu = matmul(a6, inner_u);
    add_scaled(tu, b[7], a6);
    add_scaled(tu, b[5], a4);
    add_scaled(tu, b[3], a2);
    add_scaled(tu, b[1], eye);
    const DenseMatrix u = matmul(as, tu);

    DenseMatrix inner_v(n, n);
    add_scaled(inner_v, b[12], a6);
    add_scaled(inner_v, b[10], a4);
    add_scaled(inner_v, b[8], a2);
    DenseMatrix v = matmul(a6, inner_v);
    add_scaled(v, b[6], a6);
    add_scaled(v, b[4], a4);
    add_scaled(v, b[2], a2);
    add_scaled(v, b[0], eye);

    DenseMatrix x = pade_solve(u, v);
    for (int i = 0; i < s; ++i) x = matmul(x, x);
    return x;
}

}  // namespace neumatc
