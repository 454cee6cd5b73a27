#include "neumatc/residuals.hpp"

#include <string>

#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

namespace {

void check_shapes(const OperationKind& kind, const MatrixOperand& a,
                  std::span<const DenseMatrix> g) {
    OperationKind k = kind;
    if (k.op == OpKind::Svd && g.size() == 3) k.rank = g[1].rows();
    const auto shapes = component_shapes(k, operand_rows(a), operand_cols(a));
    if (g.size() != shapes.size())
        throw DimensionError(std::string(op_name(kind.op)) + " residual expects " +
                             std::to_string(shapes.size()) + " components, got " +
                             std::to_string(g.size()));
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g[i].rows() != shapes[i].n1 || g[i].cols() != shapes[i].n2)
            throw DimensionError("residual: component " + std::to_string(i) + " has shape " +
                                 std::to_string(g[i].rows()) + "x" + std::to_string(g[i].cols()) +
                                 ", expected " + std::to_string(shapes[i].n1) + "x" +
                                 std::to_string(shapes[i].n2));
}

DenseMatrix scale_columns(DenseMatrix m, const DenseMatrix& s) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= s(j, 0);
    return m;
}

DenseMatrix minus_identity(DenseMatrix m) {
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) m(i, i) -= 1.0;
    return m;
}

struct Evaluated {
    ResidualSet set;
    std::vector<DenseMatrix> grad;
};

Evaluated evaluate_residual(const OperationKind& kind, const MatrixOperand& a,
                            std::span<const DenseMatrix> g, std::span<const double> b,
                            bool want_grad) {
    check_shapes(kind, a, g);
    Evaluated ev;
    auto& blocks = ev.set.blocks;
    switch (kind.op) {
        case OpKind::Inverse: {
            DenseMatrix r = minus_identity(operand_multiply(a, g[0]));
            if (want_grad) ev.grad.push_back(2.0 * operand_transpose_multiply(a, r));
            blocks.push_back({"inverse", std::move(r)});
            break;
        }
        case OpKind::Svd: {
            const auto& u = g[0];
            const auto& s = g[1];
            const auto& v = g[2];
            const DenseMatrix us = scale_columns(u, s);
            DenseMatrix r1 = operand_dense(a) - matmul_nt(us, v);
            DenseMatrix r2 = minus_identity(matmul_tn(u, u));
            DenseMatrix r3 = minus_identity(matmul_tn(v, v));
            if (want_grad) {
                const DenseMatrix r1v = matmul(r1, v);
                DenseMatrix gu = -2.0 * scale_columns(r1v, s);
                gu += 4.0 * matmul(u, r2);
                DenseMatrix gv = -2.0 * scale_columns(matmul_tn(r1, u), s);
                gv += 4.0 * matmul(v, r3);
                DenseMatrix gs(s.rows(), 1);
                for (std::size_t k = 0; k < s.rows(); ++k) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < u.rows(); ++i) acc += u(i, k) * r1v(i, k);
                    gs(k, 0) = -2.0 * acc;
                }
                ev.grad = {std::move(gu), std::move(gs), std::move(gv)};
            }
            blocks.push_back({"reconstruction", std::move(r1)});
            blocks.push_back({"orthoU", std::move(r2)});
            blocks.push_back({"orthoV", std::move(r3)});
            break;
        }
        case OpKind::Qr: {
            const auto& q = g[0];
            const auto& rr = g[1];
            DenseMatrix r1 = operand_dense(a) - matmul(q, rr);
            DenseMatrix r2 = minus_identity(matmul_tn(q, q));
            if (want_grad) {
                DenseMatrix gq = -2.0 * matmul_nt(r1, rr);
                gq += 4.0 * matmul(q, r2);
                ev.grad = {std::move(gq), -2.0 * matmul_tn(q, r1)};
            }
            blocks.push_back({"reconstruction", std::move(r1)});
            blocks.push_back({"orthoQ", std::move(r2)});
            break;
        }
        case OpKind::Cholesky: {
            const auto& l = g[0];
            DenseMatrix r1 = operand_dense(a) - matmul_nt(l, l);
            if (want_grad) ev.grad.push_back(-2.0 * matmul(r1 + r1.transposed(), l));
            blocks.push_back({"reconstruction", std::move(r1)});
            break;
        }
        case OpKind::Expm: {
            DenseMatrix r = operand_multiply(a, g[0]) - matmul(g[0], operand_dense(a));
            if (want_grad) {
                // d/dG ||AG - GA||^2 = 2 (A^T R - R A^T)
                DenseMatrix ad = operand_dense(a);
                ev.grad.push_back(2.0 * (matmul_tn(ad, r) - matmul_nt(r, ad)));
            }
            blocks.push_back({"commutation", std::move(r)});
            break;
        }
        case OpKind::LinSolve: {
            if (b.empty()) throw ArgumentError("linsolve residual needs a right-hand side");
            if (b.size() != operand_rows(a)) throw DimensionError("linsolve: rhs length mismatch");
            DenseMatrix r = operand_multiply(a, g[0]);
            for (std::size_t i = 0; i < r.rows(); ++i) r(i, 0) -= b[i];
            if (want_grad) ev.grad.push_back(2.0 * operand_transpose_multiply(a, r));
            blocks.push_back({"linsolve", std::move(r)});
            break;
        }
    }
    double total = 0.0;
    for (const auto& blk : blocks) total += fro_norm_sq(blk.value);
    ev.set.squared_fro_total = total;
    return ev;
}

DenseMatrix stack(std::span<const std::vector<double>> pts, std::size_t k) {
    DenseMatrix p(pts.size(), k);
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (pts[j].size() != k) throw DimensionError("loss: parameter dimension mismatch");
        std::copy(pts[j].begin(), pts[j].end(), p.row(j).begin());
    }
    return p;
}

std::vector<DenseMatrix> unflatten(const NeuMatCModel& model,
                                   const std::vector<ComponentForward>& fwd, std::size_t b) {
    std::vector<DenseMatrix> out;
    for (std::size_t i = 0; i < fwd.size(); ++i) {
        const auto& sh = model.components()[i].shape;
        auto r = fwd[i].out.row(b);
        out.emplace_back(sh.n1, sh.n2, std::vector<double>(r.begin(), r.end()));
    }
    return out;
}

LossAndGradient loss_impl(const NeuMatCModel& model, const SupervisedSet& data,
                          const CollocationData& col, double lambda, bool want_grad) {
    if (data.params.size() != data.targets.size())
        throw DimensionError("loss: supervised params and targets differ in length");
    if (col.params.size() != col.operands.size())
        throw DimensionError("loss: collocation params and operands differ in length");
    LossAndGradient out;
    out.loss.lambda = lambda;
    if (want_grad) out.grad = ModelGradients::zeros_like(model);
    const std::size_t m = model.components().size();
    const auto& kern = kernels::active();

    if (!data.params.empty()) {
        const auto fwd = forward_components(model, stack(data.params, model.param_dim()));
        std::vector<DenseMatrix> d_out;
        for (std::size_t i = 0; i < m; ++i) d_out.emplace_back(fwd[i].out.rows(), fwd[i].out.cols());
        double fid = 0.0;
        for (std::size_t j = 0; j < data.params.size(); ++j) {
            if (data.targets[j].size() != m) throw DimensionError("loss: target component count");
            for (std::size_t i = 0; i < m; ++i) {
                const auto& t = data.targets[j][i];
                auto row = fwd[i].out.row(j);
                if (t.size() != row.size()) throw DimensionError("loss: target shape mismatch");
                fid += kern.sum_sq_diff(row.data(), t.data().data(), row.size());
                if (want_grad) {
                    auto g = d_out[i].row(j);
                    for (std::size_t e = 0; e < row.size(); ++e) g[e] = 2.0 * (row[e] - t.data()[e]);
                }
            }
        }
        out.loss.data_fidelity = fid;
        if (want_grad) backward_components(model, fwd, d_out, out.grad);
    }

    if (!col.params.empty()) {
        const auto fwd = forward_components(model, stack(col.params, model.param_dim()));
        std::vector<DenseMatrix> d_out;
        for (std::size_t i = 0; i < m; ++i) d_out.emplace_back(fwd[i].out.rows(), fwd[i].out.cols());
        double structure = 0.0;
        for (std::size_t j = 0; j < col.params.size(); ++j) {
            const auto g = unflatten(model, fwd, j);
            auto ev = evaluate_residual(model.kind(), col.operands[j], g, col.rhs, want_grad);
            structure += ev.set.squared_fro_total;
            if (want_grad)
                for (std::size_t i = 0; i < m; ++i) {
                    auto dst = d_out[i].row(j);
                    const auto src = ev.grad[i].data();
                    for (std::size_t e = 0; e < dst.size(); ++e) dst[e] = lambda * src[e];
                }
        }
        out.loss.structure = structure;
        if (want_grad && lambda != 0.0) backward_components(model, fwd, d_out, out.grad);
    }
    out.loss.total = out.loss.data_fidelity + lambda * out.loss.structure;
    return out;
}

}  // namespace

ResidualSet structure_residual(const OperationKind& kind, const MatrixOperand& a,
                               std::span<const DenseMatrix> g_hat, std::span<const double> b) {
    return evaluate_residual(kind, a, g_hat, b, false).set;
}

std::vector<DenseMatrix> structure_residual_grad(const OperationKind& kind, const MatrixOperand& a,
                                                 std::span<const DenseMatrix> g_hat,
                                                 std::span<const double> b) {
    return evaluate_residual(kind, a, g_hat, b, true).grad;
}

double data_fidelity(std::span<const DenseMatrix> g_hat, std::span<const DenseMatrix> g_target) {
    if (g_hat.size() != g_target.size())
        throw DimensionError("data_fidelity: component count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < g_hat.size(); ++i) {
        if (g_hat[i].rows() != g_target[i].rows() || g_hat[i].cols() != g_target[i].cols())
            throw DimensionError("data_fidelity: component " + std::to_string(i) +
                                 " shape mismatch");
        s += kernels::active().sum_sq_diff(g_hat[i].data().data(), g_target[i].data().data(),
                                           g_hat[i].size());
    }
    return s;
}

LossBreakdown total_loss(const NeuMatCModel& model, const SupervisedSet& data,
                         const CollocationData& col, double lambda) {
    return loss_impl(model, data, col, lambda, false).loss;
}

LossAndGradient total_loss_grad(const NeuMatCModel& model, const SupervisedSet& data,
                                const CollocationData& col, double lambda) {
    return loss_impl(model, data, col, lambda, true);
}

}  // namespace neumatc
