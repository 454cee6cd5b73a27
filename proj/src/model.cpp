#include "neumatc/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "neumatc/baselines.hpp"
#include "neumatc/binary_io.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

std::string_view op_name(OpKind k) {
    switch (k) {
        case OpKind::Inverse: return "inverse";
        case OpKind::Svd: return "svd";
        case OpKind::Qr: return "qr";
        case OpKind::Cholesky: return "cholesky";
        case OpKind::Expm: return "expm";
        case OpKind::LinSolve: return "linsolve";
    }
    return "unknown";
}

OpKind parse_op(std::string_view name) {
    for (OpKind k : {OpKind::Inverse, OpKind::Svd, OpKind::Qr, OpKind::Cholesky, OpKind::Expm,
                     OpKind::LinSolve})
        if (op_name(k) == name) return k;
    throw ArgumentError("unknown operation '" + std::string(name) +
                        "' (expected inverse|svd|qr|cholesky|expm|linsolve)");
}

std::vector<ComponentShape> component_shapes(const OperationKind& kind, std::size_t rows,
                                             std::size_t cols) {
    if (rows == 0 || cols == 0) throw DimensionError("component_shapes: empty input shape");
    const auto need_square = [&] {
        if (rows != cols)
            throw DimensionError(std::string(op_name(kind.op)) + " requires a square input, got " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    };
    const std::size_t k = std::min(rows, cols);
    switch (kind.op) {
        case OpKind::Inverse:
        case OpKind::Expm: need_square(); return {{rows, cols, Structure::None}};
        case OpKind::Cholesky: need_square(); return {{rows, cols, Structure::LowerSoftplus}};
        case OpKind::LinSolve: need_square(); return {{rows, 1, Structure::None}};
        case OpKind::Svd: {
            const std::size_t r = kind.rank == 0 ? k : kind.rank;
            if (r > k) throw DimensionError("svd rank " + std::to_string(r) + " exceeds min(n1, n2)");
            return {{rows, r, Structure::None}, {r, 1, Structure::Abs}, {cols, r, Structure::None}};
        }
        case OpKind::Qr:
            if (kind.rank != 0 && kind.rank != k)
                throw DimensionError("qr supports only the full thin factorization");
            return {{rows, k, Structure::None}, {k, cols, Structure::Upper}};
    }
    throw ArgumentError("component_shapes: unknown kind");
}

bool entry_free(Structure s, std::size_t i, std::size_t j) {
    switch (s) {
        case Structure::Upper: return i <= j;
        case Structure::LowerSoftplus: return i >= j;
        default: return true;
    }
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double softplus_inverse(double y) {
    if (!(y > 0.0)) throw DomainError("softplus_inverse: argument must be positive");
    return y + std::log(-std::expm1(-y));
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double structured(Structure s, std::size_t i, std::size_t j, double raw) {
    switch (s) {
        case Structure::None: return raw;
        case Structure::Abs: return std::abs(raw);
        case Structure::Upper: return i <= j ? raw : 0.0;
        case Structure::LowerSoftplus: return i < j ? 0.0 : (i == j ? softplus(raw) : raw);
    }
    return raw;
}

double structured_deriv(Structure s, std::size_t i, std::size_t j, double raw) {
    switch (s) {
        case Structure::None: return 1.0;
        case Structure::Abs: return raw > 0.0 ? 1.0 : (raw < 0.0 ? -1.0 : 0.0);
        case Structure::Upper: return i <= j ? 1.0 : 0.0;
        case Structure::LowerSoftplus: return i < j ? 0.0 : (i == j ? sigmoid(raw) : 1.0);
    }
    return 1.0;
}

// Target value -> raw value the latent has to produce.
double unstructured(Structure s, std::size_t i, std::size_t j, double value) {
    switch (s) {
        case Structure::None:
        case Structure::Abs: return value;
        case Structure::Upper: return i <= j ? value : 0.0;
        case Structure::LowerSoftplus:
            return i < j ? 0.0 : (i == j ? softplus_inverse(value) : value);
    }
    return value;
}

DenseMatrix stack_points(std::span<const std::vector<double>> points, std::size_t k) {
    DenseMatrix p(points.size(), k);
    for (std::size_t b = 0; b < points.size(); ++b) {
        if (points[b].size() != k)
            throw DimensionError("parameter point " + std::to_string(b) + " has dimension " +
                                 std::to_string(points[b].size()) + ", expected " +
                                 std::to_string(k));
        for (double x : points[b])
            if (!std::isfinite(x)) throw DomainError("non-finite parameter point");
        std::copy(points[b].begin(), points[b].end(), p.row(b).begin());
    }
    return p;
}

DenseMatrix row_as_matrix(const DenseMatrix& flat, std::size_t b, std::size_t n1, std::size_t n2) {
    auto r = flat.row(b);
    return DenseMatrix(n1, n2, std::vector<double>(r.begin(), r.end()));
}

void sort_svd(std::vector<DenseMatrix>& c) {
    auto& u = c[0];
    auto& s = c[1];
    auto& v = c[2];
    const std::size_t r = s.rows();
    std::vector<std::size_t> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return s(a, 0) > s(b, 0); });
    DenseMatrix u2(u.rows(), r), s2(r, 1), v2(v.rows(), r);
    for (std::size_t k = 0; k < r; ++k) {
        s2(k, 0) = s(order[k], 0);
        for (std::size_t i = 0; i < u.rows(); ++i) u2(i, k) = u(i, order[k]);
        for (std::size_t i = 0; i < v.rows(); ++i) v2(i, k) = v(i, order[k]);
    }
    u = std::move(u2);
    s = std::move(s2);
    v = std::move(v2);
}

}  // namespace

ParamDomain ParamDomain::unit(std::size_t k) {
    return {std::vector<double>(k, 0.0), std::vector<double>(k, 1.0)};
}

bool ParamDomain::contains(std::span<const double> p) const {
    if (p.size() != dim()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] >= lower[i] && p[i] <= upper[i])) return false;
    return true;
}

NeuMatCModel::NeuMatCModel(OperationKind kind, std::size_t input_rows, std::size_t input_cols,
                           ParamDomain domain, std::vector<Component> components)
    : kind_(kind), rows_(input_rows), cols_(input_cols), domain_(std::move(domain)),
      components_(std::move(components)) {
    const std::size_t k = domain_.dim();
    if (k == 0 || k > 4) throw DimensionError("parameter dimension must be in 1..4");
    if (domain_.upper.size() != k) throw DimensionError("domain bounds differ in length");
    for (std::size_t i = 0; i < k; ++i)
        if (!(domain_.lower[i] < domain_.upper[i]))
            throw DimensionError("domain lower bound must be below upper bound on axis " +
                                 std::to_string(i));
    const auto shapes = component_shapes(kind_, rows_, cols_);
    if (shapes.size() != components_.size())
        throw DimensionError(std::string(op_name(kind_.op)) + " expects " +
                             std::to_string(shapes.size()) + " components, got " +
                             std::to_string(components_.size()));
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        auto& c = components_[i];
        c.shape = shapes[i];
        if (c.latent.n1() != shapes[i].n1 || c.latent.n2() != shapes[i].n2)
            throw DimensionError("component " + std::to_string(i) + " latent shape mismatch");
        if (c.latent.n3() == 0) throw DimensionError("component " + std::to_string(i) + " has d = 0");
        if (c.net.input_dim() != k || c.net.output_dim() != c.latent.n3())
            throw DimensionError("component " + std::to_string(i) + " net does not match latent");
    }
}

std::size_t NeuMatCModel::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& c : components_) n += c.latent.size() + c.net.parameter_count();
    return n;
}

std::vector<ComponentForward> forward_components(const NeuMatCModel& model,
                                                 const DenseMatrix& points) {
    std::vector<ComponentForward> out;
    out.reserve(model.components().size());
    for (const auto& c : model.components()) {
        ComponentForward f;
        f.tape = forward_tape(c.net, points);
        f.raw = mode3_apply_batch(c.latent, f.tape.output);
        f.out = f.raw;
        if (c.shape.structure != Structure::None) {
            const std::size_t n2 = c.shape.n2;
            for (std::size_t b = 0; b < f.raw.rows(); ++b) {
                auto row = f.out.row(b);
                for (std::size_t e = 0; e < row.size(); ++e)
                    row[e] = structured(c.shape.structure, e / n2, e % n2, row[e]);
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<Prediction> predict_batch(const NeuMatCModel& model,
                                      std::span<const std::vector<double>> points) {
    std::vector<Prediction> out;
    if (points.empty()) return out;
    const DenseMatrix p = stack_points(points, model.param_dim());
    const auto fwd = forward_components(model, p);
    out.resize(points.size());
    for (std::size_t b = 0; b < points.size(); ++b) {
        auto& pred = out[b];
        pred.out_of_domain = !model.domain().contains(points[b]);
        for (std::size_t i = 0; i < fwd.size(); ++i) {
            const auto& sh = model.components()[i].shape;
            pred.components.push_back(row_as_matrix(fwd[i].out, b, sh.n1, sh.n2));
        }
        if (model.kind().op == OpKind::Svd) sort_svd(pred.components);
    }
    return out;
}

Prediction predict(const NeuMatCModel& model, std::span<const double> p) {
    std::vector<std::vector<double>> one{std::vector<double>(p.begin(), p.end())};
    return std::move(predict_batch(model, one).front());
}

std::vector<std::vector<DenseMatrix>> evaluate_batch(const NeuMatCModel& model,
                                                     std::span<const std::vector<double>> points) {
    std::vector<std::vector<DenseMatrix>> out(points.size());
    if (points.empty()) return out;
    const auto fwd = forward_components(model, stack_points(points, model.param_dim()));
    for (std::size_t b = 0; b < points.size(); ++b)
        for (std::size_t i = 0; i < fwd.size(); ++i) {
            const auto& sh = model.components()[i].shape;
            out[b].push_back(row_as_matrix(fwd[i].out, b, sh.n1, sh.n2));
        }
    return out;
}

std::vector<DenseMatrix> evaluate(const NeuMatCModel& model, std::span<const double> p) {
    std::vector<std::vector<double>> one{std::vector<double>(p.begin(), p.end())};
    return std::move(evaluate_batch(model, one).front());
}

// ------------------------------------------------------------------ gradients

ModelGradients ModelGradients::zeros_like(const NeuMatCModel& model) {
    ModelGradients g;
    for (const auto& c : model.components()) {
        g.latent.emplace_back(c.latent.n1(), c.latent.n2(), c.latent.n3());
        g.net.push_back(MlpGradients::zeros_like(c.net));
    }
    return g;
}

ModelGradients& ModelGradients::operator+=(const ModelGradients& o) {
    if (o.latent.size() != latent.size()) throw DimensionError("ModelGradients: mismatch");
    for (std::size_t i = 0; i < latent.size(); ++i) {
        auto a = latent[i].data();
        auto b = o.latent[i].data();
        for (std::size_t e = 0; e < a.size(); ++e) a[e] += b[e];
        for (std::size_t l = 0; l < net[i].weight.size(); ++l) {
            net[i].weight[l] += o.net[i].weight[l];
            for (std::size_t j = 0; j < net[i].bias[l].size(); ++j)
                net[i].bias[l][j] += o.net[i].bias[l][j];
        }
    }
    return *this;
}

ModelGradients& ModelGradients::operator*=(double s) {
    for (std::size_t i = 0; i < latent.size(); ++i) {
        for (double& x : latent[i].data()) x *= s;
        for (std::size_t l = 0; l < net[i].weight.size(); ++l) {
            net[i].weight[l] *= s;
            for (double& x : net[i].bias[l]) x *= s;
        }
    }
    return *this;
}

void backward_components(const NeuMatCModel& model, const std::vector<ComponentForward>& fwd,
                         const std::vector<DenseMatrix>& d_out, ModelGradients& grads) {
    const auto& comps = model.components();
    if (fwd.size() != comps.size() || d_out.size() != comps.size())
        throw DimensionError("backward_components: component count mismatch");
    const auto& kern = kernels::active();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const auto& c = comps[i];
        const std::size_t batch = fwd[i].raw.rows(), s = c.latent.slice_size(), d = c.latent.n3();
        if (d_out[i].rows() != batch || d_out[i].cols() != s)
            throw DimensionError("backward_components: upstream shape mismatch");
        if (batch == 0) continue;
        DenseMatrix draw = d_out[i];
        if (c.shape.structure != Structure::None) {
            const std::size_t n2 = c.shape.n2;
            for (std::size_t b = 0; b < batch; ++b) {
                auto g = draw.row(b);
                auto r = fwd[i].raw.row(b);
                for (std::size_t e = 0; e < s; ++e)
                    g[e] *= structured_deriv(c.shape.structure, e / n2, e % n2, r[e]);
            }
        }
        const auto& phi = fwd[i].tape.output;
        kern.gemm_tn(d, s, batch, phi.data().data(), d, draw.data().data(), s,
                     grads.latent[i].data().data(), s, true);
        DenseMatrix dphi(batch, d);
        kern.gemm_nt(batch, d, s, draw.data().data(), s, c.latent.data().data(), s,
                     dphi.data().data(), d, false);
        MlpGradients ng = backward(c.net, fwd[i].tape, dphi);
        for (std::size_t l = 0; l < ng.weight.size(); ++l) {
            grads.net[i].weight[l] += ng.weight[l];
            for (std::size_t j = 0; j < ng.bias[l].size(); ++j) grads.net[i].bias[l][j] += ng.bias[l][j];
        }
    }
}

std::vector<std::span<double>> parameter_blocks(NeuMatCModel& model) {
    std::vector<std::span<double>> out;
    for (auto& c : model.components()) {
        out.push_back(c.latent.data());
        for (auto& ly : c.net.layers()) {
            out.push_back(ly.weight.data());
            out.push_back(ly.bias);
        }
    }
    return out;
}

std::vector<std::span<const double>> gradient_blocks(const ModelGradients& grads) {
    std::vector<std::span<const double>> out;
    for (std::size_t i = 0; i < grads.latent.size(); ++i) {
        out.push_back(grads.latent[i].data());
        for (std::size_t l = 0; l < grads.net[i].weight.size(); ++l) {
            out.push_back(grads.net[i].weight[l].data());
            out.push_back(grads.net[i].bias[l]);
        }
    }
    return out;
}

void apply_masks(NeuMatCModel& model) {
    for (auto& c : model.components()) {
        if (c.shape.structure != Structure::Upper && c.shape.structure != Structure::LowerSoftplus)
            continue;
        for (std::size_t l = 0; l < c.latent.n3(); ++l)
            for (std::size_t i = 0; i < c.latent.n1(); ++i)
                for (std::size_t j = 0; j < c.latent.n2(); ++j)
                    if (!entry_free(c.shape.structure, i, j)) c.latent(i, j, l) = 0.0;
    }
}

// ------------------------------------------------------------- initialization

InitReport refit_latents(NeuMatCModel& model, std::span<const std::vector<double>> params,
                         std::span<const std::vector<DenseMatrix>> targets, double ridge) {
    if (params.empty()) throw ArgumentError("refit_latents: no supervised samples");
    if (params.size() != targets.size())
        throw DimensionError("refit_latents: params and targets differ in length");
    const DenseMatrix p = stack_points(params, model.param_dim());
    InitReport report;
    auto& comps = model.components();
    for (std::size_t i = 0; i < comps.size(); ++i) {
        auto& c = comps[i];
        const std::size_t n1 = c.shape.n1, n2 = c.shape.n2, s = n1 * n2, d = c.latent.n3();
        DenseMatrix y(params.size(), s);
        for (std::size_t j = 0; j < params.size(); ++j) {
            if (targets[j].size() != comps.size())
                throw DimensionError("refit_latents: target " + std::to_string(j) +
                                     " has the wrong component count");
            const auto& t = targets[j][i];
            if (t.rows() != n1 || t.cols() != n2)
                throw DimensionError("refit_latents: target " + std::to_string(j) + " component " +
                                     std::to_string(i) + " shape mismatch");
            for (std::size_t a = 0; a < n1; ++a)
                for (std::size_t b = 0; b < n2; ++b)
                    y(j, a * n2 + b) = unstructured(c.shape.structure, a, b, t(a, b));
        }
        const DenseMatrix phi = c.net.forward_batch(p);
        LeastSquaresResult ls;
        bool collapsed = false;
        try {
            ls = least_squares(phi, y);
            // Nearly collinear features give huge cancelling latents that
            // the first optimizer step destroys.
            collapsed = ls.rcond < 1e-8;
        } catch (const SingularityError&) {
            collapsed = true;
        }
        if (collapsed) {
            const double mu = std::sqrt(ridge) * std::max(fro_norm(phi), 1.0);
            DenseMatrix fa(phi.rows() + d, d), ya(phi.rows() + d, s);
            for (std::size_t r = 0; r < phi.rows(); ++r) {
                std::copy(phi.row(r).begin(), phi.row(r).end(), fa.row(r).begin());
                std::copy(y.row(r).begin(), y.row(r).end(), ya.row(r).begin());
            }
            for (std::size_t l = 0; l < d; ++l) fa(phi.rows() + l, l) = mu;
            ls = least_squares(fa, ya);
            report.regularized = true;
        }
        report.underdetermined = report.underdetermined || ls.underdetermined;
        std::copy(ls.x.data().begin(), ls.x.data().end(), c.latent.data().begin());
    }
    apply_masks(model);
    return report;
}

NeuMatCModel init_model(const OperationKind& kind, std::size_t rows, std::size_t cols,
                        const ParamDomain& domain, const ModelInitConfig& cfg,
                        std::span<const std::vector<double>> params,
                        std::span<const std::vector<DenseMatrix>> targets, InitReport* report) {
    const auto shapes = component_shapes(kind, rows, cols);
    if (cfg.d.size() != 1 && cfg.d.size() != shapes.size())
        throw DimensionError("init_model: need one d or one per component");
    std::mt19937_64 rng(cfg.seed);
    std::vector<Component> comps;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const std::size_t d = cfg.d.size() == 1 ? cfg.d[0] : cfg.d[i];
        if (d == 0) throw DimensionError("init_model: d must be at least 1");
        MlpConfig nc = cfg.net;
        nc.input_dim = domain.dim();
        nc.output_dim = d;
        Mlp net = Mlp::init(nc, rng);
        Tensor3 latent(shapes[i].n1, shapes[i].n2, d);
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(d)));
        for (double& x : latent.data()) x = nd(rng);
        comps.push_back({shapes[i], std::move(latent), std::move(net)});
    }
    NeuMatCModel model(kind, rows, cols, domain, std::move(comps));
    apply_masks(model);
    if (cfg.latent == LatentInit::WarmStart) {
        InitReport r = refit_latents(model, params, targets, cfg.ridge);
        if (report) *report = r;
    }
    return model;
}

// -------------------------------------------------------------- serialization

std::vector<std::uint8_t> serialize_model(const NeuMatCModel& model) {
    ByteWriter w;
    w.magic("NMC1");
    w.u8(kModelFormatVersion);
    w.u8(static_cast<std::uint8_t>(model.kind().op));
    w.u64(model.kind().rank);
    w.u64(model.input_rows());
    w.u64(model.input_cols());
    w.u64(model.param_dim());
    w.u64(model.components().size());
    w.f64s(model.domain().lower);
    w.f64s(model.domain().upper);
    for (const auto& c : model.components()) {
        w.u64(c.latent.n1());
        w.u64(c.latent.n2());
        w.u64(c.latent.n3());
        write_tensor_blob(w, c.latent);
        w.u64(c.net.depth());
        for (const auto& ly : c.net.layers()) {
            w.u64(ly.weight.rows());
            w.u64(ly.weight.cols());
            w.f64s(ly.weight.data());
            w.f64s(ly.bias);
        }
        w.f64(c.net.omega());
        w.u8(static_cast<std::uint8_t>(c.net.activation()));
    }
    return w.bytes();
}

NeuMatCModel deserialize_model(std::vector<std::uint8_t> bytes) {
    ByteReader r(std::move(bytes));
    r.expect_magic("NMC1");
    const std::size_t version_at = r.offset();
    const unsigned version = r.u8();
    if (version != kModelFormatVersion)
        throw UnsupportedVersionError(version, kModelFormatVersion, version_at);
    const std::size_t kind_at = r.offset();
    const unsigned op = r.u8();
    if (op > static_cast<unsigned>(OpKind::LinSolve))
        throw FormatError("unknown operation tag " + std::to_string(op), kind_at);
    OperationKind kind{static_cast<OpKind>(op), r.u64()};
    const std::size_t rows = r.u64(), cols = r.u64();
    const std::size_t k = r.u64(), m = r.u64();
    r.need_elements(k, 16, "domain bounds");
    ParamDomain domain{std::vector<double>(k), std::vector<double>(k)};
    r.f64s(domain.lower);
    r.f64s(domain.upper);
    r.need_elements(m, 8, "component table");
    std::vector<Component> comps;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t shape_at = r.offset();
        const std::size_t n1 = r.u64(), n2 = r.u64(), d = r.u64();
        Tensor3 latent = read_tensor_blob(r);
        if (latent.n1() != n1 || latent.n2() != n2 || latent.n3() != d)
            throw FormatError("latent blob disagrees with component header", shape_at);
        const std::size_t depth = r.u64();
        r.need_elements(depth, 16, "layer table");
        std::vector<Layer> layers;
        for (std::size_t l = 0; l < depth; ++l) {
            const std::size_t lr = r.u64(), lc = r.u64();
            if (lr != 0 && lc > r.remaining() / 8 / lr) throw FormatError("truncated layer", r.offset());
            Layer ly{DenseMatrix(lr, lc), std::vector<double>(lr)};
            r.f64s(ly.weight.data());
            r.f64s(ly.bias);
            layers.push_back(std::move(ly));
        }
        const double omega = r.f64();
        const std::size_t act_at = r.offset();
        const unsigned act = r.u8();
        if (act > static_cast<unsigned>(Activation::Gelu))
            throw FormatError("unknown activation tag " + std::to_string(act), act_at);
        try {
            Mlp net(std::move(layers), omega, static_cast<Activation>(act));
            comps.push_back({ComponentShape{n1, n2, Structure::None}, std::move(latent), std::move(net)});
        } catch (const Error& e) {
            throw FormatError(std::string("invalid network: ") + e.what(), act_at);
        }
    }
    if (!r.at_end()) throw FormatError("trailing bytes after model", r.offset());
    try {
        return NeuMatCModel(kind, rows, cols, std::move(domain), std::move(comps));
    } catch (const DimensionError& e) {
        throw FormatError(std::string("inconsistent model: ") + e.what(), r.offset());
    }
}

void save_model(const NeuMatCModel& model, const std::filesystem::path& path) {
    write_file_bytes(path, serialize_model(model));
}

NeuMatCModel load_model(const std::filesystem::path& path) {
    return deserialize_model(read_file_bytes(path));
}

}  // namespace neumatc
