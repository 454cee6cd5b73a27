#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "neumatc/datagen.hpp"
#include "neumatc/errors.hpp"

namespace neumatc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

DenseMatrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    DenseMatrix m(rows, cols);
    for (double& x : m.data()) x = nd(rng);
    return m;
}

DenseMatrix uniform(std::size_t rows, std::size_t cols, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseMatrix m(rows, cols);
    for (double& x : m.data()) x = u(rng);
    return m;
}

void symmetrize_from_lower(DenseMatrix& h) {
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = i + 1; j < h.cols(); ++j) h(i, j) = h(j, i);
}

// ||X Y^T||_2 through thin QR factors of the tall inputs.
double product_spectral_norm(const DenseMatrix& x, const DenseMatrix& y) {
    const DenseMatrix rx = qr_decompose(x).r;
    const DenseMatrix ry = qr_decompose(y).r;
    return dense_svd(matmul_nt(rx, ry)).s.front();
}

class SinusoidalSource : public ParametricSource {
public:
    explicit SinusoidalSource(const SinusoidalGenConfig& cfg) : cfg_(cfg) {
        std::mt19937_64 rng(cfg.seed);
        const std::size_t n = cfg.n, r = cfg.r;
        a0_ = gaussian(n, r, rng);
        b0_ = gaussian(n, r, rng);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < r; ++c) {
                const double decay = 1.0 / std::sqrt(static_cast<double>(c + 1));
                a0_(i, c) *= decay;
                b0_(i, c) *= decay;
            }
        if (cfg.layout == FrequencyLayout::Full) {
            fa_ = uniform(n, r, 0.5, 1.5, rng);
            fb_ = uniform(n, r, 0.5, 1.5, rng);
        } else {
            const DenseMatrix f = uniform(1, r, 0.5, 1.5, rng);
            fa_ = DenseMatrix(n, r);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < r; ++c) fa_(i, c) = f(0, c);
            fb_ = fa_;
        }
        pa_ = uniform(n, r, 0.0, kTwoPi, rng);
        pb_ = uniform(n, r, 0.0, kTwoPi, rng);
        eps_ = cfg.eps;
    }

    void set_eps(double e) { eps_ = e; }
    double eps() const noexcept { return eps_; }

    DenseMatrix factor_a(double p) const {
        DenseMatrix a(cfg_.n, cfg_.r);
        for (std::size_t i = 0; i < a.size(); ++i)
            a.data()[i] = a0_.data()[i] * std::sin(kTwoPi * fa_.data()[i] * p + pa_.data()[i]);
        return a;
    }
    DenseMatrix factor_b(double p) const {
        if (cfg_.symmetric) return factor_a(p);
        DenseMatrix b(cfg_.n, cfg_.r);
        for (std::size_t i = 0; i < b.size(); ++i)
            b.data()[i] = b0_.data()[i] * std::cos(kTwoPi * fb_.data()[i] * p + pb_.data()[i]);
        return b;
    }

    std::size_t rows() const override { return cfg_.n; }
    std::size_t cols() const override { return cfg_.n; }
    ParamDomain domain() const override { return ParamDomain::unit(1); }

    MatrixOperand at(std::span<const double> p) const override {
        if (p.size() != 1) throw DimensionError("sinusoidal source takes a scalar parameter");
        DenseMatrix h = matmul_nt(factor_a(p[0]), factor_b(p[0]));
        for (std::size_t i = 0; i < cfg_.n; ++i) h(i, i) += eps_;
        if (cfg_.symmetric) symmetrize_from_lower(h);
        return h;
    }

private:
    SinusoidalGenConfig cfg_;
    DenseMatrix a0_, b0_, fa_, fb_, pa_, pb_;
    double eps_ = 0.0;
};

ParametricDataset make_dataset(const ParametricSource& src, std::vector<std::vector<double>> params,
                               OpKind op) {
    ParametricDataset d;
    d.kind = {op, 0};
    d.domain = src.domain();
    d.inputs = operands_at(src, params);
    d.params = std::move(params);
    d.rhs = src.rhs();
    return d;
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

SupervisedSet ParametricDataset::supervised() const { return {params, targets}; }

std::vector<std::vector<double>> linspace_points(double lo, double hi, std::size_t count) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back({lo + (hi - lo) * t});
    }
    return out;
}

std::vector<MatrixOperand> operands_at(const ParametricSource& src,
                                       std::span<const std::vector<double>> params) {
    std::vector<MatrixOperand> out;
    out.reserve(params.size());
    for (const auto& p : params) out.push_back(src.at(p));
    return out;
}

GeneratedData gen_sinusoidal(const SinusoidalGenConfig& cfg) {
    if (cfg.r == 0) throw ArgumentError("gen_sinusoidal: r must be at least 1");
    if (cfg.n < cfg.r) throw ArgumentError("gen_sinusoidal: need n >= r");
    if (!(cfg.eps > 0.0)) throw ArgumentError("gen_sinusoidal: eps must be positive");
    if (cfg.n_train == 0) throw ArgumentError("gen_sinusoidal: n_train must be positive");
    auto src = std::make_shared<SinusoidalSource>(cfg);
    auto train_p = linspace_points(0.0, 1.0, cfg.n_train);
    std::vector<std::vector<double>> test_p;
    for (std::size_t i = 0; i < cfg.n_test; ++i)
        test_p.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(cfg.n_test)});
    if (cfg.eps_relative) {
        double norm = 0.0;
        for (const auto* grid : {&train_p, &test_p})
            for (const auto& p : *grid)
                norm = std::max(norm, product_spectral_norm(src->factor_a(p[0]), src->factor_b(p[0])));
        src->set_eps(cfg.eps * norm);
    }
    GeneratedData out;
    out.train = make_dataset(*src, std::move(train_p), OpKind::Inverse);
    out.test = make_dataset(*src, std::move(test_p), OpKind::Inverse);
    for (auto* d : {&out.train, &out.test}) {
        d->metadata["generator"] = "sinusoidal";
        d->metadata["eps_absolute"] = fmt(src->eps());
    }
    out.source = std::move(src);
    return out;
}

// ------------------------------------------------------------ controlled rank

ControlledRankSource::ControlledRankSource(const ControlledRankGenConfig& cfg) : cfg_(cfg) {
    if (cfg.d == 0) throw ArgumentError("controlled rank: d must be at least 1");
    if (cfg.r == 0 || cfg.r > cfg.n) throw ArgumentError("controlled rank: need 1 <= r <= n");
    if (!(cfg.width_factor > 0.0)) throw ArgumentError("controlled rank: width must be positive");
    std::mt19937_64 rng(cfg.seed);
    const std::size_t n = cfg.n, r = cfg.r, d = cfg.d;
    const double scale = cfg.perturbation / std::sqrt(static_cast<double>(n));
    auto factor_latent = [&] {
        Tensor3 t(n, r, d);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (std::size_t l = 0; l < d; ++l)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < r; ++k) t(i, k, l) = (i == k ? 1.0 : 0.0) + scale * nd(rng);
        return t;
    };
    cu_ = factor_latent();
    cv_ = factor_latent();
    cs_ = Tensor3(r, 1, d);
    std::uniform_real_distribution<double> us(0.5, 1.5);
    for (double& x : cs_.data()) x = us(rng);
}

std::vector<double> ControlledRankSource::basis(double p) const {
    const std::size_t d = cfg_.d;
    if (d == 1) return {1.0};
    const double spacing = 1.0 / static_cast<double>(d - 1);
    const double w = cfg_.width_factor * spacing;
    std::vector<double> phi(d);
    double total = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        const double z = (p - static_cast<double>(l) * spacing) / w;
        phi[l] = std::exp(-0.5 * z * z);
        total += phi[l];
    }
    for (double& x : phi) x /= total;
    return phi;
}

SvdFactors ControlledRankSource::factors(double p) const {
    const auto phi = basis(p);
    return {mode3_apply(cu_, phi), mode3_apply(cs_, phi).values(), mode3_apply(cv_, phi)};
}

MatrixOperand ControlledRankSource::at(std::span<const double> p) const {
    if (p.size() != 1) throw DimensionError("controlled-rank source takes a scalar parameter");
    SvdFactors f = factors(p[0]);
    for (std::size_t i = 0; i < f.u.rows(); ++i)
        for (std::size_t k = 0; k < f.u.cols(); ++k) f.u(i, k) *= f.s[k];
    return matmul_nt(f.u, f.v);
}

GeneratedData gen_controlled_rank(const ControlledRankGenConfig& cfg) {
    auto src = std::make_shared<ControlledRankSource>(cfg);
    std::vector<std::vector<double>> test_p;
    for (std::size_t i = 0; i < cfg.n_test; ++i)
        test_p.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(cfg.n_test)});
    GeneratedData out;
    out.train = make_dataset(*src, linspace_points(0.0, 1.0, cfg.n_train), OpKind::Inverse);
    out.test = make_dataset(*src, std::move(test_p), OpKind::Inverse);
    for (auto* d : {&out.train, &out.test}) d->metadata["generator"] = "controlled_rank";
    out.source = std::move(src);
    return out;
}

// ---------------------------------------------------------------------- oracle

namespace {

class OracleSource : public ParametricSource {
public:
    explicit OracleSource(const OracleGenConfig& cfg) : cfg_(cfg), slices_(cfg.n, cfg.n, cfg.d) {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> nd(0.0, cfg.amplitude / std::sqrt(static_cast<double>(cfg.n)));
        for (std::size_t i = 0; i < cfg.n; ++i) slices_(i, i, 0) = 1.0;
        for (std::size_t l = 1; l < cfg.d; ++l)
            for (std::size_t i = 0; i < cfg.n; ++i)
                for (std::size_t j = 0; j < cfg.n; ++j) slices_(i, j, l) = nd(rng);
    }
    std::size_t rows() const override { return cfg_.n; }
    std::size_t cols() const override { return cfg_.n; }
    ParamDomain domain() const override { return ParamDomain::unit(1); }
    MatrixOperand at(std::span<const double> p) const override {
        if (p.size() != 1) throw DimensionError("oracle source takes a scalar parameter");
        std::vector<double> phi(cfg_.d, 1.0);
        for (std::size_t l = 1; l < cfg_.d; ++l)
            phi[l] = std::sin(static_cast<double>(l) * std::numbers::pi * p[0]);
        return lu_invert(mode3_apply(slices_, phi));
    }

private:
    OracleGenConfig cfg_;
    Tensor3 slices_;
};

}  // namespace

GeneratedData gen_oracle(const OracleGenConfig& cfg) {
    if (cfg.n == 0 || cfg.d == 0) throw ArgumentError("gen_oracle: n and d must be positive");
    if (cfg.n_train == 0) throw ArgumentError("gen_oracle: n_train must be positive");
    auto src = std::make_shared<OracleSource>(cfg);
    std::vector<std::vector<double>> test_p;
    for (std::size_t i = 0; i < cfg.n_test; ++i)
        test_p.push_back({(static_cast<double>(i) + 0.5) / static_cast<double>(cfg.n_test)});
    GeneratedData out;
    out.train = make_dataset(*src, linspace_points(0.0, 1.0, cfg.n_train), OpKind::Inverse);
    out.test = make_dataset(*src, std::move(test_p), OpKind::Inverse);
    for (auto* d : {&out.train, &out.test}) d->metadata["generator"] = "oracle";
    out.source = std::move(src);
    return out;
}

// ------------------------------------------------------------------ 2D Fourier

namespace {

class Fourier2dSource : public ParametricSource {
public:
    explicit Fourier2dSource(const Fourier2dGenConfig& cfg) : cfg_(cfg) {
        std::mt19937_64 rng(cfg.seed);
        const std::size_t per_axis = cfg.constant_only ? 1 : 2 * cfg.harmonics + 1;
        const std::size_t count = per_axis * per_axis;
        alpha_ = Tensor3(cfg.n, cfg.m, count);
        std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(count)));
        for (double& x : alpha_.data()) x = nd(rng);
        eps_ = cfg.eps;
    }

    std::vector<double> basis(double p1, double p2) const {
        auto axis = [&](double p) {
            std::vector<double> f{1.0};
            if (!cfg_.constant_only)
                for (std::size_t a = 1; a <= cfg_.harmonics; ++a) {
                    f.push_back(std::cos(kTwoPi * static_cast<double>(a) * p));
                    f.push_back(std::sin(kTwoPi * static_cast<double>(a) * p));
                }
            return f;
        };
        const auto f1 = axis(p1), f2 = axis(p2);
        std::vector<double> phi;
        for (double x : f1)
            for (double y : f2) phi.push_back(x * y);
        return phi;
    }

    DenseMatrix factor(std::span<const double> p) const {
        return mode3_apply(alpha_, basis(p[0], p[1]));
    }

    void set_eps(double e) { eps_ = e; }
    double eps() const noexcept { return eps_; }

    std::size_t rows() const override { return cfg_.n; }
    std::size_t cols() const override { return cfg_.n; }
    ParamDomain domain() const override { return ParamDomain::unit(2); }

    MatrixOperand at(std::span<const double> p) const override {
        if (p.size() != 2) throw DimensionError("2D Fourier source takes a 2-vector parameter");
        const DenseMatrix b = factor(p);
        DenseMatrix a = matmul_nt(b, b);
        for (std::size_t i = 0; i < cfg_.n; ++i) a(i, i) += eps_;
        symmetrize_from_lower(a);
        return a;
    }

private:
    Fourier2dGenConfig cfg_;
    Tensor3 alpha_;
    double eps_ = 0.0;
};

}  // namespace

GeneratedData gen_2d_fourier(const Fourier2dGenConfig& cfg) {
    if (cfg.n == 0 || cfg.m == 0) throw ArgumentError("gen_2d_fourier: empty matrix shape");
    if (cfg.grid < 2) throw ArgumentError("gen_2d_fourier: grid must be at least 2");
    if (!(cfg.eps > 0.0)) throw ArgumentError("gen_2d_fourier: eps must be positive");
    auto src = std::make_shared<Fourier2dSource>(cfg);
    const std::size_t total = cfg.grid * cfg.grid;
    const std::size_t n_train = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(total))));
    if (n_train + cfg.n_test > total) throw ArgumentError("gen_2d_fourier: grid too small for split");
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> te(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                idx.begin() + static_cast<std::ptrdiff_t>(n_train + cfg.n_test));
    std::sort(tr.begin(), tr.end());
    std::sort(te.begin(), te.end());
    const double step = 1.0 / static_cast<double>(cfg.grid - 1);
    auto to_points = [&](const std::vector<std::size_t>& ids) {
        std::vector<std::vector<double>> pts;
        for (std::size_t id : ids)
            pts.push_back({static_cast<double>(id % cfg.grid) * step,
                           static_cast<double>(id / cfg.grid) * step});
        return pts;
    };
    auto train_p = to_points(tr);
    auto test_p = to_points(te);
    if (cfg.eps_relative) {
        double norm = 0.0;
        for (const auto* grid : {&train_p, &test_p})
            for (const auto& p : *grid) {
                const double s = dense_svd(src->factor(p)).s.front();
                norm = std::max(norm, s * s);
            }
        src->set_eps(cfg.eps * std::max(norm, 1e-300));
    }
    GeneratedData out;
    out.train = make_dataset(*src, std::move(train_p), OpKind::Inverse);
    out.test = make_dataset(*src, std::move(test_p), OpKind::Inverse);
    for (auto* d : {&out.train, &out.test}) {
        d->metadata["generator"] = "fourier2d";
        d->metadata["eps_absolute"] = fmt(src->eps());
    }
    out.source = std::move(src);
    return out;
}

// ------------------------------------------------------------------------- ADR

AdrAssembly assemble_adr_operators(std::size_t g, double advection) {
    if (g < 3) throw ArgumentError("assemble_adr: grid must be at least 3");
    const std::size_t n = g * g;
    const double inv_h2 = static_cast<double>((g + 1) * (g + 1));
    const double inv_2h = static_cast<double>(g + 1) / 2.0;
    const double adv = advection * inv_2h;
    std::vector<Triplet> t0, t1, t2;
    for (std::size_t j = 0; j < g; ++j)
        for (std::size_t i = 0; i < g; ++i) {
            const std::size_t row = j * g + i;
            t0.push_back({row, row, 4.0 * inv_h2 + 1.0});
            if (i > 0) {
                t0.push_back({row, row - 1, -inv_h2});
                t1.push_back({row, row - 1, -adv});
            }
            if (i + 1 < g) {
                t0.push_back({row, row + 1, -inv_h2});
                t1.push_back({row, row + 1, adv});
            }
            if (j > 0) {
                t0.push_back({row, row - g, -inv_h2});
                t2.push_back({row, row - g, -adv});
            }
            if (j + 1 < g) {
                t0.push_back({row, row + g, -inv_h2});
                t2.push_back({row, row + g, adv});
            }
        }
    AdrAssembly a;
    a.g = g;
    a.advection = advection;
    a.a0 = SparseCsr::from_triplets(n, n, std::move(t0));
    a.a1 = SparseCsr::from_triplets(n, n, std::move(t1));
    a.a2 = SparseCsr::from_triplets(n, n, std::move(t2));
    a.b.assign(n, 1.0);
    return a;
}

SparseCsr AdrAssembly::at(double p) const {
    const SparseCsr* terms[] = {&a0, &a1, &a2};
    const double coeffs[] = {1.0, std::cos(kTwoPi * p), std::sin(kTwoPi * p)};
    return linear_combination(terms, coeffs);
}

MatrixOperand AdrSource::at(std::span<const double> p) const {
    if (p.size() != 1) throw DimensionError("ADR source takes a scalar parameter");
    return asm_.at(p[0]);
}

GeneratedData assemble_adr(const AdrConfig& cfg) {
    if (cfg.count == 0 || cfg.train_stride == 0) throw ArgumentError("assemble_adr: empty split");
    auto src = std::make_shared<AdrSource>(assemble_adr_operators(cfg.g, cfg.advection));
    std::vector<std::vector<double>> tr, te;
    for (std::size_t j = 0; j < cfg.count; ++j) {
        const double p = static_cast<double>(j) / static_cast<double>(cfg.count);
        (j % cfg.train_stride == 0 ? tr : te).push_back({p});
    }
    GeneratedData out;
    out.train = make_dataset(*src, std::move(tr), OpKind::LinSolve);
    out.test = make_dataset(*src, std::move(te), OpKind::LinSolve);
    for (auto* d : {&out.train, &out.test}) d->metadata["generator"] = "adr";
    out.source = std::move(src);
    return out;
}

// --------------------------------------------------------------- loaded files

SequenceSource::SequenceSource(const ParametricDataset& data)
    : rhs_(data.rhs), domain_(data.domain) {
    if (data.params.empty()) throw ArgumentError("SequenceSource: empty dataset");
    if (data.domain.dim() != 1)
        throw ArgumentError("SequenceSource interpolates 1D parameters only");
    std::vector<std::size_t> order(data.params.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return data.params[a][0] < data.params[b][0];
    });
    for (std::size_t i : order) {
        ps_.push_back(data.params[i][0]);
        inputs_.push_back(data.inputs[i]);
    }
}

std::size_t SequenceSource::rows() const { return operand_rows(inputs_.front()); }
std::size_t SequenceSource::cols() const { return operand_cols(inputs_.front()); }

MatrixOperand SequenceSource::at(std::span<const double> p) const {
    if (p.size() != 1) throw DimensionError("sequence source takes a scalar parameter");
    const double x = p[0];
    if (x <= ps_.front()) return inputs_.front();
    if (x >= ps_.back()) return inputs_.back();
    const auto it = std::upper_bound(ps_.begin(), ps_.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - ps_.begin()), lo = hi - 1;
    const double t = (x - ps_[lo]) / (ps_[hi] - ps_[lo]);
    if (const auto* a = std::get_if<DenseMatrix>(&inputs_[lo])) {
        const auto& b = std::get<DenseMatrix>(inputs_[hi]);
        DenseMatrix out(a->rows(), a->cols());
        for (std::size_t i = 0; i < out.size(); ++i)
            out.data()[i] = (1.0 - t) * a->data()[i] + t * b.data()[i];
        return out;
    }
    const SparseCsr* terms[] = {&std::get<SparseCsr>(inputs_[lo]), &std::get<SparseCsr>(inputs_[hi])};
    const double coeffs[] = {1.0 - t, t};
    return linear_combination(terms, coeffs);
}

// --------------------------------------------------------------- normalization

namespace {

MatrixOperand scale_operand(const MatrixOperand& a, double f) {
    if (const auto* s = std::get_if<SparseCsr>(&a)) {
        std::vector<double> v = s->values();
        for (double& x : v) x *= f;
        return SparseCsr(s->rows(), s->cols(), s->row_ptr(), s->col_idx(), std::move(v));
    }
    return f * std::get<DenseMatrix>(a);
}

double operand_fro(const MatrixOperand& a) {
    if (const auto* s = std::get_if<SparseCsr>(&a)) {
        double acc = 0.0;
        for (double v : s->values()) acc += v * v;
        return std::sqrt(acc);
    }
    return fro_norm(std::get<DenseMatrix>(a));
}

}  // namespace

ScaledSource::ScaledSource(std::shared_ptr<const ParametricSource> inner, double factor)
    : inner_(std::move(inner)), factor_(factor) {
    if (!inner_) throw ArgumentError("ScaledSource: null source");
    if (!(factor_ > 0.0) || !std::isfinite(factor_))
        throw ArgumentError("ScaledSource: factor must be positive and finite");
}

MatrixOperand ScaledSource::at(std::span<const double> p) const {
    return scale_operand(inner_->at(p), factor_);
}

double normalize_inputs(GeneratedData& data) {
    if (data.train.inputs.empty()) throw ArgumentError("normalize_inputs: empty training set");
    double total = 0.0;
    for (const auto& a : data.train.inputs) total += operand_fro(a);
    if (!(total > 0.0)) throw DomainError("normalize_inputs: training inputs are all zero");
    const double f = static_cast<double>(data.train.inputs.size()) / total;
    for (auto* ds : {&data.train, &data.test}) {
        for (auto& a : ds->inputs) a = scale_operand(a, f);
        ds->targets.clear();
        ds->metadata["input_scale"] = fmt(f);
    }
    if (data.source) data.source = std::make_shared<ScaledSource>(data.source, f);
    return f;
}

}  // namespace neumatc
