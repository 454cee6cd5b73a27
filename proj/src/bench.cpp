#include "neumatc/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "neumatc/baselines.hpp"
#include "neumatc/errors.hpp"

namespace neumatc {

namespace {

double norm_sq(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double ratio(double num, double den, const char* what) {
    if (!(den > 0.0)) throw DomainError(std::string("relerr: zero denominator (") + what + ")");
    return num / den;
}

DenseMatrix svd_reconstruct(std::span<const DenseMatrix> g) {
    if (g.size() != 3) throw DimensionError("relerr: svd needs U, S, V");
    const auto& u = g[0];
    const auto& s = g[1];
    const auto& v = g[2];
    const std::size_t k = s.size();
    if (u.cols() != k || v.cols() != k) throw DimensionError("relerr: svd factor ranks differ");
    DenseMatrix us = u;
    for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) us(i, j) *= s.data()[j];
    return matmul_nt(us, v);
}

}  // namespace

double relerr(const OperationKind& kind, const MatrixOperand& a, std::span<const DenseMatrix> g,
              std::span<const double> b, const DenseMatrix* reference) {
    const auto need = [&](std::size_t count) {
        if (g.size() != count)
            throw DimensionError("relerr: " + std::string(op_name(kind.op)) + " expects " +
                                 std::to_string(count) + " components");
    };
    switch (kind.op) {
        case OpKind::Inverse: {
            need(1);
            DenseMatrix r = operand_multiply(a, g[0]);
            for (std::size_t i = 0; i < std::min(r.rows(), r.cols()); ++i) r(i, i) -= 1.0;
            return ratio(fro_norm_sq(r), static_cast<double>(std::min(r.rows(), r.cols())), "||I||");
        }
        case OpKind::Svd: {
            const DenseMatrix ad = operand_dense(a);
            const DenseMatrix rec = svd_reconstruct(g);
            if (rec.rows() != ad.rows() || rec.cols() != ad.cols()) throw DimensionError("relerr: svd shape");
            return ratio(fro_norm_sq(rec - ad), fro_norm_sq(ad), "||A||");
        }
        case OpKind::Qr: {
            need(2);
            const DenseMatrix ad = operand_dense(a);
            return ratio(fro_norm_sq(matmul(g[0], g[1]) - ad), fro_norm_sq(ad), "||A||");
        }
        case OpKind::Cholesky: {
            need(1);
            const DenseMatrix ad = operand_dense(a);
            return ratio(fro_norm_sq(matmul_nt(g[0], g[0]) - ad), fro_norm_sq(ad), "||A||");
        }
        case OpKind::Expm: {
            need(1);
            const DenseMatrix ref = reference ? *reference : expm(operand_dense(a));
            if (ref.rows() != g[0].rows() || ref.cols() != g[0].cols())
                throw DimensionError("relerr: expm shape");
            return ratio(fro_norm_sq(g[0] - ref), fro_norm_sq(ref), "||expm(A)||");
        }
        case OpKind::LinSolve: {
            need(1);
            if (b.size() != operand_rows(a)) throw DimensionError("relerr: rhs length mismatch");
            DenseMatrix r = operand_multiply(a, g[0]);
            for (std::size_t i = 0; i < r.rows(); ++i) r(i, 0) -= b[i];
            return std::sqrt(ratio(fro_norm_sq(r), norm_sq(b), "||b||"));
        }
    }
    throw ArgumentError("relerr: unknown operation");
}

std::vector<double> stacked_singular_values(std::span<const DenseMatrix> samples) {
    if (samples.empty()) throw ArgumentError("stacked_singular_values: no samples");
    const std::size_t e = samples.front().size(), n = samples.size();
    for (const auto& m : samples)
        if (m.rows() != samples.front().rows() || m.cols() != samples.front().cols())
            throw DimensionError("stacked_singular_values: samples differ in shape");
    // Jacobi works on columns, so keep the short side as the column count.
    const bool tall = e >= n;
    DenseMatrix st(tall ? e : n, tall ? n : e);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < e; ++i) (tall ? st(i, j) : st(j, i)) = samples[j].data()[i];
    return dense_svd(st).s;
}

// ------------------------------------------------------------------ FLOPs

double FlopCounts::baseline(std::string_view name) const {
    for (const auto& [n, f] : baselines)
        if (n == name) return f;
    throw ArgumentError("no FLOP count for baseline '" + std::string(name) + "'");
}

double mlp_flops(std::size_t input_dim, std::size_t depth, std::size_t width, std::size_t output_dim) {
    if (depth == 0) return 0.0;
    if (depth == 1) return 2.0 * static_cast<double>(input_dim * output_dim);
    const double k = static_cast<double>(input_dim), w = static_cast<double>(width),
                 d = static_cast<double>(output_dim);
    return 2.0 * (k * w + static_cast<double>(depth - 2) * w * w + w * d);
}

FlopCounts flop_model(const FlopScenario& s) {
    const auto shapes = component_shapes(s.kind, s.rows, s.cols);
    if (s.d.size() != 1 && s.d.size() != shapes.size())
        throw DimensionError("flop_model: need one d or one per component");
    FlopCounts out;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const std::size_t d = s.d.size() == 1 ? s.d[0] : s.d[i];
        out.neumatc_mlp += mlp_flops(s.param_dim, s.depth, s.width, d);
        out.neumatc_product += 2.0 * static_cast<double>(shapes[i].n1 * shapes[i].n2 * d);
    }
    out.neumatc = out.neumatc_mlp + out.neumatc_product;

    const double m = static_cast<double>(std::max(s.rows, s.cols));
    const double n = static_cast<double>(std::min(s.rows, s.cols));
    const double n3 = n * n * n;
    auto& bl = out.baselines;
    switch (s.kind.op) {
        case OpKind::Inverse:
            bl.emplace_back("lu_factor", 2.0 * n3 / 3.0);
            bl.emplace_back("lu_inverse", 2.0 * n3);
            break;
        case OpKind::LinSolve:
            bl.emplace_back("lu_factor", 2.0 * n3 / 3.0);
            bl.emplace_back("lu_solve", 2.0 * n3 / 3.0 + 2.0 * n * n);
            bl.emplace_back("bicgstab", static_cast<double>(s.krylov_iterations) *
                                            (4.0 * static_cast<double>(s.sparse_nnz) + 20.0 * n));
            break;
        case OpKind::Svd: {
            bl.emplace_back("svd", 4.0 * m * m * n + 8.0 * m * n * n + 9.0 * n3);
            const double k = static_cast<double>(s.rsvd_rank);
            const double l = k + static_cast<double>(s.rsvd_oversample);
            const double q = static_cast<double>(s.rsvd_power_iters);
            const double r = (2.0 * q + 2.0) * 2.0 * m * n * l + 4.0 * m * l * l + 4.0 * n * l * l +
                             22.0 * l * l * l + 2.0 * m * l * k;
            bl.emplace_back("rsvd", r);
            bl.emplace_back("crsvd", r);
            break;
        }
        case OpKind::Qr: bl.emplace_back("householder_qr", 4.0 * m * n * n - 4.0 * n3 / 3.0); break;
        case OpKind::Cholesky: bl.emplace_back("cholesky", n3 / 3.0); break;
        case OpKind::Expm: bl.emplace_back("expm_pade13", 6.0 * 2.0 * n3 + 2.0 * n3 / 3.0 + 4.0 * n3 / 3.0); break;
    }
    return out;
}

double model_flops(const NeuMatCModel& model) {
    double f = 0.0;
    for (const auto& c : model.components()) {
        for (const auto& l : c.net.layers())
            f += 2.0 * static_cast<double>(l.weight.rows() * l.weight.cols());
        f += 2.0 * static_cast<double>(c.shape.n1 * c.shape.n2 * c.latent.n3());
    }
    return f;
}

// ---------------------------------------------------------------- harness

std::string_view baseline_name(Baseline b) {
    switch (b) {
        case Baseline::LuFactor: return "lu_factor";
        case Baseline::LuInverse: return "lu_inverse";
        case Baseline::LuSolve: return "lu_solve";
        case Baseline::Svd: return "svd";
        case Baseline::Rsvd: return "rsvd";
        case Baseline::Crsvd: return "crsvd";
        case Baseline::HouseholderQr: return "householder_qr";
        case Baseline::Cholesky: return "cholesky";
        case Baseline::ExpmPade13: return "expm_pade13";
        case Baseline::BiCgStab: return "bicgstab";
    }
    return "?";
}

Baseline parse_baseline(std::string_view name) {
    for (auto b : {Baseline::LuFactor, Baseline::LuInverse, Baseline::LuSolve, Baseline::Svd,
                   Baseline::Rsvd, Baseline::Crsvd, Baseline::HouseholderQr, Baseline::Cholesky,
                   Baseline::ExpmPade13, Baseline::BiCgStab})
        if (baseline_name(b) == name) return b;
    throw ArgumentError("unknown baseline '" + std::string(name) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// Median wall time in ms of `run` over repeats, after warmups.
double time_runs(const BenchScenario& s, const std::function<void()>& run) {
    for (std::size_t w = 0; w < s.warmups; ++w) run();
    std::vector<double> ms;
    for (std::size_t r = 0; r < std::max<std::size_t>(s.repeats, 1); ++r) {
        const auto t0 = Clock::now();
        run();
        ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    }
    return median(std::move(ms));
}

bool applies(Baseline b, OpKind op) {
    switch (b) {
        case Baseline::LuFactor: return op == OpKind::Inverse || op == OpKind::LinSolve;
        case Baseline::LuInverse: return op == OpKind::Inverse;
        case Baseline::LuSolve:
        case Baseline::BiCgStab: return op == OpKind::LinSolve;
        case Baseline::Svd:
        case Baseline::Rsvd:
        case Baseline::Crsvd: return op == OpKind::Svd;
        case Baseline::HouseholderQr: return op == OpKind::Qr;
        case Baseline::Cholesky: return op == OpKind::Cholesky;
        case Baseline::ExpmPade13: return op == OpKind::Expm;
    }
    return false;
}

std::vector<DenseMatrix> svd_components(SvdResult r) {
    return {std::move(r.u), DenseMatrix::column(r.s), std::move(r.v)};
}

}  // namespace

MetricReport run_benchmark(const BenchScenario& s, std::span<const NamedModel> models,
                           std::span<const Baseline> baselines) {
    const std::size_t count = s.params.size();
    if (count == 0) throw ArgumentError("run_benchmark: scenario has no points");
    if (s.inputs.size() != count) throw DimensionError("run_benchmark: params/inputs mismatch");
    const std::size_t rows = operand_rows(s.inputs.front()), cols = operand_cols(s.inputs.front());
    MetricReport rep{s.id, s.kind, std::max(rows, cols), {}};
    const double per = static_cast<double>(count);

    std::vector<DenseMatrix> expm_ref;
    if (s.kind.op == OpKind::Expm)
        for (const auto& a : s.inputs) expm_ref.push_back(expm(operand_dense(a)));
    const auto point_relerr = [&](std::size_t j, std::span<const DenseMatrix> g) {
        return relerr(s.kind, s.inputs[j], g, s.rhs, expm_ref.empty() ? nullptr : &expm_ref[j]);
    };
    const auto finish = [&](MethodMetrics& m) {
        double sum = 0.0;
        for (double e : m.relerr) sum += e;
        m.mean_relerr = sum / per;
    };

    for (const auto& nm : models) {
        if (!nm.model) throw ArgumentError("run_benchmark: null model '" + nm.name + "'");
        const auto& model = *nm.model;
        if (!(model.kind().op == s.kind.op)) throw ConfigError("run_benchmark: model kind differs from scenario");
        MethodMetrics m;
        m.method = nm.name;
        for (const auto& c : model.components()) m.d = std::max(m.d, c.latent.n3());
        std::vector<Prediction> preds;
        const double ms = time_runs(s, [&] { preds = predict_batch(model, s.params); });
        for (std::size_t j = 0; j < count; ++j) m.relerr.push_back(point_relerr(j, preds[j].components));
        m.p50_time_ms = ms / per;
        m.p50_time_with_train_ms = m.p50_time_ms + 1e3 * nm.train_seconds / per;
        m.flops = model_flops(model);
        finish(m);
        rep.methods.push_back(std::move(m));
    }

    std::vector<DenseMatrix> dense;
    const auto dense_inputs = [&]() -> const std::vector<DenseMatrix>& {
        if (dense.empty())
            for (const auto& a : s.inputs) dense.push_back(operand_dense(a));
        return dense;
    };
    FlopScenario fsc{s.kind, rows, cols};
    fsc.rsvd_rank = s.rsvd_rank;
    fsc.rsvd_oversample = s.rsvd_oversample;
    for (Baseline b : baselines) {
        if (!applies(b, s.kind.op))
            throw ArgumentError("baseline '" + std::string(baseline_name(b)) + "' does not apply to " +
                                std::string(op_name(s.kind.op)));
        MethodMetrics m;
        m.method = std::string(baseline_name(b));
        std::vector<std::vector<DenseMatrix>> out(count);
        std::function<void()> run;
        std::size_t krylov_iters = 0;
        switch (b) {
            case Baseline::LuFactor: {
                const auto& in = dense_inputs();
                std::vector<LuFactorization> f;
                run = [&] {
                    f.clear();
                    for (const auto& a : in) f.emplace_back(a);
                };
                const double ms = time_runs(s, run);
                for (std::size_t j = 0; j < count; ++j)
                    out[j] = {s.kind.op == OpKind::Inverse ? f[j].inverse()
                                                           : DenseMatrix::column(f[j].solve(s.rhs))};
                m.p50_time_ms = ms / per;
                run = nullptr;
                break;
            }
            case Baseline::LuInverse:
                run = [&] {
                    const auto& in = dense_inputs();
                    for (std::size_t j = 0; j < count; ++j) out[j] = {lu_invert(in[j])};
                };
                break;
            case Baseline::LuSolve:
                run = [&] {
                    const auto& in = dense_inputs();
                    for (std::size_t j = 0; j < count; ++j) out[j] = {DenseMatrix::column(lu_solve(in[j], s.rhs))};
                };
                break;
            case Baseline::BiCgStab:
                run = [&] {
                    krylov_iters = 0;
                    for (std::size_t j = 0; j < count; ++j) {
                        const auto* sp = std::get_if<SparseCsr>(&s.inputs[j]);
                        const SparseCsr a = sp ? *sp : SparseCsr();
                        if (!sp) throw ArgumentError("bicgstab baseline needs sparse inputs");
                        auto r = sparse_solve(a, s.rhs, KrylovMethod::BiCgStab, 1e-10, 20000);
                        krylov_iters += r.iterations;
                        out[j] = {DenseMatrix::column(r.x)};
                    }
                };
                break;
            case Baseline::Svd:
                run = [&] {
                    const auto& in = dense_inputs();
                    for (std::size_t j = 0; j < count; ++j) out[j] = svd_components(dense_svd(in[j]));
                };
                break;
            case Baseline::Rsvd:
                run = [&] {
                    const auto& in = dense_inputs();
                    for (std::size_t j = 0; j < count; ++j)
                        out[j] = svd_components(rsvd(in[j], s.rsvd_rank, s.rsvd_oversample, 0, s.seed + j));
                };
                break;
            case Baseline::Crsvd:
                run = [&] {
                    auto res = crsvd(dense_inputs(), s.rsvd_rank, s.rsvd_oversample, s.seed);
                    for (std::size_t j = 0; j < count; ++j) out[j] = svd_components(std::move(res[j]));
                };
                break;
            case Baseline::HouseholderQr:
                run = [&] {
                    const auto& in = dense_inputs();
                    for (std::size_t j = 0; j < count; ++j) {
                        auto qr = qr_decompose(in[j]);
                        out[j] = {std::move(qr.q), std::move(qr.r)};
                    }
                };
                break;
            case Baseline::Cholesky:
                run = [&] {
                    const auto& in = dense_inputs();
                    for (std::size_t j = 0; j < count; ++j) out[j] = {cholesky(in[j])};
                };
                break;
            case Baseline::ExpmPade13:
                run = [&] {
                    const auto& in = dense_inputs();
                    for (std::size_t j = 0; j < count; ++j) out[j] = {expm(in[j])};
                };
                break;
        }
        if (run) {
            dense_inputs();  // conversion stays outside the timed region
            m.p50_time_ms = time_runs(s, run) / per;
        }
        m.p50_time_with_train_ms = m.p50_time_ms;
        for (std::size_t j = 0; j < count; ++j) m.relerr.push_back(point_relerr(j, out[j]));
        if (b == Baseline::BiCgStab) {
            fsc.sparse_nnz = std::get<SparseCsr>(s.inputs.front()).nnz();
            fsc.krylov_iterations = (krylov_iters + count - 1) / count;
        }
        m.flops = flop_model(fsc).baseline(m.method);
        finish(m);
        rep.methods.push_back(std::move(m));
    }
    return rep;
}

// -------------------------------------------------------------------- CSV

std::vector<BenchRow> bench_rows(std::span<const MetricReport> reports) {
    std::vector<BenchRow> rows;
    for (const auto& r : reports)
        for (const auto& m : r.methods)
            rows.push_back({r.scenario_id, m.method, r.n, m.d, m.mean_relerr, m.p50_time_ms, m.flops});
    return rows;
}

void write_bench_csv(std::span<const BenchRow> rows, std::ostream& out) {
    out << kBenchCsvHeader << '\n';
    char buf[64];
    const auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        if (r.scenario_id.find_first_of(",\n") != std::string::npos ||
            r.method.find_first_of(",\n") != std::string::npos)
            throw ArgumentError("bench csv: ids must not contain commas or newlines");
        out << r.scenario_id << ',' << r.method << ',' << r.n << ',' << r.d << ','
            << num(r.mean_relerr) << ',' << num(r.p50_time_ms) << ',' << num(r.flops) << '\n';
    }
}

void write_bench_csv(std::span<const BenchRow> rows, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    write_bench_csv(rows, f);
    if (!f) throw Error("write failed: " + path.string());
}

namespace {

template <class T>
T parse_number(const std::string& field, std::size_t line, const char* what) {
    T v{};
    const char* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, v);
    if (ec != std::errc() || ptr != end || field.empty())
        throw FormatError(std::string("bench csv: bad ") + what + " '" + field + "'", line);
    return v;
}

}  // namespace

std::vector<BenchRow> parse_bench_csv(std::istream& in) {
    std::string line;
    std::size_t no = 1;
    if (!std::getline(in, line) || line != kBenchCsvHeader)
        throw FormatError("bench csv: expected header '" + std::string(kBenchCsvHeader) + "'", no);
    std::vector<BenchRow> rows;
    while (std::getline(in, line)) {
        ++no;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 7) throw FormatError("bench csv: expected 7 fields, got " + std::to_string(f.size()), no);
        rows.push_back({f[0], f[1], parse_number<std::size_t>(f[2], no, "n"),
                        parse_number<std::size_t>(f[3], no, "d"), parse_number<double>(f[4], no, "mean_relerr"),
                        parse_number<double>(f[5], no, "p50_time_ms"), parse_number<double>(f[6], no, "flops")});
    }
    return rows;
}

}  // namespace neumatc
