#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "neumatc/bench.hpp"
#include "neumatc/datagen.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/model.hpp"
#include "neumatc/training.hpp"

namespace neumatc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ------------------------------------------------------------- generation

const std::vector<std::string> kGenerators{"sinusoidal", "controlled-rank", "fourier2d", "adr", "oracle", "file"};
const std::vector<std::string> kOps{"inverse", "svd", "qr", "cholesky", "expm", "linsolve"};

struct GenParams {
    std::string gen;
    std::string op = "inverse";
    std::size_t rank = 0;
    std::size_t n = 0;
    std::size_t m = 16;
    std::size_t r = 0;  // 0: generator default
    std::size_t d = 0;  // 0: generator default
    double eps = 0.0;   // <= 0: generator default
    bool eps_absolute = false;
    std::string layout = "full";
    std::uint64_t seed = 0;
    std::size_t n_train = 40;
    std::size_t n_test = 100;
    bool normalize = false;
    double advection = 50.0;
    std::size_t count = 200;
    std::size_t stride = 5;
    std::size_t harmonics = 1;
    std::size_t grid = 50;
    double train_fraction = 0.05;
    double amplitude = 0.3;
    double width_factor = 1.5;
    double perturbation = 0.2;
    std::string input;
    std::string test_input;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GenParams, gen, op, rank, n, m, r, d, eps, eps_absolute, layout,
                                                seed, n_train, n_test, normalize, advection, count, stride,
                                                harmonics, grid, train_fraction, amplitude, width_factor,
                                                perturbation, input, test_input)

GeneratedData build_generated(const GenParams& g) {
    const OperationKind kind{parse_op(g.op), g.rank};
    GeneratedData gd;
    if (g.gen == "sinusoidal") {
        SinusoidalGenConfig c;
        c.n = g.n;
        c.r = g.r ? g.r : 8;
        if (g.eps > 0.0) c.eps = g.eps;
        c.eps_relative = !g.eps_absolute;
        c.layout = g.layout == "shared-column" ? FrequencyLayout::SharedColumn : FrequencyLayout::Full;
        c.symmetric = kind.op == OpKind::Cholesky;
        c.seed = g.seed;
        c.n_train = g.n_train;
        c.n_test = g.n_test;
        gd = gen_sinusoidal(c);
    } else if (g.gen == "controlled-rank") {
        ControlledRankGenConfig c;
        c.n = g.n;
        c.r = g.r ? g.r : g.n;
        if (g.d) c.d = g.d;
        c.width_factor = g.width_factor;
        c.perturbation = g.perturbation;
        c.seed = g.seed;
        c.n_train = g.n_train;
        c.n_test = g.n_test;
        gd = gen_controlled_rank(c);
    } else if (g.gen == "fourier2d") {
        Fourier2dGenConfig c;
        c.n = g.n;
        c.m = g.m;
        c.harmonics = g.harmonics;
        if (g.eps > 0.0) c.eps = g.eps;
        c.eps_relative = !g.eps_absolute;
        c.grid = g.grid;
        c.train_fraction = g.train_fraction;
        c.n_test = g.n_test;
        c.seed = g.seed;
        gd = gen_2d_fourier(c);
    } else if (g.gen == "adr") {
        if (kind.op != OpKind::LinSolve) throw ArgumentError("the adr generator only supports --op linsolve");
        AdrConfig c;
        c.g = g.n;
        c.advection = g.advection;
        c.count = g.count;
        c.train_stride = g.stride;
        gd = assemble_adr(c);
    } else if (g.gen == "oracle") {
        OracleGenConfig c;
        c.n = g.n;
        if (g.d) c.d = g.d;
        c.amplitude = g.amplitude;
        c.seed = g.seed;
        c.n_train = g.n_train;
        c.n_test = g.n_test;
        gd = gen_oracle(c);
    } else if (g.gen == "file") {
        if (g.input.empty()) throw ArgumentError("--gen file needs --input");
        gd.train = load_sequence(g.input);
        gd.test = g.test_input.empty() ? gd.train : load_sequence(g.test_input);
        gd.train.targets.clear();
        gd.test.targets.clear();
        gd.source = std::make_shared<SequenceSource>(gd.train);
    } else {
        throw ArgumentError("unknown generator '" + g.gen + "'");
    }
    gd.train.kind = gd.test.kind = kind;
    if (g.normalize) normalize_inputs(gd);
    return gd;
}

// ----------------------------------------------------------------- helpers

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f << text;
}

json read_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what(), 0);
    }
}

/// The resolved options of a subcommand as an INI section.
std::string resolved_config(const CLI::App& sub) {
    return "[" + sub.get_name() + "]\n" + sub.config_to_str(true, false);
}

struct DataDir {
    GenParams gen;
    json manifest;
    GeneratedData data;
};

DataDir load_data_dir(const fs::path& dir) {
    DataDir d;
    d.manifest = read_json(dir / "manifest.json");
    try {
        d.gen = d.manifest.at("generator").get<GenParams>();
    } catch (const json::exception& e) {
        throw FormatError("manifest.json: " + std::string(e.what()), 0);
    }
    auto gd = build_generated(d.gen);
    gd.train = load_sequence(dir / "train.nms");
    gd.test = load_sequence(dir / "test.nms");
    for (auto [ds, name] : {std::pair{&gd.train, "train.nmt"}, std::pair{&gd.test, "test.nmt"}}) {
        ds->kind = {parse_op(d.gen.op), d.gen.rank};
        if (fs::exists(dir / name)) load_targets(*ds, dir / name);
    }
    d.data = std::move(gd);
    return d;
}

ParametricDataset& pick_split(DataDir& d, const std::string& split) {
    return split == "train" ? d.data.train : d.data.test;
}

void check_shape(const OperationKind& kind, std::size_t rows, std::size_t cols) {
    try {
        component_shapes(kind, rows, cols);
    } catch (const DimensionError& e) {
        throw ConfigError("dataset of " + std::to_string(rows) + "x" + std::to_string(cols) +
                          " matrices does not support " + std::string(op_name(kind.op)) + ": " + e.what());
    }
}

// ---------------------------------------------------------------- commands

int cmd_generate(const GenParams& g, const std::string& out_dir, const CLI::App& sub, std::ostream& out) {
    if (g.n == 0 && g.gen != "file") throw ArgumentError("--n must be positive");
    auto gd = build_generated(g);
    const auto& src = *gd.source;
    check_shape(gd.train.kind, src.rows(), src.cols());
    compute_targets(gd.train);
    compute_targets(gd.test);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    save_sequence(gd.train, dir / "train.nms");
    save_sequence(gd.test, dir / "test.nms");
    save_targets(gd.train, dir / "train.nmt");
    save_targets(gd.test, dir / "test.nmt");
    json m;
    m["command"] = "generate";
    m["generator"] = g;
    m["kind"] = g.op;
    m["rank"] = g.rank;
    m["seed"] = g.seed;
    m["rows"] = src.rows();
    m["cols"] = src.cols();
    m["train"] = {{"count", gd.train.size()}, {"inputs", "train.nms"}, {"targets", "train.nmt"}};
    m["test"] = {{"count", gd.test.size()}, {"inputs", "test.nms"}, {"targets", "test.nmt"}};
    m["metadata"] = gd.train.metadata;
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    write_text(dir / "run_config.ini", resolved_config(sub));
    out << "generated " << gd.train.size() << " train + " << gd.test.size() << " test " << g.op << " samples ("
        << src.rows() << "x" << src.cols() << ") in " << dir.string() << "\n";
    return kExitOk;
}

struct TrainOptions {
    std::string data;
    std::string out;
    std::string op;
    std::size_t d = 20;
    std::size_t depth = 3;
    std::size_t width = 100;
    double omega = 0.15;
    std::string activation = "sine";
    double first_scale = 10.0;
    std::string init = "warm";
    std::string basis = "learned";
    double lambda = 1.0;
    std::size_t epochs = 2000;
    double eps_r = 0.0;  // <= 0: default_eps_r
    double eps_p = 0.05;
    std::size_t interval = 500;
    std::size_t n_add = 10;
    std::size_t candidates = 512;
    std::size_t initial_collocation = 0;
    double lr = 1e-3;
    double latent_lr = 0.0;
    std::string sampling = "adaptive";
    std::uint64_t seed = 0;
};

NeuMatCModel known_basis_model(const OperationKind& kind, std::size_t rows, std::size_t cols,
                               const ParamDomain& domain, std::size_t d) {
    if (domain.dim() != 1) throw ConfigError("--basis sine needs a scalar parameter");
    std::vector<Component> comps;
    for (const auto& sh : component_shapes(kind, rows, cols))
        comps.push_back({sh, Tensor3(sh.n1, sh.n2, d), sine_basis_net(d, true)});
    return NeuMatCModel(kind, rows, cols, domain, std::move(comps));
}

int cmd_train(const TrainOptions& o, const CLI::App& sub, std::ostream& out) {
    auto dd = load_data_dir(o.data);
    auto& tr = dd.data.train;
    const auto& src = *dd.data.source;
    if (!o.op.empty() && parse_op(o.op) != tr.kind.op)
        throw ConfigError("dataset holds " + std::string(op_name(tr.kind.op)) + " targets but --op " + o.op +
                          " was requested; regenerate the dataset with --op " + o.op);
    check_shape(tr.kind, src.rows(), src.cols());
    if (tr.targets.empty()) compute_targets(tr);

    NeuMatCModel model;
    if (o.basis == "sine") {
        model = known_basis_model(tr.kind, src.rows(), src.cols(), tr.domain, o.d);
        refit_latents(model, tr.params, tr.targets);
    } else {
        ModelInitConfig mc;
        mc.d = {o.d};
        mc.net.depth = o.depth;
        mc.net.width = o.width;
        mc.net.omega = o.omega;
        mc.net.activation = parse_activation(o.activation);
        mc.net.first_scale = o.first_scale;
        mc.seed = o.seed;
        mc.latent = o.init == "warm" ? LatentInit::WarmStart : LatentInit::Random;
        model = init_model(tr.kind, src.rows(), src.cols(), tr.domain, mc, tr.params, tr.targets);
    }

    TrainConfig tc;
    tc.lambda = o.lambda;
    tc.k_max = o.epochs;
    if (o.eps_r > 0.0) tc.eps_r = o.eps_r;
    tc.eps_p = o.eps_p;
    tc.update_interval = o.interval;
    tc.n_add = o.n_add;
    tc.candidate_count = o.candidates;
    tc.initial_collocation = o.initial_collocation;
    tc.adam.lr = o.lr;
    tc.latent_lr = o.latent_lr;
    tc.seed = o.seed;
    tc.sampling_mode = parse_sampling_mode(o.sampling);
    tc.validate();

    TrainResult res{model, {}};
    if (o.epochs > 0) res = train(model, tr, &src, tc);

    const auto& col_pts = res.report.collocation.points;
    CollocationData col{col_pts, operands_at(src, col_pts), src.rhs()};
    const auto final_loss = total_loss(res.model, tr.supervised(), col, o.lambda);

    const fs::path dir(o.out);
    fs::create_directories(dir);
    save_model(res.model, dir / "model.nmc");
    write_train_csv(res.report, dir / "train.csv");
    json s;
    s["command"] = "train";
    s["kind"] = op_name(res.model.kind().op);
    s["epochs"] = res.report.history.size();
    s["early_stop"] = res.report.early_stop;
    s["eps_r"] = res.report.eps_r;
    s["collocation_points"] = col_pts.size();
    s["refinement_rounds"] = res.report.rounds.size();
    s["final_loss"] = {{"data_fidelity", final_loss.data_fidelity},
                       {"structure", final_loss.structure},
                       {"total", final_loss.total}};
    s["wall_seconds"] = res.report.wall_seconds;
    s["seed"] = o.seed;
    write_text(dir / "summary.json", s.dump(2) + "\n");
    write_text(dir / "run_config.ini", resolved_config(sub));
    out << "trained " << op_name(res.model.kind().op) << " model: epochs " << res.report.history.size()
        << ", final loss " << format_double(final_loss.total) << ", collocation " << col_pts.size()
        << (res.report.early_stop ? ", early stop" : "") << " -> " << (dir / "model.nmc").string() << "\n";
    return kExitOk;
}

struct EvalOptions {
    std::string data;
    std::string model;
    bool reference = false;
    std::string split = "test";
    std::string out;
    std::string trace;
    std::vector<std::string> entries;
    std::string sv_dump;
};

std::vector<std::vector<DenseMatrix>> outputs_for(ParametricDataset& ds, const NeuMatCModel* model) {
    if (!model) {
        if (ds.targets.empty()) compute_targets(ds);
        return ds.targets;
    }
    std::vector<std::vector<DenseMatrix>> outs;
    for (auto& p : predict_batch(*model, ds.params)) outs.push_back(std::move(p.components));
    return outs;
}

void dump_singular_values(std::ostream& f, const std::string& source, std::size_t component,
                          std::span<const DenseMatrix> stack) {
    const auto sv = stacked_singular_values(stack);
    for (std::size_t k = 0; k < sv.size(); ++k)
        f << source << ',' << component << ',' << k << ',' << format_double(sv[k]) << ','
          << format_double(sv[0] > 0.0 ? sv[k] / sv[0] : 0.0) << '\n';
}

int cmd_eval(const EvalOptions& o, const CLI::App& sub, std::ostream& out) {
    auto dd = load_data_dir(o.data);
    auto& ds = pick_split(dd, o.split);
    std::unique_ptr<NeuMatCModel> model;
    if (!o.model.empty()) {
        model = std::make_unique<NeuMatCModel>(load_model(o.model));
        if (!(model->kind() == ds.kind))
            throw ConfigError("model computes " + std::string(op_name(model->kind().op)) + " but the dataset holds " +
                              std::string(op_name(ds.kind.op)));
        if (model->input_rows() != dd.data.source->rows() || model->input_cols() != dd.data.source->cols())
            throw ConfigError("model and dataset matrix shapes differ");
    } else if (!o.reference) {
        throw ArgumentError("eval needs --model or --reference");
    }
    if (ds.kind.op == OpKind::Expm && ds.targets.empty()) compute_targets(ds);
    const auto outs = outputs_for(ds, model.get());

    std::vector<double> errs;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        const DenseMatrix* ref = ds.kind.op == OpKind::Expm ? &ds.targets[j][0] : nullptr;
        errs.push_back(relerr(ds.kind, ds.inputs[j], outs[j], ds.rhs, ref));
    }
    double mean = 0.0;
    for (double e : errs) mean += e / static_cast<double>(errs.size());

    if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw std::runtime_error("cannot open " + o.out + " for writing");
        f << "index";
        for (std::size_t k = 0; k < ds.domain.dim(); ++k) f << ",p" << k;
        f << ",relerr\n";
        for (std::size_t j = 0; j < ds.size(); ++j) {
            f << j;
            for (double x : ds.params[j]) f << ',' << format_double(x);
            f << ',' << format_double(errs[j]) << '\n';
        }
        write_text(fs::path(o.out).replace_extension(".run_config.ini"), resolved_config(sub));
    }
    if (!o.trace.empty()) {
        std::ofstream f(o.trace);
        if (!f) throw std::runtime_error("cannot open " + o.trace + " for writing");
        if (ds.targets.empty()) compute_targets(ds);
        f << "p,component,i,j,value,target\n";
        const auto entries = o.entries.empty() ? std::vector<std::string>{"0,0,0"} : o.entries;
        for (const auto& e : entries) {
            std::size_t c = 0, i = 0, jj = 0;
            char sep1 = 0, sep2 = 0;
            std::istringstream is(e);
            if (!(is >> c >> sep1 >> i >> sep2 >> jj) || sep1 != ',' || sep2 != ',')
                throw ArgumentError("--entry expects component,i,j; got '" + e + "'");
            for (std::size_t j = 0; j < ds.size(); ++j) {
                if (c >= outs[j].size() || i >= outs[j][c].rows() || jj >= outs[j][c].cols())
                    throw ArgumentError("--entry " + e + " is out of range");
                f << format_double(ds.params[j][0]) << ',' << c << ',' << i << ',' << jj << ','
                  << format_double(outs[j][c](i, jj)) << ',' << format_double(ds.targets[j][c](i, jj)) << '\n';
            }
        }
    }
    if (!o.sv_dump.empty()) {
        std::ofstream f(o.sv_dump);
        if (!f) throw std::runtime_error("cannot open " + o.sv_dump + " for writing");
        f << "source,component,index,sigma,relative\n";
        if (ds.targets.empty()) compute_targets(ds);
        const std::size_t m = ds.targets.front().size();
        for (std::size_t c = 0; c < m; ++c) {
            std::vector<DenseMatrix> stack;
            for (const auto& t : ds.targets) stack.push_back(t[c]);
            dump_singular_values(f, "target", c, stack);
            if (model) {
                stack.clear();
                for (const auto& t : outs) stack.push_back(t[c]);
                dump_singular_values(f, "model", c, stack);
            }
        }
        if (const auto* cr = dynamic_cast<const ControlledRankSource*>(dd.data.source.get())) {
            std::vector<DenseMatrix> us, ss, vs;
            for (const auto& p : ds.params) {
                auto fct = cr->factors(p[0]);
                us.push_back(std::move(fct.u));
                ss.push_back(DenseMatrix::column(fct.s));
                vs.push_back(std::move(fct.v));
            }
            dump_singular_values(f, "factor_u", 0, us);
            dump_singular_values(f, "factor_s", 0, ss);
            dump_singular_values(f, "factor_v", 0, vs);
        }
    }
    out << "mean_relerr " << format_double(mean) << " over " << ds.size() << " " << o.split << " points\n";
    return kExitOk;
}

struct BenchOptions {
    std::string data;
    std::vector<std::string> models;
    std::vector<std::string> baselines;
    std::string split = "test";
    std::size_t repeats = 5;
    std::size_t warmups = 2;
    std::size_t rsvd_rank = 20;
    std::size_t rsvd_oversample = 10;
    std::string scenario;
    std::string out;
};

std::vector<Baseline> default_baselines(OpKind op) {
    switch (op) {
        case OpKind::Inverse: return {Baseline::LuFactor, Baseline::LuInverse};
        case OpKind::LinSolve: return {Baseline::LuSolve, Baseline::BiCgStab};
        case OpKind::Svd: return {Baseline::Svd, Baseline::Rsvd, Baseline::Crsvd};
        case OpKind::Qr: return {Baseline::HouseholderQr};
        case OpKind::Cholesky: return {Baseline::Cholesky};
        case OpKind::Expm: return {Baseline::ExpmPade13};
    }
    return {};
}

int cmd_bench(const BenchOptions& o, const CLI::App& sub, std::ostream& out) {
    auto dd = load_data_dir(o.data);
    auto& ds = pick_split(dd, o.split);
    BenchScenario sc;
    sc.id = o.scenario.empty() ? dd.gen.gen + "-" + dd.gen.op + "-n" + std::to_string(dd.data.source->rows())
                               : o.scenario;
    sc.kind = ds.kind;
    sc.params = ds.params;
    sc.inputs = ds.inputs;
    sc.rhs = ds.rhs;
    sc.repeats = o.repeats;
    sc.warmups = o.warmups;
    sc.rsvd_rank = o.rsvd_rank;
    sc.rsvd_oversample = o.rsvd_oversample;
    sc.seed = dd.gen.seed;

    std::vector<NeuMatCModel> models;
    std::vector<NamedModel> named;
    models.reserve(o.models.size());
    for (const auto& path : o.models) {
        models.push_back(load_model(path));
        if (!(models.back().kind() == ds.kind))
            throw ConfigError(path + " computes " + std::string(op_name(models.back().kind().op)) +
                              " but the dataset holds " + std::string(op_name(ds.kind.op)));
        double train_s = 0.0;
        const auto summary = fs::path(path).parent_path() / "summary.json";
        if (fs::exists(summary)) train_s = read_json(summary).value("wall_seconds", 0.0);
        const auto stem = fs::path(path).parent_path().filename().string();
        named.push_back({"neumatc" + (stem.empty() ? std::string() : ":" + stem), nullptr, train_s});
    }
    for (std::size_t i = 0; i < named.size(); ++i) named[i].model = &models[i];

    std::vector<Baseline> bls;
    if (o.baselines.empty())
        bls = default_baselines(ds.kind.op);
    else if (!(o.baselines.size() == 1 && o.baselines[0] == "none"))
        for (const auto& b : o.baselines) bls.push_back(parse_baseline(b));

    const MetricReport rep = run_benchmark(sc, named, bls);
    const std::vector<MetricReport> reps{rep};
    const auto rows = bench_rows(reps);
    if (o.out.empty()) {
        write_bench_csv(rows, out);
    } else {
        write_bench_csv(rows, fs::path(o.out));
        write_text(fs::path(o.out).replace_extension(".run_config.ini"), resolved_config(sub));
        for (const auto& r : rows)
            out << r.method << ": mean_relerr " << format_double(r.mean_relerr) << ", p50 "
                << format_double(r.p50_time_ms) << " ms/point, " << format_double(r.flops) << " flops/point\n";
    }
    return kExitOk;
}

struct InspectOptions {
    std::string model;
    std::string data;
    bool as_json = false;
};

int cmd_inspect(const InspectOptions& o, std::ostream& out) {
    if (o.model.empty() && o.data.empty()) throw ArgumentError("inspect needs --model or --data");
    json j;
    if (!o.model.empty()) {
        const auto m = load_model(o.model);
        json jm;
        jm["kind"] = op_name(m.kind().op);
        jm["rank"] = m.kind().rank;
        jm["input_rows"] = m.input_rows();
        jm["input_cols"] = m.input_cols();
        jm["domain"] = {{"lower", m.domain().lower}, {"upper", m.domain().upper}};
        jm["parameter_count"] = m.parameter_count();
        jm["inference_flops"] = model_flops(m);
        for (const auto& c : m.components()) {
            const auto cert = lipschitz_certificate(c.net, c.latent);
            std::vector<std::size_t> widths;
            for (const auto& l : c.net.layers()) widths.push_back(l.weight.rows());
            jm["components"].push_back({{"n1", c.shape.n1},
                                        {"n2", c.shape.n2},
                                        {"d", c.latent.n3()},
                                        {"depth", c.net.depth()},
                                        {"layer_widths", widths},
                                        {"omega", c.net.omega()},
                                        {"activation", activation_name(c.net.activation())},
                                        {"lipschitz_bound", cert.bound},
                                        {"lipschitz_sound_bound", cert.sound_bound}});
        }
        j["model"] = jm;
    }
    if (!o.data.empty()) j["data"] = read_json(fs::path(o.data) / "manifest.json");
    if (o.as_json) {
        out << j.dump(2) << "\n";
        return kExitOk;
    }
    if (j.contains("model")) {
        const auto& jm = j["model"];
        out << "model " << o.model << "\n  kind " << jm["kind"].get<std::string>() << " (rank "
            << jm["rank"].get<std::size_t>() << "), input " << jm["input_rows"].get<std::size_t>() << "x"
            << jm["input_cols"].get<std::size_t>() << ", " << jm["parameter_count"].get<std::size_t>()
            << " parameters, " << format_double(jm["inference_flops"].get<double>()) << " flops/point\n";
        std::size_t i = 0;
        for (const auto& c : jm["components"])
            out << "  component " << i++ << ": " << c["n1"].get<std::size_t>() << "x" << c["n2"].get<std::size_t>()
                << ", d " << c["d"].get<std::size_t>() << ", depth " << c["depth"].get<std::size_t>() << ", omega "
                << c["omega"].get<double>() << ", " << c["activation"].get<std::string>() << ", Lipschitz bound "
                << format_double(c["lipschitz_bound"].get<double>()) << "\n";
    }
    if (j.contains("data")) {
        const auto& jd = j["data"];
        out << "dataset " << o.data << "\n  generator " << jd["generator"]["gen"].get<std::string>() << ", kind "
            << jd["kind"].get<std::string>() << ", " << jd["rows"].get<std::size_t>() << "x"
            << jd["cols"].get<std::size_t>() << ", train " << jd["train"]["count"].get<std::size_t>() << ", test "
            << jd["test"]["count"].get<std::size_t>() << ", seed " << jd["seed"].get<std::uint64_t>() << "\n";
    }
    return kExitOk;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ArgumentError*>(&e)) return kExitUsage;
    if (dynamic_cast<const TrainingError*>(&e) || dynamic_cast<const SingularityError*>(&e) ||
        dynamic_cast<const ConvergenceError*>(&e) || dynamic_cast<const DefinitenessError*>(&e) ||
        dynamic_cast<const TargetError*>(&e) || dynamic_cast<const DomainError*>(&e))
        return kExitNumerical;
    return kExitData;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Learned parametric matrix operations", "neumatc"};
    app.set_config("--config", "", "INI file; [generate]/[train]/... sections, flags override it");
    app.require_subcommand(1);
    app.fallthrough();

    GenParams gp;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "Generate a parametric dataset with targets");
    gen->add_option("--gen", gp.gen, "Generator")->required()->check(CLI::IsMember(kGenerators));
    gen->add_option("--op", gp.op, "Operation")->check(CLI::IsMember(kOps))->capture_default_str();
    gen->add_option("--rank", gp.rank, "SVD truncation rank (0 = full)")->capture_default_str();
    gen->add_option("--n", gp.n, "Matrix size (grid side for adr)");
    gen->add_option("--m", gp.m, "Columns of B (fourier2d)")->capture_default_str();
    gen->add_option("--r", gp.r, "Rank of A B^T (sinusoidal) or SVD rank (controlled-rank)")->capture_default_str();
    gen->add_option("--d", gp.d, "Parametric rank (controlled-rank, oracle)")->capture_default_str();
    gen->add_option("--eps", gp.eps, "Diagonal shift (0 = generator default)")->capture_default_str();
    gen->add_flag("--eps-absolute", gp.eps_absolute, "Treat --eps as absolute");
    gen->add_option("--layout", gp.layout, "Frequency layout")
        ->check(CLI::IsMember({"full", "shared-column"}))
        ->capture_default_str();
    gen->add_option("--seed", gp.seed, "RNG seed")->capture_default_str();
    gen->add_option("--n-train", gp.n_train, "Training points")->capture_default_str();
    gen->add_option("--n-test", gp.n_test, "Test points")->capture_default_str();
    gen->add_flag("--normalize", gp.normalize, "Scale inputs to unit mean Frobenius norm");
    gen->add_option("--advection", gp.advection, "Advection strength D (adr)")->capture_default_str();
    gen->add_option("--count", gp.count, "Parameter points (adr)")->capture_default_str();
    gen->add_option("--stride", gp.stride, "Every stride-th point is supervised (adr)")->capture_default_str();
    gen->add_option("--harmonics", gp.harmonics, "Harmonics per axis (fourier2d)")->capture_default_str();
    gen->add_option("--grid", gp.grid, "Lattice size per axis (fourier2d)")->capture_default_str();
    gen->add_option("--train-fraction", gp.train_fraction, "Supervised lattice fraction (fourier2d)")
        ->capture_default_str();
    gen->add_option("--amplitude", gp.amplitude, "Slice amplitude (oracle)")->capture_default_str();
    gen->add_option("--width-factor", gp.width_factor, "RBF width factor (controlled-rank)")->capture_default_str();
    gen->add_option("--perturbation", gp.perturbation, "Factor perturbation (controlled-rank)")
        ->capture_default_str();
    gen->add_option("--input", gp.input, "Sequence file (file)");
    gen->add_option("--test-input", gp.test_input, "Test sequence file (file)");
    gen->add_option("--out", gen_out, "Output directory")->required();

    TrainOptions to;
    auto* trn = app.add_subcommand("train", "Train a model on a generated dataset");
    trn->add_option("--data", to.data, "Dataset directory")->required();
    trn->add_option("--out", to.out, "Output directory")->required();
    trn->add_option("--op", to.op, "Expected operation")->check(CLI::IsMember(kOps));
    trn->add_option("--d", to.d, "Latent dimension")->capture_default_str();
    trn->add_option("--depth,-L", to.depth, "Weight matrices per MLP")->capture_default_str();
    trn->add_option("--width,-W", to.width, "Hidden width")->capture_default_str();
    trn->add_option("--omega", to.omega, "Sine frequency")->capture_default_str();
    trn->add_option("--activation", to.activation, "Hidden activation")
        ->check(CLI::IsMember({"sine", "relu", "tanh", "sigmoid", "gelu"}))
        ->capture_default_str();
    trn->add_option("--first-scale", to.first_scale, "First-layer init scale")->capture_default_str();
    trn->add_option("--init", to.init, "Latent initialization")
        ->check(CLI::IsMember({"warm", "random"}))
        ->capture_default_str();
    trn->add_option("--basis", to.basis, "learned MLP or the fixed sine basis")
        ->check(CLI::IsMember({"learned", "sine"}))
        ->capture_default_str();
    trn->add_option("--lambda", to.lambda, "Structure loss weight")->capture_default_str();
    trn->add_option("--epochs", to.epochs, "Epoch budget K_max")->capture_default_str();
    trn->add_option("--eps-r", to.eps_r, "Residual threshold (0 = default rule)")->capture_default_str();
    trn->add_option("--eps-p", to.eps_p, "Failure probability tolerance")->capture_default_str();
    trn->add_option("--interval,-T", to.interval, "Refinement interval")->capture_default_str();
    trn->add_option("--n-add", to.n_add, "Points added per round")->capture_default_str();
    trn->add_option("--candidates", to.candidates, "Candidates per round")->capture_default_str();
    trn->add_option("--initial-collocation", to.initial_collocation, "Initial uniform collocation points")
        ->capture_default_str();
    trn->add_option("--lr", to.lr, "Adam learning rate")->capture_default_str();
    trn->add_option("--latent-lr", to.latent_lr, "Latent learning rate (0 = --lr)")->capture_default_str();
    trn->add_option("--sampling", to.sampling, "Collocation sampling")
        ->check(CLI::IsMember({"adaptive", "random", "none"}))
        ->capture_default_str();
    trn->add_option("--seed", to.seed, "RNG seed")->capture_default_str();

    EvalOptions eo;
    auto* ev = app.add_subcommand("eval", "Per-point RelErr of a model (or the stored targets)");
    ev->add_option("--data", eo.data, "Dataset directory")->required();
    ev->add_option("--model", eo.model, "Model file");
    ev->add_flag("--reference", eo.reference, "Evaluate the stored targets instead of a model");
    ev->add_option("--split", eo.split, "Dataset split")->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    ev->add_option("--out", eo.out, "Per-point CSV");
    ev->add_option("--trace", eo.trace, "Entry trace CSV along the parameter");
    ev->add_option("--entry", eo.entries, "component,i,j to trace (repeatable)");
    ev->add_option("--sv-dump", eo.sv_dump, "Stacked singular values CSV");

    BenchOptions bo;
    auto* bn = app.add_subcommand("bench", "Time models against direct baselines");
    bn->add_option("--data", bo.data, "Dataset directory")->required();
    bn->add_option("--model", bo.models, "Model file (repeatable)");
    bn->add_option("--baselines", bo.baselines, "Baselines, or none")->delimiter(',');
    bn->add_option("--split", bo.split, "Dataset split")->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    bn->add_option("--repeats", bo.repeats, "Timed repeats (median)")->capture_default_str();
    bn->add_option("--warmups", bo.warmups, "Untimed warm-up runs")->capture_default_str();
    bn->add_option("--rsvd-rank", bo.rsvd_rank, "rsvd/crsvd rank")->capture_default_str();
    bn->add_option("--rsvd-oversample", bo.rsvd_oversample, "rsvd/crsvd oversampling")->capture_default_str();
    bn->add_option("--scenario", bo.scenario, "Scenario id");
    bn->add_option("--out", bo.out, "CSV output (stdout when absent)");

    InspectOptions io;
    auto* ins = app.add_subcommand("inspect", "Print model or dataset metadata");
    ins->add_option("--model", io.model, "Model file");
    ins->add_option("--data", io.data, "Dataset directory");
    ins->add_flag("--json", io.as_json, "JSON output");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    try {
        if (gen->parsed()) {
            if (gp.n == 0 && gp.gen != "file") {
                err << "--n is required for --gen " << gp.gen << "\nRun with --help for more information.\n";
                return kExitUsage;
            }
            if (gp.gen == "adr" && gen->count("--op") == 0) {
                gen->get_option("--op")->add_result("linsolve");
                gp.op = "linsolve";
            }
            return cmd_generate(gp, gen_out, *gen, out);
        }
        if (trn->parsed()) return cmd_train(to, *trn, out);
        if (ev->parsed()) return cmd_eval(eo, *ev, out);
        if (bn->parsed()) return cmd_bench(bo, *bn, out);
        if (ins->parsed()) return cmd_inspect(io, out);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        err << "error: " << e.what() << "\n";
        return code;
    }
    return kExitUsage;
}

}  // namespace neumatc::cli
