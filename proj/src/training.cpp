#include "neumatc/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "neumatc/errors.hpp"

namespace neumatc {

std::string_view sampling_mode_name(SamplingMode m) {
    switch (m) {
        case SamplingMode::Adaptive: return "adaptive";
        case SamplingMode::Random: return "random";
        case SamplingMode::None: return "none";
    }
    return "?";
}

SamplingMode parse_sampling_mode(std::string_view name) {
    if (name == "adaptive") return SamplingMode::Adaptive;
    if (name == "random") return SamplingMode::Random;
    if (name == "none") return SamplingMode::None;
    throw ArgumentError("unknown sampling mode '" + std::string(name) +
                        "' (expected adaptive|random|none)");
}

void TrainConfig::validate() const {
    if (!std::isfinite(lambda) || lambda < 0.0) throw ArgumentError("lambda must be finite and >= 0");
    if (eps_r && !(*eps_r > 0.0)) throw ArgumentError("eps_r must be > 0");
    if (!(eps_p > 0.0 && eps_p < 1.0)) throw ArgumentError("eps_p must lie in (0, 1)");
    if (update_interval == 0) throw ArgumentError("update interval T must be >= 1");
    if (n_add == 0) throw ArgumentError("n_add must be >= 1");
    if (candidate_count == 0) throw ArgumentError("candidate_count must be >= 1");
    if (!(adam.lr > 0.0) || latent_lr < 0.0) throw ArgumentError("learning rates must be positive");
}

double default_eps_r(const NeuMatCModel& model, const ParametricDataset& data) {
    double scale = 0.0;
    const auto mean_input_sq = [&] {
        if (data.inputs.empty()) throw ArgumentError("default eps_r needs dataset inputs");
        double s = 0.0;
        for (const auto& a : data.inputs) {
            const double f = std::holds_alternative<SparseCsr>(a)
                                 ? [&] {
                                       double acc = 0.0;
                                       for (double v : std::get<SparseCsr>(a).values()) acc += v * v;
                                       return acc;
                                   }()
                                 : fro_norm_sq(std::get<DenseMatrix>(a));
            s += f;
        }
        return s / static_cast<double>(data.inputs.size());
    };
    switch (model.kind().op) {
        case OpKind::Inverse: scale = static_cast<double>(model.input_rows()); break;
        case OpKind::Svd:
        case OpKind::Qr:
        case OpKind::Cholesky: scale = mean_input_sq(); break;
        case OpKind::LinSolve: {
            for (double v : data.rhs) scale += v * v;
            break;
        }
        case OpKind::Expm: {
            scale = mean_input_sq();
            if (!data.targets.empty()) {
                double g = 0.0;
                for (const auto& t : data.targets) g += fro_norm_sq(t.front());
                scale *= g / static_cast<double>(data.targets.size()) /
                         static_cast<double>(model.input_rows());
            }
            break;
        }
    }
    if (!(scale > 0.0)) throw ArgumentError("default eps_r: residual scale is zero");
    return 1e-3 * scale;
}

double failure_score(const NeuMatCModel& model, std::span<const double> p, const MatrixOperand& a,
                     std::span<const double> b, double eps_r) {
    const auto g = evaluate(model, p);
    return structure_residual(model.kind(), a, g, b).squared_fro_total - eps_r;
}

double failure_score(const NeuMatCModel& model, std::span<const double> p,
                     const ParametricSource& source, double eps_r) {
    const auto b = source.rhs();
    return failure_score(model, p, source.at(p), b, eps_r);
}

std::vector<double> failure_scores(const NeuMatCModel& model, const ParametricSource& source,
                                   std::span<const std::vector<double>> candidates, double eps_r) {
    const auto preds = evaluate_batch(model, candidates);
    const auto b = source.rhs();
    std::vector<double> out(candidates.size());
    for (std::size_t j = 0; j < candidates.size(); ++j)
        out[j] = structure_residual(model.kind(), source.at(candidates[j]), preds[j], b)
                     .squared_fro_total -
                 eps_r;
    return out;
}

double estimate_failure_probability(std::span<const double> scores) {
    if (scores.empty()) throw ArgumentError("failure probability needs at least one candidate");
    std::size_t fail = 0;
    for (double g : scores) fail += g > 0.0 ? 1 : 0;
    return static_cast<double>(fail) / static_cast<double>(scores.size());
}

double estimate_failure_probability(const NeuMatCModel& model, const ParametricSource& source,
                                    std::span<const std::vector<double>> candidates, double eps_r) {
    if (candidates.empty()) throw ArgumentError("failure probability needs at least one candidate");
    const auto scores = failure_scores(model, source, candidates, eps_r);
    return estimate_failure_probability(scores);
}

std::vector<std::size_t> rank_failures(std::span<const std::vector<double>> candidates,
                                       std::span<const double> scores) {
    if (candidates.size() != scores.size())
        throw DimensionError("rank_failures: candidates and scores differ in length");
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < scores.size(); ++j)
        if (scores[j] > 0.0) idx.push_back(j);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (candidates[a] != candidates[b]) return candidates[a] < candidates[b];
        return a < b;
    });
    return idx;
}

std::vector<std::vector<double>> select_collocation_points(
    std::span<const std::vector<double>> candidates, std::span<const double> scores,
    std::size_t n_add) {
    const auto idx = rank_failures(candidates, scores);
    std::vector<std::vector<double>> out;
    for (std::size_t j = 0; j < idx.size() && out.size() < n_add; ++j)
        out.push_back(candidates[idx[j]]);
    return out;
}

std::vector<std::vector<double>> select_collocation_points(
    const NeuMatCModel& model, const ParametricSource& source,
    std::span<const std::vector<double>> candidates, std::size_t n_add, double eps_r) {
    const auto scores = failure_scores(model, source, candidates, eps_r);
    return select_collocation_points(candidates, scores, n_add);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

bool near_any(std::span<const double> p, const std::vector<std::vector<double>>& pts) {
    for (const auto& q : pts) {
        double dist = 0.0;
        for (std::size_t t = 0; t < p.size(); ++t) dist = std::max(dist, std::abs(p[t] - q[t]));
        if (dist <= 1e-9) return true;
    }
    return false;
}

std::string component_norms(const NeuMatCModel& model) {
    std::ostringstream s;
    s << std::setprecision(4);
    for (std::size_t i = 0; i < model.components().size(); ++i) {
        const auto& c = model.components()[i];
        double w = 0.0;
        for (const auto& l : c.net.layers()) w += fro_norm_sq(l.weight);
        s << (i ? "; " : "") << "component " << i << ": ||C||_F = " << fro_norm(c.latent)
          << ", ||W||_F = " << std::sqrt(w);
    }
    return s.str();
}

}  // namespace

std::vector<std::vector<double>> uniform_points(const ParamDomain& domain, std::size_t count,
                                                std::uint64_t& state) {
    std::vector<std::vector<double>> out(count, std::vector<double>(domain.dim()));
    for (auto& p : out)
        for (std::size_t t = 0; t < domain.dim(); ++t) {
            const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
            p[t] = domain.lower[t] + (domain.upper[t] - domain.lower[t]) * u;
        }
    return out;
}

TrainResult train(const NeuMatCModel& model, const ParametricDataset& data,
                  const ParametricSource* source, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    TrainResult res{model, {}};
    NeuMatCModel& m = res.model;
    TrainReport& rep = res.report;
    if (!(data.domain == m.domain())) throw ConfigError("train: dataset domain differs from the model's");
    if (!data.targets.empty() && data.targets.size() != data.params.size())
        throw DimensionError("train: dataset targets are incomplete");
    const bool needs_source =
        cfg.initial_collocation > 0 || (cfg.sampling_mode != SamplingMode::None && cfg.k_max >= cfg.update_interval);
    if (needs_source && source == nullptr)
        throw ArgumentError("train: collocation needs a parametric source");
    if (data.targets.empty() && !needs_source && cfg.k_max > 0)
        throw ArgumentError("train: no supervised targets and no collocation points");
    rep.eps_r = cfg.eps_r ? *cfg.eps_r : default_eps_r(m, data);

    const SupervisedSet sup = data.targets.empty() ? SupervisedSet{} : data.supervised();
    CollocationData col;
    if (source) col.rhs = source->rhs();
    if (col.rhs.empty()) col.rhs = data.rhs;
    std::uint64_t rng = cfg.seed ^ 0x6a09e667f3bcc908ull;
    const auto add_point = [&](std::vector<double> p, std::string tag) {
        col.operands.push_back(source->at(p));
        col.params.push_back(p);
        rep.collocation.points.push_back(std::move(p));
        rep.collocation.provenance.push_back(std::move(tag));
    };
    for (auto& p : uniform_points(m.domain(), cfg.initial_collocation, rng))
        if (!near_any(p, rep.collocation.points)) add_point(std::move(p), "initial");

    AdamConfig latent_cfg = cfg.adam;
    if (cfg.latent_lr > 0.0) latent_cfg.lr = cfg.latent_lr;
    AdamState net_state{cfg.adam, 0, {}, {}};
    AdamState latent_state{latent_cfg, 0, {}, {}};
    std::vector<bool> is_latent;
    for (const auto& c : m.components()) {
        is_latent.push_back(true);
        is_latent.insert(is_latent.end(), 2 * c.net.depth(), false);
    }

    std::size_t round = 0;
    for (std::size_t k = 1; k <= cfg.k_max; ++k) {
        auto lg = total_loss_grad(m, sup, col, cfg.lambda);
        if (!std::isfinite(lg.loss.total))
            throw TrainingError("non-finite loss at epoch " + std::to_string(k) + " (" +
                                component_norms(m) + ")");
        rep.history.push_back(lg.loss);
        if (on_epoch) on_epoch(k, lg.loss);

        const auto params = parameter_blocks(m);
        const auto grads = gradient_blocks(lg.grad);
        std::vector<std::span<double>> lp, np;
        std::vector<std::span<const double>> lgr, ngr;
        for (std::size_t b = 0; b < params.size(); ++b) {
            (is_latent[b] ? lp : np).push_back(params[b]);
            (is_latent[b] ? lgr : ngr).push_back(grads[b]);
        }
        adam_step(latent_state, lp, lgr);
        adam_step(net_state, np, ngr);
        apply_masks(m);

        if (cfg.sampling_mode == SamplingMode::None || k % cfg.update_interval != 0) continue;
        ++round;
        const auto cands = uniform_points(m.domain(), cfg.candidate_count, rng);
        const auto scores = failure_scores(m, *source, cands, rep.eps_r);
        RefinementRound rr{k, estimate_failure_probability(scores), 0};
        if (cfg.sampling_mode == SamplingMode::Adaptive) {
            if (rr.p_fail < cfg.eps_p) {
                rep.rounds.push_back(rr);
                rep.early_stop = true;
                break;
            }
            const std::string tag = "adaptive-round-" + std::to_string(round);
            for (std::size_t j : rank_failures(cands, scores)) {
                if (rr.added == cfg.n_add) break;
                if (near_any(cands[j], rep.collocation.points)) continue;
                add_point(cands[j], tag);
                ++rr.added;
            }
        } else {
            const std::string tag = "random-round-" + std::to_string(round);
            for (auto& p : uniform_points(m.domain(), cfg.n_add, rng)) {
                if (near_any(p, rep.collocation.points)) continue;
                add_point(std::move(p), tag);
                ++rr.added;
            }
        }
        rep.rounds.push_back(rr);
    }
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

void write_train_csv(const TrainReport& report, std::ostream& out) {
    out << "epoch,data_fidelity,structure,total,p_fail\n";
    out << std::setprecision(17);
    std::size_t r = 0;
    for (std::size_t k = 0; k < report.history.size(); ++k) {
        const auto& h = report.history[k];
        out << k + 1 << ',' << h.data_fidelity << ',' << h.structure << ',' << h.total << ',';
        while (r < report.rounds.size() && report.rounds[r].epoch < k + 1) ++r;
        if (r < report.rounds.size() && report.rounds[r].epoch == k + 1) out << report.rounds[r].p_fail;
        out << '\n';
    }
}

void write_train_csv(const TrainReport& report, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    write_train_csv(report, f);
    if (!f) throw Error("write failed: " + path.string());
}

}  // namespace neumatc
