#pragma once
// Full-batch Adam training with failure-informed collocation refinement.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neumatc/datagen.hpp"
#include "neumatc/mlp.hpp"
#include "neumatc/model.hpp"
#include "neumatc/residuals.hpp"

namespace neumatc {

enum class SamplingMode { Adaptive, Random, None };

std::string_view sampling_mode_name(SamplingMode m);
SamplingMode parse_sampling_mode(std::string_view name);

struct TrainConfig {
    double lambda = 1.0;
    std::size_t k_max = 2000;
    std::optional<double> eps_r;  // unset: default_eps_r(model, data)
    double eps_p = 0.05;
    std::size_t update_interval = 500;  // T
    std::size_t n_add = 10;
    std::size_t candidate_count = 512;
    std::size_t initial_collocation = 0;  // uniform points before the first epoch
    AdamConfig adam;
    double latent_lr = 0.0;  // learning rate for the latent tensors; 0 uses adam.lr
    std::uint64_t seed = 0;
    SamplingMode sampling_mode = SamplingMode::Adaptive;

    /// Throws ArgumentError when an invariant is violated.
    void validate() const;
};

struct CollocationSet {
    std::vector<std::vector<double>> points;
    std::vector<std::string> provenance;  // initial | adaptive-round-t | random-round-t
};

struct RefinementRound {
    std::size_t epoch = 0;
    double p_fail = 0.0;
    std::size_t added = 0;
};

struct TrainReport {
    std::vector<LossBreakdown> history;  // one entry per Adam step, loss before the step
    std::vector<RefinementRound> rounds;
    CollocationSet collocation;
    double eps_r = 0.0;
    bool early_stop = false;
    double wall_seconds = 0.0;
};

struct TrainResult {
    NeuMatCModel model;
    TrainReport report;
};

/// 1e-3 times the residual scale of the operation: ||I||_F^2 for Inverse,
/// mean ||A||_F^2 for Svd/Qr/Cholesky, ||b||^2 for LinSolve and mean
/// ||A||_F^2 ||G||_F^2 / n for Expm (||A||_F^2 without targets).
double default_eps_r(const NeuMatCModel& model, const ParametricDataset& data);

/// g(p) = ||R(p)||_F^2 - eps_r with R the structure residual at p.
double failure_score(const NeuMatCModel& model, std::span<const double> p, const MatrixOperand& a,
                     std::span<const double> b, double eps_r);
double failure_score(const NeuMatCModel& model, std::span<const double> p,
                     const ParametricSource& source, double eps_r);
/// Batched g over candidates (one forward pass).
std::vector<double> failure_scores(const NeuMatCModel& model, const ParametricSource& source,
                                   std::span<const std::vector<double>> candidates, double eps_r);

/// Fraction of scores > 0. Throws ArgumentError on an empty set.
double estimate_failure_probability(std::span<const double> scores);
double estimate_failure_probability(const NeuMatCModel& model, const ParametricSource& source,
                                    std::span<const std::vector<double>> candidates, double eps_r);

/// Indices of failing candidates (g > 0) ordered by descending g, ties by
/// ascending parameter (lexicographic) and then index.
std::vector<std::size_t> rank_failures(std::span<const std::vector<double>> candidates,
                                       std::span<const double> scores);
/// The first min(n_add, #failures) points of rank_failures.
std::vector<std::vector<double>> select_collocation_points(
    std::span<const std::vector<double>> candidates, std::span<const double> scores,
    std::size_t n_add);
std::vector<std::vector<double>> select_collocation_points(
    const NeuMatCModel& model, const ParametricSource& source,
    std::span<const std::vector<double>> candidates, std::size_t n_add, double eps_r);

/// Uniform points in the domain from the stream `rng`.
std::vector<std::vector<double>> uniform_points(const ParamDomain& domain, std::size_t count,
                                                std::uint64_t& state);

using EpochCallback = std::function<void(std::size_t epoch, const LossBreakdown&)>;

/// Runs epochs 1..k_max: one full-batch Adam step on total_loss, then at
/// every multiple of T a refinement round (Adaptive stops once P_F < eps_p;
/// Random adds n_add uniform points; None skips rounds). `source` supplies
/// A(q) at collocation points and may be null only when no collocation is
/// ever needed. Throws TrainingError on a non-finite loss.
TrainResult train(const NeuMatCModel& model, const ParametricDataset& data,
                  const ParametricSource* source, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// epoch,data_fidelity,structure,total,p_fail (p_fail empty between rounds).
void write_train_csv(const TrainReport& report, std::ostream& out);
void write_train_csv(const TrainReport& report, const std::filesystem::path& path);

}  // namespace neumatc
