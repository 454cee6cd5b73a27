#pragma once
// Cross-module property checks: the exact-recovery oracle, the Lipschitz
// certificate sweep, the ablation directions, and the desk-scale training
// setups they (and the acceptance runner) share.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "neumatc/datagen.hpp"
#include "neumatc/model.hpp"
#include "neumatc/training.hpp"

namespace neumatc {

struct PropertyCase {
    std::string name;
    std::uint64_t seed_lo = 0;
    std::uint64_t seed_hi = 0;  // inclusive
    double tolerance = 0.0;
    std::vector<std::string> modules;
};

struct PropertyOutcome {
    PropertyCase property;
    bool passed = false;
    double value = 0.0;  // the measured quantity compared against the tolerance
    std::string detail;
    double seconds = 0.0;
};

// ------------------------------------------------------------ mode-3 algebra

/// Random shapes up to 8 x 8 x 8: unfold/fold must round-trip bit-exactly and
/// mode3_apply must match a triple loop to relative 1e-13.
PropertyOutcome run_mode3_oracle(std::size_t cases = 200, std::uint64_t seed = 1);

// ----------------------------------------------------------------- gradients

struct GradientCheck {
    OperationKind kind;
    std::size_t checked = 0;  // parameters compared (masked latent entries skipped)
    double max_rel_error = 0.0;  // max over parameter blocks of ||g - g_fd|| / ||g_fd||
};

/// total_loss_grad against central differences (h = 1e-6 relative) on a
/// small random model: 3 supervised and 3 collocation points, inputs up to
/// 6 x 6, lambda 0.7.
GradientCheck gradient_check(const OperationKind& kind, std::uint64_t seed = 1,
                             Activation activation = Activation::Sine);

/// All six kinds; passes when every max_rel_error < 1e-4.
PropertyOutcome run_gradient_checks(std::uint64_t seed = 1);

// ------------------------------------------------------------ solver gates

/// Direct solver outputs against their structure residual (||R||_F <= 1e-10),
/// rsvd exact-rank recovery (<= 1e-10) and crsvd on one input == rsvd.
PropertyOutcome run_baseline_gates(std::uint64_t seed = 1);

// ------------------------------------------------------------ exact recovery

struct RecoveryResult {
    double max_fit_error = 0.0;     // max |C x_3 phi(p_j) - G(p_j)| over samples
    double max_latent_error = 0.0;  // max |C - S|
    double max_test_error = 0.0;    // off-sample, on a fine grid
    bool underdetermined = false;
};

/// G(p) = sum_l phi_l(p) S_l with random n1 x n2 slices S_l (n1 == n2); refits the latent
/// against the frozen sine basis on `samples` points evenly spaced in (0, 1).
RecoveryResult theorem1_recovery(std::size_t d, std::size_t samples, std::size_t n1, std::size_t n2,
                                 std::uint64_t seed);

/// d = 3, 10 samples, 6 x 6 slices; passes when every error is < 1e-8 and
/// the fit is not flagged underdetermined.
PropertyOutcome run_theorem1_oracle();

// ---------------------------------------------------------- Lipschitz bound

struct CertificateSweep {
    std::size_t models = 0;
    std::size_t pairs = 0;
    std::size_t violations = 0;       // quotient > kappa (L_sigma eta)^L
    std::size_t sound_violations = 0;  // quotient > sound_bound
    double max_ratio = 0.0;           // max quotient / bound
};

/// For every component of every model, `pairs` random parameter pairs in
/// the domain: ||G(p1) - G(p2)||_F / |p1 - p2| against the certificate.
/// G is the raw C x_3 Phi(p) (models must have unstructured components).
CertificateSweep certificate_sweep(std::span<const NeuMatCModel> models, std::size_t pairs,
                                   std::uint64_t seed);

/// `random_models` randomly initialized sine models with varied depth,
/// width and omega plus `trained_models` short inversion trainings.
std::vector<NeuMatCModel> certificate_models(std::size_t random_models, std::size_t trained_models,
                                             std::uint64_t seed);

/// 20 random + 3 trained models x 1000 pairs; passes with zero violations.
PropertyOutcome run_theorem2_certificate(std::size_t random_models = 20, std::size_t trained_models = 3,
                                         std::size_t pairs = 1000);

// --------------------------------------------------------- desk-scale runs

struct DeskSetup {
    std::string name;
    GeneratedData data;
    ModelInitConfig init;
    TrainConfig train;
};

struct DeskResult {
    NeuMatCModel model;
    TrainReport report;
    std::vector<double> relerr;  // per test point
    double mean_relerr = 0.0;
    double init_mean_relerr = 0.0;
    double max_u_orthogonality = 0.0;  // Svd only: max ||U^T U - I||_F over test points
    double mean_u_orthogonality = 0.0;
    double max_v_orthogonality = 0.0;
    double target_seconds = 0.0;
    double train_seconds = 0.0;
};

/// Sinusoidal n = 64, r = 8 inversion.
DeskSetup desk_inversion(std::uint64_t seed = 1);
/// Sinusoidal n = 64 truncated SVD (rank 8) on normalized inputs.
DeskSetup desk_svd(std::uint64_t seed = 1, std::size_t n_train = 40);
/// Controlled-rank n = 64, d = 5 inversion.
DeskSetup desk_controlled_rank(std::uint64_t seed = 1);
/// 32 x 32 advection-diffusion-reaction LinSolve, 200 points (every 4th supervised).
DeskSetup desk_adr();

/// Targets (if missing), warm-started init, training, test RelErr.
DeskResult run_desk(DeskSetup setup);

// --------------------------------------------------------------- ablations

struct AblationArm {
    std::string name;
    std::vector<double> relerr;  // one per seed
    double mean = 0.0;
    std::vector<double> orthogonality;  // sampling arms: max ||U^T U - I||_F per seed
};

struct AblationConfig {
    std::vector<std::uint64_t> sampling_seeds{1, 2, 3, 4, 5};
    std::vector<std::uint64_t> activation_seeds{1, 2, 3};
    bool sweep = true;
    std::size_t sweep_epochs = 500;
};

struct AblationReport {
    std::vector<AblationArm> sampling;    // adaptive, random
    std::vector<AblationArm> activation;  // sine, relu, tanh, sigmoid, gelu
    std::vector<AblationArm> sweep;       // one arm per grid point, single seed
    bool sampling_ok = false;             // mean adaptive <= mean random
    bool activation_ok = false;           // sine <= every other mean
    bool sweep_ok = false;                // every sweep RelErr < 1e-1
};

/// Matched-budget SVD runs differing only in the sampling mode: 50 samples,
/// 50 initial collocation points, 10 refinement rounds adding 10 each.
std::vector<AblationArm> sampling_ablation(std::span<const std::uint64_t> seeds);
/// Inversion runs differing only in the hidden activation.
std::vector<AblationArm> activation_ablation(std::span<const std::uint64_t> seeds);
/// One-at-a-time sweep of L, W, omega, lambda and d over their grids
/// around the defaults, on the inversion setup.
std::vector<AblationArm> hyperparameter_sweep(std::size_t epochs);

AblationReport run_ablation_directions(const AblationConfig& cfg = {});

// ------------------------------------------------------------------ output

/// name,passed,value,tolerance,seconds,detail
void write_property_csv(std::span<const PropertyOutcome> outcomes, std::ostream& out);
void write_property_summary(std::span<const PropertyOutcome> outcomes, std::ostream& out);

}  // namespace neumatc
