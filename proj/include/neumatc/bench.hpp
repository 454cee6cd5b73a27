#pragma once
// Accuracy metrics, the analytic FLOP model and the timing harness.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "neumatc/model.hpp"
#include "neumatc/sparse.hpp"

namespace neumatc {

/// Inverse: ||A G - I||_F^2 / ||I||_F^2. Svd: ||U diag(s) V^T - A||_F^2 / ||A||_F^2
/// (any consistent rank). Qr/Cholesky: reconstruction over ||A||_F^2.
/// Expm: ||G - expm(A)||_F^2 / ||expm(A)||_F^2 against `reference` (computed
/// when null). LinSolve: ||A x - b||_2 / ||b||_2, not squared.
/// Throws DomainError on a zero denominator.
double relerr(const OperationKind& kind, const MatrixOperand& a, std::span<const DenseMatrix> g_hat,
              std::span<const double> b = {}, const DenseMatrix* reference = nullptr);

/// Singular values (descending) of the matrix whose columns are the
/// row-major flattenings of `samples`; its numerical rank is the parametric
/// rank of the family. Samples must share one shape.
std::vector<double> stacked_singular_values(std::span<const DenseMatrix> samples);

// ---------------------------------------------------------------- FLOP model
//
// Multiply-add = 2 flops. NeuMatC inference per point is, per component,
// sum over weight matrices of 2 rows cols (activations and biases are not
// counted) plus 2 n1 n2 d for the mode-3 product. Baselines (n x n unless
// stated, m x n with m >= n for svd/qr):
//   lu_factor      2n^3/3
//   lu_inverse     2n^3            (factor + n triangular solve pairs)
//   lu_solve       2n^3/3 + 2n^2
//   svd            4m^2 n + 8 m n^2 + 9 n^3   (U, S, V; Golub-Van Loan)
//   rsvd           (2q + 2) 2 m n l + 4 m l^2 + 4 n l^2 + 22 l^3 + 2 m l k,
//                  l = k + oversample, q power iterations (crsvd the same)
//   householder_qr 4 m n^2 - 4n^3/3          (explicit thin Q)
//   cholesky       n^3/3
//   expm_pade13    (6 + s) 2n^3 + 2n^3/3 + 4n^3/3 with s squarings (s = 0 here)
//   bicgstab       iterations * (4 nnz + 20 n)

struct FlopScenario {
    OperationKind kind;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t param_dim = 1;
    std::vector<std::size_t> d{20};  // one entry for all components, or one per component
    std::size_t depth = 3;           // weight matrices per MLP; 0 means Phi is read out directly
    std::size_t width = 100;
    std::size_t rsvd_rank = 20;
    std::size_t rsvd_oversample = 10;
    std::size_t rsvd_power_iters = 0;
    std::size_t sparse_nnz = 0;
    std::size_t krylov_iterations = 0;
};

struct FlopCounts {
    double neumatc_mlp = 0.0;
    double neumatc_product = 0.0;
    double neumatc = 0.0;
    std::vector<std::pair<std::string, double>> baselines;

    /// Baseline count by name; throws ArgumentError when absent.
    double baseline(std::string_view name) const;
};

/// Forward pass of one MLP k -> W -> ... -> W -> d with `depth` weight matrices.
double mlp_flops(std::size_t input_dim, std::size_t depth, std::size_t width, std::size_t output_dim);
FlopCounts flop_model(const FlopScenario& s);
/// Exact count for a concrete model under the same convention.
double model_flops(const NeuMatCModel& model);

// ------------------------------------------------------------------ harness

enum class Baseline { LuFactor, LuInverse, LuSolve, Svd, Rsvd, Crsvd, HouseholderQr, Cholesky, ExpmPade13, BiCgStab };

std::string_view baseline_name(Baseline b);
Baseline parse_baseline(std::string_view name);

struct BenchScenario {
    std::string id;
    OperationKind kind;
    std::vector<std::vector<double>> params;
    std::vector<MatrixOperand> inputs;
    std::vector<double> rhs;
    std::size_t repeats = 5;
    std::size_t warmups = 2;
    std::size_t rsvd_rank = 20;  // also the crsvd rank
    std::size_t rsvd_oversample = 10;
    std::uint64_t seed = 0;
};

struct NamedModel {
    std::string name;
    const NeuMatCModel* model = nullptr;
    double train_seconds = 0.0;
};

struct MethodMetrics {
    std::string method;
    std::size_t d = 0;  // latent dimension (max over components); 0 for baselines
    std::vector<double> relerr;
    double mean_relerr = 0.0;
    double p50_time_ms = 0.0;             // per point, inference only
    double p50_time_with_train_ms = 0.0;  // per point, training cost amortized over the scenario
    double flops = 0.0;                   // per point
};

struct MetricReport {
    std::string scenario_id;
    OperationKind kind;
    std::size_t n = 0;
    std::vector<MethodMetrics> methods;
};

/// Times each method over all scenario points (median of `repeats` runs
/// after `warmups`), computes per-point RelErr and attaches FLOP counts.
/// Models are evaluated with one predict_batch call per run.
MetricReport run_benchmark(const BenchScenario& scenario, std::span<const NamedModel> models,
                           std::span<const Baseline> baselines);

// ---------------------------------------------------------------------- CSV

inline constexpr const char* kBenchCsvHeader = "scenario_id,method,n,d,mean_relerr,p50_time_ms,flops";

struct BenchRow {
    std::string scenario_id;
    std::string method;
    std::size_t n = 0;
    std::size_t d = 0;
    double mean_relerr = 0.0;
    double p50_time_ms = 0.0;
    double flops = 0.0;

    friend bool operator==(const BenchRow&, const BenchRow&) = default;
};

std::vector<BenchRow> bench_rows(std::span<const MetricReport> reports);
void write_bench_csv(std::span<const BenchRow> rows, std::ostream& out);
void write_bench_csv(std::span<const BenchRow> rows, const std::filesystem::path& path);
/// Throws FormatError (offset = 1-based line number) on a bad header or row.
std::vector<BenchRow> parse_bench_csv(std::istream& in);

}  // namespace neumatc
