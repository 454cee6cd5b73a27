#pragma once
// Data sources: synthetic generators, the advection-diffusion-reaction
// assembly, SVD alignment, target computation and sequence/target files.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "neumatc/baselines.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/model.hpp"
#include "neumatc/residuals.hpp"
#include "neumatc/sparse.hpp"

namespace neumatc {

/// A(p) at any point of the domain. Collocation points need operands at
/// parameters that are not in the dataset, so every generator exposes one.
class ParametricSource {
public:
    virtual ~ParametricSource() = default;
    virtual std::size_t rows() const = 0;
    virtual std::size_t cols() const = 0;
    virtual ParamDomain domain() const = 0;
    virtual MatrixOperand at(std::span<const double> p) const = 0;
    /// Right-hand side for LinSolve problems (empty otherwise).
    virtual std::vector<double> rhs() const { return {}; }
};

struct ParametricDataset {
    OperationKind kind;
    ParamDomain domain;
    std::vector<std::vector<double>> params;
    std::vector<MatrixOperand> inputs;
    std::vector<std::vector<DenseMatrix>> targets;  // empty until compute_targets
    std::vector<double> rhs;
    std::map<std::string, std::string> metadata;

    std::size_t size() const noexcept { return params.size(); }
    SupervisedSet supervised() const;
};

struct GeneratedData {
    std::shared_ptr<const ParametricSource> source;
    ParametricDataset train;
    ParametricDataset test;
};

// ------------------------------------------------------------- sinusoidal

enum class FrequencyLayout {
    Full,          // independent frequency per entry of F_A and F_B
    SharedColumn,  // one frequency per column, shared by A and B
};

struct SinusoidalGenConfig {
    std::size_t n = 64;
    std::size_t r = 8;
    double eps = 1.0;
    // When set, the shift is eps * max_p ||A(p) B(p)^T||_2 over the train
    // and test grids; otherwise eps is used as is.
    bool eps_relative = true;
    FrequencyLayout layout = FrequencyLayout::Full;
    bool symmetric = false;  // H = A A^T + eps I (SPD, for Cholesky)
    std::uint64_t seed = 0;
    std::size_t n_train = 40;
    std::size_t n_test = 100;
};

/// H(p) = A(p) B(p)^T + eps I with A = A0 o sin(2 pi F_A p + Phi_A) and
/// B = B0 o cos(2 pi F_B p + Phi_B); column c of A0, B0 scaled by c^-1/2.
/// Train grid: n_train points evenly spaced on [0, 1] (ends included);
/// test grid: midpoints (i + 1/2) / n_test.
GeneratedData gen_sinusoidal(const SinusoidalGenConfig& cfg);

// --------------------------------------------------------- controlled rank

struct ControlledRankGenConfig {
    std::size_t n = 64;
    std::size_t r = 64;  // SVD rank of H(p); r = n makes H invertible
    std::size_t d = 5;   // parametric rank of every factor
    double width_factor = 1.5;
    double perturbation = 0.2;
    std::uint64_t seed = 0;
    std::size_t n_train = 40;
    std::size_t n_test = 100;
};

struct SvdFactors {
    DenseMatrix u;
    std::vector<double> s;
    DenseMatrix v;
};

/// H(p) = U(p) diag(s(p)) V(p)^T with U(p) = C_U x_3 phi(p) (same for S, V),
/// phi normalized Gaussian RBFs with equispaced centers on [0, 1].
class ControlledRankSource : public ParametricSource {
public:
    explicit ControlledRankSource(const ControlledRankGenConfig& cfg);

    std::size_t rows() const override { return cfg_.n; }
    std::size_t cols() const override { return cfg_.n; }
    ParamDomain domain() const override { return ParamDomain::unit(1); }
    MatrixOperand at(std::span<const double> p) const override;

    std::vector<double> basis(double p) const;
    SvdFactors factors(double p) const;
    const Tensor3& latent_u() const noexcept { return cu_; }
    const Tensor3& latent_v() const noexcept { return cv_; }
    const Tensor3& latent_s() const noexcept { return cs_; }

private:
    ControlledRankGenConfig cfg_;
    Tensor3 cu_, cv_, cs_;
};

GeneratedData gen_controlled_rank(const ControlledRankGenConfig& cfg);

struct OracleGenConfig {
    std::size_t n = 8;
    std::size_t d = 3;
    double amplitude = 0.3;
    std::uint64_t seed = 0;
    std::size_t n_train = 10;
    std::size_t n_test = 50;
};

/// A(p) = G(p)^-1 with G(p) = I + sum_{l=1}^{d-1} sin(l pi p) S_l and S_l
/// Gaussian with standard deviation amplitude / sqrt(n). The inverses lie
/// exactly in the span of sine_basis_net(d, true). Grids as gen_sinusoidal.
GeneratedData gen_oracle(const OracleGenConfig& cfg);

// ---------------------------------------------------------------- 2D Fourier

struct Fourier2dGenConfig {
    std::size_t n = 16;
    std::size_t m = 16;          // columns of B
    std::size_t harmonics = 1;   // per-axis basis {1, cos 2 pi a p, sin 2 pi a p}, a <= harmonics
    bool constant_only = false;  // degenerate single basis function phi = 1
    double eps = 0.1;
    bool eps_relative = true;
    std::size_t grid = 50;
    double train_fraction = 0.05;
    std::size_t n_test = 100;
    std::uint64_t seed = 0;
};

/// A(p1, p2) = B B^T + eps I with B_ij = sum_k alpha_ijk phi_k(p1, p2) on a
/// grid x grid lattice over [0, 1]^2; train/test points drawn without
/// replacement from the lattice.
GeneratedData gen_2d_fourier(const Fourier2dGenConfig& cfg);

// ----------------------------------------------------------------------- ADR

struct AdrConfig {
    std::size_t g = 32;
    double advection = 50.0;
    std::size_t count = 200;  // parameter points p_j = j / count
    std::size_t train_stride = 5;
};

/// -Lap u + v(p) . grad u + u = 1 on the unit square, homogeneous Dirichlet,
/// v(p) = D (cos 2 pi p, sin 2 pi p). Unknown (i, j) (x index i, y index j)
/// is row j * g + i; h = 1 / (g + 1).
struct AdrAssembly {
    std::size_t g = 0;
    double advection = 0.0;
    SparseCsr a0;  // -Lap + I
    SparseCsr a1;  // D * d/dx, central differences
    SparseCsr a2;  // D * d/dy
    std::vector<double> b;

    /// a0 + cos(2 pi p) a1 + sin(2 pi p) a2, accumulated in that order.
    SparseCsr at(double p) const;
};

AdrAssembly assemble_adr_operators(std::size_t g, double advection);

class AdrSource : public ParametricSource {
public:
    explicit AdrSource(AdrAssembly assembly) : asm_(std::move(assembly)) {}
    std::size_t rows() const override { return asm_.b.size(); }
    std::size_t cols() const override { return asm_.b.size(); }
    ParamDomain domain() const override { return ParamDomain::unit(1); }
    MatrixOperand at(std::span<const double> p) const override;
    std::vector<double> rhs() const override { return asm_.b; }
    const AdrAssembly& assembly() const noexcept { return asm_; }

private:
    AdrAssembly asm_;
};

/// Operators plus train (every train_stride-th point) and test (the rest)
/// datasets of kind LinSolve, inputs only.
GeneratedData assemble_adr(const AdrConfig& cfg);

// ------------------------------------------------------------ loaded files

/// Source over a loaded 1D sequence: piecewise-linear interpolation between
/// the records (sorted by p), constant beyond the ends.
class SequenceSource : public ParametricSource {
public:
    explicit SequenceSource(const ParametricDataset& data);
    std::size_t rows() const override;
    std::size_t cols() const override;
    ParamDomain domain() const override { return domain_; }
    MatrixOperand at(std::span<const double> p) const override;
    std::vector<double> rhs() const override { return rhs_; }

private:
    std::vector<double> ps_;
    std::vector<MatrixOperand> inputs_;
    std::vector<double> rhs_;
    ParamDomain domain_;
};

// ------------------------------------------------------------ normalization

/// factor * A(p) for a wrapped source (the rhs is left unchanged).
class ScaledSource : public ParametricSource {
public:
    ScaledSource(std::shared_ptr<const ParametricSource> inner, double factor);
    std::size_t rows() const override { return inner_->rows(); }
    std::size_t cols() const override { return inner_->cols(); }
    ParamDomain domain() const override { return inner_->domain(); }
    MatrixOperand at(std::span<const double> p) const override;
    std::vector<double> rhs() const override { return inner_->rhs(); }
    double factor() const noexcept { return factor_; }

private:
    std::shared_ptr<const ParametricSource> inner_;
    double factor_;
};

/// Rescales the inputs of train, test and the source by
/// count / sum_j ||A(p_j)||_F over the training inputs, so the mean training
/// input has unit Frobenius norm. Targets are cleared (recompute them).
/// Returns the factor; metadata gets "input_scale".
double normalize_inputs(GeneratedData& data);

// -------------------------------------------------------------- processing

/// Sign/permutation fixing of consecutive SVD factors (ordered by p): an
/// optional greedy matching on |U_prev^T U_curr| followed by sign flips of
/// (u_k, v_k) pairs making diag(U_prev^T U_curr) >= 0.
std::vector<SvdFactors> align_svd_sequence(std::vector<SvdFactors> factors,
                                           bool allow_permutation = true);

class TargetError : public Error {
public:
    TargetError(const std::string& what, std::vector<std::size_t> failed)
        : Error(what), failed_(std::move(failed)) {}
    const std::vector<std::size_t>& failed_indices() const noexcept { return failed_; }

private:
    std::vector<std::size_t> failed_;
};

struct TargetOptions {
    double krylov_tol = 1e-12;
    std::size_t krylov_max_iter = 20000;
    bool align_svd = true;
};

/// Fills dataset.targets with the direct/iterative solver result for each
/// point. Throws TargetError listing every failing parameter.
void compute_targets(ParametricDataset& dataset, const TargetOptions& opts = {});

std::vector<MatrixOperand> operands_at(const ParametricSource& src,
                                       std::span<const std::vector<double>> params);

/// Uniform grids on [lo, hi]: `count` points including both ends.
std::vector<std::vector<double>> linspace_points(double lo, double hi, std::size_t count);

// -------------------------------------------------------------------- files

inline constexpr std::uint8_t kSequenceFormatVersion = 1;

/// "NMS1", version, kind, rank, storage (0 dense, 1 CSR), count, k, domain,
/// rhs, then per record p followed by the matrix.
void save_sequence(const ParametricDataset& data, const std::filesystem::path& path);
/// FormatError messages name the failing record index.
ParametricDataset load_sequence(const std::filesystem::path& path);

/// "NMT1", version, kind, rank, count, m, then per record per component
/// rows, cols and data.
void save_targets(const ParametricDataset& data, const std::filesystem::path& path);
/// Loads targets into `data` (count and kind must agree).
void load_targets(ParametricDataset& data, const std::filesystem::path& path);

}  // namespace neumatc
