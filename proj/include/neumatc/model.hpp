#pragma once
// The learned map p -> {G_i(p)}, G_i(p) = C_i x_3 Phi_i(p), with structural
// post-processing per operation, initialization and serialization.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "neumatc/mlp.hpp"
#include "neumatc/tensor.hpp"

namespace neumatc {

enum class OpKind : std::uint8_t { Inverse = 0, Svd = 1, Qr = 2, Cholesky = 3, Expm = 4, LinSolve = 5 };

std::string_view op_name(OpKind k);
/// inverse|svd|qr|cholesky|expm|linsolve. Throws ArgumentError otherwise.
OpKind parse_op(std::string_view name);

struct OperationKind {
    OpKind op = OpKind::Inverse;
    std::size_t rank = 0;  // Svd truncation r; 0 means min(n1, n2)

    friend bool operator==(const OperationKind&, const OperationKind&) = default;
};

/// How raw values C x_3 Phi(p) become the reported component.
enum class Structure : std::uint8_t {
    None,
    Abs,             // singular values
    Upper,           // R: entries below the diagonal are structural zeros
    LowerSoftplus,   // Cholesky L: zeros above, softplus on the diagonal
};

struct ComponentShape {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    Structure structure = Structure::None;

    friend bool operator==(const ComponentShape&, const ComponentShape&) = default;
};

/// Component layout for an operation applied to a rows x cols input:
/// Inverse/Expm/Cholesky need a square input; Svd gives U (rows x r),
/// S (r x 1), V (cols x r); Qr gives Q (rows x k), R (k x cols) with
/// k = min(rows, cols); LinSolve gives x (rows x 1).
std::vector<ComponentShape> component_shapes(const OperationKind& kind, std::size_t rows,
                                             std::size_t cols);

/// Entry mask for a structured component (1 = learnable, 0 = structural zero).
bool entry_free(Structure s, std::size_t i, std::size_t j);

double softplus(double x);
double softplus_inverse(double y);

struct ParamDomain {
    std::vector<double> lower;
    std::vector<double> upper;

    static ParamDomain unit(std::size_t k);
    std::size_t dim() const noexcept { return lower.size(); }
    bool contains(std::span<const double> p) const;

    friend bool operator==(const ParamDomain&, const ParamDomain&) = default;
};

struct Component {
    ComponentShape shape;
    Tensor3 latent;  // n1 x n2 x d
    Mlp net;         // k -> d

    friend bool operator==(const Component&, const Component&) = default;
};

struct Prediction {
    std::vector<DenseMatrix> components;
    bool out_of_domain = false;
};

class NeuMatCModel {
public:
    NeuMatCModel() = default;
    /// Validates that components match the kind and that nets chain into
    /// their latents. Throws DimensionError on mismatch.
    NeuMatCModel(OperationKind kind, std::size_t input_rows, std::size_t input_cols,
                 ParamDomain domain, std::vector<Component> components);

    const OperationKind& kind() const noexcept { return kind_; }
    std::size_t input_rows() const noexcept { return rows_; }
    std::size_t input_cols() const noexcept { return cols_; }
    std::size_t param_dim() const noexcept { return domain_.dim(); }
    const ParamDomain& domain() const noexcept { return domain_; }
    const std::vector<Component>& components() const noexcept { return components_; }
    /// Mutable access for optimizers. Shapes must not be changed.
    std::vector<Component>& components() noexcept { return components_; }

    std::size_t parameter_count() const noexcept;

    friend bool operator==(const NeuMatCModel&, const NeuMatCModel&) = default;

private:
    OperationKind kind_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    ParamDomain domain_;
    std::vector<Component> components_;
};

/// Structured components at p without the SVD reordering (what the loss sees).
std::vector<DenseMatrix> evaluate(const NeuMatCModel& model, std::span<const double> p);
std::vector<std::vector<DenseMatrix>> evaluate_batch(const NeuMatCModel& model,
                                                     std::span<const std::vector<double>> points);

/// evaluate() plus, for Svd, sorting S descending with U/V columns permuted
/// jointly. Throws DomainError on non-finite p; flags points outside the domain.
Prediction predict(const NeuMatCModel& model, std::span<const double> p);
/// One stacked forward per component and one gemm against each unfolded
/// latent. Bit-identical to calling predict per point.
std::vector<Prediction> predict_batch(const NeuMatCModel& model,
                                      std::span<const std::vector<double>> points);

// ------------------------------------------------------- training plumbing

/// Batched forward pass of one component, with everything backprop needs.
struct ComponentForward {
    MlpTape tape;     // tape.output is Phi (B x d)
    DenseMatrix raw;  // B x n1*n2, C x_3 Phi before structure
    DenseMatrix out;  // B x n1*n2, structured values
};

std::vector<ComponentForward> forward_components(const NeuMatCModel& model,
                                                 const DenseMatrix& points);

struct ModelGradients {
    std::vector<Tensor3> latent;
    std::vector<MlpGradients> net;

    static ModelGradients zeros_like(const NeuMatCModel& model);
    ModelGradients& operator+=(const ModelGradients& other);
    ModelGradients& operator*=(double s);
};

/// Accumulates into `grads` the gradient of sum_b <d_out[i](b,:), out_i(b,:)>
/// over all components i. Masked latent entries receive zero gradient.
void backward_components(const NeuMatCModel& model, const std::vector<ComponentForward>& fwd,
                         const std::vector<DenseMatrix>& d_out, ModelGradients& grads);

/// Parameter blocks in a fixed order (per component: latent, then per layer
/// weight and bias); gradient_blocks lists the matching gradient storage.
std::vector<std::span<double>> parameter_blocks(NeuMatCModel& model);
std::vector<std::span<const double>> gradient_blocks(const ModelGradients& grads);

/// Zero the latent entries that are structural zeros.
void apply_masks(NeuMatCModel& model);

// ----------------------------------------------------------- initialization

enum class LatentInit { Random, WarmStart };

struct ModelInitConfig {
    std::vector<std::size_t> d;  // per component; a single entry applies to all
    MlpConfig net;               // input_dim/output_dim are overwritten
    std::uint64_t seed = 0;
    LatentInit latent = LatentInit::Random;
    double ridge = 1e-10;        // fallback regularization for rank-deficient features
};

struct InitReport {
    bool underdetermined = false;  // fewer samples than d for some component
    bool regularized = false;      // ridge fallback was used
};

/// Nets per the mlp init policy; latents either N(0, 1/d) or, for WarmStart,
/// the least-squares fit min_C sum_j ||C x_3 Phi(p_j) - G(p_j)||_F^2 with the
/// nets frozen (structures inverted first, e.g. softplus^-1 on the Cholesky
/// diagonal). `params`/`targets` are required for WarmStart.
NeuMatCModel init_model(const OperationKind& kind, std::size_t rows, std::size_t cols,
                        const ParamDomain& domain, const ModelInitConfig& cfg,
                        std::span<const std::vector<double>> params = {},
                        std::span<const std::vector<DenseMatrix>> targets = {},
                        InitReport* report = nullptr);

/// Refit latents by least squares against the current (frozen) nets.
InitReport refit_latents(NeuMatCModel& model, std::span<const std::vector<double>> params,
                         std::span<const std::vector<DenseMatrix>> targets, double ridge = 1e-10);

// ------------------------------------------------------------ serialization

inline constexpr std::uint8_t kModelFormatVersion = 1;

void save_model(const NeuMatCModel& model, const std::filesystem::path& path);
/// Throws FormatError (with byte offset) on corrupt input and
/// UnsupportedVersionError on a version mismatch.
NeuMatCModel load_model(const std::filesystem::path& path);
std::vector<std::uint8_t> serialize_model(const NeuMatCModel& model);
NeuMatCModel deserialize_model(std::vector<std::uint8_t> bytes);

}  // namespace neumatc
