#pragma once
// Coordinate network Phi: R^k -> R^d, its reverse-mode gradients, Adam, and
// the Lipschitz certificate for G(p) = C x_3 Phi(p).

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "neumatc/tensor.hpp"

namespace neumatc {

enum class Activation { Sine, Relu, Tanh, Sigmoid, Gelu };

std::string_view activation_name(Activation a);
/// Accepts sine|relu|tanh|sigmoid|gelu. Throws ArgumentError otherwise.
Activation parse_activation(std::string_view name);

/// Lipschitz constant of the hidden-layer nonlinearity as a function of the
/// affine pre-activation: omega for Sine (sin(omega z)), 1 for ReLU/Tanh,
/// 1/4 for Sigmoid, 1.129 for GELU.
double activation_lipschitz(Activation a, double omega);

struct Layer {
    DenseMatrix weight;  // out x in
    std::vector<double> bias;
};

struct MlpConfig {
    std::size_t input_dim = 1;
    std::size_t output_dim = 20;
    std::size_t depth = 3;  // number of weight matrices
    std::size_t width = 100;
    double omega = 0.15;
    Activation activation = Activation::Sine;
    // Range of the first layer's effective pre-activation slope. Sine nets
    // draw W_1 from U(+-first_scale / omega) so sin(omega W_1 p) has
    // frequencies up to first_scale; first-layer biases are U(+-pi / omega).
    double first_scale = 10.0;
};

class Mlp {
public:
    Mlp() = default;
    /// Validates that shapes chain and that all parameters are finite.
    Mlp(std::vector<Layer> layers, double omega, Activation activation);

    /// Random initialization (see MlpConfig and the README for the policy).
    static Mlp init(const MlpConfig& cfg, std::mt19937_64& rng);

    std::size_t input_dim() const noexcept;
    std::size_t output_dim() const noexcept;
    std::size_t depth() const noexcept { return layers_.size(); }
    double omega() const noexcept { return omega_; }
    Activation activation() const noexcept { return activation_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    std::size_t parameter_count() const noexcept;

    std::vector<double> forward(std::span<const double> p) const;
    /// Rows of `points` (B x k) map to rows of the result (B x d).
    DenseMatrix forward_batch(const DenseMatrix& points) const;

    friend bool operator==(const Mlp&, const Mlp&);

private:
    std::vector<Layer> layers_;
    double omega_ = 1.0;
    Activation activation_ = Activation::Sine;
};

/// Fixed known-basis net (depth 2, width d, omega 1, identity readout):
/// phi_l(p) = sin((l + 1) pi p) for scalar p, or with `with_constant`
/// phi_0 = 1 and phi_l = sin(l pi p) for l >= 1.
Mlp sine_basis_net(std::size_t d, bool with_constant = false);

/// Intermediate values of a batched forward pass kept for backprop.
struct MlpTape {
    std::vector<DenseMatrix> inputs;  // input to layer l, B x in_l
    std::vector<DenseMatrix> pre;     // W_l h + b_l for hidden layers
    DenseMatrix output;               // B x d
};

struct MlpGradients {
    std::vector<DenseMatrix> weight;
    std::vector<std::vector<double>> bias;
    DenseMatrix input;  // B x k

    static MlpGradients zeros_like(const Mlp& net, std::size_t batch = 0);
};

MlpTape forward_tape(const Mlp& net, const DenseMatrix& points);
/// Gradients of sum_b <upstream(b,:), Phi(points(b,:))>.
MlpGradients backward(const Mlp& net, const MlpTape& tape, const DenseMatrix& upstream);

/// Single-point convenience: gradients of <upstream, Phi(p)>.
MlpGradients mlp_backward(const Mlp& net, std::span<const double> p,
                          std::span<const double> upstream);

// ---------------------------------------------------------------------- Adam

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    AdamConfig cfg;
    std::uint64_t t = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update over a list of parameter blocks. Moments
/// are allocated on the first call; later calls must present the same block
/// sizes (DimensionError otherwise).
void adam_step(AdamState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> grads);

// --------------------------------------------------------------- certificate

struct LipschitzCertificate {
    double kappa = 0.0;    // l1 norm of the latent tensor
    double eta = 0.0;      // max_l ||W_l||_1
    double l_sigma = 0.0;  // activation Lipschitz constant
    std::size_t depth = 0; // number of weight matrices L
    double bound = 0.0;    // kappa * (l_sigma * eta)^L
    // kappa * l_sigma^(L-1) * eta^L: the final layer carries no activation,
    // so this form holds for every l_sigma, including l_sigma < 1.
    double sound_bound = 0.0;
};

LipschitzCertificate lipschitz_certificate(const Mlp& net, const Tensor3& c);

}  // namespace neumatc
