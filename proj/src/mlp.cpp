#include "neumatc/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::Sine: return "sine";
        case Activation::Relu: return "relu";
        case Activation::Tanh: return "tanh";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Gelu: return "gelu";
    }
    return "unknown";
}

Activation parse_activation(std::string_view name) {
    for (Activation a : {Activation::Sine, Activation::Relu, Activation::Tanh, Activation::Sigmoid,
                         Activation::Gelu})
        if (activation_name(a) == name) return a;
    throw ArgumentError("unknown activation '" + std::string(name) +
                        "' (expected sine|relu|tanh|sigmoid|gelu)");
}

double activation_lipschitz(Activation a, double omega) {
    switch (a) {
        case Activation::Sine: return omega;
        case Activation::Relu:
        case Activation::Tanh: return 1.0;
        case Activation::Sigmoid: return 0.25;
        case Activation::Gelu: return 1.129;
    }
    return 1.0;
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double act(Activation a, double omega, double z) {
    switch (a) {
        case Activation::Sine: return std::sin(omega * z);
        case Activation::Relu: return z > 0.0 ? z : 0.0;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
        case Activation::Gelu: return 0.5 * z * (1.0 + std::erf(z * kInvSqrt2));
    }
    return 0.0;
}

double act_deriv(Activation a, double omega, double z) {
    switch (a) {
        case Activation::Sine: return omega * std::cos(omega * z);
        case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::Tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-z));
            return s * (1.0 - s);
        }
        case Activation::Gelu:
            return 0.5 * (1.0 + std::erf(z * kInvSqrt2)) + z * kInvSqrt2Pi * std::exp(-0.5 * z * z);
    }
    return 0.0;
}

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void fill_uniform(std::span<double> out, double half_width, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-half_width, half_width);
    for (double& x : out) x = u(rng);
}

}  // namespace

Mlp::Mlp(std::vector<Layer> layers, double omega, Activation activation)
    : layers_(std::move(layers)), omega_(omega), activation_(activation) {
    if (layers_.empty()) throw DimensionError("Mlp needs at least one layer");
    if (!(omega_ > 0.0) || !std::isfinite(omega_)) throw ArgumentError("Mlp: omega must be positive");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& ly = layers_[l];
        if (ly.weight.rows() == 0 || ly.weight.cols() == 0)
            throw DimensionError("Mlp: empty weight matrix in layer " + std::to_string(l));
        if (ly.bias.size() != ly.weight.rows())
            throw DimensionError("Mlp: bias length mismatch in layer " + std::to_string(l));
        if (l > 0 && ly.weight.cols() != layers_[l - 1].weight.rows())
            throw DimensionError("Mlp: layer " + std::to_string(l) + " does not chain");
        if (!finite(ly.weight.data()) || !finite(ly.bias))
            throw DomainError("Mlp: non-finite parameter in layer " + std::to_string(l));
    }
}

Mlp Mlp::init(const MlpConfig& cfg, std::mt19937_64& rng) {
    if (cfg.input_dim == 0 || cfg.output_dim == 0 || cfg.depth == 0 ||
        (cfg.depth > 1 && cfg.width == 0))
        throw DimensionError("Mlp::init: zero dimension");
    if (!(cfg.omega > 0.0)) throw ArgumentError("Mlp::init: omega must be positive");
    const bool sine = cfg.activation == Activation::Sine;
    const double freq = sine ? cfg.omega : 1.0;
    std::vector<Layer> layers;
    for (std::size_t l = 0; l < cfg.depth; ++l) {
        const std::size_t in = l == 0 ? cfg.input_dim : cfg.width;
        const std::size_t out = l + 1 == cfg.depth ? cfg.output_dim : cfg.width;
        Layer ly{DenseMatrix(out, in), std::vector<double>(out, 0.0)};
        const double fan = static_cast<double>(in);
        if (l + 1 == cfg.depth) {
            fill_uniform(ly.weight.data(), std::sqrt(1.0 / fan), rng);
        } else if (l == 0) {
            fill_uniform(ly.weight.data(), cfg.first_scale / freq, rng);
            fill_uniform(ly.bias, std::numbers::pi / freq, rng);
        } else {
            fill_uniform(ly.weight.data(), std::sqrt(6.0 / fan) / freq, rng);
        }
        layers.push_back(std::move(ly));
    }
    return Mlp(std::move(layers), cfg.omega, cfg.activation);
}

std::size_t Mlp::input_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.front().weight.cols();
}

std::size_t Mlp::output_dim() const noexcept {
    return layers_.empty() ? 0 : layers_.back().weight.rows();
}

std::size_t Mlp::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& ly : layers_) n += ly.weight.size() + ly.bias.size();
    return n;
}

bool operator==(const Mlp& a, const Mlp& b) {
    if (a.omega_ != b.omega_ || a.activation_ != b.activation_ ||
        a.layers_.size() != b.layers_.size())
        return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l)
        if (!(a.layers_[l].weight == b.layers_[l].weight) || a.layers_[l].bias != b.layers_[l].bias)
            return false;
    return true;
}

MlpTape forward_tape(const Mlp& net, const DenseMatrix& points) {
    if (points.cols() != net.input_dim())
        throw DimensionError("Mlp forward: expected " + std::to_string(net.input_dim()) +
                             " inputs, got " + std::to_string(points.cols()));
    if (!points.all_finite()) throw DomainError("Mlp forward: non-finite input");
    const auto& kern = kernels::active();
    const std::size_t batch = points.rows();
    const auto& layers = net.layers();
    MlpTape tape;
    tape.inputs.reserve(layers.size());
    tape.inputs.push_back(points);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& w = layers[l].weight;
        const std::size_t in = w.cols(), out = w.rows();
        DenseMatrix z(batch, out);
        if (batch > 0)
            kern.gemm_nt(batch, out, in, tape.inputs[l].data().data(), in, w.data().data(), in,
                         z.data().data(), out, false);
        for (std::size_t b = 0; b < batch; ++b) {
            auto row = z.row(b);
            for (std::size_t j = 0; j < out; ++j) row[j] += layers[l].bias[j];
        }
        if (l + 1 == layers.size()) {
            tape.output = std::move(z);
            break;
        }
        DenseMatrix h(batch, out);
        for (std::size_t i = 0; i < z.size(); ++i)
            h.data()[i] = act(net.activation(), net.omega(), z.data()[i]);
        tape.pre.push_back(std::move(z));
        tape.inputs.push_back(std::move(h));
    }
    return tape;
}

DenseMatrix Mlp::forward_batch(const DenseMatrix& points) const {
    return forward_tape(*this, points).output;
}

std::vector<double> Mlp::forward(std::span<const double> p) const {
    DenseMatrix pt(1, p.size(), std::vector<double>(p.begin(), p.end()));
    return forward_batch(pt).values();
}

MlpGradients MlpGradients::zeros_like(const Mlp& net, std::size_t batch) {
    MlpGradients g;
    for (const auto& ly : net.layers()) {
        g.weight.emplace_back(ly.weight.rows(), ly.weight.cols());
        g.bias.emplace_back(ly.bias.size(), 0.0);
    }
    g.input = DenseMatrix(batch, net.input_dim());
    return g;
}

MlpGradients backward(const Mlp& net, const MlpTape& tape, const DenseMatrix& upstream) {
    const auto& layers = net.layers();
    const std::size_t batch = tape.output.rows();
    if (upstream.rows() != batch || upstream.cols() != net.output_dim())
        throw DimensionError("Mlp backward: upstream shape mismatch");
    const auto& kern = kernels::active();
    MlpGradients g = MlpGradients::zeros_like(net, batch);
    DenseMatrix delta = upstream;  // dL/dz for the current layer, B x out
    for (std::size_t l = layers.size(); l-- > 0;) {
        const auto& w = layers[l].weight;
        const std::size_t in = w.cols(), out = w.rows();
        if (batch > 0) {
            kern.gemm_tn(out, in, batch, delta.data().data(), out, tape.inputs[l].data().data(), in,
                         g.weight[l].data().data(), in, false);
            for (std::size_t b = 0; b < batch; ++b) {
                auto row = delta.row(b);
                for (std::size_t j = 0; j < out; ++j) g.bias[l][j] += row[j];
            }
        }
        DenseMatrix dh(batch, in);
        if (batch > 0)
            kern.gemm_nn(batch, in, out, delta.data().data(), out, w.data().data(), in,
                         dh.data().data(), in, false);
        if (l == 0) {
            g.input = std::move(dh);
            break;
        }
        const auto& z = tape.pre[l - 1];
        for (std::size_t i = 0; i < dh.size(); ++i)
            dh.data()[i] *= act_deriv(net.activation(), net.omega(), z.data()[i]);
        delta = std::move(dh);
    }
    return g;
}

MlpGradients mlp_backward(const Mlp& net, std::span<const double> p,
                          std::span<const double> upstream) {
    DenseMatrix pt(1, p.size(), std::vector<double>(p.begin(), p.end()));
    DenseMatrix up(1, upstream.size(), std::vector<double>(upstream.begin(), upstream.end()));
    if (!up.all_finite()) throw DomainError("mlp_backward: non-finite upstream");
    return backward(net, forward_tape(net, pt), up);
}

Mlp sine_basis_net(std::size_t d, bool with_constant) {
    if (d == 0) throw ArgumentError("sine_basis_net: d must be positive");
    Layer first{DenseMatrix(d, 1), std::vector<double>(d, 0.0)};
    for (std::size_t l = 0; l < d; ++l) {
        const std::size_t freq = with_constant ? l : l + 1;
        first.weight(l, 0) = static_cast<double>(freq) * std::numbers::pi;
    }
    if (with_constant) first.bias[0] = 0.5 * std::numbers::pi;  // sin(pi / 2) = 1
    Layer readout{DenseMatrix::identity(d), std::vector<double>(d, 0.0)};
    return Mlp({std::move(first), std::move(readout)}, 1.0, Activation::Sine);
}

LipschitzCertificate lipschitz_certificate(const Mlp& net, const Tensor3& c) {
    if (c.n3() != net.output_dim())
        throw DimensionError("lipschitz_certificate: latent depth does not match net output");
    LipschitzCertificate cert;
    cert.kappa = l1_norm_tensor(c);
    for (const auto& ly : net.layers()) cert.eta = std::max(cert.eta, l1_operator_norm(ly.weight));
    cert.l_sigma = activation_lipschitz(net.activation(), net.omega());
    cert.depth = net.depth();
    const double depth = static_cast<double>(cert.depth);
    cert.bound = cert.kappa * std::pow(cert.l_sigma * cert.eta, depth);
    cert.sound_bound =
        cert.kappa * std::pow(cert.l_sigma, depth - 1.0) * std::pow(cert.eta, depth);
    return cert;
}

}  // namespace neumatc
