#pragma once
// Structure residuals R(p) per operation, the data-fidelity term, the total
// loss and its gradient with respect to every latent and network parameter.

#include <span>
#include <string>
#include <vector>

#include "neumatc/model.hpp"
#include "neumatc/sparse.hpp"

namespace neumatc {

struct ResidualBlock {
    std::string name;
    DenseMatrix value;
};

struct ResidualSet {
    std::vector<ResidualBlock> blocks;
    double squared_fro_total = 0.0;
};

/// Blocks per kind (components in model order):
///   Inverse  {A G - I}
///   Svd      {A - U diag(S) V^T, U^T U - I, V^T V - I}
///   Qr       {A - Q R, Q^T Q - I}
///   Cholesky {A - L L^T}
///   Expm     {A G - G A}
///   LinSolve {A x - b}  (b required, ArgumentError otherwise)
ResidualSet structure_residual(const OperationKind& kind, const MatrixOperand& a,
                               std::span<const DenseMatrix> g_hat,
                               std::span<const double> b = {});

/// d ||R||_F^2 / d G_hat_i for each component.
std::vector<DenseMatrix> structure_residual_grad(const OperationKind& kind, const MatrixOperand& a,
                                                 std::span<const DenseMatrix> g_hat,
                                                 std::span<const double> b = {});

/// sum_i ||G_hat_i - G_i||_F^2. DimensionError on shape mismatch.
double data_fidelity(std::span<const DenseMatrix> g_hat, std::span<const DenseMatrix> g_target);

struct LossBreakdown {
    double data_fidelity = 0.0;
    double structure = 0.0;
    double lambda = 0.0;
    double total = 0.0;
};

/// Supervised pairs (p_j, G(p_j)).
struct SupervisedSet {
    std::vector<std::vector<double>> params;
    std::vector<std::vector<DenseMatrix>> targets;
};

/// Collocation points with the operands A(q) (and b for LinSolve) the
/// residual needs.
struct CollocationData {
    std::vector<std::vector<double>> params;
    std::vector<MatrixOperand> operands;
    std::vector<double> rhs;
};

LossBreakdown total_loss(const NeuMatCModel& model, const SupervisedSet& data,
                         const CollocationData& col, double lambda);

struct LossAndGradient {
    LossBreakdown loss;
    ModelGradients grad;
};

LossAndGradient total_loss_grad(const NeuMatCModel& model, const SupervisedSet& data,
                                const CollocationData& col, double lambda);

}  // namespace neumatc
