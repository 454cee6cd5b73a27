#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "neumatc/tensor.hpp"

namespace neumatc {

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix. Column indices are sorted within each row.
class SparseCsr {
public:
    SparseCsr() = default;
    SparseCsr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
              std::vector<std::size_t> col_idx, std::vector<double> values);

    /// Duplicates are summed; explicit zeros are kept so patterns can be shared.
    static SparseCsr from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<Triplet> triplets);
    static SparseCsr identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }

    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double at(std::size_t i, std::size_t j) const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;
    /// y = A^T x
    std::vector<double> transpose_multiply(std::span<const double> x) const;

    DenseMatrix to_dense() const;

    friend bool operator==(const SparseCsr&, const SparseCsr&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// sum_t coeffs[t] * terms[t], the result pattern being the union of the inputs.
SparseCsr linear_combination(std::span<const SparseCsr* const> terms,
                             std::span<const double> coeffs);

/// A(p) as handed to residuals and solvers: dense, or CSR for the PDE systems.
using MatrixOperand = std::variant<DenseMatrix, SparseCsr>;

std::size_t operand_rows(const MatrixOperand& a);
std::size_t operand_cols(const MatrixOperand& a);
DenseMatrix operand_dense(const MatrixOperand& a);
/// A * x
DenseMatrix operand_multiply(const MatrixOperand& a, const DenseMatrix& x);
/// A^T * x
DenseMatrix operand_transpose_multiply(const MatrixOperand& a, const DenseMatrix& x);

}  // namespace neumatc
