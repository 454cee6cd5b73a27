#include "neumatc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

SparseCsr::SparseCsr(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                     std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
    if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 ||
        row_ptr_.back() != values_.size() || col_idx_.size() != values_.size())
        throw DimensionError("SparseCsr: inconsistent row pointers");
    for (std::size_t i = 0; i < rows_; ++i) {
        if (row_ptr_[i] > row_ptr_[i + 1]) throw DimensionError("SparseCsr: row pointers decrease");
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            if (col_idx_[k] >= cols_) throw DimensionError("SparseCsr: column index out of range");
            if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1])
                throw DimensionError("SparseCsr: column indices not strictly increasing");
            if (!std::isfinite(values_[k])) throw DomainError("SparseCsr: non-finite value");
        }
    }
}

SparseCsr SparseCsr::from_triplets(std::size_t rows, std::size_t cols,
                                   std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> row_ptr(rows + 1, 0);
    std::vector<std::size_t> col_idx;
    std::vector<double> values;
    bool have_last = false;
    std::size_t last_row = 0, last_col = 0;
    for (const auto& t : triplets) {
        if (t.row >= rows || t.col >= cols) throw DimensionError("triplet out of range");
        if (have_last && t.row == last_row && t.col == last_col) {
            values.back() += t.value;
            continue;
        }
        col_idx.push_back(t.col);
        values.push_back(t.value);
        row_ptr[t.row + 1] = values.size();
        have_last = true;
        last_row = t.row;
        last_col = t.col;
    }
    // Fill gaps left by empty rows.
    for (std::size_t i = 1; i <= rows; ++i) row_ptr[i] = std::max(row_ptr[i], row_ptr[i - 1]);
    return SparseCsr(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseCsr SparseCsr::identity(std::size_t n) {
    std::vector<std::size_t> rp(n + 1), ci(n);
    for (std::size_t i = 0; i < n; ++i) {
        rp[i + 1] = i + 1;
        ci[i] = i;
    }
    return SparseCsr(n, n, std::move(rp), std::move(ci), std::vector<double>(n, 1.0));
}

double SparseCsr::at(std::size_t i, std::size_t j) const {
    auto b = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
    auto e = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
    auto it = std::lower_bound(b, e, j);
    return (it != e && *it == j) ? values_[static_cast<std::size_t>(it - col_idx_.begin())] : 0.0;
}

void SparseCsr::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols_ || y.size() != rows_) throw DimensionError("SparseCsr::multiply: shape");
    for (std::size_t i = 0; i < rows_; ++i) {
        double s = 0.0;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k] * x[col_idx_[k]];
        y[i] = s;
    }
}

std::vector<double> SparseCsr::multiply(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
}

std::vector<double> SparseCsr::transpose_multiply(std::span<const double> x) const {
    if (x.size() != rows_) throw DimensionError("SparseCsr::transpose_multiply: shape");
    std::vector<double> y(cols_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k)
            y[col_idx_[k]] += values_[k] * x[i];
    return y;
}

DenseMatrix SparseCsr::to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) d(i, col_idx_[k]) = values_[k];
    return d;
}

SparseCsr linear_combination(std::span<const SparseCsr* const> terms,
                             std::span<const double> coeffs) {
    if (terms.empty() || terms.size() != coeffs.size())
        throw ArgumentError("linear_combination: need one coefficient per term");
    const std::size_t rows = terms.front()->rows(), cols = terms.front()->cols();
    for (const auto* t : terms)
        if (t->rows() != rows || t->cols() != cols)
            throw DimensionError("linear_combination: shape mismatch");

    std::vector<std::size_t> row_ptr(rows + 1, 0);
    std::vector<std::size_t> col_idx;
    std::vector<double> values;
    std::map<std::size_t, double> acc;
    for (std::size_t i = 0; i < rows; ++i) {
        acc.clear();
        // Accumulate term by term so every entry is evaluated in the fixed
        // order coeff[0]*t0 + coeff[1]*t1 + ...
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const auto& m = *terms[t];
            for (std::size_t k = m.row_ptr()[i]; k < m.row_ptr()[i + 1]; ++k) {
                auto [it, inserted] = acc.try_emplace(m.col_idx()[k], 0.0);
                it->second += coeffs[t] * m.values()[k];
            }
        }
        for (const auto& [c, v] : acc) {
            col_idx.push_back(c);
            values.push_back(v);
        }
        row_ptr[i + 1] = values.size();
    }
    return SparseCsr(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

}  // namespace neumatc

namespace neumatc {

std::size_t operand_rows(const MatrixOperand& a) {
    return std::visit([](const auto& m) { return m.rows(); }, a);
}

std::size_t operand_cols(const MatrixOperand& a) {
    return std::visit([](const auto& m) { return m.cols(); }, a);
}

DenseMatrix operand_dense(const MatrixOperand& a) {
    if (const auto* d = std::get_if<DenseMatrix>(&a)) return *d;
    return std::get<SparseCsr>(a).to_dense();
}

DenseMatrix operand_multiply(const MatrixOperand& a, const DenseMatrix& x) {
    if (const auto* d = std::get_if<DenseMatrix>(&a)) return matmul(*d, x);
    const auto& s = std::get<SparseCsr>(a);
    if (x.rows() != s.cols()) throw DimensionError("operand_multiply: inner dimension mismatch");
    const std::size_t c = x.cols();
    DenseMatrix y(s.rows(), c);
    const auto& kern = kernels::active();
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t e = s.row_ptr()[i]; e < s.row_ptr()[i + 1]; ++e)
            kern.axpy(s.values()[e], x.row(s.col_idx()[e]).data(), y.row(i).data(), c);
    return y;
}

DenseMatrix operand_transpose_multiply(const MatrixOperand& a, const DenseMatrix& x) {
    if (const auto* d = std::get_if<DenseMatrix>(&a)) return matmul_tn(*d, x);
    const auto& s = std::get<SparseCsr>(a);
    if (x.rows() != s.rows()) throw DimensionError("operand_transpose_multiply: dimension mismatch");
    const std::size_t c = x.cols();
    DenseMatrix y(s.cols(), c);
    const auto& kern = kernels::active();
    for (std::size_t i = 0; i < s.rows(); ++i)
        for (std::size_t e = s.row_ptr()[i]; e < s.row_ptr()[i + 1]; ++e)
            kern.axpy(s.values()[e], x.row(i).data(), y.row(s.col_idx()[e]).data(), c);
    return y;
}

}  // namespace neumatc
