#pragma once
// Dense matrix and third-order tensor storage plus the mode-3 algebra.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace neumatc {

class ByteWriter;
class ByteReader;

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix identity(std::size_t rows, std::size_t cols);
    static DenseMatrix column(std::span<const double> v);
    static DenseMatrix diagonal(std::span<const double> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    const std::vector<double>& values() const noexcept { return data_; }

    DenseMatrix transposed() const;
    std::vector<double> column_copy(std::size_t j) const;
    bool all_finite() const noexcept;

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double s) noexcept;

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b);
DenseMatrix operator*(double s, DenseMatrix a);

/// a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a^T * b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x);

double fro_norm(const DenseMatrix& m);
double fro_norm_sq(const DenseMatrix& m);
/// Max absolute column sum.
double l1_operator_norm(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Third-order tensor. Storage is slice-major: slice l (the n1 x n2 matrix
/// t[:,:,l]) occupies a contiguous row-major block, so a mode-3 product is a
/// single matrix-vector product over the data viewed as an n3 x (n1*n2) matrix.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, double fill = 0.0);
    Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, std::vector<double> data);

    static Tensor3 from_slices(std::span<const DenseMatrix> slices);

    std::size_t n1() const noexcept { return n1_; }
    std::size_t n2() const noexcept { return n2_; }
    std::size_t n3() const noexcept { return n3_; }
    std::size_t slice_size() const noexcept { return n1_ * n2_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i1, std::size_t i2, std::size_t i3) noexcept {
        return data_[(i3 * n1_ + i1) * n2_ + i2];
    }
    double operator()(std::size_t i1, std::size_t i2, std::size_t i3) const noexcept {
        return data_[(i3 * n1_ + i1) * n2_ + i2];
    }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> slice_data(std::size_t l) noexcept {
        return {data_.data() + l * slice_size(), slice_size()};
    }
    std::span<const double> slice_data(std::size_t l) const noexcept {
        return {data_.data() + l * slice_size(), slice_size()};
    }
    DenseMatrix slice(std::size_t l) const;

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t n1_ = 0;
    std::size_t n2_ = 0;
    std::size_t n3_ = 0;
    std::vector<double> data_;
};

/// n3 x (n1*n2) matrix; element t(i1,i2,i3) lands at (i3, i1 + i2*n1).
DenseMatrix mode3_unfold(const Tensor3& t);
/// Inverse of mode3_unfold. Throws DimensionError on shape mismatch.
Tensor3 mode3_fold(const DenseMatrix& m, std::size_t n1, std::size_t n2);
/// sum_l c(:,:,l) v[l]. Throws DimensionError when v.size() != c.n3().
DenseMatrix mode3_apply(const Tensor3& c, std::span<const double> v);
/// Row b of the result is the row-major flattening of mode3_apply(c, V.row(b)).
/// One gemm against the unfolded latent.
DenseMatrix mode3_apply_batch(const Tensor3& c, const DenseMatrix& v);

double fro_norm(const Tensor3& t);
double l1_norm_tensor(const Tensor3& t);

/// Tensor blob: "NMC1", three u64 extents, then n1*n2*n3 f64 in storage order.
void write_tensor_blob(ByteWriter& out, const Tensor3& t);
Tensor3 read_tensor_blob(ByteReader& in);

}  // namespace neumatc
