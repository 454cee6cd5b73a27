#include "neumatc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "neumatc/binary_io.hpp"
#include "neumatc/errors.hpp"
#include "neumatc/kernels.hpp"

namespace neumatc {

namespace {

std::string shape_str(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

// ---------------------------------------------------------------- DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw DimensionError("DenseMatrix: data length " + std::to_string(data_.size()) +
                             " does not match " + shape_str(rows, cols));
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("DenseMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) { return identity(n, n); }

DenseMatrix DenseMatrix::identity(std::size_t rows, std::size_t cols) {
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < std::min(rows, cols); ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::column(std::span<const double> v) {
    return DenseMatrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

DenseMatrix DenseMatrix::transposed() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
}

std::vector<double> DenseMatrix::column_copy(std::size_t j) const {
    std::vector<double> c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
}

bool DenseMatrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw DimensionError("matrix add: " + shape_str(rows_, cols_) + " vs " +
                             shape_str(other.rows_, other.cols_));
    kernels::active().axpy(1.0, other.data_.data(), data_.data(), data_.size());
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_)
        throw DimensionError("matrix sub: " + shape_str(rows_, cols_) + " vs " +
                             shape_str(other.rows_, other.cols_));
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) noexcept {
    for (double& x : data_) x *= s;
    return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: " + shape_str(a.rows(), a.cols()) + " * " +
                             shape_str(b.rows(), b.cols()));
    DenseMatrix c(a.rows(), b.cols());
    kernels::active().gemm_nn(a.rows(), b.cols(), a.cols(), a.data().data(), a.cols(),
                              b.data().data(), b.cols(), c.data().data(), c.cols(), false);
    return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmul_tn: " + shape_str(a.rows(), a.cols()) + "^T * " +
                             shape_str(b.rows(), b.cols()));
    DenseMatrix c(a.cols(), b.cols());
    kernels::active().gemm_tn(a.cols(), b.cols(), a.rows(), a.data().data(), a.cols(),
                              b.data().data(), b.cols(), c.data().data(), c.cols(), false);
    return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: " + shape_str(a.rows(), a.cols()) + " * " +
                             shape_str(b.rows(), b.cols()) + "^T");
    DenseMatrix c(a.rows(), b.rows());
    kernels::active().gemm_nt(a.rows(), b.rows(), a.cols(), a.data().data(), a.cols(),
                              b.data().data(), b.cols(), c.data().data(), c.cols(), false);
    return c;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
    if (a.cols() != x.size())
        throw DimensionError("matvec: " + shape_str(a.rows(), a.cols()) + " * vector of " +
                             std::to_string(x.size()));
    std::vector<double> y(a.rows());
    const auto& k = kernels::active();
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = k.dot(a.row(i).data(), x.data(), x.size());
    return y;
}

double fro_norm_sq(const DenseMatrix& m) {
    return kernels::active().sum_squares(m.data().data(), m.size());
}

double fro_norm(const DenseMatrix& m) { return std::sqrt(fro_norm_sq(m)); }

double l1_operator_norm(const DenseMatrix& m) {
    std::vector<double> colsum(m.cols(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) colsum[j] += std::abs(m(i, j));
    return colsum.empty() ? 0.0 : *std::max_element(colsum.begin(), colsum.end());
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

// -------------------------------------------------------------------- Tensor3

Tensor3::Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, double fill)
    : n1_(n1), n2_(n2), n3_(n3), data_(n1 * n2 * n3, fill) {}

Tensor3::Tensor3(std::size_t n1, std::size_t n2, std::size_t n3, std::vector<double> data)
    : n1_(n1), n2_(n2), n3_(n3), data_(std::move(data)) {
    if (data_.size() != n1 * n2 * n3)
        throw DimensionError("Tensor3: data length " + std::to_string(data_.size()) +
                             " does not match extents");
}

Tensor3 Tensor3::from_slices(std::span<const DenseMatrix> slices) {
    if (slices.empty()) return {};
    const std::size_t r = slices.front().rows(), c = slices.front().cols();
    Tensor3 t(r, c, slices.size());
    for (std::size_t l = 0; l < slices.size(); ++l) {
        if (slices[l].rows() != r || slices[l].cols() != c)
            throw DimensionError("Tensor3::from_slices: inconsistent slice shapes");
        std::copy(slices[l].data().begin(), slices[l].data().end(), t.slice_data(l).begin());
    }
    return t;
}

DenseMatrix Tensor3::slice(std::size_t l) const {
    auto s = slice_data(l);
    return DenseMatrix(n1_, n2_, std::vector<double>(s.begin(), s.end()));
}

DenseMatrix mode3_unfold(const Tensor3& t) {
    DenseMatrix m(t.n3(), t.n1() * t.n2());
    for (std::size_t i3 = 0; i3 < t.n3(); ++i3)
        for (std::size_t i2 = 0; i2 < t.n2(); ++i2)
            for (std::size_t i1 = 0; i1 < t.n1(); ++i1) m(i3, i1 + i2 * t.n1()) = t(i1, i2, i3);
    return m;
}

Tensor3 mode3_fold(const DenseMatrix& m, std::size_t n1, std::size_t n2) {
    if (m.cols() != n1 * n2)
        throw DimensionError("mode3_fold: matrix has " + std::to_string(m.cols()) +
                             " columns, expected n1*n2 = " + std::to_string(n1 * n2));
    Tensor3 t(n1, n2, m.rows());
    for (std::size_t i3 = 0; i3 < m.rows(); ++i3)
        for (std::size_t i2 = 0; i2 < n2; ++i2)
            for (std::size_t i1 = 0; i1 < n1; ++i1) t(i1, i2, i3) = m(i3, i1 + i2 * n1);
    return t;
}

DenseMatrix mode3_apply(const Tensor3& c, std::span<const double> v) {
    if (v.size() != c.n3())
        throw DimensionError("mode3_apply: vector length " + std::to_string(v.size()) +
                             " != n3 = " + std::to_string(c.n3()));
    DenseMatrix out(c.n1(), c.n2());
    kernels::active().gemm_nn(1, c.slice_size(), c.n3(), v.data(), c.n3(), c.data().data(),
                              c.slice_size(), out.data().data(), c.slice_size(), false);
    return out;
}

DenseMatrix mode3_apply_batch(const Tensor3& c, const DenseMatrix& v) {
    if (v.cols() != c.n3())
        throw DimensionError("mode3_apply_batch: coefficient width " + std::to_string(v.cols()) +
                             " != n3 = " + std::to_string(c.n3()));
    DenseMatrix out(v.rows(), c.slice_size());
    kernels::active().gemm_nn(v.rows(), c.slice_size(), c.n3(), v.data().data(), v.cols(),
                              c.data().data(), c.slice_size(), out.data().data(),
                              c.slice_size(), false);
    return out;
}

double fro_norm(const Tensor3& t) {
    return std::sqrt(kernels::active().sum_squares(t.data().data(), t.size()));
}

double l1_norm_tensor(const Tensor3& t) {
    double s = 0.0;
    for (double x : t.data()) s += std::abs(x);
    return s;
}

void write_tensor_blob(ByteWriter& out, const Tensor3& t) {
    out.magic("NMC1");
    out.u64(t.n1());
    out.u64(t.n2());
    out.u64(t.n3());
    out.f64s(t.data());
}

Tensor3 read_tensor_blob(ByteReader& in) {
    in.expect_magic("NMC1");
    const std::size_t shape_at = in.offset();
    const auto n1 = in.u64();
    const auto n2 = in.u64();
    const auto n3 = in.u64();
    if (n1 != 0 && n2 != 0 && (n1 * n2) / n2 != n1)
        throw FormatError("tensor extents overflow", shape_at);
    in.need_elements(n1 * n2 * n3, 8, "tensor data");
    std::vector<double> data(n1 * n2 * n3);
    in.f64s(data);
    return Tensor3(n1, n2, n3, std::move(data));
}

// ------------------------------------------------------------------ file I/O

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open for writing: " + tmp.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for reading: " + path.string());
    return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
}

}  // namespace neumatc
