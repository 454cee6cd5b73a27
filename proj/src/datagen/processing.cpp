#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "neumatc/binary_io.hpp"
#include "neumatc/datagen.hpp"
#include "neumatc/errors.hpp"

namespace neumatc {

std::vector<SvdFactors> align_svd_sequence(std::vector<SvdFactors> seq, bool allow_permutation) {
    for (std::size_t j = 1; j < seq.size(); ++j) {
        const auto& prev = seq[j - 1];
        auto& cur = seq[j];
        const std::size_t r = cur.s.size();
        if (prev.u.rows() != cur.u.rows() || prev.u.cols() != r || cur.u.cols() != r ||
            prev.v.rows() != cur.v.rows() || cur.v.cols() != r || prev.s.size() != r)
            throw DimensionError("align_svd_sequence: inconsistent factor shapes at index " +
                                 std::to_string(j));
        if (allow_permutation && r > 1) {
            const DenseMatrix overlap = matmul_tn(prev.u, cur.u);
            std::vector<std::size_t> cells(r * r);
            std::iota(cells.begin(), cells.end(), 0);
            std::stable_sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
                return std::abs(overlap.data()[a]) > std::abs(overlap.data()[b]);
            });
            std::vector<std::size_t> source(r, r);  // slot -> current column
            std::vector<bool> taken(r, false);
            for (std::size_t cell : cells) {
                const std::size_t slot = cell / r, col = cell % r;
                if (source[slot] != r || taken[col]) continue;
                source[slot] = col;
                taken[col] = true;
            }
            bool identity = true;
            for (std::size_t k = 0; k < r; ++k) identity = identity && source[k] == k;
            if (!identity) {
                SvdFactors moved{DenseMatrix(cur.u.rows(), r), std::vector<double>(r),
                                 DenseMatrix(cur.v.rows(), r)};
                for (std::size_t k = 0; k < r; ++k) {
                    moved.s[k] = cur.s[source[k]];
                    for (std::size_t i = 0; i < cur.u.rows(); ++i) moved.u(i, k) = cur.u(i, source[k]);
                    for (std::size_t i = 0; i < cur.v.rows(); ++i) moved.v(i, k) = cur.v(i, source[k]);
                }
                cur = std::move(moved);
            }
        }
        for (std::size_t k = 0; k < r; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < cur.u.rows(); ++i) dot += prev.u(i, k) * cur.u(i, k);
            if (dot < 0.0) {
                for (std::size_t i = 0; i < cur.u.rows(); ++i) cur.u(i, k) = -cur.u(i, k);
                for (std::size_t i = 0; i < cur.v.rows(); ++i) cur.v(i, k) = -cur.v(i, k);
            }
        }
    }
    return seq;
}

void compute_targets(ParametricDataset& data, const TargetOptions& opts) {
    const std::size_t count = data.params.size();
    if (data.inputs.size() != count) throw DimensionError("compute_targets: inputs/params mismatch");
    std::vector<std::vector<DenseMatrix>> targets(count);
    std::vector<SvdFactors> svd(count);
    std::vector<std::size_t> failed;
    std::ostringstream why;
    for (std::size_t j = 0; j < count; ++j) {
        try {
            const auto& a = data.inputs[j];
            switch (data.kind.op) {
                case OpKind::Inverse: targets[j] = {lu_invert(operand_dense(a))}; break;
                case OpKind::Expm: targets[j] = {expm(operand_dense(a))}; break;
                case OpKind::Cholesky: targets[j] = {cholesky(operand_dense(a))}; break;
                case OpKind::Qr: {
                    auto qr = qr_decompose(operand_dense(a));
                    targets[j] = {std::move(qr.q), std::move(qr.r)};
                    break;
                }
                case OpKind::Svd: {
                    const auto shapes =
                        component_shapes(data.kind, operand_rows(a), operand_cols(a));
                    const std::size_t r = shapes[1].n1;
                    SvdResult full = dense_svd(operand_dense(a));
                    SvdFactors f{DenseMatrix(full.u.rows(), r), std::vector<double>(r),
                                 DenseMatrix(full.v.rows(), r)};
                    for (std::size_t k = 0; k < r; ++k) {
                        f.s[k] = full.s[k];
                        for (std::size_t i = 0; i < f.u.rows(); ++i) f.u(i, k) = full.u(i, k);
                        for (std::size_t i = 0; i < f.v.rows(); ++i) f.v(i, k) = full.v(i, k);
                    }
                    svd[j] = std::move(f);
                    break;
                }
                case OpKind::LinSolve: {
                    if (data.rhs.size() != operand_rows(a))
                        throw DimensionError("linsolve targets need a right-hand side of length " +
                                             std::to_string(operand_rows(a)));
                    std::vector<double> x;
                    if (const auto* s = std::get_if<SparseCsr>(&a))
                        x = sparse_solve(*s, data.rhs, KrylovMethod::BiCgStab, opts.krylov_tol,
                                         opts.krylov_max_iter)
                                .x;
                    else
                        x = lu_solve(std::get<DenseMatrix>(a), data.rhs);
                    targets[j] = {DenseMatrix::column(x)};
                    break;
                }
            }
        } catch (const Error& e) {
            failed.push_back(j);
            why << "\n  p[" << j << "] = (";
            for (std::size_t t = 0; t < data.params[j].size(); ++t)
                why << (t ? ", " : "") << data.params[j][t];
            why << "): " << e.what();
        }
    }
    if (!failed.empty())
        throw TargetError("target computation failed at " + std::to_string(failed.size()) +
                              " point(s):" + why.str(),
                          std::move(failed));
    if (data.kind.op == OpKind::Svd) {
        if (opts.align_svd) svd = align_svd_sequence(std::move(svd));
        for (std::size_t j = 0; j < count; ++j)
            targets[j] = {std::move(svd[j].u), DenseMatrix::column(svd[j].s), std::move(svd[j].v)};
    }
    data.targets = std::move(targets);
}

// ----------------------------------------------------------------------- files

namespace {

void write_kind(ByteWriter& w, const OperationKind& k) {
    w.u8(static_cast<std::uint8_t>(k.op));
    w.u64(k.rank);
}

OperationKind read_kind(ByteReader& r) {
    const std::size_t at = r.offset();
    const unsigned op = r.u8();
    if (op > static_cast<unsigned>(OpKind::LinSolve))
        throw FormatError("unknown operation tag " + std::to_string(op), at);
    return {static_cast<OpKind>(op), r.u64()};
}

void read_version(ByteReader& r, std::uint8_t expected) {
    const std::size_t at = r.offset();
    const unsigned v = r.u8();
    if (v != expected) throw UnsupportedVersionError(v, expected, at);
}

}  // namespace

void save_sequence(const ParametricDataset& data, const std::filesystem::path& path) {
    const std::size_t count = data.params.size();
    if (data.inputs.size() != count) throw DimensionError("save_sequence: inputs/params mismatch");
    const bool sparse = count > 0 && std::holds_alternative<SparseCsr>(data.inputs.front());
    const std::size_t k = data.domain.dim();
    ByteWriter w;
    w.magic("NMS1");
    w.u8(kSequenceFormatVersion);
    write_kind(w, data.kind);
    w.u8(sparse ? 1 : 0);
    w.u64(count);
    w.u64(k);
    w.f64s(data.domain.lower);
    w.f64s(data.domain.upper);
    w.u64(data.rhs.size());
    w.f64s(data.rhs);
    for (std::size_t j = 0; j < count; ++j) {
        if (data.params[j].size() != k) throw DimensionError("save_sequence: parameter dimension");
        if (std::holds_alternative<SparseCsr>(data.inputs[j]) != sparse)
            throw DimensionError("save_sequence: mixed dense and sparse records");
        w.f64s(data.params[j]);
        if (sparse) {
            const auto& s = std::get<SparseCsr>(data.inputs[j]);
            w.u64(s.rows());
            w.u64(s.cols());
            w.u64(s.nnz());
            for (auto v : s.row_ptr()) w.u64(v);
            for (auto v : s.col_idx()) w.u64(v);
            w.f64s(s.values());
        } else {
            const auto& m = std::get<DenseMatrix>(data.inputs[j]);
            w.u64(m.rows());
            w.u64(m.cols());
            w.f64s(m.data());
        }
    }
    w.save(path);
}

ParametricDataset load_sequence(const std::filesystem::path& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("NMS1");
    read_version(r, kSequenceFormatVersion);
    ParametricDataset d;
    d.kind = read_kind(r);
    const std::size_t storage_at = r.offset();
    const unsigned storage = r.u8();
    if (storage > 1) throw FormatError("unknown storage tag " + std::to_string(storage), storage_at);
    const std::size_t count = r.u64(), k = r.u64();
    if (k == 0 || k > 4) throw FormatError("parameter dimension must be in 1..4", r.offset());
    d.domain = {std::vector<double>(k), std::vector<double>(k)};
    r.f64s(d.domain.lower);
    r.f64s(d.domain.upper);
    const std::size_t nb = r.u64();
    r.need_elements(nb, 8, "rhs");
    d.rhs.resize(nb);
    r.f64s(d.rhs);
    r.need_elements(count, 8 * k, "record table");
    std::size_t rows0 = 0, cols0 = 0;
    for (std::size_t j = 0; j < count; ++j) {
        const std::string rec = "record " + std::to_string(j) + ": ";
        try {
            std::vector<double> p(k);
            r.f64s(p);
            const std::size_t shape_at = r.offset();
            const std::size_t rows = r.u64(), cols = r.u64();
            if (j == 0) {
                rows0 = rows;
                cols0 = cols;
            } else if (rows != rows0 || cols != cols0) {
                throw FormatError(rec + "shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                                      " differs from record 0",
                                  shape_at);
            }
            if (storage == 1) {
                const std::size_t nnz = r.u64();
                r.need_elements(rows + 1, 8, "row pointers");
                std::vector<std::size_t> rp(rows + 1);
                for (auto& v : rp) v = r.u64();
                r.need_elements(nnz, 16, "sparse entries");
                std::vector<std::size_t> ci(nnz);
                for (auto& v : ci) v = r.u64();
                std::vector<double> vals(nnz);
                r.f64s(vals);
                try {
                    d.inputs.emplace_back(SparseCsr(rows, cols, std::move(rp), std::move(ci), std::move(vals)));
                } catch (const Error& e) {
                    throw FormatError(rec + e.what(), shape_at);
                }
            } else {
                if (rows != 0 && cols > r.remaining() / 8 / rows)
                    throw FormatError(rec + "truncated matrix", r.offset());
                DenseMatrix m(rows, cols);
                r.f64s(m.data());
                d.inputs.emplace_back(std::move(m));
            }
            d.params.push_back(std::move(p));
        } catch (const FormatError& e) {
            const std::string msg = e.what();
            if (msg.rfind("record ", 0) == 0) throw;
            throw FormatError(rec + msg, r.offset());
        }
    }
    if (!r.at_end()) throw FormatError("trailing bytes after " + std::to_string(count) + " records", r.offset());
    return d;
}

void save_targets(const ParametricDataset& data, const std::filesystem::path& path) {
    if (data.targets.size() != data.params.size())
        throw DimensionError("save_targets: dataset has no complete target set");
    const std::size_t m = data.targets.empty() ? 0 : data.targets.front().size();
    ByteWriter w;
    w.magic("NMT1");
    w.u8(kSequenceFormatVersion);
    write_kind(w, data.kind);
    w.u64(data.targets.size());
    w.u64(m);
    for (const auto& rec : data.targets) {
        if (rec.size() != m) throw DimensionError("save_targets: ragged component lists");
        for (const auto& c : rec) {
            w.u64(c.rows());
            w.u64(c.cols());
            w.f64s(c.data());
        }
    }
    w.save(path);
}

void load_targets(ParametricDataset& data, const std::filesystem::path& path) {
    ByteReader r = ByteReader::from_file(path);
    r.expect_magic("NMT1");
    read_version(r, kSequenceFormatVersion);
    const std::size_t kind_at = r.offset();
    const OperationKind kind = read_kind(r);
    if (!(kind == data.kind))
        throw FormatError("targets are for '" + std::string(op_name(kind.op)) +
                              "' but the dataset is '" + std::string(op_name(data.kind.op)) + "'",
                          kind_at);
    const std::size_t count_at = r.offset();
    const std::size_t count = r.u64(), m = r.u64();
    if (count != data.params.size())
        throw FormatError("target count " + std::to_string(count) + " != dataset size " +
                              std::to_string(data.params.size()),
                          count_at);
    std::vector<std::vector<DenseMatrix>> targets(count);
    for (std::size_t j = 0; j < count; ++j)
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t rows = r.u64(), cols = r.u64();
            if (rows != 0 && cols > r.remaining() / 8 / rows)
                throw FormatError("record " + std::to_string(j) + ": truncated target", r.offset());
            DenseMatrix c(rows, cols);
            r.f64s(c.data());
            targets[j].push_back(std::move(c));
        }
    if (!r.at_end()) throw FormatError("trailing bytes in target file", r.offset());
    data.targets = std::move(targets);
}

}  // namespace neumatc
