#pragma once
// Little-endian primitive I/O with byte-offset tracking for error reports.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neumatc/errors.hpp"

namespace neumatc {

/// Whole-file helpers; writes go to a temp file that is then renamed.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u64(std::uint64_t v) { put(v); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
    void f64s(std::span<const double> v) {
        for (double x : v) f64(x);
    }

    const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }
    std::size_t size() const noexcept { return buf_.size(); }

    void save(const std::filesystem::path& path) const { write_file_bytes(path, buf_); }

private:
    void put(std::uint64_t v) {
        if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
        std::uint8_t b[8];
        std::memcpy(b, &v, 8);
        buf_.insert(buf_.end(), b, b + 8);
    }
    static std::uint64_t byteswap(std::uint64_t v) {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
        return r;
    }

    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}
    static ByteReader from_file(const std::filesystem::path& path) {
        return ByteReader(read_file_bytes(path));
    }

    std::uint8_t u8() {
        need(1, "u8");
        return buf_[pos_++];
    }
    std::uint64_t u64() {
        need(8, "u64");
        std::uint64_t v;
        std::memcpy(&v, buf_.data() + pos_, 8);
        pos_ += 8;
        if constexpr (std::endian::native == std::endian::big) {
            std::uint64_t r = 0;
            for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xff);
            v = r;
        }
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    void f64s(std::span<double> out) {
        need(out.size() * 8, "f64 array");
        for (double& x : out) x = f64();
    }
    void expect_magic(std::string_view m) {
        need(m.size(), "magic");
        if (std::memcmp(buf_.data() + pos_, m.data(), m.size()) != 0)
            throw FormatError("bad magic, expected '" + std::string(m) + "'", pos_);
        pos_ += m.size();
    }
    /// Guard against absurd extents before allocating.
    void need_elements(std::uint64_t count, std::size_t elem_size, const char* what) {
        if (elem_size != 0 && count > remaining() / elem_size)
            throw FormatError(std::string("truncated ") + what, pos_);
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return buf_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == buf_.size(); }

private:
    void need(std::size_t n, const char* what) {
        if (remaining() < n) throw FormatError(std::string("truncated ") + what, pos_);
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

}  // namespace neumatc
