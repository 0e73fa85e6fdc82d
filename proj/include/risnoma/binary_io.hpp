#pragma once

// Little-endian encoding helpers shared by the dataset and checkpoint formats.

#include <bit>
#include <complex>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "risnoma/error.hpp"

namespace risnoma::io {

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
    void c128(std::complex<double> z) {
        f64(z.real());
        f64(z.imag());
    }

    const std::vector<char>& buffer() const noexcept { return buf_; }

private:
    template <typename T>
    void put_le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
        }
    }

    std::vector<char> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

    std::uint64_t offset() const noexcept { return pos_; }
    std::uint64_t remaining() const noexcept { return data_.size() - pos_; }

    void expect_magic(std::string_view magic, const char* what) {
        require(magic.size(), what);
        if (std::memcmp(data_.data() + pos_, magic.data(), magic.size()) != 0) {
            throw FormatError(std::string("bad magic for ") + what, pos_);
        }
        pos_ += magic.size();
    }

    std::uint32_t u32(const char* what) { return get_le<std::uint32_t>(what); }
    std::uint64_t u64(const char* what) { return get_le<std::uint64_t>(what); }
    double f64(const char* what) { return std::bit_cast<double>(get_le<std::uint64_t>(what)); }
    std::complex<double> c128(const char* what) {
        const double re = f64(what);
        const double im = f64(what);
        return {re, im};
    }

    // Fails unless at least `n` bytes remain.
    void require(std::uint64_t n, const char* what) const {
        if (remaining() < n) {
            throw FormatError(std::string("truncated ") + what, data_.size());
        }
    }

    void expect_end(const char* what) const {
        if (pos_ != data_.size()) {
            throw FormatError(std::string("trailing bytes after ") + what, pos_);
        }
    }

private:
    template <typename T>
    T get_le(const char* what) {
        require(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return v;
    }

    std::vector<char> data_;
    std::uint64_t pos_ = 0;
};

std::vector<char> read_file(const std::string& path);

// Writes to `path` via a temporary sibling and rename, so a failed write
// never leaves a half-written file under the final name.
void write_file_atomic(const std::string& path, const std::vector<char>& data);
void write_file_atomic(const std::string& path, std::string_view text);

} // namespace risnoma::io
