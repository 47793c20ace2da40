#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace xfmr {

/// Error raised when a binary file fails validation (magic, version, checksum, truncation).
class FileFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
inline constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s, std::uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

// Little-endian binary writer that maintains a running FNV-1a checksum of
// everything written, so formats can close with write_checksum().
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path)
        : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw FileFormatError("cannot open file for writing: " + path);
    }

    void bytes(const void* data, std::size_t n) {
        out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
        hash_ = fnv1a64(data, n, hash_);
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { put_le(v); }
    void u32(std::uint32_t v) { put_le(v); }
    void u64(std::uint64_t v) { put_le(v); }
    void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void f32_array(const float* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) f32(v[i]);
    }
    void f64_array(const double* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) f64(v[i]);
    }
    void u64_array(const std::uint64_t* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) u64(v[i]);
    }

    // Appends the running checksum (not itself checksummed) and flushes.
    void write_checksum() {
        std::uint64_t h = hash_;
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((h >> (8 * i)) & 0xff);
        out_.write(buf, 8);
        out_.flush();
        if (!out_) throw FileFormatError("write failed: " + path_);
    }

private:
    template <typename U>
    void put_le(U v) {
        char buf[sizeof(U)];
        for (std::size_t i = 0; i < sizeof(U); ++i)
            buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
        bytes(buf, sizeof(U));
    }

    std::ofstream out_;
    std::string path_;
    std::uint64_t hash_ = kFnvOffset;
};

// Reads a whole file up front; verifies the trailing checksum lazily via
// verify_checksum() once the caller has consumed the payload.
class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FileFormatError("cannot open file: " + path);
        in.seekg(0, std::ios::end);
        auto size = in.tellg();
        in.seekg(0, std::ios::beg);
        buf_.resize(static_cast<std::size_t>(size));
        in.read(buf_.data(), size);
        if (!in) throw FileFormatError("read failed: " + path);
    }

    void bytes(void* dst, std::size_t n) {
        if (pos_ + n > payload_end()) throw FileFormatError("truncated file: " + path_);
        std::memcpy(dst, buf_.data() + pos_, n);
        pos_ += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint16_t u16() { return get_le<std::uint16_t>(); }
    std::uint32_t u32() { return get_le<std::uint32_t>(); }
    std::uint64_t u64() { return get_le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(get_le<std::uint32_t>()); }
    double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
    std::string str() {
        std::uint64_t n = u64();
        if (n > payload_end() - pos_) throw FileFormatError("truncated string in " + path_);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    void f32_array(float* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) v[i] = f32();
    }
    void f64_array(double* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) v[i] = f64();
    }
    void u64_array(std::uint64_t* v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) v[i] = u64();
    }

    void expect_magic(const char magic[4], const std::string& what) {
        char m[4];
        bytes(m, 4);
        if (std::memcmp(m, magic, 4) != 0)
            throw FileFormatError("bad magic for " + what + " file: " + path_);
    }

    // Checks the trailing 8 bytes against the FNV-1a hash of the payload.
    void verify_checksum() {
        if (buf_.size() < 8) throw FileFormatError("truncated file: " + path_);
        std::uint64_t expect = 0;
        for (int i = 0; i < 8; ++i)
            expect |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[buf_.size() - 8 + i])) << (8 * i);
        std::uint64_t got = fnv1a64(buf_.data(), buf_.size() - 8);
        if (got != expect) throw FileFormatError("checksum mismatch: " + path_);
    }

    std::size_t remaining() const { return payload_end() - pos_; }

private:
    std::size_t payload_end() const { return buf_.size() >= 8 ? buf_.size() - 8 : 0; }

    template <typename U>
    U get_le() {
        char buf[sizeof(U)];
        bytes(buf, sizeof(U));
        U v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
            v |= static_cast<U>(static_cast<unsigned char>(buf[i])) << (8 * i);
        return v;
    }

    std::string path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

}  // namespace xfmr
