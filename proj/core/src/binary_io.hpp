#pragma once
// Little-endian encode/decode helpers shared by the binary formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mmmem::detail {

class ByteWriter {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::byte*>(data);
        out_.insert(out_.end(), p, p + n);
    }
    void magic(const char (&tag)[5]) { bytes(tag, 4); }
    void u32(std::uint32_t v) { le(v); }
    void u64(std::uint64_t v) { le(v); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    std::vector<std::byte>& buffer() { return out_; }

private:
    template <class T>
    void le(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
        }
    }
    std::vector<std::byte> out_;
};

// Bounds-checked reader; `ok()` turns false on the first short read.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> in) : in_(in) {}

    bool magic(const char (&tag)[5]) {
        if (!need(4)) return false;
        const bool match = std::memcmp(in_.data() + pos_, tag, 4) == 0;
        pos_ += 4;
        return match;
    }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    std::uint64_t u64() { return le<std::uint64_t>(); }
    float f32() { return std::bit_cast<float>(u32()); }
    std::span<const std::byte> take(std::size_t n) {
        if (!need(n)) return {};
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    bool ok() const { return ok_; }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    bool need(std::size_t n) {
        if (!ok_ || in_.size() - pos_ < n) {
            ok_ = false;
            return false;
        }
        return true;
    }
    template <class T>
    T le() {
        if (!need(sizeof(T))) return 0;
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(std::to_integer<std::uint8_t>(in_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return v;
    }

    std::span<const std::byte> in_;
    std::size_t pos_ = 0;
    bool ok_ = true;
};

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace mmmem::detail
