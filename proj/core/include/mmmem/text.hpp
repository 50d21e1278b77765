#pragma once
// Small text and hashing helpers shared across modules.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mmmem {

// Case-fold (ASCII), trim, collapse internal whitespace runs to one space.
// Idempotent.
std::string normalize_surface(std::string_view text);

std::string trim(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

std::vector<std::string> split_lines(std::string_view text);

// Lower-cased alphanumeric runs.
std::vector<std::string> word_tokens(std::string_view text);

// Whitespace-separated tokens, used as the length measure of free text traces.
std::size_t whitespace_token_count(std::string_view text);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;
std::uint64_t fnv1a64(std::string_view text,
                      std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

std::string hex64(std::uint64_t value);

// splitmix64 step; used wherever a reproducible stream of bits is needed
// independent of the standard library's distribution implementations.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Uniform double in [0, 1) from the top 53 bits.
inline double unit_double(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Shortest round-trip decimal form of a double.
std::string format_double(double value);

}  // namespace mmmem
