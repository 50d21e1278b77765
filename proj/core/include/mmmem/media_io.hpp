#pragma once
// Readers and writers for the engine's input formats.
//
// Frame dump (binary, little-endian):
//   "MMFR" | version u32 | height u32 | width u32 | channels u32 | frame_count u64
//   then frame_count records of: timestamp_ms u64 | height*width*channels bytes
//
// Feature records (text): one frame per line, `timestamp_ms<TAB>v0 v1 ... vD-1`.
// Blank lines and lines starting with '#' are ignored.
//
// Subtitle track (text, UTF-8): `start_ms<TAB>end_ms<TAB>text` per line.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mmmem/frame.hpp"

namespace mmmem {

inline constexpr std::uint32_t kFrameDumpVersion = 1;

std::vector<Frame> read_frame_dump(std::istream& in);
std::vector<Frame> read_frame_dump(const std::filesystem::path& path);
void write_frame_dump(std::ostream& out, std::span<const Frame> frames);
void write_frame_dump(const std::filesystem::path& path, std::span<const Frame> frames);

std::vector<Frame> read_feature_records(std::istream& in);
std::vector<Frame> read_feature_records(const std::filesystem::path& path);

SubtitleTrack read_subtitles(std::istream& in);
SubtitleTrack read_subtitles(const std::filesystem::path& path);

}  // namespace mmmem
