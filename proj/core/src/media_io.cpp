#include "mmmem/media_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include "binary_io.hpp"
#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

namespace detail {

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<char> chars((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path.string());
    std::vector<std::byte> bytes(chars.size());
    std::transform(chars.begin(), chars.end(), bytes.begin(), [](char c) { return static_cast<std::byte>(c); });
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename into " + path.string());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path, std::as_bytes(std::span<const char>(text.data(), text.size())));
}

}  // namespace detail

void validate_stream(std::span<const Frame> frames) {
    if (frames.empty()) throw ContractError("frame stream is empty");
    const FrameShape shape = frames.front().shape;
    if (shape.size() == 0) throw ShapeError("frame has zero size");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Frame& f = frames[i];
        if (!(f.shape == shape)) throw ShapeError("frame " + std::to_string(i) + " differs in shape");
        if (f.values.size() != shape.size()) {
            throw ShapeError("frame " + std::to_string(i) + " has " + std::to_string(f.values.size()) +
                             " values, expected " + std::to_string(shape.size()));
        }
        if (i > 0 && f.timestamp_ms <= frames[i - 1].timestamp_ms) {
            throw ContractError("timestamps not strictly increasing at frame " + std::to_string(i));
        }
    }
}

std::vector<Clip> segment_fixed(std::vector<Frame> frames, std::size_t frames_per_clip) {
    if (frames_per_clip == 0) throw ContractError("frames_per_clip must be >= 1");
    std::vector<Clip> clips;
    if (frames.empty()) return clips;
    validate_stream(frames);
    for (std::size_t start = 0; start < frames.size(); start += frames_per_clip) {
        const std::size_t end = std::min(frames.size(), start + frames_per_clip);
        Clip clip;
        clip.id = static_cast<std::uint32_t>(clips.size());
        for (std::size_t i = start; i < end; ++i) {
            Frame f = std::move(frames[i]);
            f.index = static_cast<std::uint32_t>(i - start);
            clip.frames.push_back(std::move(f));
        }
        clip.start_ms = clip.frames.front().timestamp_ms;
        clip.end_ms = clip.frames.back().timestamp_ms;
        clips.push_back(std::move(clip));
    }
    return clips;
}

std::optional<std::string> subtitle_text(const SubtitleTrack& track, std::uint64_t start_ms, std::uint64_t end_ms) {
    std::string text;
    bool any = false;
    for (const auto& cue : track) {
        if (cue.start_ms <= end_ms && cue.end_ms >= start_ms) {
            if (any) text.push_back(' ');
            text += cue.text;
            any = true;
        }
    }
    if (!any) return std::nullopt;
    return text;
}

// ---------------------------------------------------------------------------
// Frame dump

namespace {

std::vector<std::byte> slurp(std::istream& in) {
    std::vector<char> chars((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> bytes(chars.size());
    std::transform(chars.begin(), chars.end(), bytes.begin(), [](char c) { return static_cast<std::byte>(c); });
    return bytes;
}

std::ifstream open_input(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot open " + path.string());
    return in;
}

template <class T>
T parse_number(std::string_view text, const std::string& what) {
    T value{};
    const std::string t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw ParseError(what + ": not a number: '" + t + "'");
    }
    return value;
}

}  // namespace

std::vector<Frame> read_frame_dump(std::istream& in) {
    const auto bytes = slurp(in);
    detail::ByteReader r(bytes);
    if (!r.magic("MMFR")) throw ParseError("frame dump: bad magic");
    const std::uint32_t version = r.u32();
    FrameShape shape;
    shape.height = r.u32();
    shape.width = r.u32();
    shape.channels = r.u32();
    const std::uint64_t count = r.u64();
    if (!r.ok()) throw ParseError("frame dump: truncated header");
    if (version != kFrameDumpVersion) throw ParseError("frame dump: unsupported version " + std::to_string(version));
    if (shape.size() == 0) throw ParseError("frame dump: zero-sized frames");
    const std::size_t record = 8 + shape.size();
    if (count > r.remaining() / record) throw ParseError("frame dump: truncated payload");

    std::vector<Frame> frames;
    frames.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        Frame f;
        f.index = static_cast<std::uint32_t>(i);
        f.timestamp_ms = r.u64();
        f.shape = shape;
        const auto px = r.take(shape.size());
        f.values.resize(shape.size());
        for (std::size_t k = 0; k < px.size(); ++k) f.values[k] = static_cast<float>(std::to_integer<std::uint8_t>(px[k]));
        frames.push_back(std::move(f));
    }
    if (!r.ok()) throw ParseError("frame dump: truncated payload");
    if (r.remaining() != 0) throw ParseError("frame dump: trailing bytes");
    if (!frames.empty()) validate_stream(frames);
    return frames;
}

std::vector<Frame> read_frame_dump(const std::filesystem::path& path) {
    auto in = open_input(path, std::ios::binary);
    try {
        return read_frame_dump(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_frame_dump(std::ostream& out, std::span<const Frame> frames) {
    detail::ByteWriter w;
    const FrameShape shape = frames.empty() ? FrameShape{1, 1, 1} : frames.front().shape;
    if (!frames.empty()) validate_stream(frames);
    w.magic("MMFR");
    w.u32(kFrameDumpVersion);
    w.u32(shape.height);
    w.u32(shape.width);
    w.u32(shape.channels);
    w.u64(frames.size());
    for (const auto& f : frames) {
        w.u64(f.timestamp_ms);
        for (float v : f.values) {
            const float c = std::clamp(v, 0.0f, 255.0f);
            const auto byte = static_cast<std::uint8_t>(c + 0.5f);
            w.bytes(&byte, 1);
        }
    }
    const auto& buf = w.buffer();
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("frame dump write failed");
}

void write_frame_dump(const std::filesystem::path& path, std::span<const Frame> frames) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    write_frame_dump(out, frames);
}

// ---------------------------------------------------------------------------
// Feature records

std::vector<Frame> read_feature_records(std::istream& in) {
    std::vector<Frame> frames;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto tab = t.find('\t');
        const std::string where = "feature record line " + std::to_string(line_no);
        if (tab == std::string::npos) throw ParseError(where + ": expected timestamp<TAB>values");
        Frame f;
        f.index = static_cast<std::uint32_t>(frames.size());
        f.timestamp_ms = parse_number<std::uint64_t>(std::string_view(t).substr(0, tab), where);
        std::istringstream values(t.substr(tab + 1));
        std::string tok;
        while (values >> tok) f.values.push_back(parse_number<float>(tok, where));
        if (f.values.empty()) throw ParseError(where + ": no feature values");
        f.shape = FrameShape{1, static_cast<std::uint32_t>(f.values.size()), 1};
        frames.push_back(std::move(f));
    }
    if (!frames.empty()) validate_stream(frames);
    return frames;
}

std::vector<Frame> read_feature_records(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_feature_records(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Subtitles

SubtitleTrack read_subtitles(std::istream& in) {
    SubtitleTrack track;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto parts = split(line, '\t');
        const std::string where = "subtitle line " + std::to_string(line_no);
        if (parts.size() < 3) throw ParseError(where + ": expected start_ms<TAB>end_ms<TAB>text");
        SubtitleCue cue;
        cue.start_ms = parse_number<std::uint64_t>(parts[0], where);
        cue.end_ms = parse_number<std::uint64_t>(parts[1], where);
        if (cue.end_ms < cue.start_ms) throw ParseError(where + ": end before start");
        // Text may itself contain tabs.
        cue.text = line.substr(parts[0].size() + parts[1].size() + 2);
        track.push_back(std::move(cue));
    }
    return track;
}

SubtitleTrack read_subtitles(const std::filesystem::path& path) {
    auto in = open_input(path);
    try {
        return read_subtitles(in);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

}  // namespace mmmem
