#include "mmmem/store.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "binary_io.hpp"
#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

const char* const kManifestName = "manifest";
const char* const kDataFiles[] = {"sensory.emb", "episodic.emb", "concept.emb", "sensory.rec",
                                  "episodic.rec", "schema.rec", "actions.log"};

std::string as_text(std::span<const std::byte> bytes) {
    return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

std::string encode_sensory(const std::vector<SensoryItem>& items) {
    std::string out;
    for (const auto& s : items) {
        ordered_json j;
        j["id"] = s.id;
        j["clip_id"] = s.clip_id;
        j["timestamp_ms"] = s.timestamp_ms;
        j["window"] = {s.window.first, s.window.second};
        j["text"] = s.text_trace;
        out += j.dump() + '\n';
    }
    return out;
}

std::string encode_episodic(const std::vector<EpisodicNode>& nodes) {
    std::string out;
    for (const auto& n : nodes) {
        ordered_json j;
        j["id"] = n.id;
        j["text"] = n.text;
        j["span_ms"] = {n.span_ms.first, n.span_ms.second};
        j["merged_count"] = n.merged_count;
        j["source_items"] = n.source_items;
        j["is_prototype"] = n.is_prototype;
        out += j.dump() + '\n';
    }
    return out;
}

std::vector<nlohmann::json> parse_lines(const std::string& text, const std::string& name) {
    std::vector<nlohmann::json> out;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw CorruptionError(name + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string encode_manifest(const Manifest& m) {
    std::ostringstream out;
    out << "format_version=" << m.format_version << '\n'
        << "dimension=" << m.dimension << '\n'
        << "sensory_count=" << m.sensory_count << '\n'
        << "episodic_count=" << m.episodic_count << '\n'
        << "concept_count=" << m.concept_count << '\n'
        << "edge_count=" << m.edge_count << '\n'
        << "action_count=" << m.action_count << '\n'
        << "seed=" << m.seed << '\n';
    for (const auto& [k, v] : m.build_config) out << "config." << k << '=' << v << '\n';
    for (const auto& [k, v] : m.digests) out << "digest." << k << '=' << v << '\n';
    return out.str();
}

std::uint64_t parse_u64(const std::string& value, const std::string& key) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != value.size() || value.front() == '-') {
        throw CorruptionError("manifest: bad value for " + key + ": '" + value + "'");
    }
    return v;
}

Manifest parse_manifest(const std::string& text) {
    Manifest m;
    bool have_version = false;
    for (const auto& line : split_lines(text)) {
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw CorruptionError("manifest: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key.rfind("config.", 0) == 0) {
            m.build_config[key.substr(7)] = value;
        } else if (key.rfind("digest.", 0) == 0) {
            m.digests[key.substr(7)] = value;
        } else if (key == "format_version") {
            const auto v = parse_u64(value, key);
            if (v > std::numeric_limits<std::uint32_t>::max()) throw CorruptionError("manifest: bad format_version");
            m.format_version = static_cast<std::uint32_t>(v);
            have_version = true;
        } else if (key == "dimension") {
            m.dimension = parse_u64(value, key);
        } else if (key == "sensory_count") {
            m.sensory_count = parse_u64(value, key);
        } else if (key == "episodic_count") {
            m.episodic_count = parse_u64(value, key);
        } else if (key == "concept_count") {
            m.concept_count = parse_u64(value, key);
        } else if (key == "edge_count") {
            m.edge_count = parse_u64(value, key);
        } else if (key == "action_count") {
            m.action_count = parse_u64(value, key);
        } else if (key == "seed") {
            m.seed = parse_u64(value, key);
        } else {
            throw CorruptionError("manifest: unknown key '" + key + "'");
        }
    }
    if (!have_version) throw CorruptionError("manifest: missing format_version");
    if (m.format_version != kSnapshotFormatVersion) {
        throw CorruptionError("manifest: unsupported format_version " + std::to_string(m.format_version));
    }
    return m;
}

void check_count(std::size_t actual, std::size_t expected, const std::string& what) {
    if (actual != expected) {
        throw ConsistencyError(what + ": manifest says " + std::to_string(expected) + ", found " +
                               std::to_string(actual));
    }
}

Embedding row_of(const EmbeddingBlob& blob, std::size_t i) {
    const auto begin = blob.values.begin() + static_cast<std::ptrdiff_t>(i * blob.dimension);
    return Embedding(begin, begin + blob.dimension);
}

void check_blob_dim(const EmbeddingBlob& blob, std::size_t dimension, const std::string& name) {
    if (blob.count() > 0 || blob.dimension != 0) {
        if (blob.dimension != dimension) {
            throw ConsistencyError(name + ": dimension " + std::to_string(blob.dimension) + " but manifest says " +
                                   std::to_string(dimension));
        }
    }
}

Embedding quantize(const Embedding& e) {
    Embedding out(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = static_cast<double>(static_cast<float>(e[i]));
    return out;
}

}  // namespace

std::vector<std::byte> encode_embedding_blob(std::uint32_t dimension, std::span<const Embedding> rows) {
    detail::ByteWriter w;
    w.magic("MMEM");
    w.u32(kEmbeddingBlobVersion);
    w.u32(dimension);
    w.u64(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != dimension) {
            throw ShapeError("embedding row " + std::to_string(r) + " has dimension " + std::to_string(rows[r].size()) +
                             ", expected " + std::to_string(dimension));
        }
        for (double v : rows[r]) w.f32(static_cast<float>(v));
    }
    return std::move(w.buffer());
}

EmbeddingBlob decode_embedding_blob(std::span<const std::byte> bytes, const std::string& name) {
    detail::ByteReader r(bytes);
    if (!r.magic("MMEM")) throw CorruptionError(name + ": bad magic");
    const auto version = r.u32();
    const auto dim = r.u32();
    const auto count = r.u64();
    if (!r.ok()) throw CorruptionError(name + ": truncated header");
    if (version != kEmbeddingBlobVersion) throw CorruptionError(name + ": unsupported version " + std::to_string(version));
    if (dim != 0 && count > r.remaining() / 4 / dim) throw CorruptionError(name + ": payload shorter than header claims");
    const std::uint64_t floats = count * dim;
    if (r.remaining() != floats * 4) throw CorruptionError(name + ": payload length does not match header");
    EmbeddingBlob blob;
    blob.dimension = dim;
    blob.values.resize(floats);
    for (auto& v : blob.values) v = r.f32();
    return blob;
}

MemoryPyramid quantized(MemoryPyramid p) {
    for (auto& s : p.sensory) s.visual = quantize(s.visual);
    for (auto& n : p.episodic.stream) n.representation = quantize(n.representation);
    for (auto& [id, c] : p.schema.concepts) c.embedding = quantize(c.embedding);
    return p;
}

Manifest save_memory(const MemoryPyramid& p, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    if (p.dimension > std::numeric_limits<std::uint32_t>::max()) throw ContractError("dimension too large");
    const auto dim = static_cast<std::uint32_t>(p.dimension);

    std::vector<Embedding> sensory_rows, episodic_rows, concept_rows;
    for (const auto& s : p.sensory) sensory_rows.push_back(s.visual);
    for (const auto& n : p.episodic.stream) episodic_rows.push_back(n.representation);
    for (const auto& [id, c] : p.schema.concepts) concept_rows.push_back(c.embedding);

    std::ostringstream schema_out, actions_out;
    write_schema_records(schema_out, p.schema);
    write_action_log(actions_out, p.episodic.action_log);

    std::vector<std::pair<std::string, std::vector<std::byte>>> files;
    auto add_text = [&](const char* name, const std::string& text) {
        const auto b = std::as_bytes(std::span<const char>(text.data(), text.size()));
        files.emplace_back(name, std::vector<std::byte>(b.begin(), b.end()));
    };
    files.emplace_back("sensory.emb", encode_embedding_blob(dim, sensory_rows));
    files.emplace_back("episodic.emb", encode_embedding_blob(dim, episodic_rows));
    files.emplace_back("concept.emb", encode_embedding_blob(dim, concept_rows));
    add_text("sensory.rec", encode_sensory(p.sensory));
    add_text("episodic.rec", encode_episodic(p.episodic.stream));
    add_text("schema.rec", schema_out.str());
    add_text("actions.log", actions_out.str());

    Manifest m;
    m.dimension = p.dimension;
    m.sensory_count = p.sensory.size();
    m.episodic_count = p.episodic.stream.size();
    m.concept_count = p.schema.concepts.size();
    m.edge_count = p.schema.edges.size();
    m.action_count = p.episodic.action_log.size();
    m.seed = p.seed;
    for (const auto& [k, v] : p.build_config) {
        if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
            throw ContractError("build_config entry '" + k + "' cannot be stored in a manifest");
        }
    }
    m.build_config = p.build_config;
    for (const auto& [name, bytes] : files) {
        m.digests[name] = hex64(fnv1a64(bytes));
        detail::write_file_atomic(dir / name, bytes);
    }
    // The manifest goes last: a directory without one is not a snapshot.
    detail::write_file_atomic(dir / kManifestName, encode_manifest(m));
    return m;
}

Manifest read_manifest(const fs::path& dir) {
    const fs::path path = dir / kManifestName;
    if (!fs::exists(path)) throw IoError("no manifest in " + dir.string());
    return parse_manifest(as_text(detail::read_file_bytes(path)));
}

MemoryPyramid load_memory(const fs::path& dir) {
    const Manifest m = read_manifest(dir);
    std::map<std::string, std::vector<std::byte>> data;
    for (const char* name : kDataFiles) {
        const fs::path path = dir / name;
        const auto it = m.digests.find(name);
        if (it == m.digests.end()) throw CorruptionError("manifest: no digest for " + path.string());
        if (!fs::exists(path)) throw CorruptionError(path.string() + ": file missing");
        auto bytes = detail::read_file_bytes(path);
        if (hex64(fnv1a64(bytes)) != it->second) throw CorruptionError(path.string() + ": digest mismatch");
        data.emplace(name, std::move(bytes));
    }
    if (m.digests.size() != std::size(kDataFiles)) throw CorruptionError("manifest: unexpected digest entries");

    const auto sensory_blob = decode_embedding_blob(data["sensory.emb"], (dir / "sensory.emb").string());
    const auto episodic_blob = decode_embedding_blob(data["episodic.emb"], (dir / "episodic.emb").string());
    const auto concept_blob = decode_embedding_blob(data["concept.emb"], (dir / "concept.emb").string());
    check_blob_dim(sensory_blob, m.dimension, "sensory.emb");
    check_blob_dim(episodic_blob, m.dimension, "episodic.emb");
    check_blob_dim(concept_blob, m.dimension, "concept.emb");

    MemoryPyramid p;
    p.dimension = m.dimension;
    p.seed = m.seed;
    p.build_config = m.build_config;

    try {
        const auto sensory = parse_lines(as_text(data["sensory.rec"]), "sensory.rec");
        check_count(sensory.size(), m.sensory_count, "sensory.rec");
        check_count(sensory_blob.count(), m.sensory_count, "sensory.emb");
        for (std::size_t i = 0; i < sensory.size(); ++i) {
            const auto& j = sensory[i];
            SensoryItem s;
            s.id = j.at("id").get<std::uint32_t>();
            s.clip_id = j.at("clip_id").get<std::uint32_t>();
            s.timestamp_ms = j.at("timestamp_ms").get<std::uint64_t>();
            s.window = {j.at("window").at(0).get<std::uint32_t>(), j.at("window").at(1).get<std::uint32_t>()};
            s.text_trace = j.at("text").get<std::string>();
            s.visual = row_of(sensory_blob, i);
            p.sensory.push_back(std::move(s));
        }

        const auto episodic = parse_lines(as_text(data["episodic.rec"]), "episodic.rec");
        check_count(episodic.size(), m.episodic_count, "episodic.rec");
        check_count(episodic_blob.count(), m.episodic_count, "episodic.emb");
        for (std::size_t i = 0; i < episodic.size(); ++i) {
            const auto& j = episodic[i];
            EpisodicNode n;
            n.id = j.at("id").get<std::uint32_t>();
            n.text = j.at("text").get<std::string>();
            n.span_ms = {j.at("span_ms").at(0).get<std::uint64_t>(), j.at("span_ms").at(1).get<std::uint64_t>()};
            n.merged_count = j.at("merged_count").get<std::uint32_t>();
            n.source_items = j.at("source_items").get<std::vector<std::uint32_t>>();
            n.is_prototype = j.at("is_prototype").get<bool>();
            n.representation = row_of(episodic_blob, i);
            p.episodic.stream.push_back(std::move(n));
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(dir.string() + ": malformed record: " + e.what());
    }
    // ADD_NEW appends and MERGE targets the newest node, so the latest node is
    // always the last one.
    if (!p.episodic.stream.empty()) p.episodic.latest = static_cast<std::uint32_t>(p.episodic.stream.size() - 1);

    {
        std::istringstream in(as_text(data["actions.log"]));
        try {
            p.episodic.action_log = read_action_log(in);
        } catch (const ParseError& e) {
            throw CorruptionError(std::string("actions.log: ") + e.what());
        }
        check_count(p.episodic.action_log.size(), m.action_count, "actions.log");
    }
    {
        std::istringstream in(as_text(data["schema.rec"]));
        try {
            p.schema = read_schema_records(in);
        } catch (const ParseError& e) {
            throw CorruptionError(std::string("schema.rec: ") + e.what());
        }
        check_count(p.schema.concepts.size(), m.concept_count, "schema.rec concepts");
        check_count(p.schema.edges.size(), m.edge_count, "schema.rec edges");
        check_count(concept_blob.count(), m.concept_count, "concept.emb");
        std::size_t i = 0;
        for (auto& [id, c] : p.schema.concepts) c.embedding = row_of(concept_blob, i++);
    }
    return p;
}

}  // namespace mmmem
