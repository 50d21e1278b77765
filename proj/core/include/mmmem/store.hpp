#pragma once
// On-disk snapshot of a memory pyramid.
//
// Layout of a snapshot directory:
//   manifest        key=value lines (format, dimension, counts, provenance, digests)
//   sensory.emb     EmbeddingBlob of sensory visuals
//   episodic.emb    EmbeddingBlob of episodic representations
//   concept.emb     EmbeddingBlob of concept gloss embeddings (ascending id)
//   sensory.rec     line-delimited JSON, one sensory item per line
//   episodic.rec    line-delimited JSON, one episodic node per line
//   schema.rec      schema records (see write_schema_records)
//   actions.log     one action kind per line
//
// EmbeddingBlob: "MMEM" | version u32 | dim u32 | count u64 | count*dim float32,
// all little-endian. Every file is covered by a 64-bit FNV-1a digest in the
// manifest; snapshots are immutable, rebuilt rather than updated.
//
// Embeddings are stored as float32. Everything else round-trips exactly.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mmmem/pyramid.hpp"

namespace mmmem {

inline constexpr std::uint32_t kSnapshotFormatVersion = 1;
inline constexpr std::uint32_t kEmbeddingBlobVersion = 1;

struct Manifest {
    std::uint32_t format_version = kSnapshotFormatVersion;
    std::size_t dimension = 0;
    std::size_t sensory_count = 0;
    std::size_t episodic_count = 0;
    std::size_t concept_count = 0;
    std::size_t edge_count = 0;
    std::size_t action_count = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> build_config;
    std::map<std::string, std::string> digests;  // file name -> 16 hex digits

    bool operator==(const Manifest&) const = default;
};

struct EmbeddingBlob {
    std::uint32_t dimension = 0;
    std::vector<float> values;  // count * dimension

    std::size_t count() const { return dimension == 0 ? 0 : values.size() / dimension; }
};

std::vector<std::byte> encode_embedding_blob(std::uint32_t dimension, std::span<const Embedding> rows);
// `name` is used in error messages.
EmbeddingBlob decode_embedding_blob(std::span<const std::byte> bytes, const std::string& name);

Manifest save_memory(const MemoryPyramid& pyramid, const std::filesystem::path& dir);
MemoryPyramid load_memory(const std::filesystem::path& dir);
Manifest read_manifest(const std::filesystem::path& dir);

// The pyramid as it will read back: embeddings rounded through float32.
MemoryPyramid quantized(MemoryPyramid pyramid);

}  // namespace mmmem
