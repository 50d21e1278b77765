#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <map>

#include "mmmem/error.hpp"
#include "mmmem/store.hpp"
#include "mmmem/text.hpp"
#include "fixtures.hpp"

using namespace mmmem;
namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

// Replace a data file and patch its digest so only the content checks fire.
void replace_with_valid_digest(const fs::path& dir, const std::string& name, const std::string& bytes) {
    write_all(dir / name, bytes);
    std::string manifest = read_all(dir / "manifest");
    const std::string key = "digest." + name + "=";
    const auto pos = manifest.find(key);
    ASSERT_NE(pos, std::string::npos);
    manifest.replace(pos + key.size(), 16, hex64(fnv1a64(std::string_view(bytes))));
    write_all(dir / "manifest", manifest);
}

}  // namespace

TEST(EmbeddingBlob, RoundTripAndErrors) {
    const std::vector<Embedding> rows{{1, 2, 3}, {4, 5, 6}};
    const auto bytes = encode_embedding_blob(3, rows);
    EXPECT_EQ(bytes.size(), 4u + 4 + 4 + 8 + 6 * 4);
    const auto blob = decode_embedding_blob(bytes, "x");
    EXPECT_EQ(blob.count(), 2u);
    EXPECT_EQ(blob.values, (std::vector<float>{1, 2, 3, 4, 5, 6}));

    auto truncated = bytes;
    truncated.pop_back();
    EXPECT_THROW(decode_embedding_blob(truncated, "x"), CorruptionError);
    auto bad_magic = bytes;
    bad_magic[0] = std::byte{'Z'};
    EXPECT_THROW(decode_embedding_blob(bad_magic, "x"), CorruptionError);
    auto bad_version = bytes;
    bad_version[4] = std::byte{9};
    EXPECT_THROW(decode_embedding_blob(bad_version, "x"), CorruptionError);
    EXPECT_THROW(encode_embedding_blob(2, rows), ShapeError);
}

TEST(Snapshot, RoundTripIdentity) {
    test_support::TempDir dir;
    const auto p = test_support::fixture_pyramid(42);
    ASSERT_GT(p.sensory.size(), 0u);
    ASSERT_GT(p.schema.edges.size(), 0u);
    const auto m = save_memory(p, dir.path());
    EXPECT_EQ(m.sensory_count, p.sensory.size());
    EXPECT_EQ(read_manifest(dir.path()), m);
    const auto back = load_memory(dir.path());
    EXPECT_EQ(back, quantized(p));
    EXPECT_EQ(back.episodic.action_log, p.episodic.action_log);
    EXPECT_EQ(back.schema.pointers, p.schema.pointers);
}

TEST(Snapshot, EmptyPyramid) {
    test_support::TempDir dir;
    MemoryPyramid p;
    p.dimension = 8;
    const auto m = save_memory(p, dir.path());
    EXPECT_EQ(m.sensory_count + m.episodic_count + m.concept_count + m.edge_count + m.action_count, 0u);
    EXPECT_EQ(load_memory(dir.path()), p);
}

TEST(Snapshot, DoubleSaveHasIdenticalDigests) {
    test_support::TempDir a, b;
    const auto p = test_support::fixture_pyramid(42);
    EXPECT_EQ(save_memory(p, a.path()).digests, save_memory(p, b.path()).digests);
    EXPECT_EQ(read_all(a / "manifest"), read_all(b / "manifest"));
}

TEST(Snapshot, DifferentSeedLoadsFine) {
    test_support::TempDir dir;
    const auto p = test_support::fixture_pyramid(7);
    save_memory(p, dir.path());
    EXPECT_EQ(load_memory(dir.path()).seed, 7u);
}

TEST(Snapshot, TruncatedBlobIsCorruption) {
    test_support::TempDir dir;
    save_memory(test_support::fixture_pyramid(42), dir.path());
    std::string bytes = read_all(dir / "episodic.emb");
    bytes.resize(bytes.size() - 3);
    replace_with_valid_digest(dir.path(), "episodic.emb", bytes);
    try {
        load_memory(dir.path());
        FAIL();
    } catch (const CorruptionError& e) {
        EXPECT_NE(std::string(e.what()).find("episodic.emb"), std::string::npos);
    }
}

TEST(Snapshot, BlobDimensionMismatchIsConsistencyError) {
    test_support::TempDir dir;
    MemoryPyramid p;
    p.dimension = 8;
    save_memory(p, dir.path());
    const std::vector<Embedding> none;
    const auto blob = encode_embedding_blob(16, none);
    replace_with_valid_digest(dir.path(), "sensory.emb",
                              std::string(reinterpret_cast<const char*>(blob.data()), blob.size()));
    EXPECT_THROW(load_memory(dir.path()), ConsistencyError);
}

TEST(Snapshot, CountMismatchIsConsistencyError) {
    test_support::TempDir dir;
    save_memory(test_support::fixture_pyramid(42), dir.path());
    std::string rec = read_all(dir / "sensory.rec");
    rec = rec.substr(rec.find('\n') + 1);
    replace_with_valid_digest(dir.path(), "sensory.rec", rec);
    EXPECT_THROW(load_memory(dir.path()), ConsistencyError);
}

TEST(Snapshot, SingleByteFlipDetectedInEveryFile) {
    const auto p = test_support::fixture_pyramid(42);
    for (const char* name : {"sensory.emb", "episodic.emb", "concept.emb", "sensory.rec", "episodic.rec",
                             "schema.rec", "actions.log"}) {
        test_support::TempDir dir;
        save_memory(p, dir.path());
        std::string bytes = read_all(dir / name);
        ASSERT_FALSE(bytes.empty()) << name;
        for (std::size_t pos : {std::size_t{0}, bytes.size() / 2, bytes.size() - 1}) {
            std::string flipped = bytes;
            flipped[pos] = static_cast<char>(flipped[pos] ^ 0x01);
            write_all(dir / name, flipped);
            try {
                load_memory(dir.path());
                ADD_FAILURE() << name << " flip at " << pos << " not detected";
            } catch (const CorruptionError& e) {
                EXPECT_NE(std::string(e.what()).find(name), std::string::npos);
            }
        }
    }
}

TEST(Snapshot, MissingManifestIsIoError) {
    test_support::TempDir dir;
    EXPECT_THROW(load_memory(dir.path()), IoError);
}

TEST(Snapshot, ManifestTamperingDetected) {
    test_support::TempDir dir;
    save_memory(test_support::fixture_pyramid(42), dir.path());
    std::string manifest = read_all(dir / "manifest");
    write_all(dir / "manifest", manifest + "bogus=1\n");
    EXPECT_THROW(load_memory(dir.path()), CorruptionError);
}
