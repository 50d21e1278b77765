#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "mmmem/error.hpp"
#include "mmmem/schema.hpp"
#include "mmmem/text.hpp"
#include "fixtures.hpp"

using namespace mmmem;

namespace {

EpisodicNode text_node(std::uint32_t id, std::string text) {
    EpisodicNode n;
    n.id = id;
    n.text = std::move(text);
    n.representation = {1.0};
    return n;
}

// Embedder that maps every text to the same direction.
class ConstantEmbedder final : public Embedder {
public:
    std::size_t dimension() const override { return 2; }
    Embedding embed_text(std::string_view) const override { return {1.0, 0.0}; }
    Embedding embed_visual(std::span<const Frame>) const override { return {1.0, 0.0}; }
    bool deterministic() const override { return true; }
};

class ThrowingExtractor final : public EntityExtractor {
public:
    std::string extract(std::string_view) const override { throw std::runtime_error("down"); }
    bool deterministic() const override { return true; }
};

class FixedExtractor final : public EntityExtractor {
public:
    explicit FixedExtractor(std::string out) : out_(std::move(out)) {}
    std::string extract(std::string_view) const override { return out_; }
    bool deterministic() const override { return true; }

private:
    std::string out_;
};

}  // namespace

TEST(ExtractEntities, StubConvention) {
    StubExtractor ex;
    const auto e = extract_entities(text_node(3, "ALICE opens DOOR"), ex);
    ASSERT_EQ(e.entities.size(), 2u);
    EXPECT_EQ(e.entities[0].surface, "alice");
    EXPECT_EQ(e.entities[1].surface, "door");
    EXPECT_EQ(e.entities[0].node_id, 3u);
    ASSERT_EQ(e.relations.size(), 1u);
    EXPECT_EQ(e.relations[0].subject, "alice");
    EXPECT_EQ(e.relations[0].label, "opens");
    EXPECT_EQ(e.relations[0].object, "door");

    const auto none = extract_entities(text_node(0, ""), ex);
    EXPECT_TRUE(none.entities.empty());
    EXPECT_TRUE(none.relations.empty());
}

TEST(ExtractEntities, ErrorsNameNodeOrRecord) {
    ThrowingExtractor bad;
    try {
        extract_entities(text_node(7, "x"), bad);
        FAIL();
    } catch (const AdapterError& e) {
        EXPECT_NE(std::string(e.what()).find("node 7"), std::string::npos);
    }
    FixedExtractor garbled("ENTITY\talice\tgloss\nWHAT\tx\n");
    try {
        extract_entities(text_node(1, "x"), garbled);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("WHAT"), std::string::npos);
    }
}

TEST(UnifyPrototypes, Examples) {
    StubEmbedder emb(32, 42);
    std::vector<EntityMention> same{{0, "Alice", "a"}, {1, "alice ", "b"}};
    auto u = unify_prototypes(same, emb);
    EXPECT_EQ(u.concepts.size(), 1u);
    EXPECT_EQ(u.concepts.at("alice").gloss, "a\nb");

    std::vector<EntityMention> diff{{0, "alice", "person"}, {0, "door", "object"}};
    EXPECT_EQ(unify_prototypes(diff, emb).concepts.size(), 2u);

    std::vector<EntityMention> three{{0, "alice", "person"}, {1, "door", "object"}, {2, "ALICE", "person"}};
    u = unify_prototypes(three, emb);
    EXPECT_EQ(u.concepts.size(), 2u);
    EXPECT_EQ(u.assignment, (std::vector<std::string>{"alice", "door", "alice"}));
}

TEST(UnifyPrototypes, SimilarGlossesMerge) {
    ConstantEmbedder emb;
    std::vector<EntityMention> m{{0, "alice", "x"}, {1, "ally", "y"}};
    const auto u = unify_prototypes(m, emb);
    ASSERT_EQ(u.concepts.size(), 1u);
    EXPECT_EQ(u.concepts.at("alice").surface_forms, (std::set<std::string>{"alice", "ally"}));
}

TEST(BuildSchema, Examples) {
    StubExtractor ex;
    StubEmbedder emb(32, 42);
    {
        std::vector<EpisodicNode> s{text_node(0, "ALICE with the BOB")};
        const auto g = build_schema(s, ex, emb);
        EXPECT_EQ(g.concepts.size(), 2u);
        EXPECT_EQ(g.grounding_edge_count(), 2u);
        EXPECT_EQ(g.semantic_edge_count(), 0u);
        EXPECT_EQ(g.pointers.at("alice"), (std::set<std::uint32_t>{0}));
        EXPECT_EQ(g.pointers.at("bob"), (std::set<std::uint32_t>{0}));
    }
    {
        std::vector<EpisodicNode> s{text_node(0, "ALICE waves"), text_node(1, "hello ALICE")};
        const auto g = build_schema(s, ex, emb);
        EXPECT_EQ(g.concepts.size(), 1u);
        EXPECT_EQ(g.pointers.at("alice"), (std::set<std::uint32_t>{0, 1}));
    }
    {
        std::vector<EpisodicNode> s{text_node(0, "ALICE opens DOOR")};
        const auto g = build_schema(s, ex, emb);
        EXPECT_EQ(g.semantic_edge_count(), 1u);
        EXPECT_EQ(g.grounding_edge_count(), 2u);
        validate_schema(g);
    }
}

TEST(BuildSchema, MalformedRelationsDegradeToGroundingOnly) {
    FixedExtractor ex("ENTITY\talice\tperson\nREL\talice\t\n");
    StubEmbedder emb(8, 1);
    std::vector<EpisodicNode> s{text_node(0, "x")};
    const auto g = build_schema(s, ex, emb);
    EXPECT_EQ(g.concepts.size(), 1u);
    EXPECT_EQ(g.semantic_edge_count(), 0u);
}

TEST(BuildSchema, EmptyStreamThrows) {
    StubExtractor ex;
    StubEmbedder emb(8, 1);
    EXPECT_THROW(build_schema({}, ex, emb), ContractError);
}

TEST(BuildSchema, FixtureInvariants) {
    const auto p = test_support::fixture_pyramid(42);
    const auto& g = p.schema;
    ASSERT_FALSE(g.empty());
    EXPECT_EQ(g.pointers, pointers_from_edges(g));
    for (const auto& [id, nodes] : g.pointers) EXPECT_FALSE(nodes.empty()) << id;
    EXPECT_NO_THROW(validate_schema(g));
    EXPECT_EQ(test_support::fixture_pyramid(42).schema, g);
}

TEST(ValidateSchema, DetectsPointerDrift) {
    StubExtractor ex;
    StubEmbedder emb(8, 1);
    std::vector<EpisodicNode> s{text_node(0, "ALICE opens DOOR")};
    auto g = build_schema(s, ex, emb);
    g.pointers["alice"].insert(9);
    EXPECT_THROW(validate_schema(g), ConsistencyError);
}

TEST(QueryConcepts, Examples) {
    StubEmbedder emb(32, 42);
    std::vector<EntityMention> m{{0, "alice", "a person"}, {0, "door", "a door"}, {0, "box", "a box"}};
    SchemaGraph g;
    g.concepts = unify_prototypes(m, emb).concepts;
    const auto hits = query_concepts(g, "a door", emb, 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].id, "door");
    EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
    EXPECT_EQ(query_concepts(g, "anything", emb, 10).size(), 3u);
    EXPECT_TRUE(query_concepts(SchemaGraph{}, "x", emb, 3).empty());

    ConstantEmbedder flat;
    SchemaGraph g2;
    g2.concepts = unify_prototypes(std::vector<EntityMention>{{0, "zed", "z"}}, flat).concepts;
    g2.concepts["abc"] = g2.concepts["zed"];
    const auto tie = query_concepts(g2, "q", flat, 2);
    EXPECT_EQ(tie[0].id, "abc");
    EXPECT_EQ(tie[1].id, "zed");
}

TEST(SchemaRecords, RoundTripAndByteStable) {
    const auto p = test_support::fixture_pyramid(42);
    std::stringstream a;
    write_schema_records(a, p.schema);
    std::stringstream b;
    write_schema_records(b, test_support::fixture_pyramid(42).schema);
    EXPECT_EQ(a.str(), b.str());

    const auto back = read_schema_records(a);
    EXPECT_EQ(back.edges, p.schema.edges);
    EXPECT_EQ(back.pointers, p.schema.pointers);
    EXPECT_EQ(back.episodic_refs, p.schema.episodic_refs);
    ASSERT_EQ(back.concepts.size(), p.schema.concepts.size());
    for (const auto& [id, c] : p.schema.concepts) {
        EXPECT_EQ(back.concepts.at(id).gloss, c.gloss);
        EXPECT_EQ(back.concepts.at(id).surface_forms, c.surface_forms);
    }

    std::stringstream edges;
    write_edge_list(edges, p.schema);
    EXPECT_EQ(split_lines(edges.str()).size(), p.schema.edges.size());
}

TEST(SchemaRecords, RejectsUnknownKind) {
    std::stringstream in("{\"kind\":\"mystery\"}\n");
    EXPECT_THROW(read_schema_records(in), ParseError);
    std::stringstream junk("not json\n");
    EXPECT_THROW(read_schema_records(junk), ParseError);
}
