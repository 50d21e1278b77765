#pragma once
// Symbolic Schema: a knowledge graph of concept prototypes over the Episodic
// Stream. Concepts carry aggregated glosses and grounding pointers back to
// the episodic nodes that mention them, so every concept remains an index
// into verbatim evidence.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmmem/adapters.hpp"
#include "mmmem/episodic.hpp"

namespace mmmem {

struct EntityMention {
    std::uint32_t node_id = 0;
    std::string surface;
    std::string gloss;
};

struct RelationMention {
    std::uint32_t node_id = 0;
    std::string subject;
    std::string label;  // kept verbatim
    std::string object;
};

struct Extraction {
    std::vector<EntityMention> entities;
    std::vector<RelationMention> relations;
};

// Parses adapter output. Strict mode throws ParseError naming the offending
// line; lenient mode drops malformed REL records (relations are optional) but
// still rejects malformed ENTITY records and unknown record kinds.
Extraction parse_extraction(std::string_view raw, std::uint32_t node_id, bool lenient = false);

Extraction extract_entities(const EpisodicNode& node, const EntityExtractor& extractor);

struct ConceptPrototype {
    std::string id;  // normalized canonical surface form
    std::set<std::string> surface_forms;
    std::string gloss;  // unique glosses, first-seen order, '\n'-joined
    Embedding embedding;  // embed_text(gloss)

    bool operator==(const ConceptPrototype&) const = default;
};

struct Unification {
    std::map<std::string, ConceptPrototype> concepts;
    std::vector<std::string> assignment;  // concept id per input mention
};

// Equal normalized surfaces always unify; otherwise a mention joins the
// existing concept whose gloss embedding is most similar when the cosine is
// >= merge_threshold (ties: ascending id).
Unification unify_prototypes(std::span<const EntityMention> mentions, const Embedder& embedder,
                             double merge_threshold = 0.90);

enum class EdgeKind : std::uint8_t { Semantic, Grounding };

struct SchemaEdge {
    EdgeKind kind = EdgeKind::Grounding;
    // Semantic: concept -> concept with `label`.
    std::string from_concept;
    std::string to_concept;
    std::string label;
    // Grounding: episodic node <-> concept (to_concept holds the concept).
    std::uint32_t node_id = 0;

    bool operator==(const SchemaEdge&) const = default;
};

struct SchemaGraph {
    std::map<std::string, ConceptPrototype> concepts;
    std::set<std::uint32_t> episodic_refs;
    std::vector<SchemaEdge> edges;
    std::map<std::string, std::set<std::uint32_t>> pointers;  // P_u

    bool empty() const { return concepts.empty(); }
    std::size_t grounding_edge_count() const;
    std::size_t semantic_edge_count() const;
    bool operator==(const SchemaGraph&) const = default;
};

// Recomputes P_u from grounding edges.
std::map<std::string, std::set<std::uint32_t>> pointers_from_edges(const SchemaGraph& graph);

// Checks every structural invariant (pointer consistency, no dangling
// endpoints, no orphan concepts); throws ConsistencyError on violation.
void validate_schema(const SchemaGraph& graph);

struct SchemaConfig {
    double merge_threshold = 0.90;
};

SchemaGraph build_schema(std::span<const EpisodicNode> stream, const EntityExtractor& extractor,
                         const Embedder& embedder, const SchemaConfig& config = {});

struct ConceptHit {
    std::string id;
    double score = 0.0;
};

std::vector<ConceptHit> query_concepts(const SchemaGraph& graph, std::string_view text,
                                       const Embedder& embedder, std::size_t k);

// Line-delimited JSON records in fixed order:
//   concepts (ascending id), then edges (graph order), then episodic_refs.
// Field order inside each record is fixed. Embeddings are not included.
void write_schema_records(std::ostream& out, const SchemaGraph& graph);

// Inverse of write_schema_records; embeddings are left empty and pointers are
// recomputed from the grounding edges.
SchemaGraph read_schema_records(std::istream& in);

// Plain `from<TAB>label<TAB>to` edge list. Grounding edges use `node:<id>`
// as source and `grounds` as label.
void write_edge_list(std::ostream& out, const SchemaGraph& graph);

}  // namespace mmmem
