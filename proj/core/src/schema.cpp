#include "mmmem/schema.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include <json.hpp>

#include "mmmem/error.hpp"
#include "mmmem/text.hpp"

namespace mmmem {

using ordered_json = nlohmann::ordered_json;

Extraction parse_extraction(std::string_view raw, std::uint32_t node_id, bool lenient) {
    Extraction out;
    const auto lines = split_lines(raw);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (trim(line).empty()) continue;
        const auto parts = split(line, '\t');
        const std::string where =
            "node " + std::to_string(node_id) + " record " + std::to_string(i + 1) + " '" + line + "'";
        const std::string kind = trim(parts[0]);
        if (kind == "ENTITY") {
            if (parts.size() != 3 || trim(parts[1]).empty()) throw ParseError("malformed ENTITY " + where);
            out.entities.push_back({node_id, trim(parts[1]), trim(parts[2])});
        } else if (kind == "REL") {
            const bool ok = parts.size() == 4 && !trim(parts[1]).empty() && !trim(parts[2]).empty() &&
                            !trim(parts[3]).empty();
            if (!ok) {
                if (lenient) continue;
                throw ParseError("malformed REL " + where);
            }
            out.relations.push_back({node_id, trim(parts[1]), trim(parts[2]), trim(parts[3])});
        } else {
            throw ParseError("unknown extraction record " + where);
        }
    }
    return out;
}

namespace {

std::string call_extractor(const EpisodicNode& node, const EntityExtractor& extractor) {
    try {
        return extractor.extract(node.text);
    } catch (const std::exception& e) {
        throw AdapterError("entity extraction failed for node " + std::to_string(node.id) + ": " + e.what());
    }
}

struct UnifyState {
    Unification result;
    std::map<std::string, std::string> surface_index;  // normalized surface -> concept id
    std::map<std::string, std::vector<std::string>> glosses;
};

UnifyState unify(std::span<const EntityMention> mentions, const Embedder& embedder, double merge_threshold) {
    UnifyState st;
    auto& concepts = st.result.concepts;
    for (const auto& m : mentions) {
        const std::string key = normalize_surface(m.surface);
        std::string id;
        if (auto it = st.surface_index.find(key); it != st.surface_index.end()) {
            id = it->second;
        } else {
            const Embedding gloss_embedding = embedder.embed_text(m.gloss);
            double best = -2.0;
            for (const auto& [cid, concept_proto] : concepts) {
                const double c = cosine(gloss_embedding, concept_proto.embedding);
                if (c >= merge_threshold && c > best) {
                    best = c;
                    id = cid;
                }
            }
            if (id.empty()) {
                id = key;
                ConceptPrototype proto;
                proto.id = key;
                proto.embedding = gloss_embedding;
                concepts.emplace(key, std::move(proto));
            }
            st.surface_index.emplace(key, id);
        }

        ConceptPrototype& proto = concepts.at(id);
        proto.surface_forms.insert(trim(m.surface));
        auto& g = st.glosses[id];
        if (!m.gloss.empty() && std::find(g.begin(), g.end(), m.gloss) == g.end()) {
            g.push_back(m.gloss);
            std::string joined;
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (i) joined += '\n';
                joined += g[i];
            }
            proto.gloss = std::move(joined);
            proto.embedding = embedder.embed_text(proto.gloss);
        } else if (g.empty() && proto.embedding.empty()) {
            proto.embedding = embedder.embed_text(proto.gloss);
        }
        st.result.assignment.push_back(id);
    }
    return st;
}

}  // namespace

Extraction extract_entities(const EpisodicNode& node, const EntityExtractor& extractor) {
    return parse_extraction(call_extractor(node, extractor), node.id, false);
}

Unification unify_prototypes(std::span<const EntityMention> mentions, const Embedder& embedder,
                             double merge_threshold) {
    return unify(mentions, embedder, merge_threshold).result;
}

std::size_t SchemaGraph::grounding_edge_count() const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [](const SchemaEdge& e) { return e.kind == EdgeKind::Grounding; }));
}

std::size_t SchemaGraph::semantic_edge_count() const { return edges.size() - grounding_edge_count(); }

std::map<std::string, std::set<std::uint32_t>> pointers_from_edges(const SchemaGraph& graph) {
    std::map<std::string, std::set<std::uint32_t>> pointers;
    for (const auto& [id, c] : graph.concepts) pointers[id];
    for (const auto& e : graph.edges) {
        if (e.kind == EdgeKind::Grounding) pointers[e.to_concept].insert(e.node_id);
    }
    return pointers;
}

void validate_schema(const SchemaGraph& graph) {
    for (const auto& e : graph.edges) {
        if (e.kind == EdgeKind::Grounding) {
            if (!graph.concepts.contains(e.to_concept)) {
                throw ConsistencyError("grounding edge to unknown concept '" + e.to_concept + "'");
            }
            if (!graph.episodic_refs.contains(e.node_id)) {
                throw ConsistencyError("grounding edge from unknown episodic node " + std::to_string(e.node_id));
            }
        } else if (!graph.concepts.contains(e.from_concept) || !graph.concepts.contains(e.to_concept)) {
            throw ConsistencyError("semantic edge with unknown endpoint '" + e.from_concept + "' -> '" +
                                   e.to_concept + "'");
        }
    }
    const auto expected = pointers_from_edges(graph);
    if (expected != graph.pointers) throw ConsistencyError("pointer sets disagree with grounding edges");
    for (const auto& [id, nodes] : expected) {
        if (nodes.empty()) throw ConsistencyError("concept '" + id + "' has no grounding edge");
    }
}

SchemaGraph build_schema(std::span<const EpisodicNode> stream, const EntityExtractor& extractor,
                         const Embedder& embedder, const SchemaConfig& config) {
    if (stream.empty()) throw ContractError("build_schema: empty episodic stream");

    std::vector<EntityMention> mentions;
    std::vector<RelationMention> relations;
    SchemaGraph graph;
    for (const auto& node : stream) {
        graph.episodic_refs.insert(node.id);
        auto extraction = parse_extraction(call_extractor(node, extractor), node.id, true);
        mentions.insert(mentions.end(), extraction.entities.begin(), extraction.entities.end());
        relations.insert(relations.end(), extraction.relations.begin(), extraction.relations.end());
    }

    UnifyState st = unify(mentions, embedder, config.merge_threshold);
    graph.concepts = std::move(st.result.concepts);

    std::set<std::pair<std::uint32_t, std::string>> grounded;
    for (std::size_t i = 0; i < mentions.size(); ++i) {
        const auto& id = st.result.assignment[i];
        if (grounded.emplace(mentions[i].node_id, id).second) {
            SchemaEdge e;
            e.kind = EdgeKind::Grounding;
            e.node_id = mentions[i].node_id;
            e.to_concept = id;
            graph.edges.push_back(std::move(e));
        }
    }

    std::set<std::tuple<std::string, std::string, std::string>> semantic;
    for (const auto& rel : relations) {
        const auto s = st.surface_index.find(normalize_surface(rel.subject));
        const auto o = st.surface_index.find(normalize_surface(rel.object));
        if (s == st.surface_index.end() || o == st.surface_index.end()) continue;
        if (!semantic.emplace(s->second, rel.label, o->second).second) continue;
        SchemaEdge e;
        e.kind = EdgeKind::Semantic;
        e.from_concept = s->second;
        e.label = rel.label;
        e.to_concept = o->second;
        graph.edges.push_back(std::move(e));
    }

    graph.pointers = pointers_from_edges(graph);
    return graph;
}

std::vector<ConceptHit> query_concepts(const SchemaGraph& graph, std::string_view text, const Embedder& embedder,
                                       std::size_t k) {
    if (k < 1) throw ContractError("query_concepts: k must be >= 1");
    std::vector<ConceptHit> hits;
    if (graph.concepts.empty()) return hits;
    const Embedding q = embedder.embed_text(text);
    for (const auto& [id, c] : graph.concepts) hits.push_back({id, cosine(q, c.embedding)});
    std::stable_sort(hits.begin(), hits.end(), [](const ConceptHit& a, const ConceptHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

// ---------------------------------------------------------------------------
// Records

namespace {

std::string dump_line(const ordered_json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

void write_schema_records(std::ostream& out, const SchemaGraph& graph) {
    for (const auto& [id, c] : graph.concepts) {
        ordered_json j;
        j["kind"] = "concept";
        j["id"] = id;
        j["surface_forms"] = c.surface_forms;
        j["gloss"] = c.gloss;
        out << dump_line(j) << '\n';
    }
    for (const auto& e : graph.edges) {
        ordered_json j;
        j["kind"] = "edge";
        if (e.kind == EdgeKind::Semantic) {
            j["type"] = "semantic";
            j["from"] = e.from_concept;
            j["label"] = e.label;
            j["to"] = e.to_concept;
        } else {
            j["type"] = "grounding";
            j["node"] = e.node_id;
            j["concept"] = e.to_concept;
        }
        out << dump_line(j) << '\n';
    }
    for (auto n : graph.episodic_refs) {
        ordered_json j;
        j["kind"] = "episodic_ref";
        j["node"] = n;
        out << dump_line(j) << '\n';
    }
}

SchemaGraph read_schema_records(std::istream& in) {
    SchemaGraph graph;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = "schema record " + std::to_string(line_no);
        try {
            const auto j = nlohmann::json::parse(line);
            const std::string kind = j.at("kind").get<std::string>();
            if (kind == "concept") {
                ConceptPrototype c;
                c.id = j.at("id").get<std::string>();
                c.surface_forms = j.at("surface_forms").get<std::set<std::string>>();
                c.gloss = j.at("gloss").get<std::string>();
                graph.concepts.emplace(c.id, std::move(c));
            } else if (kind == "edge") {
                SchemaEdge e;
                const std::string type = j.at("type").get<std::string>();
                if (type == "semantic") {
                    e.kind = EdgeKind::Semantic;
                    e.from_concept = j.at("from").get<std::string>();
                    e.label = j.at("label").get<std::string>();
                    e.to_concept = j.at("to").get<std::string>();
                } else if (type == "grounding") {
                    e.kind = EdgeKind::Grounding;
                    e.node_id = j.at("node").get<std::uint32_t>();
                    e.to_concept = j.at("concept").get<std::string>();
                } else {
                    throw ParseError(where + ": unknown edge type '" + type + "'");
                }
                graph.edges.push_back(std::move(e));
            } else if (kind == "episodic_ref") {
                graph.episodic_refs.insert(j.at("node").get<std::uint32_t>());
            } else {
                throw ParseError(where + ": unknown record kind '" + kind + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    graph.pointers = pointers_from_edges(graph);
    return graph;
}

void write_edge_list(std::ostream& out, const SchemaGraph& graph) {
    for (const auto& e : graph.edges) {
        if (e.kind == EdgeKind::Semantic) {
            out << e.from_concept << '\t' << e.label << '\t' << e.to_concept << '\n';
        } else {
            out << "node:" << e.node_id << "\tgrounds\t" << e.to_concept << '\n';
        }
    }
}

}  // namespace mmmem
