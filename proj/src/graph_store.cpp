#include "assocmem/graph_store.hpp"

#include "assocmem/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace assocmem {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "assocmem-graph";
constexpr int kFormatVersion = 1;

[[noreturn]] void violation(const std::string& what) { throw Error(Errc::InvariantViolation, what); }

}  // namespace

void validate_node(const MemoryNode& node) {
    if (node.id.empty()) violation("id: empty");
    if (node.belief && !(*node.belief >= 0.0 && *node.belief <= 1.0)) {
        violation("belief: " + std::to_string(*node.belief) + " outside [0,1]");
    }
    switch (node.kind) {
        case NodeKind::Episode:
            if (node.text.empty()) violation("text: episode text is empty");
            if (!node.seq) violation("seq: episode without sequence number");
            if (!node.timestamp || node.timestamp->empty()) violation("timestamp: episode without timestamp");
            if (node.belief) violation("belief: not allowed on episodes");
            break;
        case NodeKind::Fact:
        case NodeKind::Reflection:
            if (node.text.empty()) violation("text: empty");
            if (node.seq) violation("seq: only episodes carry a sequence number");
            if (node.speaker) violation("speaker: only episodes carry a speaker");
            break;
        case NodeKind::Concept:
            if (!text::is_concept_label(node.text)) {
                violation("text: concept label '" + node.text + "' is not 2-5 word snake_case");
            }
            if (node.seq) violation("seq: only episodes carry a sequence number");
            if (node.belief) violation("belief: not allowed on concepts");
            if (node.speaker) violation("speaker: only episodes carry a speaker");
            break;
    }
}

const std::string& GraphStore::add_node(MemoryNode node) {
    if (index_.contains(node.id)) throw Error(Errc::DuplicateId, node.id);
    validate_node(node);
    if (node.kind == NodeKind::Concept && concept_labels_.contains(node.text)) {
        throw Error(Errc::DuplicateConceptLabel, node.text);
    }
    if (!node.embedding.empty()) {
        if (dim_ != 0 && dim_ != node.embedding.size()) {
            throw Error(Errc::DimensionMismatch, node.id + ": embedding has " + std::to_string(node.embedding.size()) +
                                                     " dims, graph uses " + std::to_string(dim_));
        }
        dim_ = node.embedding.size();
    }
    const std::size_t idx = nodes_.size();
    index_.emplace(node.id, idx);
    if (node.kind == NodeKind::Concept) concept_labels_.emplace(node.text, node.id);
    nodes_.push_back(std::move(node));
    adjacency_.emplace_back();
    return nodes_.back().id;
}

bool GraphStore::has_edge(const std::string& source, const std::string& target, EdgeKind kind) const {
    return edge_keys_.contains({source, target, static_cast<int>(kind)});
}

void GraphStore::add_edge(MemoryEdge edge) {
    if (!add_edge_if_absent(edge)) {
        throw Error(Errc::DuplicateEdge, edge.source + " -" + std::string(to_string(edge.kind)) + "-> " + edge.target);
    }
}

bool GraphStore::add_edge_if_absent(MemoryEdge edge) {
    auto src = index_.find(edge.source);
    if (src == index_.end()) throw Error(Errc::UnknownEndpoint, "source " + edge.source);
    auto dst = index_.find(edge.target);
    if (dst == index_.end()) throw Error(Errc::UnknownEndpoint, "target " + edge.target);

    const auto [want_src, want_dst] = endpoint_kinds(edge.kind);
    const NodeKind got_src = nodes_[src->second].kind;
    const NodeKind got_dst = nodes_[dst->second].kind;
    if (got_src != want_src || got_dst != want_dst) {
        throw Error(Errc::SchemaViolation, std::string(to_string(edge.kind)) + " requires " +
                                               std::string(to_string(want_src)) + " -> " +
                                               std::string(to_string(want_dst)) + ", got " +
                                               std::string(to_string(got_src)) + " -> " +
                                               std::string(to_string(got_dst)));
    }
    if (edge.source == edge.target) throw Error(Errc::SchemaViolation, "self loop on " + edge.source);

    auto key = std::make_tuple(edge.source, edge.target, static_cast<int>(edge.kind));
    if (edge_keys_.contains(key)) return false;

    const std::size_t eidx = edges_.size();
    edge_keys_.emplace(std::move(key), eidx);
    adjacency_[src->second].out.push_back(eidx);
    adjacency_[dst->second].in.push_back(eidx);
    edges_.push_back(std::move(edge));
    return true;
}

std::size_t GraphStore::index_of(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw Error(Errc::UnknownNode, id);
    return it->second;
}

const MemoryNode& GraphStore::node(const std::string& id) const { return nodes_[index_of(id)]; }

const MemoryNode* GraphStore::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

std::optional<std::string> GraphStore::concept_by_label(const std::string& label) const {
    auto it = concept_labels_.find(label);
    if (it == concept_labels_.end()) return std::nullopt;
    return it->second;
}

std::vector<Neighbor> GraphStore::neighbors(const std::string& id, Direction direction) const {
    const auto& adj = adjacency_[index_of(id)];
    std::vector<Neighbor> out;
    if (direction != Direction::In) {
        for (auto e : adj.out) out.push_back({edges_[e].kind, edges_[e].target});
    }
    if (direction != Direction::Out) {
        for (auto e : adj.in) out.push_back({edges_[e].kind, edges_[e].source});
    }
    std::sort(out.begin(), out.end(), [](const Neighbor& a, const Neighbor& b) {
        if (a.id != b.id) return a.id < b.id;
        return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    return out;
}

std::size_t GraphStore::degree(const std::string& id) const {
    const auto& adj = adjacency_[index_of(id)];
    return adj.out.size() + adj.in.size();
}

std::vector<const MemoryEdge*> GraphStore::out_edges(const std::string& id) const {
    std::vector<const MemoryEdge*> out;
    for (auto e : adjacency_[index_of(id)].out) out.push_back(&edges_[e]);
    return out;
}

void GraphStore::set_embedding(const std::string& id, std::vector<float> embedding) {
    auto& n = nodes_[index_of(id)];
    if (embedding.empty()) throw Error(Errc::InvariantViolation, id + ": empty embedding");
    if (dim_ != 0 && dim_ != embedding.size()) {
        throw Error(Errc::DimensionMismatch, id + ": embedding has " + std::to_string(embedding.size()) +
                                                 " dims, graph uses " + std::to_string(dim_));
    }
    dim_ = embedding.size();
    n.embedding = std::move(embedding);
}

std::size_t GraphStore::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [kind](const MemoryNode& n) { return n.kind == kind; }));
}

std::size_t GraphStore::count(EdgeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [kind](const MemoryEdge& e) { return e.kind == kind; }));
}

namespace {

json node_to_json(const MemoryNode& n) {
    json j;
    j["record"] = "node";
    j["id"] = n.id;
    j["kind"] = to_string(n.kind);
    j["text"] = n.text;
    j["conversation_id"] = n.conversation_id;
    if (n.session_id) j["session_id"] = *n.session_id;
    if (n.timestamp) j["timestamp"] = *n.timestamp;
    if (n.seq) j["seq"] = *n.seq;
    if (n.belief) j["belief"] = *n.belief;
    if (n.speaker) j["speaker"] = *n.speaker;
    if (!n.embedding.empty()) j["embedding"] = n.embedding;
    return j;
}

MemoryNode node_from_json(const json& j) {
    MemoryNode n;
    n.id = j.at("id").get<std::string>();
    auto kind = parse_node_kind(j.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown node kind " + j.at("kind").dump());
    n.kind = *kind;
    n.text = j.at("text").get<std::string>();
    n.conversation_id = j.at("conversation_id").get<std::string>();
    if (j.contains("session_id")) n.session_id = j["session_id"].get<std::string>();
    if (j.contains("timestamp")) n.timestamp = j["timestamp"].get<std::string>();
    if (j.contains("seq")) n.seq = j["seq"].get<std::uint64_t>();
    if (j.contains("belief")) n.belief = j["belief"].get<double>();
    if (j.contains("speaker")) n.speaker = j["speaker"].get<std::string>();
    if (j.contains("embedding")) {
        for (const auto& v : j["embedding"]) n.embedding.push_back(static_cast<float>(v.get<double>()));
    }
    return n;
}

}  // namespace

void GraphStore::persist(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
    json header{{"format", kFormatName},
                {"version", kFormatVersion},
                {"embedding_dim", embedding_dim()},
                {"nodes", nodes_.size()},
                {"edges", edges_.size()}};
    out << header.dump() << '\n';
    for (const auto& n : nodes_) out << node_to_json(n).dump() << '\n';
    for (const auto& e : edges_) {
        json j{{"record", "edge"},
               {"source", e.source},
               {"target", e.target},
               {"kind", to_string(e.kind)},
               {"weight", e.stored_weight}};
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

GraphStore GraphStore::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    auto corrupt = [&](std::size_t line, const std::string& why) -> Error {
        return Error(Errc::CorruptFile, path.string() + ":" + std::to_string(line) + ": " + why);
    };

    if (content.empty()) throw corrupt(1, "missing header");
    if (content.back() != '\n') {
        const auto lines = static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n')) + 1;
        throw corrupt(lines, "truncated record (no trailing newline)");
    }

    GraphStore g;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::size_t want_nodes = 0, want_edges = 0, want_dim = 0;
    while (pos < content.size()) {
        const auto nl = content.find('\n', pos);
        const std::string_view line(content.data() + pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw corrupt(line_no, std::string("invalid JSON: ") + e.what());
        }
        try {
            if (line_no == 1) {
                if (!j.is_object() || j.value("format", "") != kFormatName) throw corrupt(1, "not a graph file");
                if (j.value("version", 0) != kFormatVersion) {
                    throw corrupt(1, "unsupported version " + j.value("version", json()).dump());
                }
                want_nodes = j.at("nodes").get<std::size_t>();
                want_edges = j.at("edges").get<std::size_t>();
                want_dim = j.at("embedding_dim").get<std::size_t>();
                continue;
            }
            const auto record = j.at("record").get<std::string>();
            if (record == "node") {
                auto n = node_from_json(j);
                if (!n.embedding.empty() && n.embedding.size() != want_dim) {
                    throw corrupt(line_no, "embedding dimension " + std::to_string(n.embedding.size()) +
                                               " disagrees with header " + std::to_string(want_dim));
                }
                g.add_node(std::move(n));
            } else if (record == "edge") {
                MemoryEdge e;
                e.source = j.at("source").get<std::string>();
                e.target = j.at("target").get<std::string>();
                auto kind = parse_edge_kind(j.at("kind").get<std::string>());
                if (!kind) throw corrupt(line_no, "unknown edge kind " + j.at("kind").dump());
                e.kind = *kind;
                e.stored_weight = j.value("weight", 1.0);
                g.add_edge(std::move(e));
            } else {
                throw corrupt(line_no, "unknown record type '" + record + "'");
            }
        } catch (const Error& e) {
            if (e.code() == Errc::CorruptFile) throw;
            throw corrupt(line_no, e.what());
        } catch (const json::exception& e) {
            throw corrupt(line_no, e.what());
        } catch (const std::runtime_error& e) {
            throw corrupt(line_no, e.what());
        }
    }
    if (g.node_count() != want_nodes || g.edge_count() != want_edges) {
        throw corrupt(line_no, "header announces " + std::to_string(want_nodes) + " nodes / " +
                                   std::to_string(want_edges) + " edges, found " + std::to_string(g.node_count()) +
                                   " / " + std::to_string(g.edge_count()));
    }
    return g;
}

bool GraphStore::graph_equal(const GraphStore& other) const {
    if (node_count() != other.node_count() || edge_count() != other.edge_count()) return false;
    for (const auto& n : nodes_) {
        const auto* m = other.find(n.id);
        if (!m || !(*m == n)) return false;
    }
    for (const auto& e : edges_) {
        auto it = other.edge_keys_.find({e.source, e.target, static_cast<int>(e.kind)});
        if (it == other.edge_keys_.end() || !(other.edges_[it->second] == e)) return false;
    }
    return true;
}

}  // namespace assocmem
