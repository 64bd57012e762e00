#pragma once
// Typed property graph holding memory nodes and the five structural edge
// kinds. Append-only; persisted as line-delimited JSON records.

#include "assocmem/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

namespace assocmem {

struct MemoryNode {
    std::string id;
    NodeKind kind = NodeKind::Episode;
    std::string text;
    std::vector<float> embedding;  // empty when the node has not been embedded
    std::string conversation_id;
    std::optional<std::string> session_id;
    std::optional<std::string> timestamp;
    std::optional<std::uint64_t> seq;
    std::optional<double> belief;
    std::optional<std::string> speaker;

    bool operator==(const MemoryNode&) const = default;
};

struct MemoryEdge {
    std::string source;
    std::string target;
    EdgeKind kind = EdgeKind::Next;
    double stored_weight = 1.0;

    bool operator==(const MemoryEdge&) const = default;
};

enum class Direction { Out, In, Both };

struct Neighbor {
    EdgeKind kind;
    std::string id;

    bool operator==(const Neighbor&) const = default;
};

// Checks the per-kind field invariants; throws Error(InvariantViolation).
void validate_node(const MemoryNode& node);

class GraphStore {
public:
    GraphStore() = default;

    const std::string& add_node(MemoryNode node);
    void add_edge(MemoryEdge edge);
    // Like add_edge but returns false instead of throwing DuplicateEdge.
    bool add_edge_if_absent(MemoryEdge edge);

    bool contains(const std::string& id) const { return index_.contains(id); }
    bool has_edge(const std::string& source, const std::string& target, EdgeKind kind) const;
    const MemoryNode& node(const std::string& id) const;
    const MemoryNode* find(const std::string& id) const;
    std::optional<std::string> concept_by_label(const std::string& label) const;

    // Sorted by neighbor id, then edge kind.
    std::vector<Neighbor> neighbors(const std::string& id, Direction direction) const;
    std::size_t degree(const std::string& id) const;
    // Stored edges leaving `id`, insertion order.
    std::vector<const MemoryEdge*> out_edges(const std::string& id) const;

    void set_embedding(const std::string& id, std::vector<float> embedding);

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    bool empty() const { return nodes_.empty(); }
    std::size_t count(NodeKind kind) const;
    std::size_t count(EdgeKind kind) const;

    // Insertion order.
    const std::vector<MemoryNode>& nodes() const { return nodes_; }
    const std::vector<MemoryEdge>& edges() const { return edges_; }

    // Dimensionality shared by all embedded nodes, 0 if none.
    std::size_t embedding_dim() const { return dim_; }

    void persist(const std::filesystem::path& path) const;
    static GraphStore load(const std::filesystem::path& path);

    // Same node set with equal fields and same edge set, independent of order.
    bool graph_equal(const GraphStore& other) const;

private:
    struct Adjacency {
        std::vector<std::size_t> out;  // edge indices
        std::vector<std::size_t> in;
    };

    std::size_t index_of(const std::string& id) const;

    std::vector<MemoryNode> nodes_;
    std::vector<MemoryEdge> edges_;
    std::vector<Adjacency> adjacency_;
    std::unordered_map<std::string, std::size_t> index_;
    std::unordered_map<std::string, std::string> concept_labels_;
    std::map<std::tuple<std::string, std::string, int>, std::size_t> edge_keys_;
    std::size_t dim_ = 0;
};

}  // namespace assocmem
