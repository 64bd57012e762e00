#pragma once
// Exact cosine k-nearest-neighbour search over node embeddings.

#include "assocmem/types.hpp"

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace assocmem {

class GraphStore;

struct SimilarityHit {
    std::string node_id;
    double similarity = 0.0;

    bool operator==(const SimilarityHit&) const = default;
};

using KindFilter = std::optional<std::set<NodeKind>>;

// Orders hits by similarity descending, then node id ascending.
bool hit_before(const SimilarityHit& a, const SimilarityHit& b);

double cosine(std::span<const float> a, std::span<const float> b);

class VectorIndex {
public:
    struct Record {
        std::string node_id;
        NodeKind kind;
        double norm;
    };

    VectorIndex() = default;

    // Every embedded non-concept node of the graph.
    static VectorIndex from_graph(const GraphStore& graph);

    void upsert(const std::string& node_id, NodeKind kind, std::span<const float> vector);

    std::vector<SimilarityHit> knn(std::span<const float> query, std::size_t k,
                                   const KindFilter& kinds = std::nullopt) const;

    double similarity(const std::string& node_id, std::span<const float> query) const;

    bool contains(const std::string& node_id) const { return slot_.contains(node_id); }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    std::size_t dim() const { return dim_; }

    std::span<const float> vector(const std::string& node_id) const;
    const Record& record(const std::string& node_id) const;

private:
    std::span<const float> row(std::size_t slot) const { return {data_.data() + slot * dim_, dim_}; }
    void check_query(std::span<const float> query) const;

    std::size_t dim_ = 0;
    std::vector<float> data_;  // row-major, one row per record
    std::vector<Record> records_;
    std::unordered_map<std::string, std::size_t> slot_;
};

}  // namespace assocmem
