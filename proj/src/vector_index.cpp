#include "assocmem/vector_index.hpp"

#include "assocmem/graph_store.hpp"
#include "assocmem/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace assocmem {

bool hit_before(const SimilarityHit& a, const SimilarityHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.node_id < b.node_id;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::DimensionMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
    const double na = std::sqrt(kernels::sum_squares(a));
    const double nb = std::sqrt(kernels::sum_squares(b));
    if (na == 0.0 || nb == 0.0) throw Error(Errc::ZeroNorm, "cosine of a zero vector");
    return std::clamp(kernels::dot(a, b) / (na * nb), -1.0, 1.0);
}

VectorIndex VectorIndex::from_graph(const GraphStore& graph) {
    VectorIndex index;
    for (const auto& n : graph.nodes()) {
        if (n.kind == NodeKind::Concept || n.embedding.empty()) continue;
        index.upsert(n.id, n.kind, n.embedding);
    }
    return index;
}

void VectorIndex::upsert(const std::string& node_id, NodeKind kind, std::span<const float> vector) {
    if (vector.empty()) throw Error(Errc::DimensionMismatch, node_id + ": empty vector");
    if (dim_ != 0 && vector.size() != dim_) {
        throw Error(Errc::DimensionMismatch, node_id + ": got " + std::to_string(vector.size()) + " dims, index has " +
                                                 std::to_string(dim_));
    }
    const double norm = std::sqrt(kernels::sum_squares(vector));
    if (!(norm > 0.0) || !std::isfinite(norm)) throw Error(Errc::ZeroNorm, node_id);
    if (dim_ == 0) dim_ = vector.size();

    if (auto it = slot_.find(node_id); it != slot_.end()) {
        std::copy(vector.begin(), vector.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
        records_[it->second].kind = kind;
        records_[it->second].norm = norm;
        return;
    }
    slot_.emplace(node_id, records_.size());
    records_.push_back({node_id, kind, norm});
    data_.insert(data_.end(), vector.begin(), vector.end());
}

void VectorIndex::check_query(std::span<const float> query) const {
    if (query.size() != dim_) {
        throw Error(Errc::DimensionMismatch, "query has " + std::to_string(query.size()) + " dims, index has " +
                                                 std::to_string(dim_));
    }
}

std::vector<SimilarityHit> VectorIndex::knn(std::span<const float> query, std::size_t k,
                                            const KindFilter& kinds) const {
    if (records_.empty() || k == 0) return {};
    check_query(query);
    const double qnorm = std::sqrt(kernels::sum_squares(query));
    if (!(qnorm > 0.0)) throw Error(Errc::ZeroNorm, "query vector");

    std::vector<SimilarityHit> hits;
    hits.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) {
        if (kinds && !kinds->contains(records_[i].kind)) continue;
        const double sim = kernels::dot(row(i), query) / (records_[i].norm * qnorm);
        hits.push_back({records_[i].node_id, std::clamp(sim, -1.0, 1.0)});
    }
    const std::size_t keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(), hit_before);
    hits.resize(keep);
    return hits;
}

double VectorIndex::similarity(const std::string& node_id, std::span<const float> query) const {
    auto it = slot_.find(node_id);
    if (it == slot_.end()) throw Error(Errc::UnknownNode, node_id);
    check_query(query);
    const double qnorm = std::sqrt(kernels::sum_squares(query));
    if (!(qnorm > 0.0)) throw Error(Errc::ZeroNorm, "query vector");
    return std::clamp(kernels::dot(row(it->second), query) / (records_[it->second].norm * qnorm), -1.0, 1.0);
}

std::span<const float> VectorIndex::vector(const std::string& node_id) const {
    auto it = slot_.find(node_id);
    if (it == slot_.end()) throw Error(Errc::UnknownNode, node_id);
    return row(it->second);
}

const VectorIndex::Record& VectorIndex::record(const std::string& node_id) const {
    auto it = slot_.find(node_id);
    if (it == slot_.end()) throw Error(Errc::UnknownNode, node_id);
    return records_[it->second];
}

}  // namespace assocmem
