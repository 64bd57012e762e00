#pragma once
// Memory packing: bucket retrieved nodes by kind, cap each bucket, trim the
// globally lowest-scored items until the rendered text fits the word budget,
// and render Reflections / Facts / Episodes (episodes in seq order).

#include "assocmem/graph_store.hpp"
#include "assocmem/retriever.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace assocmem {

inline constexpr std::string_view kEmptyMemory = "(no relevant memory)";

struct PackedItem {
    std::string node_id;
    NodeKind kind = NodeKind::Episode;
    std::string text;
    double score = 0.0;
    std::size_t rank = 0;  // position in the candidate list
    std::uint64_t seq = 0;
    std::string timestamp;
    std::string speaker;

    bool operator==(const PackedItem&) const = default;
};

struct PackLimits {
    std::size_t max_facts = 60;
    std::size_t max_reflections = 20;
    std::size_t max_episodes = 80;
    std::size_t max_memory_words = 1000;

    static PackLimits from(const RetrievalConfig& config) {
        return {config.max_facts, config.max_reflections, config.max_episodes, config.max_memory_words};
    }
};

struct MemoryPack {
    std::vector<PackedItem> reflections;  // score order
    std::vector<PackedItem> facts;        // score order
    std::vector<PackedItem> episodes;     // ascending seq
    std::string memory_text;
    std::size_t word_count = 0;         // whitespace words of the rendered sections
    std::vector<std::string> trimmed;   // removed by the word budget, lowest score first

    bool empty() const { return reflections.empty() && facts.empty() && episodes.empty(); }
    std::vector<std::string> included_ids() const;
};

// `candidates` must be sorted best-first. Concept nodes and ids unknown to
// the graph are ignored.
MemoryPack pack(std::span<const ScoredCandidate> candidates, const GraphStore& graph, const PackLimits& limits);

// Deterministic plain text; kEmptyMemory for an empty pack.
std::string render(const MemoryPack& pack);

}  // namespace assocmem
