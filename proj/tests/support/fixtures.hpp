#pragma once
// Small graph builders shared by the unit and acceptance tests.

#include "assocmem/graph_store.hpp"
#include "assocmem/retriever.hpp"
#include "assocmem/vector_index.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fixture {

using assocmem::EdgeKind;
using assocmem::MemoryNode;
using assocmem::NodeKind;

inline std::filesystem::path fixtures_dir() { return ASSOCMEM_FIXTURES; }
inline std::filesystem::path golden_dir() { return ASSOCMEM_GOLDEN; }

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("assocmem-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline MemoryNode episode(const std::string& id, std::uint64_t seq, const std::string& text = "",
                          std::vector<float> emb = {}) {
    MemoryNode n;
    n.id = id;
    n.kind = NodeKind::Episode;
    n.text = text.empty() ? "turn " + id : text;
    n.embedding = std::move(emb);
    n.conversation_id = "c";
    n.session_id = "s";
    n.timestamp = "2023-01-01T00:00:00";
    n.seq = seq;
    n.speaker = "A";
    return n;
}

inline MemoryNode fact(const std::string& id, const std::string& text = "", std::vector<float> emb = {}) {
    MemoryNode n;
    n.id = id;
    n.kind = NodeKind::Fact;
    n.text = text.empty() ? "fact " + id : text;
    n.embedding = std::move(emb);
    n.conversation_id = "c";
    n.belief = 0.8;
    return n;
}

inline MemoryNode reflection(const std::string& id, const std::string& text = "", std::vector<float> emb = {}) {
    MemoryNode n = fact(id, text.empty() ? "reflection " + id : text, std::move(emb));
    n.kind = NodeKind::Reflection;
    return n;
}

inline MemoryNode concept_node(const std::string& id, const std::string& label) {
    MemoryNode n;
    n.id = id;
    n.kind = NodeKind::Concept;
    n.text = label;
    n.conversation_id = "c";
    return n;
}

inline std::vector<float> unit(std::vector<float> v) {
    double s = 0;
    for (float x : v) s += static_cast<double>(x) * x;
    for (float& x : v) x = static_cast<float>(x / std::sqrt(s));
    return v;
}

inline std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<float> d(0.f, 1.f);
    std::vector<float> v(dim);
    for (auto& x : v) x = d(rng);
    return unit(std::move(v));
}

// Random schema-valid memory graph with embeddings on every non-concept node.
inline assocmem::GraphStore random_graph(std::mt19937_64& rng, std::size_t dim, std::size_t episodes,
                                         std::size_t facts, std::size_t reflections, std::size_t concepts) {
    assocmem::GraphStore g;
    std::uniform_real_distribution<double> u(0, 1);
    auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
    for (std::size_t i = 0; i < episodes; ++i) {
        g.add_node(episode("e" + std::to_string(i), i, "", random_unit(rng, dim)));
        if (i > 0 && u(rng) < 0.9) g.add_edge({"e" + std::to_string(i - 1), "e" + std::to_string(i), EdgeKind::Next});
    }
    for (std::size_t i = 0; i < concepts; ++i) {
        g.add_node(concept_node("c" + std::to_string(i), "topic_" + std::to_string(i)));
    }
    for (std::size_t i = 0; i < facts; ++i) {
        const std::string id = "f" + std::to_string(i);
        g.add_node(fact(id, "", random_unit(rng, dim)));
        if (episodes > 0) {
            for (int k = 0; k < 2; ++k) g.add_edge_if_absent({id, "e" + std::to_string(pick(episodes)), EdgeKind::DerivedFrom});
        }
        if (concepts > 0 && u(rng) < 0.7) g.add_edge_if_absent({id, "c" + std::to_string(pick(concepts)), EdgeKind::AboutConcept});
    }
    for (std::size_t i = 0; i < reflections; ++i) {
        const std::string id = "r" + std::to_string(i);
        g.add_node(reflection(id, "", random_unit(rng, dim)));
        if (facts > 0) {
            for (int k = 0; k < 2; ++k) g.add_edge_if_absent({id, "f" + std::to_string(pick(facts)), EdgeKind::DerivedFromFact});
        }
    }
    if (concepts > 0) {
        for (std::size_t i = 0; i < episodes; ++i) {
            if (u(rng) < 0.4) g.add_edge_if_absent({"e" + std::to_string(i), "c" + std::to_string(pick(concepts)), EdgeKind::HasConcept});
        }
    }
    return g;
}

// Query q = x-axis. f1 is the best match; e_bridge shares a concept with f1
// but is slightly less similar than the isolated e_rival.
struct BridgeFixture {
    assocmem::GraphStore graph;
    assocmem::VectorIndex index;
    std::vector<float> query;
};

inline BridgeFixture concept_bridge() {
    BridgeFixture f;
    auto& g = f.graph;
    g.add_node(fact("f1", "the favourite lake", unit({1.0f, 0.0f, 0.0f})));
    g.add_node(episode("e_rival", 0, "rival turn", unit({0.80f, 0.60f, 0.0f})));
    g.add_node(episode("e_bridge", 1, "bridged turn", unit({0.78f, 0.0f, 0.6258f})));
    g.add_node(episode("e_far", 2, "unrelated turn", unit({0.0f, 0.3f, 1.0f})));
    g.add_node(concept_node("k_lake", "lake_trip"));
    g.add_edge({"f1", "k_lake", EdgeKind::AboutConcept});
    g.add_edge({"e_bridge", "k_lake", EdgeKind::HasConcept});
    g.add_edge({"e_bridge", "e_far", EdgeKind::Next});
    f.index = assocmem::VectorIndex::from_graph(g);
    f.query = {1.0f, 0.0f, 0.0f};
    return f;
}

inline std::size_t rank_of(const std::vector<assocmem::ScoredCandidate>& c, const std::string& id) {
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i].node_id == id) return i;
    }
    return c.size();
}

}  // namespace fixture

namespace fixture {

// Compares against a committed golden file; ASSOCMEM_UPDATE_GOLDEN=1 rewrites it.
inline bool matches_golden(const std::string& name, const std::string& actual) {
    const auto path = golden_dir() / name;
    if (const char* update = std::getenv("ASSOCMEM_UPDATE_GOLDEN"); update && std::string(update) == "1") {
        std::ofstream(path, std::ios::binary) << actual;
        return true;
    }
    return read_file(path) == actual;
}

}  // namespace fixture
