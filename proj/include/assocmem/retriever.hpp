#pragma once
// Hybrid retrieval: cosine KNN pool -> squared-similarity seeds -> depth-d
// graph expansion -> edge-type-weighted, hub-dampened transitions ->
// personalized PageRank with sink redistribution -> additive scoring.

#include "assocmem/graph_store.hpp"
#include "assocmem/types.hpp"
#include "assocmem/vector_index.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace assocmem {

class Gateway;

struct EdgeWeights {
    // Indexed by EdgeKind: NEXT, DERIVED_FROM, DERIVED_FROM_FACT, HAS_CONCEPT, ABOUT_CONCEPT.
    std::array<double, 5> values{0.8, 0.8, 0.5, 0.8, 0.8};

    double operator[](EdgeKind kind) const { return values[static_cast<std::size_t>(kind)]; }
    double& operator[](EdgeKind kind) { return values[static_cast<std::size_t>(kind)]; }
    bool operator==(const EdgeWeights&) const = default;
};

struct RetrievalConfig {
    double alpha = 0.6;
    std::size_t k_seeds = 40;
    std::size_t depth = 2;
    std::size_t hub_threshold = 50;
    double w_ppr = 0.1;
    double w_sim = 1.0;
    EdgeWeights edge_base_weights;
    std::size_t max_facts = 60;
    std::size_t max_reflections = 20;
    std::size_t max_episodes = 80;
    std::size_t max_memory_words = 1000;
    std::size_t ppr_max_iters = 200;
    double ppr_tolerance = 1e-6;

    // B = max_facts + max_reflections + max_episodes.
    std::size_t budget() const { return max_facts + max_reflections + max_episodes; }
    std::size_t pool_size() const { return 2 * budget(); }
    // Throws InvalidArgument on out-of-range values.
    void validate() const;

    bool operator==(const RetrievalConfig&) const = default;
};

// Teleport distribution over the chosen seeds (same order as seed_ids).
struct Teleport {
    std::vector<std::string> seed_ids;
    std::vector<double> weights;
};

// Top-k of a similarity-sorted candidate list, weighted by max(sim, 0)^2 and
// normalised; uniform when every weight is zero. Throws EmptyCandidates.
Teleport select_seeds(std::span<const SimilarityHit> candidates, std::size_t k);

struct Subgraph {
    std::vector<std::string> nodes;  // seeds first, then BFS discovery order
    std::unordered_map<std::string, std::size_t> local;
    std::vector<MemoryEdge> edges;  // every stored edge with both ends inside

    bool contains(const std::string& id) const { return local.contains(id); }
};

// Undirected breadth-first closure of the seeds up to `depth` hops.
Subgraph expand(const GraphStore& graph, std::span<const std::string> seeds, std::size_t depth);

struct LocalEdge {
    std::size_t from;
    std::size_t to;
    EdgeKind kind;
    double stored_weight = 1.0;
};

// Row-compressed transition matrix over subgraph-local indices.
struct TransitionMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_ptr;  // size n + 1
    std::vector<std::size_t> col;
    std::vector<double> base_weight;    // w_base(kind), summed over parallel edges
    std::vector<double> damped_weight;  // base_weight * row_scale[row], before normalisation
    std::vector<double> prob;           // damped_weight / row sum
    std::vector<double> row_scale;      // min(1, theta / deg) when deg > theta, else 1

    bool is_sink(std::size_t i) const { return row_ptr[i] == row_ptr[i + 1]; }
    std::span<const std::size_t> row_cols(std::size_t i) const {
        return {col.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
    }
    std::span<const double> row_probs(std::size_t i) const {
        return {prob.data() + row_ptr[i], row_ptr[i + 1] - row_ptr[i]};
    }
};

// `degrees[i]` is the full-graph degree of local node i (hub test). With
// `symmetrize` every edge is also traversable target -> source.
TransitionMatrix build_transitions(std::size_t n, std::span<const LocalEdge> edges,
                                   std::span<const std::size_t> degrees, const RetrievalConfig& config,
                                   bool symmetrize = true);

TransitionMatrix transition_matrix(const GraphStore& graph, const Subgraph& subgraph, const RetrievalConfig& config);

struct PprResult {
    std::vector<double> raw;
    std::vector<double> normalized;  // raw / max(raw)
    std::size_t iterations = 0;
    bool converged = false;
    double last_delta = 0.0;  // L1 change of the final iteration
};

// Called after every iteration with the current rank vector.
using PprObserver = std::function<void(std::size_t iteration, std::span<const double> rank)>;

// Power iteration r <- (1-a) v + a P^T r + a S v, S = mass on sink rows.
// Throws NonStochasticInput for a teleport that is not a distribution or rows
// that do not sum to one.
PprResult personalized_pagerank(const TransitionMatrix& transitions, std::span<const double> teleport,
                                const RetrievalConfig& config, const PprObserver& observer = {});

// x / max(x) when max(x) > 0; an all non-positive vector is divided by
// max|x|; an all-zero vector stays zero.
std::vector<double> max_normalize(std::span<const double> values);

struct ScoredCandidate {
    std::string node_id;
    NodeKind kind = NodeKind::Episode;
    double sim = 0.0;    // raw cosine to the query
    double ppr = 0.0;    // max-normalised over the candidate set, 0 outside the PPR subgraph
    double score = 0.0;  // w_ppr * ppr + w_sim * sim_norm
    bool from_graph = false;  // discovered by expansion, not in the KNN pool

    bool operator==(const ScoredCandidate&) const = default;
};

struct RetrievalResult {
    std::vector<ScoredCandidate> candidates;  // score desc, then node id asc
    std::vector<SimilarityHit> pool;          // the KNN pool as returned by the index
    Teleport teleport;
    std::size_t subgraph_nodes = 0;
    std::size_t subgraph_edges = 0;
    std::size_t ppr_iterations = 0;
    bool ppr_converged = false;
};

// Non-concept kinds: the KNN pool and the packer only deal with these.
const KindFilter& memory_kinds();

// Full pipeline for an already-embedded query. With w_ppr == 0 the graph
// stage is skipped and the result is the similarity ranking of the pool.
RetrievalResult retrieve_vector(const GraphStore& graph, const VectorIndex& index, std::span<const float> query,
                                const RetrievalConfig& config);

// Embeds `query_text` through the gateway, then retrieve_vector. Throws EmptyGraph.
RetrievalResult retrieve(const GraphStore& graph, const VectorIndex& index, const std::string& query_text,
                         Gateway& gateway, const RetrievalConfig& config);

// Fixed-width table: rank, id, kind, sim, ppr, score.
std::string format_trace(std::span<const ScoredCandidate> candidates);

}  // namespace assocmem
