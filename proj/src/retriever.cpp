#include "assocmem/retriever.hpp"

#include "assocmem/gateway.hpp"
#include "assocmem/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <map>
#include <unordered_set>

namespace assocmem {

namespace {

constexpr double kStochasticTolerance = 1e-9;

[[noreturn]] void bad_config(const std::string& what) { throw Error(Errc::InvalidArgument, "retrieval config: " + what); }

}  // namespace

void RetrievalConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) bad_config("alpha must lie in (0,1)");
    if (k_seeds == 0) bad_config("k_seeds must be positive");
    if (hub_threshold == 0) bad_config("hub_threshold must be positive");
    if (!(w_ppr >= 0.0) || !(w_sim >= 0.0)) bad_config("w_ppr and w_sim must be non-negative");
    for (double w : edge_base_weights.values) {
        if (!(w >= 0.0) || !std::isfinite(w)) bad_config("edge base weights must be finite and non-negative");
    }
    if (ppr_max_iters == 0) bad_config("ppr_max_iters must be positive");
    if (!(ppr_tolerance > 0.0)) bad_config("ppr_tolerance must be positive");
}

Teleport select_seeds(std::span<const SimilarityHit> candidates, std::size_t k) {
    if (candidates.empty()) throw Error(Errc::EmptyCandidates, "no candidates to seed from");
    if (k == 0) throw Error(Errc::InvalidArgument, "k must be at least 1");
    const std::size_t take = std::min(k, candidates.size());
    Teleport t;
    double total = 0.0;
    for (std::size_t i = 0; i < take; ++i) {
        const double s = std::max(candidates[i].similarity, 0.0);
        t.seed_ids.push_back(candidates[i].node_id);
        t.weights.push_back(s * s);
        total += s * s;
    }
    for (auto& w : t.weights) w = total > 0.0 ? w / total : 1.0 / static_cast<double>(take);
    return t;
}

Subgraph expand(const GraphStore& graph, std::span<const std::string> seeds, std::size_t depth) {
    Subgraph sub;
    auto add = [&](const std::string& id) {
        if (sub.local.contains(id)) return false;
        sub.local.emplace(id, sub.nodes.size());
        sub.nodes.push_back(id);
        return true;
    };
    std::vector<std::string> frontier;
    for (const auto& s : seeds) {
        if (!graph.contains(s)) throw Error(Errc::UnknownNode, s);
        if (add(s)) frontier.push_back(s);
    }
    for (std::size_t level = 0; level < depth && !frontier.empty(); ++level) {
        std::vector<std::string> next;
        for (const auto& id : frontier) {
            for (const auto& nb : graph.neighbors(id, Direction::Both)) {
                if (add(nb.id)) next.push_back(nb.id);
            }
        }
        frontier = std::move(next);
    }
    for (const auto& id : sub.nodes) {
        for (const MemoryEdge* e : graph.out_edges(id)) {
            if (sub.local.contains(e->target)) sub.edges.push_back(*e);
        }
    }
    return sub;
}

TransitionMatrix build_transitions(std::size_t n, std::span<const LocalEdge> edges,
                                   std::span<const std::size_t> degrees, const RetrievalConfig& config,
                                   bool symmetrize) {
    if (degrees.size() != n) throw Error(Errc::InvalidArgument, "degrees must have one entry per node");
    std::vector<std::map<std::size_t, double>> rows(n);
    for (const auto& e : edges) {
        if (e.from >= n || e.to >= n) throw Error(Errc::InvalidArgument, "edge endpoint out of range");
        const double w = config.edge_base_weights[e.kind] * e.stored_weight;
        rows[e.from][e.to] += w;
        if (symmetrize) rows[e.to][e.from] += w;
    }

    TransitionMatrix t;
    t.n = n;
    t.row_ptr.reserve(n + 1);
    t.row_ptr.push_back(0);
    t.row_scale.resize(n, 1.0);
    const double theta = static_cast<double>(config.hub_threshold);
    for (std::size_t i = 0; i < n; ++i) {
        const double deg = static_cast<double>(degrees[i]);
        if (deg > theta) t.row_scale[i] = std::min(1.0, theta / deg);
        double total = 0.0;
        for (const auto& [j, w] : rows[i]) {
            if (w <= 0.0) continue;
            t.col.push_back(j);
            t.base_weight.push_back(w);
            t.damped_weight.push_back(w * t.row_scale[i]);
            total += w * t.row_scale[i];
        }
        for (std::size_t p = t.row_ptr.back(); p < t.col.size(); ++p) t.prob.push_back(t.damped_weight[p] / total);
        t.row_ptr.push_back(t.col.size());
    }
    return t;
}

TransitionMatrix transition_matrix(const GraphStore& graph, const Subgraph& subgraph, const RetrievalConfig& config) {
    std::vector<LocalEdge> edges;
    edges.reserve(subgraph.edges.size());
    for (const auto& e : subgraph.edges) {
        edges.push_back({subgraph.local.at(e.source), subgraph.local.at(e.target), e.kind, e.stored_weight});
    }
    std::vector<std::size_t> degrees;
    degrees.reserve(subgraph.nodes.size());
    for (const auto& id : subgraph.nodes) degrees.push_back(graph.degree(id));
    return build_transitions(subgraph.nodes.size(), edges, degrees, config, true);
}

std::vector<double> max_normalize(std::span<const double> values) {
    std::vector<double> out(values.begin(), values.end());
    if (out.empty()) return out;
    double denom = *std::max_element(out.begin(), out.end());
    if (!(denom > 0.0)) {
        denom = 0.0;
        for (double v : out) denom = std::max(denom, std::fabs(v));
    }
    if (denom > 0.0) {
        for (auto& v : out) v /= denom;
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
    return out;
}

PprResult personalized_pagerank(const TransitionMatrix& transitions, std::span<const double> teleport,
                                const RetrievalConfig& config, const PprObserver& observer) {
    const std::size_t n = transitions.n;
    if (teleport.size() != n) {
        throw Error(Errc::NonStochasticInput, "teleport has " + std::to_string(teleport.size()) + " entries for " +
                                                  std::to_string(n) + " nodes");
    }
    if (n == 0) return {};
    double vsum = 0.0;
    for (double v : teleport) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(Errc::NonStochasticInput, "negative or non-finite teleport entry");
        vsum += v;
    }
    if (std::fabs(vsum - 1.0) > kStochasticTolerance) {
        throw Error(Errc::NonStochasticInput, "teleport sums to " + std::to_string(vsum));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (transitions.is_sink(i)) continue;
        double rs = 0.0;
        for (double p : transitions.row_probs(i)) {
            if (!(p >= 0.0)) throw Error(Errc::NonStochasticInput, "negative transition probability");
            rs += p;
        }
        if (std::fabs(rs - 1.0) > kStochasticTolerance) {
            throw Error(Errc::NonStochasticInput, "row " + std::to_string(i) + " sums to " + std::to_string(rs));
        }
    }

    const double alpha = config.alpha;
    std::vector<double> rank(teleport.begin(), teleport.end());
    std::vector<double> next(n);
    PprResult result;
    for (std::size_t it = 1; it <= config.ppr_max_iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        double sink_mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (transitions.is_sink(i)) {
                sink_mass += rank[i];
                continue;
            }
            const double push = alpha * rank[i];
            const auto cols = transitions.row_cols(i);
            const auto probs = transitions.row_probs(i);
            for (std::size_t p = 0; p < cols.size(); ++p) next[cols[p]] += push * probs[p];
        }
        // (1 - a) v + a S v in one pass.
        kernels::axpy((1.0 - alpha) + alpha * sink_mass, teleport, next);

        result.last_delta = kernels::l1_distance(next, rank);
        rank.swap(next);
        result.iterations = it;
        if (observer) observer(it, rank);
        if (result.last_delta < config.ppr_tolerance) {
            result.converged = true;
            break;
        }
    }
    result.normalized = max_normalize(rank);
    result.raw = std::move(rank);
    return result;
}

const KindFilter& memory_kinds() {
    static const KindFilter kinds = std::set<NodeKind>{NodeKind::Episode, NodeKind::Fact, NodeKind::Reflection};
    return kinds;
}

namespace {

double on_demand_similarity(const GraphStore& graph, const VectorIndex& index, const std::string& id,
                            std::span<const float> query) {
    if (index.contains(id)) return index.similarity(id, query);
    const auto& node = graph.node(id);
    if (node.embedding.empty() || node.embedding.size() != query.size()) return 0.0;
    return cosine(node.embedding, query);
}

}  // namespace

RetrievalResult retrieve_vector(const GraphStore& graph, const VectorIndex& index, std::span<const float> query,
                                const RetrievalConfig& config) {
    config.validate();
    if (graph.empty() || index.empty()) throw Error(Errc::EmptyGraph, "nothing to retrieve from");

    RetrievalResult out;
    out.pool = index.knn(query, config.pool_size(), memory_kinds());
    if (out.pool.empty()) return out;

    std::vector<ScoredCandidate> cands;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& hit : out.pool) {
        slot.emplace(hit.node_id, cands.size());
        cands.push_back({hit.node_id, index.record(hit.node_id).kind, hit.similarity, 0.0, 0.0, false});
    }

    std::vector<double> raw_ppr(cands.size(), 0.0);
    if (config.w_ppr > 0.0) {
        out.teleport = select_seeds(out.pool, config.k_seeds);
        const Subgraph sub = expand(graph, out.teleport.seed_ids, config.depth);
        const TransitionMatrix trans = transition_matrix(graph, sub, config);

        std::vector<double> v(sub.nodes.size(), 0.0);
        for (std::size_t s = 0; s < out.teleport.seed_ids.size(); ++s) {
            v[sub.local.at(out.teleport.seed_ids[s])] = out.teleport.weights[s];
        }
        const PprResult ppr = personalized_pagerank(trans, v, config);
        out.subgraph_nodes = sub.nodes.size();
        out.subgraph_edges = sub.edges.size();
        out.ppr_iterations = ppr.iterations;
        out.ppr_converged = ppr.converged;

        for (std::size_t i = 0; i < sub.nodes.size(); ++i) {
            const auto& id = sub.nodes[i];
            auto it = slot.find(id);
            if (it == slot.end()) {
                const auto& node = graph.node(id);
                if (node.kind == NodeKind::Concept) continue;
                it = slot.emplace(id, cands.size()).first;
                cands.push_back({id, node.kind, on_demand_similarity(graph, index, id, query), 0.0, 0.0, true});
                raw_ppr.push_back(0.0);
            }
            raw_ppr[it->second] = ppr.raw[i];
        }
    }

    std::vector<double> sims;
    sims.reserve(cands.size());
    for (const auto& c : cands) sims.push_back(c.sim);
    const auto sim_norm = max_normalize(sims);
    const auto ppr_norm = max_normalize(raw_ppr);
    for (std::size_t i = 0; i < cands.size(); ++i) {
        cands[i].ppr = ppr_norm[i];
        cands[i].score = config.w_ppr * ppr_norm[i] + config.w_sim * sim_norm[i];
    }
    std::sort(cands.begin(), cands.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.node_id < b.node_id;
    });
    out.candidates = std::move(cands);
    return out;
}

RetrievalResult retrieve(const GraphStore& graph, const VectorIndex& index, const std::string& query_text,
                         Gateway& gateway, const RetrievalConfig& config) {
    if (graph.empty() || index.empty()) throw Error(Errc::EmptyGraph, "nothing to retrieve from");
    const auto query = embed_one(gateway, query_text);
    return retrieve_vector(graph, index, query, config);
}

std::string format_trace(std::span<const ScoredCandidate> candidates) {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-5s %-28s %-10s %10s %10s %10s\n", "rank", "id", "kind", "sim", "ppr", "score");
    out += buf;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        std::snprintf(buf, sizeof buf, "%-5zu %-28s %-10s %10.6f %10.6f %10.6f\n", i + 1, c.node_id.c_str(),
                      std::string(to_string(c.kind)).c_str(), c.sim, c.ppr, c.score);
        out += buf;
    }
    return out;
}

}  // namespace assocmem
