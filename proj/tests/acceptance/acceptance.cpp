// Acceptance suite: one [PASS]/[FAIL] line per criterion. Exit status is
// non-zero when any gating criterion (AC1-AC8) fails.

#include "assocmem/eval_harness.hpp"
#include "assocmem/locomo.hpp"
#include "assocmem/memory_builder.hpp"
#include "assocmem/mock_gateway.hpp"
#include "assocmem/packer.hpp"
#include "assocmem/retriever.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_locomo.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

using namespace assocmem;

namespace {

// Tolerances.
constexpr double kOracleL1 = 1e-6;
constexpr double kMassTol = 1e-9;
constexpr double kChainTol = 1e-3;
constexpr double kAggregateTol = 1e-9;
constexpr double kOracleSeconds = 10.0;

constexpr int kOracleGraphs = 200;
constexpr int kHubFixtures = 100;
constexpr int kAblationGraphs = 50;
constexpr int kPackSets = 1000;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        if (pass) detail = what;
        pass = false;
    }
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<oracle::RandomPprCase> oracle_cases() {
    std::mt19937_64 rng(20240611);
    std::vector<oracle::RandomPprCase> cases;
    for (int i = 0; i < kOracleGraphs; ++i) cases.push_back(oracle::random_ppr_case(rng, 50, i % 20 == 0));
    return cases;
}

Outcome ac1_oracle() {
    Outcome o;
    const RetrievalConfig config;
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (const auto& c : oracle_cases()) {
        const auto t = build_transitions(c.n, c.edges, c.degrees, config);
        const auto r = personalized_pagerank(t, c.teleport, config);
        const auto dense =
            oracle::dense_ppr(oracle::dense_transitions(c.n, c.edges, c.degrees, config), c.teleport, config.alpha);
        worst = std::max(worst, oracle::l1(r.raw, dense));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(worst <= kOracleL1, fmt("max L1 %.3g exceeds %.0e", worst, kOracleL1));
    o.require(secs < kOracleSeconds, fmt("took %.2f s", secs));
    if (o.pass) o.detail = fmt("%d graphs, max L1 %.3g, %.2f s", kOracleGraphs, worst, secs);
    return o;
}

Outcome ac2_mass() {
    Outcome o;
    const RetrievalConfig config;
    double worst = 0.0;
    std::size_t sink_graphs = 0, iterations = 0;
    for (const auto& c : oracle_cases()) {
        sink_graphs += c.edges.empty();
        const auto t = build_transitions(c.n, c.edges, c.degrees, config);
        personalized_pagerank(t, c.teleport, config, [&](std::size_t, std::span<const double> rank) {
            ++iterations;
            worst = std::max(worst, std::abs(std::accumulate(rank.begin(), rank.end(), 0.0) - 1.0));
        });
    }
    o.require(sink_graphs > 0, "no all-sink graph in the sample");
    o.require(worst <= kMassTol, fmt("mass drift %.3g", worst));
    if (o.pass) o.detail = fmt("%zu iterations, %zu all-sink graphs, max drift %.3g", iterations, sink_graphs, worst);
    return o;
}

Outcome ac3_chain() {
    Outcome o;
    const RetrievalConfig config;
    const std::vector<LocalEdge> edges{{0, 1, EdgeKind::Next}, {1, 2, EdgeKind::Next}};
    const auto t = build_transitions(3, edges, std::vector<std::size_t>{1, 2, 1}, config, false);
    const std::vector<double> v{1.0, 0.0, 0.0};
    const auto r = personalized_pagerank(t, v, config);

    // Independent dense solve of the directed chain; C is a sink.
    const oracle::Matrix p{{0, 1, 0}, {0, 0, 1}, {0, 0, 0}};
    const auto dense = oracle::dense_ppr(p, v, config.alpha);
    const double expect_raw[3] = {0.5102, 0.3061, 0.1837};
    const double expect_norm[3] = {1.0, 0.6, 0.36};
    for (int i = 0; i < 3; ++i) {
        o.require(std::abs(r.raw[i] - expect_raw[i]) <= kChainTol, fmt("raw[%d] = %.6f", i, r.raw[i]));
        o.require(std::abs(dense[i] - expect_raw[i]) <= kChainTol, fmt("oracle[%d] = %.6f", i, dense[i]));
        o.require(std::abs(r.normalized[i] - expect_norm[i]) <= kChainTol, fmt("norm[%d] = %.6f", i, r.normalized[i]));
    }
    if (o.pass) {
        o.detail = fmt("raw (%.4f, %.4f, %.4f), normalised (%.4f, %.4f, %.4f)", r.raw[0], r.raw[1], r.raw[2],
                       r.normalized[0], r.normalized[1], r.normalized[2]);
    }
    return o;
}

Outcome ac4_hub() {
    Outcome o;
    const RetrievalConfig config;
    const std::vector<LocalEdge> star{{0, 1, EdgeKind::HasConcept}, {0, 2, EdgeKind::Next}};
    const auto t = build_transitions(3, star, std::vector<std::size_t>{100, 1, 1}, config);
    o.require(t.row_scale[0] == 0.5, fmt("scale %.17g", t.row_scale[0]));
    for (std::size_t p = t.row_ptr[0]; p < t.row_ptr[1]; ++p) {
        o.require(t.damped_weight[p] == 0.5 * t.base_weight[p], "damped weight is not half the base weight");
    }

    std::mt19937_64 rng(77);
    std::size_t rows = 0;
    for (int f = 0; f < kHubFixtures; ++f) {
        auto c = oracle::random_ppr_case(rng, 40, false);
        for (auto& d : c.degrees) d += std::uniform_int_distribution<std::size_t>(0, 150)(rng);
        const auto h = build_transitions(c.n, c.edges, c.degrees, config);
        for (std::size_t i = 0; i < h.n; ++i) {
            const double theta = static_cast<double>(config.hub_threshold);
            const double expect = c.degrees[i] > config.hub_threshold ? theta / static_cast<double>(c.degrees[i]) : 1.0;
            o.require(h.row_scale[i] == expect, fmt("fixture %d row %zu scale %.17g", f, i, h.row_scale[i]));
            rows += h.row_scale[i] < 1.0 && !h.is_sink(i);
            for (std::size_t p = h.row_ptr[i]; p < h.row_ptr[i + 1]; ++p) {
                for (std::size_t q = h.row_ptr[i]; q < h.row_ptr[i + 1]; ++q) {
                    if (h.base_weight[p] < h.base_weight[q]) {
                        o.require(h.damped_weight[p] < h.damped_weight[q] && h.prob[p] < h.prob[q],
                                  fmt("fixture %d row %zu order changed", f, i));
                    }
                    if (h.base_weight[p] == h.base_weight[q]) {
                        o.require(h.prob[p] == h.prob[q], fmt("fixture %d row %zu tie broken", f, i));
                    }
                }
            }
        }
    }
    if (o.pass) o.detail = fmt("scale 0.5 exact; %d fixtures, %zu dampened rows order-preserving", kHubFixtures, rows);
    return o;
}

Outcome ac5_ablation() {
    Outcome o;
    std::mt19937_64 rng(555);
    RetrievalConfig semantic;
    semantic.w_ppr = 0.0;
    for (int trial = 0; trial < kAblationGraphs; ++trial) {
        const std::size_t dim = 8 + rng() % 24;
        const auto g = fixture::random_graph(rng, dim, 20 + rng() % 120, rng() % 80, rng() % 20, 1 + rng() % 10);
        const auto index = VectorIndex::from_graph(g);
        const auto q = fixture::random_unit(rng, dim);
        const auto result = retrieve_vector(g, index, q, semantic);

        // Pure KNN ranking rendered through the same trace format.
        const auto knn = index.knn(q, semantic.pool_size(), memory_kinds());
        double top = 0.0;
        for (const auto& h : knn) top = std::max(top, h.similarity);
        std::vector<ScoredCandidate> expected;
        for (const auto& h : knn) {
            const double norm = top > 0.0 ? h.similarity / top : 0.0;
            expected.push_back({h.node_id, g.node(h.node_id).kind, h.similarity, 0.0, semantic.w_sim * norm, false});
        }
        o.require(format_trace(result.candidates) == format_trace(expected), fmt("graph %d trace differs", trial));

        // The ranking itself against brute force over the stored embeddings.
        std::vector<std::pair<std::string, std::vector<float>>> rows;
        for (const auto& n : g.nodes()) {
            if (n.kind != NodeKind::Concept) rows.emplace_back(n.id, n.embedding);
        }
        const auto brute = oracle::brute_knn(rows, q, semantic.pool_size());
        o.require(brute.size() == result.candidates.size(), fmt("graph %d size differs from brute force", trial));
        for (std::size_t i = 0; i < std::min(brute.size(), result.candidates.size()); ++i) {
            o.require(brute[i].node_id == result.candidates[i].node_id, fmt("graph %d rank %zu differs", trial, i));
        }
    }

    auto f = fixture::concept_bridge();
    const auto flat = retrieve_vector(f.graph, f.index, f.query, semantic);
    const auto full = retrieve_vector(f.graph, f.index, f.query, RetrievalConfig{});
    const auto flat_gap = static_cast<long>(fixture::rank_of(flat.candidates, "e_bridge")) -
                          static_cast<long>(fixture::rank_of(flat.candidates, "e_rival"));
    const auto full_gap = static_cast<long>(fixture::rank_of(full.candidates, "e_bridge")) -
                          static_cast<long>(fixture::rank_of(full.candidates, "e_rival"));
    o.require(flat_gap > 0, "bridge fixture: e_bridge already ahead without the graph");
    o.require(full_gap < 0, "bridge fixture: e_bridge not promoted with w_ppr=0.1");
    if (o.pass) o.detail = fmt("%d graphs byte-identical; bridged node rank %zu -> %zu", kAblationGraphs,
                               fixture::rank_of(flat.candidates, "e_bridge") + 1,
                               fixture::rank_of(full.candidates, "e_bridge") + 1);
    return o;
}

std::size_t whitespace_words(const std::string& s) {
    std::istringstream in(s);
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    return n;
}

Outcome ac6_packing() {
    Outcome o;
    std::mt19937_64 rng(6060);
    static const char* vocab[] = {"lake", "dog", "pottery", "May", "visited", "her", "the", "a", "bowl", "blue", "trip"};
    auto sentence = [&](std::size_t words) {
        std::string s;
        for (std::size_t i = 0; i < words; ++i) s += (i ? " " : "") + std::string(vocab[rng() % std::size(vocab)]);
        return s;
    };
    GraphStore g;
    std::vector<std::pair<std::string, NodeKind>> pool;
    for (std::size_t i = 0; i < 300; ++i) {
        const std::string e = "e" + std::to_string(i), fa = "f" + std::to_string(i), r = "r" + std::to_string(i);
        g.add_node(fixture::episode(e, 1000 - i * 3, sentence(1 + rng() % 40)));
        g.add_node(fixture::fact(fa, sentence(1 + rng() % 25)));
        pool.emplace_back(e, NodeKind::Episode);
        pool.emplace_back(fa, NodeKind::Fact);
        if (i < 80) {
            g.add_node(fixture::reflection(r, sentence(1 + rng() % 30)));
            pool.emplace_back(r, NodeKind::Reflection);
        }
    }
    const PackLimits limits;
    std::size_t trimmed_sets = 0;
    for (int set = 0; set < kPackSets; ++set) {
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t n = rng() % pool.size();
        std::vector<ScoredCandidate> cands;
        for (std::size_t i = 0; i < n; ++i) {
            const double score = 1.0 - static_cast<double>(i) / static_cast<double>(n + 1);
            cands.push_back({pool[i].first, pool[i].second, score, 0.0, score, false});
        }
        const auto p = pack(cands, g, limits);
        trimmed_sets += !p.trimmed.empty();
        o.require(p.facts.size() <= 60, fmt("set %d: %zu facts", set, p.facts.size()));
        o.require(p.reflections.size() <= 20, fmt("set %d: %zu reflections", set, p.reflections.size()));
        o.require(p.episodes.size() <= 80, fmt("set %d: %zu episodes", set, p.episodes.size()));
        const std::size_t words = p.empty() ? 0 : whitespace_words(p.memory_text);
        o.require(words <= 1000 && p.word_count == words, fmt("set %d: %zu words", set, words));
        for (std::size_t i = 1; i < p.episodes.size(); ++i) {
            o.require(*g.node(p.episodes[i - 1].node_id).seq < *g.node(p.episodes[i].node_id).seq,
                      fmt("set %d: episodes out of order", set));
        }
    }
    if (o.pass) o.detail = fmt("%d sets, %zu hit the word budget", kPackSets, trimmed_sets);
    return o;
}

Outcome ac7_construction() {
    Outcome o;
    const auto sessions = load_dataset(fixture::fixtures_dir() / "ten_sessions.json").conversations.at(0).sessions;
    const auto dir = fixture::scratch_dir("acceptance-construction");
    std::size_t turns = 0;
    for (const auto& s : sessions) turns += s.turns.size();

    for (int run = 0; run < 2; ++run) {
        GraphStore g;
        VectorIndex index;
        MockGateway gw;
        std::size_t expected_episodes = 0;
        std::size_t early_calls = 0;
        gw.set_chat_override([&](const std::string&) -> std::optional<std::string> {
            early_calls += g.count(NodeKind::Episode) != expected_episodes;
            return std::nullopt;
        });
        for (const auto& s : sessions) {
            expected_episodes += s.turns.size();
            ingest_session(g, index, gw, s);
        }
        g.persist(dir / ("run" + std::to_string(run) + ".jsonl"));
        if (run == 1) continue;

        o.require(early_calls == 0, fmt("%zu chat calls before all session episodes existed", early_calls));
        GraphStore flat;
        VectorIndex flat_index;
        MockGateway flat_gw;
        ingest_episodes_only(flat, flat_index, flat_gw, sessions);
        o.require(flat_gw.chat_calls() == 0, "episode-only ingest called the chat model");

        std::size_t at = 0;
        std::vector<const MemoryNode*> eps;
        for (const auto& n : g.nodes()) {
            if (n.kind == NodeKind::Episode) eps.push_back(&n);
        }
        o.require(eps.size() == turns, fmt("%zu episodes for %zu turns", eps.size(), turns));
        for (const auto& s : sessions) {
            for (const auto& t : s.turns) {
                if (at < eps.size()) o.require(eps[at]->text == t.text && eps[at]->speaker == t.speaker, "episode text altered");
                ++at;
            }
        }
        o.require(g.count(EdgeKind::Next) == turns - sessions.size(), "NEXT count is not turns minus sessions");
        for (const auto& e : g.edges()) {
            if (e.kind != EdgeKind::Next) continue;
            const auto& a = g.node(e.source);
            const auto& b = g.node(e.target);
            o.require(a.session_id == b.session_id && *b.seq == *a.seq + 1, "NEXT edge leaves its session path");
        }
        for (const auto& n : g.nodes()) {
            const EdgeKind need = n.kind == NodeKind::Fact ? EdgeKind::DerivedFrom : EdgeKind::DerivedFromFact;
            if (n.kind != NodeKind::Fact && n.kind != NodeKind::Reflection) continue;
            bool ok = false;
            for (const auto& nb : g.neighbors(n.id, Direction::Out)) ok |= nb.kind == need;
            o.require(ok, n.id + " has no provenance");
        }
        o.require(g.count(NodeKind::Fact) > 0 && g.count(NodeKind::Reflection) > 0, "no facts or reflections built");
        if (o.pass) {
            o.detail = fmt("%zu episodes, %zu facts, %zu reflections, %zu concepts", turns, g.count(NodeKind::Fact),
                           g.count(NodeKind::Reflection), g.count(NodeKind::Concept));
        }
    }
    o.require(fixture::read_file(dir / "run0.jsonl") == fixture::read_file(dir / "run1.jsonl"),
              "graph bytes differ between runs");
    if (o.pass) o.detail += "; identical bytes across runs";
    return o;
}

std::filesystem::path locomo_path() {
    if (const char* env = std::getenv("LOCOMO10_PATH"); env && *env) return env;
    return std::filesystem::path(ASSOCMEM_FIXTURES).parent_path().parent_path() / "data" / "locomo10.json";
}

Outcome ac8_eval() {
    Outcome o;
    const auto data = load_dataset(fixture::fixtures_dir() / "ten_sessions.json");
    const auto& conv = data.conversations.at(0);
    GraphStore g;
    VectorIndex index;
    MockGateway builder_gw;
    ingest_conversation(g, index, builder_gw, conv.sessions);
    const std::map<std::string, EvalTarget> targets{{conv.conversation_id, {&g, &index}}};

    std::set<Category> cats;
    for (const auto& q : data.qa) cats.insert(q.category);
    o.require(data.qa.size() == 30 && cats.size() == 4, "fixture is not 30 questions over four categories");

    const auto dir = fixture::scratch_dir("acceptance-eval");
    EvalOptions opt;
    opt.provider_tag = "mock/256";
    opt.jobs = 4;
    MockGateway fresh_gw;
    opt.results_log = dir / "fresh.jsonl";
    const auto fresh = run_eval(data.qa, targets, fresh_gw, opt);

    double total = 0.0, weighted = 0.0;
    std::size_t n = 0;
    for (const auto& r : fresh.records) {
        if (!r.reward) continue;
        total += *r.reward;
        ++n;
    }
    for (const auto& [c, b] : fresh.per_category) weighted += b.mean() * static_cast<double>(b.n);
    o.require(n == 30, fmt("%zu of 30 questions judged", n));
    o.require(std::abs(fresh.overall.mean() - weighted / static_cast<double>(n)) <= kAggregateTol,
              "overall mean differs from weighted category means");
    o.require(std::abs(fresh.overall.mean() - total / static_cast<double>(n)) <= kAggregateTol,
              "overall mean differs from the record mean");

    MockGateway gw;
    opt.results_log = dir / "resumed.jsonl";
    opt.limit = 11;
    run_eval(data.qa, targets, gw, opt);
    opt.limit.reset();
    const auto resumed = run_eval(data.qa, targets, gw, opt);
    o.require(resumed.reused == 11, fmt("resumed run reused %zu records", resumed.reused));
    o.require(summary_json(resumed) == summary_json(fresh), "resumed summary differs from the fresh summary");

    const auto synthetic = parse_dataset(fixture::synthetic_locomo(10, {282, 321, 96, 841, 446}));
    const auto manifest = load_manifest(fixture::fixtures_dir() / "locomo10_manifest.json");
    try {
        validate_counts(synthetic, manifest);
    } catch (const Error& e) {
        o.require(false, std::string("synthetic counts: ") + e.what());
    }

    const auto full = locomo_path();
    if (!std::filesystem::exists(full)) {
        o.require(false, "full LoCoMo file not found at " + full.string() + " (set LOCOMO10_PATH)");
        return o;
    }
    try {
        const auto real = load_dataset(full);
        validate_counts(real, manifest);
        const auto counts = real.category_counts();
        if (o.pass) {
            o.detail = fmt("identity and resume hold; full file counts %zu/%zu/%zu/%zu", counts.at(Category::MultiHop),
                           counts.at(Category::Temporal), counts.at(Category::OpenDomain),
                           counts.at(Category::SingleHop));
        }
    } catch (const Error& e) {
        o.require(false, std::string("full file: ") + e.what());
    }
    return o;
}

Outcome ac9_reproduction() {
    Outcome o;
    const auto script = std::filesystem::path(ASSOCMEM_FIXTURES).parent_path().parent_path() / "scripts" / "reproduce.sh";
    const bool present = std::filesystem::exists(script);
    o.require(present, "scripts/reproduce.sh missing");
    if (present) {
        const auto perms = std::filesystem::status(script).permissions();
        o.require((perms & std::filesystem::perms::owner_exec) != std::filesystem::perms::none,
                  "scripts/reproduce.sh is not executable");
    }
    if (o.pass) o.detail = "reproduction script shipped; sanity targets need real credentials and are not run here";
    return o;
}

struct Criterion {
    const char* id;
    const char* title;
    bool gating;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"AC1", "PPR matches the dense oracle", true, ac1_oracle},
        {"AC2", "PPR conserves mass every iteration", true, ac2_mass},
        {"AC3", "three-chain fixed point", true, ac3_chain},
        {"AC4", "hub dampening", true, ac4_hub},
        {"AC5", "semantic arm equals KNN; bridge promotion", true, ac5_ablation},
        {"AC6", "packing caps, budget and chronology", true, ac6_packing},
        {"AC7", "construction invariants", true, ac7_construction},
        {"AC8", "eval arithmetic, resume and dataset counts", true, ac8_eval},
        {"AC9", "reproduction script (non-gating)", false, ac9_reproduction},
    };
    bool gate = true;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass && c.gating) gate = false;
        std::printf("[%s] %s %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str());
    }
    std::fflush(stdout);
    return gate ? 0 : 1;
}
