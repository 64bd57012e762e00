#include "doctest.h"

#include "assocmem/eval_harness.hpp"
#include "assocmem/memory_builder.hpp"
#include "assocmem/mock_gateway.hpp"
#include "support/fixtures.hpp"

#include <fstream>
#include <memory>

using namespace assocmem;

namespace {

struct Built {
    Dataset data;
    std::map<std::string, std::unique_ptr<GraphStore>> graphs;
    std::map<std::string, std::unique_ptr<VectorIndex>> indexes;
    std::map<std::string, EvalTarget> targets;
};

Built build(const std::string& fixture_name) {
    Built b;
    b.data = load_dataset(fixture::fixtures_dir() / fixture_name);
    MockGateway gw;
    for (const auto& c : b.data.conversations) {
        auto g = std::make_unique<GraphStore>();
        auto ix = std::make_unique<VectorIndex>();
        ingest_conversation(*g, *ix, gw, c.sessions);
        b.targets[c.conversation_id] = {g.get(), ix.get()};
        b.graphs[c.conversation_id] = std::move(g);
        b.indexes[c.conversation_id] = std::move(ix);
    }
    return b;
}

EvalRecord record(const std::string& conv, Category c, std::optional<double> reward) {
    EvalRecord r;
    r.qa.conversation_id = conv;
    r.qa.category = c;
    r.reward = reward;
    r.status = reward ? RecordStatus::Ok : RecordStatus::JudgeFailed;
    return r;
}

std::size_t line_count(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) n += !line.empty();
    return n;
}

}  // namespace

TEST_CASE("overall mean equals the count-weighted category means") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EvalRecord> rs;
        const std::size_t n = 1 + rng() % 60;
        double total = 0.0;
        std::size_t judged = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = kAllCategories[rng() % 4];
            const bool missing = rng() % 10 == 0;
            const double reward = std::round(u(rng) * 100.0) / 100.0;
            rs.push_back(record("c" + std::to_string(rng() % 3), c, missing ? std::nullopt : std::optional(reward)));
            if (!missing) {
                total += reward;
                ++judged;
            }
        }
        const auto s = summarize(rs, "gaama", "fp");
        CHECK(s.attempted == n);
        CHECK(s.completed == judged);
        CHECK(s.missing_reward == n - judged);
        CHECK(s.overall.n == judged);
        double weighted = 0.0;
        std::size_t cat_n = 0;
        for (const auto& [c, b] : s.per_category) {
            weighted += b.mean() * static_cast<double>(b.n);
            cat_n += b.n;
        }
        CHECK(cat_n == judged);
        if (judged > 0) {
            CHECK(std::abs(s.overall.mean() - total / static_cast<double>(judged)) <= 1e-9);
            CHECK(std::abs(s.overall.mean() - weighted / static_cast<double>(cat_n)) <= 1e-9);
        }
        double conv_sum = 0.0;
        for (const auto& [id, b] : s.per_conversation) conv_sum += b.sum;
        CHECK(std::abs(conv_sum - total) <= 1e-9);
    }
}

TEST_CASE("records round-trip through a JSON line") {
    EvalRecord r = record("c1", Category::Temporal, 0.75);
    r.key = "c1#3";
    r.qa.question = "When?\nNow";
    r.qa.reference_answer = "May 2023";
    r.mode = "gaama";
    r.fingerprint = "abc";
    r.hypothesis = "In May 2023.";
    r.justification = "close";
    r.trace = {{"f-1", 0.9}, {"ep-2", 0.25}};
    r.memory_words = 42;
    const auto back = record_from_json_line(to_json_line(r));
    CHECK(back.key == r.key);
    CHECK(back.qa == r.qa);
    CHECK(back.reward == r.reward);
    CHECK(back.trace == r.trace);
    CHECK(back.status == RecordStatus::Ok);
    CHECK(back.memory_words == 42);
    CHECK_THROWS_AS(record_from_json_line("{\"key\":"), Error);
}

TEST_CASE("judge retries malformed output once") {
    MockGateway gw;
    int calls = 0;
    gw.set_chat_override([&](const std::string&) -> std::optional<std::string> {
        return ++calls == 1 ? "not json" : R"({"reward": 0.5, "justification": "partial"})";
    });
    const auto ok = judge("q", "a", "h", gw);
    CHECK(ok.attempts == 2);
    REQUIRE(ok.reward);
    CHECK(*ok.reward == doctest::Approx(0.5));

    gw.set_chat_override([](const std::string&) -> std::optional<std::string> { return "{\"justification\":\"x\"}"; });
    const auto bad = judge("q", "a", "h", gw);
    CHECK(bad.attempts == 2);
    CHECK_FALSE(bad.reward);

    gw.set_chat_override([](const std::string&) -> std::optional<std::string> {
        return R"({"reward": 1.4, "justification": "generous"})";
    });
    const auto clamped = judge("q", "a", "h", gw);
    CHECK(clamped.clamped);
    CHECK(*clamped.reward == doctest::Approx(1.0));
}

TEST_CASE("the three-question summary matches the golden file") {
    auto b = build("three_questions.json");
    MockGateway gw;
    EvalOptions opt;
    opt.provider_tag = "mock/256";  // what the CLI derives for the default mock
    const auto s = run_eval(b.data.qa, b.targets, gw, opt);
    CHECK(s.attempted == 3);
    CHECK(s.completed == 3);
    CHECK(fixture::matches_golden("three_questions_summary.json", summary_json(s)));
    CHECK(s.overall.n == 3);
}

TEST_CASE("judge failures and gateway errors are recorded, not fatal") {
    auto b = build("three_questions.json");
    MockGateway gw;
    gw.set_chat_override([](const std::string& prompt) -> std::optional<std::string> {
        if (prompt.find("Generated Response: ") != std::string::npos) return "garbage";
        if (prompt.find("pottery") != std::string::npos) throw Error(Errc::TransportFailure, "down");
        return std::nullopt;
    });
    const auto s = run_eval(b.data.qa, b.targets, gw, EvalOptions{});
    CHECK(s.attempted == 3);
    CHECK(s.completed == 0);
    CHECK(s.failed + s.missing_reward == 3);
    CHECK(s.failed >= 1);
    CHECK(s.overall.n == 0);
    for (const auto& r : s.records) {
        if (r.status == RecordStatus::Error) CHECK(r.error.find("TransportFailure") != std::string::npos);
        if (r.status == RecordStatus::JudgeFailed) CHECK_FALSE(r.reward);
    }

    std::map<std::string, EvalTarget> none;
    MockGateway plain;
    const auto missing = run_eval(b.data.qa, none, plain, EvalOptions{});
    CHECK(missing.failed == 3);
    CHECK(missing.completion_rate() == 0.0);
}

TEST_CASE("a limited run resumes into the same result as a fresh run") {
    auto b = build("ten_sessions.json");
    const auto dir = fixture::scratch_dir("eval_resume");
    EvalOptions opt;
    opt.provider_tag = "mock";
    opt.jobs = 4;

    MockGateway fresh_gw;
    opt.results_log = dir / "fresh.jsonl";
    const auto fresh = run_eval(b.data.qa, b.targets, fresh_gw, opt);
    CHECK(fresh.attempted == 30);

    MockGateway gw;
    opt.results_log = dir / "resumed.jsonl";
    opt.limit = 5;
    const auto partial = run_eval(b.data.qa, b.targets, gw, opt);
    CHECK(partial.attempted == 5);
    CHECK(line_count(opt.results_log) == 5);

    // A crash mid-write leaves a truncated last line behind.
    std::ofstream(opt.results_log, std::ios::app) << "{\"key\":\"fixture-10#29\",\"sta";
    opt.limit.reset();
    gw.reset_counters();
    const auto resumed = run_eval(b.data.qa, b.targets, gw, opt);
    CHECK(resumed.reused == 5);
    CHECK(gw.chat_calls() == 2 * 25);
    CHECK(summary_json(resumed) == summary_json(fresh));
    CHECK(resumed.records.size() == 30);
    CHECK(question_keys(b.data.qa).size() == 30);

    // A different configuration does not reuse anything.
    MockGateway other;
    opt.retrieval.w_ppr = 0.3;
    const auto changed = run_eval(b.data.qa, b.targets, other, opt);
    CHECK(changed.reused == 0);
    CHECK(changed.fingerprint != fresh.fingerprint);
}

TEST_CASE("semantic mode traces equal full retrieval with w_ppr zero") {
    auto b = build("ten_sessions.json");
    MockGateway g1, g2;
    EvalOptions sem;
    sem.mode = EvalMode::SemanticOnly;
    EvalOptions zero;
    zero.retrieval.w_ppr = 0.0;
    const auto a = run_eval(b.data.qa, b.targets, g1, sem);
    const auto z = run_eval(b.data.qa, b.targets, g2, zero);
    REQUIRE(a.records.size() == z.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].trace == z.records[i].trace);
        CHECK(a.records[i].reward == z.records[i].reward);
    }
    CHECK(config_fingerprint(sem) != config_fingerprint(EvalOptions{}));
}

TEST_CASE("flat baseline packs only episodes within the word budget") {
    auto b = build("ten_sessions.json");
    MockGateway gw;
    EvalOptions opt;
    opt.mode = EvalMode::FlatRag;
    const auto s = run_eval(b.data.qa, b.targets, gw, opt);
    for (const auto& r : s.records) {
        CHECK(r.memory_words <= opt.retrieval.max_memory_words);
        for (const auto& t : r.trace) CHECK(t.node_id.rfind("ep-", 0) == 0);
    }
}

TEST_CASE("delta tables list each category") {
    EvalSummary base = summarize({record("c", Category::Temporal, 0.2), record("c", Category::SingleHop, 1.0)}, "semantic", "a");
    EvalSummary cand = summarize({record("c", Category::Temporal, 0.5), record("c", Category::SingleHop, 1.0)}, "gaama", "b");
    const auto table = format_delta(base, cand);
    CHECK(table.find("temporal") != std::string::npos);
    CHECK(table.find("+30.0") != std::string::npos);
    const auto back = summary_from_json(summary_json(cand));
    CHECK(back.overall.n == 2);
    CHECK(back.per_category.at(Category::Temporal).mean() == doctest::Approx(0.5));
    CHECK(parse_mode("rag") == EvalMode::FlatRag);
    CHECK_THROWS_AS(parse_mode("bm25"), Error);
}
