#include "assocmem/eval_harness.hpp"

#include "assocmem/packer.hpp"
#include "assocmem/parsers.hpp"
#include "assocmem/prompts.hpp"
#include "assocmem/text.hpp"

#include "json.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace assocmem {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string_view status_name(RecordStatus s) {
    switch (s) {
        case RecordStatus::Ok: return "ok";
        case RecordStatus::JudgeFailed: return "judge_failed";
        case RecordStatus::Error: return "error";
    }
    return "?";
}

RecordStatus parse_status(const std::string& s) {
    if (s == "ok") return RecordStatus::Ok;
    if (s == "judge_failed") return RecordStatus::JudgeFailed;
    if (s == "error") return RecordStatus::Error;
    throw Error(Errc::CorruptFile, "unknown record status '" + s + "'");
}

std::string percent(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", 100.0 * x);
    return buf;
}

std::string signed_points(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.1f", 100.0 * x);
    return buf;
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string lpad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

RetrievalConfig effective_config(const EvalOptions& options) {
    RetrievalConfig config = options.retrieval;
    if (options.mode == EvalMode::SemanticOnly) config.w_ppr = 0.0;
    return config;
}

struct PackedContext {
    std::string memory_text;
    std::size_t words = 0;
    std::vector<TraceEntry> trace;
};

PackedContext build_context(const std::string& question, const EvalTarget& target, Gateway& gateway,
                            const EvalOptions& options) {
    const RetrievalConfig config = effective_config(options);
    std::vector<ScoredCandidate> candidates;
    PackLimits limits = PackLimits::from(config);
    if (options.mode == EvalMode::FlatRag) {
        // Raw turns ranked by similarity; the word budget is filled best-first.
        if (target.index->empty()) throw Error(Errc::EmptyGraph, "no episodes indexed");
        const auto query = embed_one(gateway, question);
        const std::size_t k = std::min(target.index->size(), config.max_memory_words);
        for (const auto& hit : target.index->knn(query, k, std::set{NodeKind::Episode})) {
            candidates.push_back({hit.node_id, NodeKind::Episode, hit.similarity, 0.0, hit.similarity, false});
        }
        limits = {0, 0, candidates.size(), config.max_memory_words};
    } else {
        candidates = retrieve(*target.graph, *target.index, question, gateway, config).candidates;
    }
    const MemoryPack packed = pack(candidates, *target.graph, limits);
    PackedContext ctx{packed.memory_text, packed.word_count, {}};
    std::set<std::string> included;
    for (const auto& id : packed.included_ids()) included.insert(id);
    for (const auto& c : candidates) {
        if (included.contains(c.node_id)) ctx.trace.push_back({c.node_id, c.score});
    }
    return ctx;
}

EvalRecord evaluate_one(const QAItem& qa, const std::string& key, const EvalTarget* target, Gateway& gateway,
                        const EvalOptions& options, const std::string& fingerprint) {
    EvalRecord rec;
    rec.key = key;
    rec.qa = qa;
    rec.mode = std::string(mode_name(options.mode));
    rec.fingerprint = fingerprint;
    try {
        if (target == nullptr || target->graph == nullptr || target->index == nullptr) {
            throw Error(Errc::EmptyGraph, "no memory loaded for conversation " + qa.conversation_id);
        }
        auto t0 = Clock::now();
        const PackedContext ctx = build_context(qa.question, *target, gateway, options);
        rec.retrieve_ms = ms_since(t0);
        rec.trace = ctx.trace;
        rec.memory_words = ctx.words;

        t0 = Clock::now();
        rec.hypothesis = answer(qa.question, ctx.memory_text, gateway);
        rec.answer_ms = ms_since(t0);

        t0 = Clock::now();
        const JudgeOutcome verdict = judge(qa.question, qa.reference_answer, rec.hypothesis, gateway);
        rec.judge_ms = ms_since(t0);
        rec.reward = verdict.reward;
        rec.justification = verdict.justification;
        rec.judge_clamped = verdict.clamped;
        rec.status = verdict.reward ? RecordStatus::Ok : RecordStatus::JudgeFailed;
    } catch (const std::exception& e) {
        rec.status = RecordStatus::Error;
        rec.error = e.what();
        rec.reward.reset();
    }
    return rec;
}

// Completed records with a matching fingerprint, keyed by question key. A
// truncated final line (interrupted append) is ignored.
// Reads completed records; a truncated last line is ignored and cut off so
// that appended records start on a fresh line.
std::map<std::string, EvalRecord> read_log(const std::filesystem::path& path, const std::string& fingerprint) {
    std::map<std::string, EvalRecord> done;
    std::ifstream in(path, std::ios::binary);
    if (!in) return done;
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string data = buf.str();
    std::size_t pos = 0, line_no = 0;
    while (pos < data.size()) {
        ++line_no;
        const auto nl = data.find('\n', pos);
        if (nl == std::string::npos) break;
        const std::string line = data.substr(pos, nl - pos);
        pos = nl + 1;
        if (text::trim(line).empty()) continue;
        EvalRecord rec;
        try {
            rec = record_from_json_line(line);
        } catch (const Error& e) {
            throw Error(Errc::CorruptFile, path.string() + ":" + std::to_string(line_no) + ": " + e.detail());
        }
        if (rec.fingerprint != fingerprint || rec.status == RecordStatus::Error) continue;
        done.insert_or_assign(rec.key, std::move(rec));
    }
    in.close();
    if (pos < data.size()) std::filesystem::resize_file(path, pos);
    return done;
}

json bucket_json(const RewardBucket& b) { return {{"n", b.n}, {"sum", b.sum}, {"mean", b.mean()}}; }

RewardBucket bucket_from(const json& j) {
    RewardBucket b;
    b.n = j.at("n").get<std::size_t>();
    b.sum = j.at("sum").get<double>();
    return b;
}

}  // namespace

std::string_view mode_name(EvalMode mode) {
    switch (mode) {
        case EvalMode::Gaama: return "gaama";
        case EvalMode::SemanticOnly: return "semantic";
        case EvalMode::FlatRag: return "rag";
    }
    return "?";
}

EvalMode parse_mode(std::string_view s) {
    const std::string key = text::to_lower(text::trim(s));
    if (key == "gaama") return EvalMode::Gaama;
    if (key == "semantic") return EvalMode::SemanticOnly;
    if (key == "rag") return EvalMode::FlatRag;
    throw Error(Errc::InvalidArgument, "unknown mode '" + std::string(s) + "' (expected gaama, semantic or rag)");
}

std::string answer(const std::string& question, const std::string& memory_text, Gateway& gateway) {
    const std::string prompt =
        render_prompt(PromptName::AnswerFromMemory, {{"query", question}, {"memory_text", memory_text}});
    return gateway.chat(chat_request(gateway, prompt));
}

JudgeOutcome judge(const std::string& question, const std::string& reference, const std::string& hypothesis,
                   Gateway& gateway) {
    const std::string prompt =
        render_prompt(PromptName::Judge, {{"question", question}, {"answer", reference}, {"hypothesis", hypothesis}});
    JudgeOutcome out;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ++out.attempts;
        const std::string raw = gateway.chat(chat_request(gateway, prompt));
        try {
            const JudgeVerdict v = parse_judge(raw);
            out.reward = v.reward;
            out.justification = v.justification;
            out.clamped = v.clamped;
            return out;
        } catch (const Error& e) {
            if (e.code() != Errc::MalformedJson && e.code() != Errc::MissingField) throw;
            out.justification = e.what();
        }
    }
    return out;
}

std::string to_json_line(const EvalRecord& r) {
    json trace = json::array();
    for (const auto& t : r.trace) trace.push_back({{"id", t.node_id}, {"score", t.score}});
    json j = {{"key", r.key},
              {"conversation_id", r.qa.conversation_id},
              {"category", category_code(r.qa.category)},
              {"question", r.qa.question},
              {"reference", r.qa.reference_answer},
              {"mode", r.mode},
              {"fingerprint", r.fingerprint},
              {"status", status_name(r.status)},
              {"hypothesis", r.hypothesis},
              {"reward", r.reward ? json(*r.reward) : json(nullptr)},
              {"justification", r.justification},
              {"judge_clamped", r.judge_clamped},
              {"error", r.error},
              {"memory_words", r.memory_words},
              {"trace", std::move(trace)},
              {"timing_ms", {{"retrieve", r.retrieve_ms}, {"answer", r.answer_ms}, {"judge", r.judge_ms}}}};
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

EvalRecord record_from_json_line(const std::string& line) {
    try {
        const json j = json::parse(line);
        EvalRecord r;
        r.key = j.at("key").get<std::string>();
        r.qa.conversation_id = j.at("conversation_id").get<std::string>();
        r.qa.category = category_from_code(j.at("category").get<long long>());
        r.qa.question = j.at("question").get<std::string>();
        r.qa.reference_answer = j.at("reference").get<std::string>();
        r.mode = j.at("mode").get<std::string>();
        r.fingerprint = j.at("fingerprint").get<std::string>();
        r.status = parse_status(j.at("status").get<std::string>());
        r.hypothesis = j.value("hypothesis", "");
        if (j.contains("reward") && !j["reward"].is_null()) r.reward = j["reward"].get<double>();
        r.justification = j.value("justification", "");
        r.judge_clamped = j.value("judge_clamped", false);
        r.error = j.value("error", "");
        r.memory_words = j.value("memory_words", std::size_t{0});
        if (j.contains("trace")) {
            for (const auto& t : j["trace"]) r.trace.push_back({t.at("id").get<std::string>(), t.at("score").get<double>()});
        }
        if (j.contains("timing_ms")) {
            const auto& t = j["timing_ms"];
            r.retrieve_ms = t.value("retrieve", 0.0);
            r.answer_ms = t.value("answer", 0.0);
            r.judge_ms = t.value("judge", 0.0);
        }
        if (r.status == RecordStatus::Ok && !r.reward) throw Error(Errc::CorruptFile, "ok record without reward");
        return r;
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptFile, std::string("bad results record (") + e.what() + ")");
    }
}

EvalSummary summarize(const std::vector<EvalRecord>& records, const std::string& mode, const std::string& fingerprint) {
    EvalSummary s;
    s.mode = mode;
    s.fingerprint = fingerprint;
    for (auto c : kAllCategories) s.per_category[c];
    for (const auto& r : records) {
        ++s.attempted;
        s.per_conversation[r.qa.conversation_id];
        switch (r.status) {
            case RecordStatus::Ok:
                ++s.completed;
                s.overall.add(*r.reward);
                s.per_category[r.qa.category].add(*r.reward);
                s.per_conversation[r.qa.conversation_id].add(*r.reward);
                break;
            case RecordStatus::JudgeFailed: ++s.missing_reward; break;
            case RecordStatus::Error: ++s.failed; break;
        }
    }
    s.records = records;
    return s;
}

std::string summary_json(const EvalSummary& s) {
    json cats = json::array();
    for (const auto& [c, b] : s.per_category) {
        json row = bucket_json(b);
        row["category"] = category_name(c);
        row["code"] = category_code(c);
        cats.push_back(std::move(row));
    }
    json convs = json::array();
    for (const auto& [id, b] : s.per_conversation) {
        json row = bucket_json(b);
        row["conversation_id"] = id;
        convs.push_back(std::move(row));
    }
    const json j = {{"mode", s.mode},
                    {"fingerprint", s.fingerprint},
                    {"attempted", s.attempted},
                    {"completed", s.completed},
                    {"failed", s.failed},
                    {"missing_reward", s.missing_reward},
                    {"overall", bucket_json(s.overall)},
                    {"categories", std::move(cats)},
                    {"conversations", std::move(convs)}};
    return j.dump(2) + "\n";
}

EvalSummary summary_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        EvalSummary s;
        s.mode = j.at("mode").get<std::string>();
        s.fingerprint = j.at("fingerprint").get<std::string>();
        s.attempted = j.at("attempted").get<std::size_t>();
        s.completed = j.at("completed").get<std::size_t>();
        s.failed = j.at("failed").get<std::size_t>();
        s.missing_reward = j.at("missing_reward").get<std::size_t>();
        s.overall = bucket_from(j.at("overall"));
        for (const auto& row : j.at("categories")) {
            s.per_category[category_from_code(row.at("code").get<long long>())] = bucket_from(row);
        }
        for (const auto& row : j.at("conversations")) {
            s.per_conversation[row.at("conversation_id").get<std::string>()] = bucket_from(row);
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(Errc::CorruptFile, std::string("bad summary (") + e.what() + ")");
    }
}

std::string format_summary(const EvalSummary& s) {
    std::ostringstream out;
    out << "mode " << s.mode << "  fingerprint " << s.fingerprint << "\n";
    out << "attempted " << s.attempted << "  completed " << s.completed << "  failed " << s.failed
        << "  missing reward " << s.missing_reward << "\n\n";
    out << pad("Category", 16) << lpad("n", 6) << lpad("mean %", 9) << "\n";
    for (const auto& [c, b] : s.per_category) {
        out << pad(std::string(category_name(c)), 16) << lpad(std::to_string(b.n), 6) << lpad(percent(b.mean()), 9)
            << "\n";
    }
    out << pad("Overall", 16) << lpad(std::to_string(s.overall.n), 6) << lpad(percent(s.overall.mean()), 9) << "\n\n";
    out << pad("Conversation", 16) << lpad("n", 6) << lpad("mean %", 9) << "\n";
    for (const auto& [id, b] : s.per_conversation) {
        out << pad(id, 16) << lpad(std::to_string(b.n), 6) << lpad(percent(b.mean()), 9) << "\n";
    }
    return out.str();
}

std::string format_delta(const EvalSummary& base, const EvalSummary& cand) {
    std::ostringstream out;
    auto header = [&](const std::string& first) {
        out << pad(first, 16) << lpad("n", 6) << lpad(base.mode, 10) << lpad(cand.mode, 10) << lpad("delta", 8) << "\n";
    };
    auto row = [&](const std::string& name, const RewardBucket& b, const RewardBucket& c) {
        out << pad(name, 16) << lpad(std::to_string(c.n), 6) << lpad(percent(b.mean()), 10)
            << lpad(percent(c.mean()), 10) << lpad(signed_points(c.mean() - b.mean()), 8) << "\n";
    };
    header("Category");
    for (auto c : kAllCategories) {
        const auto bi = base.per_category.find(c);
        const auto ci = cand.per_category.find(c);
        row(std::string(category_name(c)), bi == base.per_category.end() ? RewardBucket{} : bi->second,
            ci == cand.per_category.end() ? RewardBucket{} : ci->second);
    }
    row("Overall", base.overall, cand.overall);
    out << "\n";
    header("Conversation");
    for (const auto& [id, c] : cand.per_conversation) {
        const auto bi = base.per_conversation.find(id);
        if (bi == base.per_conversation.end()) continue;
        row(id, bi->second, c);
    }
    return out.str();
}

std::string config_fingerprint(const EvalOptions& options) {
    const RetrievalConfig c = effective_config(options);
    json weights = json::object();
    for (auto k : kAllEdgeKinds) weights[std::string(to_string(k))] = c.edge_base_weights[k];
    const json j = {{"mode", mode_name(options.mode)},
                    {"alpha", c.alpha},
                    {"k_seeds", c.k_seeds},
                    {"depth", c.depth},
                    {"hub_threshold", c.hub_threshold},
                    {"w_ppr", c.w_ppr},
                    {"w_sim", c.w_sim},
                    {"edge_weights", weights},
                    {"max_facts", c.max_facts},
                    {"max_reflections", c.max_reflections},
                    {"max_episodes", c.max_episodes},
                    {"max_memory_words", c.max_memory_words},
                    {"ppr_max_iters", c.ppr_max_iters},
                    {"ppr_tolerance", c.ppr_tolerance},
                    {"provider", options.provider_tag}};
    return text::hex64(text::fnv1a64(j.dump()));
}

std::vector<std::string> question_keys(const std::vector<QAItem>& qa) {
    std::map<std::string, std::size_t> per_conv;
    std::vector<std::string> keys;
    keys.reserve(qa.size());
    for (const auto& q : qa) keys.push_back(q.conversation_id + "#" + std::to_string(per_conv[q.conversation_id]++));
    return keys;
}

EvalSummary run_eval(const std::vector<QAItem>& qa, const std::map<std::string, EvalTarget>& targets,
                     Gateway& gateway, const EvalOptions& options) {
    effective_config(options).validate();
    const std::string fingerprint = config_fingerprint(options);
    const std::string mode(mode_name(options.mode));

    std::vector<QAItem> selected = qa;
    std::vector<std::string> keys = question_keys(qa);
    if (options.limit && *options.limit < selected.size()) {
        selected.resize(*options.limit);
        keys.resize(*options.limit);
    }

    std::map<std::string, EvalRecord> done;
    std::ofstream log;
    if (!options.results_log.empty()) {
        done = read_log(options.results_log, fingerprint);
        if (options.results_log.has_parent_path()) std::filesystem::create_directories(options.results_log.parent_path());
        log.open(options.results_log, std::ios::binary | std::ios::app);
        if (!log) throw Error(Errc::IoFailure, options.results_log.string() + ": cannot open results log");
    }

    std::vector<std::optional<EvalRecord>> slots(selected.size());
    std::vector<std::size_t> todo;
    std::size_t reused = 0;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        auto it = done.find(keys[i]);
        if (it != done.end() && it->second.qa.question == selected[i].question) {
            slots[i] = it->second;
            ++reused;
        } else {
            todo.push_back(i);
        }
    }

    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < todo.size(); t = next++) {
            const std::size_t i = todo[t];
            const auto target = targets.find(selected[i].conversation_id);
            EvalRecord rec = evaluate_one(selected[i], keys[i], target == targets.end() ? nullptr : &target->second,
                                          gateway, options, fingerprint);
            std::lock_guard lock(log_mutex);
            if (log.is_open()) {
                log << to_json_line(rec) << '\n';
                log.flush();
            }
            const std::size_t n = ++finished;
            if (options.progress) {
                *options.progress << "[" << n << "/" << todo.size() << "] " << rec.key << " "
                                  << status_name(rec.status);
                if (rec.reward) *options.progress << " reward=" << *rec.reward;
                *options.progress << "\n";
            }
            slots[i] = std::move(rec);
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(1, todo.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }

    std::vector<EvalRecord> records;
    records.reserve(slots.size());
    for (auto& s : slots) records.push_back(std::move(*s));
    EvalSummary summary = summarize(records, mode, fingerprint);
    summary.reused = reused;
    return summary;
}

}  // namespace assocmem
