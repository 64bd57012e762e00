#include "assocmem/cli.hpp"

#include "assocmem/config.hpp"
#include "assocmem/eval_harness.hpp"
#include "assocmem/graph_store.hpp"
#include "assocmem/locomo.hpp"
#include "assocmem/memory_builder.hpp"
#include "assocmem/packer.hpp"
#include "assocmem/retriever.hpp"
#include "assocmem/text.hpp"
#include "assocmem/vector_index.hpp"

#include <CLI11.hpp>
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace assocmem {

namespace fs = std::filesystem;

namespace {

constexpr const char* kGraphFile = "graph.jsonl";
constexpr const char* kReportFile = "report.json";

struct Overrides {
    std::optional<std::string> config_path;
    bool verbose = false;
    bool http_trace = false;
    bool mock = false;
    std::optional<double> w_ppr, w_sim, alpha;
    std::optional<std::size_t> k_seeds, depth, hub_threshold, max_facts, max_reflections, max_episodes, max_words;
    std::optional<std::size_t> chunk_size, context_k, jobs, limit;
    std::optional<double> min_completion;
    std::optional<std::string> graph_dir, results_dir;
    std::vector<std::string> conversations;
};

void add_retrieval_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--w-ppr", o.w_ppr, "Weight of the normalised PPR score (retrieval.w_ppr)");
    cmd->add_option("--w-sim", o.w_sim, "Weight of the normalised similarity (retrieval.w_sim)");
    cmd->add_option("--alpha", o.alpha, "PPR damping factor (retrieval.alpha)");
    cmd->add_option("--k-seeds", o.k_seeds, "Number of PPR seeds (retrieval.k_seeds)");
    cmd->add_option("--depth", o.depth, "Expansion depth in hops (retrieval.depth)");
    cmd->add_option("--hub-threshold", o.hub_threshold, "Hub dampening threshold (retrieval.hub_threshold)");
    cmd->add_option("--max-facts", o.max_facts, "Fact bucket cap (retrieval.max_facts)");
    cmd->add_option("--max-reflections", o.max_reflections, "Reflection bucket cap (retrieval.max_reflections)");
    cmd->add_option("--max-episodes", o.max_episodes, "Episode bucket cap (retrieval.max_episodes)");
    cmd->add_option("--max-words", o.max_words, "Memory word budget (retrieval.max_memory_words)");
}

void add_mock_flag(CLI::App* cmd, Overrides& o) {
    cmd->add_flag("--mock", o.mock, "Use the deterministic offline gateway (provider.kind = \"mock\")");
}

AppConfig effective_config(const Overrides& o) {
    AppConfig c = o.config_path ? load_config(*o.config_path) : AppConfig{};
    if (o.mock) c.provider.kind = "mock";
    auto& r = c.retrieval;
    if (o.w_ppr) r.w_ppr = *o.w_ppr;
    if (o.w_sim) r.w_sim = *o.w_sim;
    if (o.alpha) r.alpha = *o.alpha;
    if (o.k_seeds) r.k_seeds = *o.k_seeds;
    if (o.depth) r.depth = *o.depth;
    if (o.hub_threshold) r.hub_threshold = *o.hub_threshold;
    if (o.max_facts) r.max_facts = *o.max_facts;
    if (o.max_reflections) r.max_reflections = *o.max_reflections;
    if (o.max_episodes) r.max_episodes = *o.max_episodes;
    if (o.max_words) r.max_memory_words = *o.max_words;
    if (o.chunk_size) c.builder.chunk_size = *o.chunk_size;
    if (o.context_k) c.builder.context_k = *o.context_k;
    if (o.jobs) c.eval.jobs = *o.jobs;
    if (o.limit) c.eval.limit = *o.limit;
    if (o.min_completion) c.eval.min_completion = *o.min_completion;
    if (!o.conversations.empty()) c.eval.conversations = o.conversations;
    if (o.graph_dir) c.paths.graph_dir = *o.graph_dir;
    if (o.results_dir) c.paths.results_dir = *o.results_dir;
    // Round trip through the parser so overrides get the same validation as the file.
    return config_from_json(config_to_json(c));
}

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case Errc::EmptyGraph: return kExitEmptyGraph;
        case Errc::IoFailure:
        case Errc::CorruptFile:
        case Errc::ParseFailure:
        case Errc::UnknownCategoryCode:
        case Errc::ConfigError:
        case Errc::InvalidArgument: return kExitInput;
        default: return kExitRuntime;
    }
}

std::string safe_dir_name(const std::string& id) {
    std::string out;
    for (char ch : id) {
        const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
        out += ok ? ch : '_';
    }
    return out.empty() || out == "." || out == ".." ? "_" + out : out;
}

fs::path graph_file_for(const fs::path& p) {
    if (fs::is_directory(p)) return p / kGraphFile;
    return p;
}

GraphStore load_graph_or_empty_error(const fs::path& input) {
    const fs::path file = graph_file_for(input);
    if (!fs::exists(file)) throw Error(Errc::EmptyGraph, file.string() + ": no graph found (run ingest first)");
    return GraphStore::load(file);
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string lpad(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

std::vector<const Conversation*> select_conversations(const Dataset& data, const std::vector<std::string>& wanted) {
    std::vector<const Conversation*> out;
    if (wanted.empty()) {
        for (const auto& c : data.conversations) out.push_back(&c);
        return out;
    }
    for (const auto& id : wanted) {
        const auto* c = data.find(id);
        if (c == nullptr) throw Error(Errc::InvalidArgument, "conversation '" + id + "' not in the dataset");
        out.push_back(c);
    }
    return out;
}

void print_report_table(std::ostream& out, const std::vector<std::pair<std::string, BuildReport>>& rows) {
    out << pad("conversation", 16) << lpad("episodes", 10) << lpad("facts", 8) << lpad("concepts", 10)
        << lpad("reused", 8) << lpad("reflect", 9) << lpad("chat", 7) << lpad("embed", 7) << lpad("warn", 6) << "\n";
    BuildReport total;
    auto line = [&](const std::string& name, const BuildReport& r) {
        out << pad(name, 16) << lpad(std::to_string(r.episodes_created), 10) << lpad(std::to_string(r.facts_created), 8)
            << lpad(std::to_string(r.concepts_created), 10) << lpad(std::to_string(r.concepts_reused), 8)
            << lpad(std::to_string(r.reflections_created), 9) << lpad(std::to_string(r.llm_calls), 7)
            << lpad(std::to_string(r.embed_calls), 7) << lpad(std::to_string(r.warnings.size()), 6) << "\n";
    };
    for (const auto& [name, r] : rows) {
        line(name, r);
        total += r;
    }
    if (rows.size() > 1) line("total", total);
}

std::string report_json(const std::string& conversation_id, const BuildReport& r) {
    const nlohmann::json j = {{"conversation_id", conversation_id},
                              {"episodes_created", r.episodes_created},
                              {"facts_created", r.facts_created},
                              {"concepts_created", r.concepts_created},
                              {"concepts_reused", r.concepts_reused},
                              {"reflections_created", r.reflections_created},
                              {"llm_calls", r.llm_calls},
                              {"embed_calls", r.embed_calls},
                              {"warnings", r.warnings}};
    return j.dump(2) + "\n";
}

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, path.string() + ": cannot write");
    out << body;
}

std::optional<std::string> read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void print_counts(std::ostream& out, const Dataset& data) {
    const auto counts = data.category_counts();
    std::size_t turns = 0, sessions = 0;
    for (const auto& c : data.conversations) {
        sessions += c.sessions.size();
        for (const auto& s : c.sessions) turns += s.turns.size();
    }
    out << "conversations " << data.conversations.size() << "  sessions " << sessions << "  turns " << turns
        << "  questions " << data.qa.size() << "  skipped adversarial " << data.skipped_adversarial << "\n";
    for (auto c : kAllCategories) {
        out << "  cat" << category_code(c) << " " << pad(std::string(category_name(c)), 12) << lpad(std::to_string(counts.at(c)), 6)
            << "\n";
    }
}

// ---- commands ------------------------------------------------------------

struct IngestArgs {
    std::string input;
    bool force = false;
};

int cmd_ingest(const IngestArgs& a, const AppConfig& config, std::ostream* trace, std::ostream& out, std::ostream& err) {
    const Dataset data = load_dataset(a.input);
    const auto convs = select_conversations(data, config.eval.conversations);
    const fs::path root = config.paths.graph_dir;
    for (const auto* c : convs) {
        const fs::path dir = root / safe_dir_name(c->conversation_id);
        if (fs::exists(dir / kGraphFile) && !a.force) {
            err << "error: " << (dir / kGraphFile).string() << " already exists (use --force to rebuild)\n";
            return kExitInput;
        }
    }
    auto gateway = make_gateway(config, trace);

    std::vector<std::pair<std::string, BuildReport>> rows(convs.size());
    std::vector<std::string> failures(convs.size());
    std::atomic<std::size_t> next{0};
    std::mutex io;
    auto worker = [&] {
        for (std::size_t i = next++; i < convs.size(); i = next++) {
            const auto* c = convs[i];
            rows[i].first = c->conversation_id;
            try {
                GraphStore graph;
                VectorIndex index;
                BuildReport report = ingest_conversation(graph, index, *gateway, c->sessions, config.builder);
                const fs::path dir = root / safe_dir_name(c->conversation_id);
                fs::create_directories(dir);
                const fs::path tmp = dir / (std::string(kGraphFile) + ".tmp");
                graph.persist(tmp);
                fs::rename(tmp, dir / kGraphFile);
                write_text(dir / kReportFile, report_json(c->conversation_id, report));
                rows[i].second = std::move(report);
            } catch (const std::exception& e) {
                failures[i] = e.what();
                std::lock_guard lock(io);
                err << "error: " << c->conversation_id << ": " << e.what() << "\n";
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(config.eval.jobs, 1, std::max<std::size_t>(1, convs.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
        worker();
    }
    print_report_table(out, rows);
    for (const auto& [id, r] : rows) {
        for (const auto& w : r.warnings) err << "warning: " << id << ": " << w << "\n";
    }
    const bool any_failed = std::any_of(failures.begin(), failures.end(), [](const auto& f) { return !f.empty(); });
    return any_failed ? kExitRuntime : kExitOk;
}

struct QueryArgs {
    std::string graph;
    std::string question;
    bool show_memory = false;
    bool trace = false;
};

int cmd_query(const QueryArgs& a, const AppConfig& config, std::ostream* trace, std::ostream& out) {
    const GraphStore graph = load_graph_or_empty_error(a.graph);
    if (graph.empty()) throw Error(Errc::EmptyGraph, graph_file_for(a.graph).string() + ": graph has no nodes");
    const VectorIndex index = VectorIndex::from_graph(graph);
    auto gateway = make_gateway(config, trace);
    const RetrievalResult result = retrieve(graph, index, a.question, *gateway, config.retrieval);
    const MemoryPack packed = pack(result.candidates, graph, PackLimits::from(config.retrieval));
    if (a.trace) {
        out << "candidates " << result.candidates.size() << "  pool " << result.pool.size() << "  subgraph "
            << result.subgraph_nodes << " nodes / " << result.subgraph_edges << " edges  ppr iterations "
            << result.ppr_iterations << (result.ppr_converged ? "" : " (not converged)") << "\n";
        out << format_trace(result.candidates) << "\n";
    }
    if (a.show_memory) {
        out << "--- memory (" << packed.word_count << " words) ---\n" << packed.memory_text << "\n--- end memory ---\n";
    }
    out << answer(a.question, packed.memory_text, *gateway) << "\n";
    return kExitOk;
}

struct EvalArgs {
    std::string dataset;
    std::string mode = "gaama";
    std::optional<std::string> manifest;
};

int cmd_eval(const EvalArgs& a, const AppConfig& config, std::ostream* trace, bool verbose, std::ostream& out,
             std::ostream& err) {
    const EvalMode mode = parse_mode(a.mode);
    const Dataset data = load_dataset(a.dataset);
    if (a.manifest) validate_counts(data, load_manifest(*a.manifest));
    const auto convs = select_conversations(data, config.eval.conversations);
    std::set<std::string> wanted;
    for (const auto* c : convs) wanted.insert(c->conversation_id);
    std::vector<QAItem> qa;
    for (const auto& q : data.qa) {
        if (wanted.contains(q.conversation_id)) qa.push_back(q);
    }

    auto gateway = make_gateway(config, trace);
    std::map<std::string, GraphStore> graphs;
    std::map<std::string, VectorIndex> indices;
    std::vector<std::string> missing;
    for (const auto* c : convs) {
        const fs::path file = fs::path(config.paths.graph_dir) / safe_dir_name(c->conversation_id) / kGraphFile;
        if (fs::exists(file)) {
            graphs.emplace(c->conversation_id, GraphStore::load(file));
        } else if (mode == EvalMode::FlatRag) {
            // Raw turns only; no extraction needed for the flat baseline.
            GraphStore g;
            VectorIndex idx;
            ingest_episodes_only(g, idx, *gateway, c->sessions);
            graphs.emplace(c->conversation_id, std::move(g));
        } else {
            missing.push_back(c->conversation_id);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw Error(Errc::IoFailure, "no graph in " + config.paths.graph_dir + " for: " + list + " (run ingest first)");
    }
    std::map<std::string, EvalTarget> targets;
    for (const auto& [id, g] : graphs) {
        const auto& idx = indices.emplace(id, VectorIndex::from_graph(g)).first->second;
        targets[id] = EvalTarget{&g, &idx};
    }

    const fs::path results = config.paths.results_dir;
    fs::create_directories(results);
    EvalOptions options;
    options.mode = mode;
    options.retrieval = config.retrieval;
    options.jobs = config.eval.jobs;
    if (config.eval.limit > 0) options.limit = config.eval.limit;
    options.results_log = results / (std::string(mode_name(mode)) + ".jsonl");
    options.provider_tag = provider_tag(config.provider);
    options.progress = verbose ? &err : nullptr;

    const EvalSummary summary = run_eval(qa, targets, *gateway, options);
    const fs::path summary_path = results / ("summary_" + std::string(mode_name(mode)) + ".json");
    write_text(summary_path, summary_json(summary));

    out << format_summary(summary);
    if (summary.reused > 0) out << "reused " << summary.reused << " records from " << options.results_log.string() << "\n";
    for (auto other : {EvalMode::SemanticOnly, EvalMode::Gaama, EvalMode::FlatRag}) {
        if (other == mode) continue;
        const auto text = read_text(results / ("summary_" + std::string(mode_name(other)) + ".json"));
        if (!text) continue;
        out << "\n" << format_delta(summary_from_json(*text), summary);
    }
    for (const auto& r : summary.records) {
        if (r.status == RecordStatus::Error) err << "failed: " << r.key << ": " << r.error << "\n";
        if (r.status == RecordStatus::JudgeFailed) err << "warning: " << r.key << ": judge output unusable, excluded\n";
    }
    if (summary.completion_rate() < config.eval.min_completion) {
        err << "error: completion " << summary.completed << "/" << summary.attempted << " below minimum "
            << config.eval.min_completion << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_stats(const std::string& input, std::ostream& out) {
    const GraphStore graph = load_graph_or_empty_error(input);
    out << pad("node kind", 14) << lpad("count", 8) << "\n";
    for (auto k : kAllNodeKinds) out << pad(std::string(to_string(k)), 14) << lpad(std::to_string(graph.count(k)), 8) << "\n";
    out << "\n" << pad("edge kind", 20) << lpad("count", 8) << "\n";
    for (auto k : kAllEdgeKinds) out << pad(std::string(to_string(k)), 20) << lpad(std::to_string(graph.count(k)), 8) << "\n";

    // Buckets 0, 1, 2-3, 4-7, ...
    std::map<std::size_t, std::size_t> histogram;
    for (const auto& n : graph.nodes()) {
        const std::size_t d = graph.degree(n.id);
        std::size_t lo = 0;
        if (d > 0) {
            lo = 1;
            while (lo * 2 <= d) lo *= 2;
        }
        ++histogram[lo];
    }
    out << "\n" << pad("degree", 14) << lpad("nodes", 8) << "\n";
    for (const auto& [lo, n] : histogram) {
        const std::string label = lo <= 1 ? std::to_string(lo) : std::to_string(lo) + "-" + std::to_string(lo * 2 - 1);
        out << pad(label, 14) << lpad(std::to_string(n), 8) << "\n";
    }

    struct ConceptRow {
        std::string label;
        std::size_t degree, episodes, facts;
    };
    std::vector<ConceptRow> concepts;
    for (const auto& n : graph.nodes()) {
        if (n.kind != NodeKind::Concept) continue;
        ConceptRow row{n.text, graph.degree(n.id), 0, 0};
        for (const auto& nb : graph.neighbors(n.id, Direction::In)) {
            if (nb.kind == EdgeKind::HasConcept) ++row.episodes;
            if (nb.kind == EdgeKind::AboutConcept) ++row.facts;
        }
        concepts.push_back(std::move(row));
    }
    std::sort(concepts.begin(), concepts.end(), [](const ConceptRow& a, const ConceptRow& b) {
        return a.degree != b.degree ? a.degree > b.degree : a.label < b.label;
    });
    if (concepts.size() > 20) concepts.resize(20);
    out << "\n" << pad("top concepts", 36) << lpad("degree", 8) << lpad("HAS_CONCEPT", 13) << lpad("ABOUT_CONCEPT", 15)
        << "\n";
    for (const auto& c : concepts) {
        out << pad(c.label, 36) << lpad(std::to_string(c.degree), 8) << lpad(std::to_string(c.episodes), 13)
            << lpad(std::to_string(c.facts), 15) << "\n";
    }
    return kExitOk;
}

int cmd_dataset(const std::string& input, const std::optional<std::string>& manifest, std::ostream& out) {
    const Dataset data = load_dataset(input);
    print_counts(out, data);
    if (manifest) {
        validate_counts(data, load_manifest(*manifest));
        out << "manifest counts match\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Long-term associative memory for conversational agents", "assocmem"};
    app.require_subcommand(1);
    app.fallthrough();
    Overrides o;
    app.add_option("--config", o.config_path, "JSON configuration file");
    app.add_flag("-v,--verbose", o.verbose, "Print the effective configuration and progress to stderr");
    app.add_flag("--http-trace", o.http_trace, "Log provider requests and responses to stderr (credential redacted)");
    app.add_option("--graph-dir", o.graph_dir, "Root directory of per-conversation graphs (paths.graph_dir)");

    IngestArgs ingest_args;
    auto* ingest = app.add_subcommand("ingest", "Build one memory graph per conversation");
    ingest->add_option("input", ingest_args.input, "LoCoMo or generic conversation JSON")->required();
    ingest->add_flag("--force", ingest_args.force, "Rebuild graphs that already exist");
    ingest->add_option("--conversations", o.conversations, "Only these conversation ids (eval.conversations)")
        ->delimiter(',');
    ingest->add_option("--chunk-size", o.chunk_size, "Episodes per extraction call (builder.chunk_size)");
    ingest->add_option("--context-k", o.context_k, "Related items given as context (builder.context_k)");
    ingest->add_option("-j,--jobs", o.jobs, "Conversations built in parallel (eval.jobs)");
    add_mock_flag(ingest, o);

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "Answer a question from one conversation's graph");
    query->add_option("graph", query_args.graph, "Conversation graph directory or graph file")->required();
    query->add_option("question", query_args.question, "Question text")->required();
    query->add_flag("--show-memory", query_args.show_memory, "Print the packed memory text");
    query->add_flag("--trace", query_args.trace, "Print the scored candidate table");
    add_retrieval_flags(query, o);
    add_mock_flag(query, o);

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "Generate-then-judge evaluation over a QA dataset");
    eval->add_option("dataset", eval_args.dataset, "LoCoMo or generic JSON with QA items")->required();
    eval->add_option("--mode", eval_args.mode, "gaama, semantic or rag")
        ->check(CLI::IsMember({"gaama", "semantic", "rag"}));
    eval->add_option("--conversations", o.conversations, "Only these conversation ids (eval.conversations)")
        ->delimiter(',');
    eval->add_option("--limit", o.limit, "Evaluate only the first N questions (eval.limit)");
    eval->add_option("--min-completion", o.min_completion, "Minimum completed fraction for exit 0 (eval.min_completion)");
    eval->add_option("-j,--jobs", o.jobs, "Questions evaluated in parallel (eval.jobs)");
    eval->add_option("--results-dir", o.results_dir, "Results log and summary directory (paths.results_dir)");
    eval->add_option("--manifest", eval_args.manifest, "Expected dataset counts (JSON)");
    add_retrieval_flags(eval, o);
    add_mock_flag(eval, o);

    std::string stats_input;
    auto* stats = app.add_subcommand("stats", "Node and edge counts, degree histogram, top concepts");
    stats->add_option("graph", stats_input, "Conversation graph directory or graph file")->required();

    std::string dataset_input;
    std::optional<std::string> dataset_manifest;
    auto* dataset = app.add_subcommand("dataset", "Conversation, session and question counts of a dataset file");
    dataset->add_option("input", dataset_input, "LoCoMo or generic conversation JSON")->required();
    dataset->add_option("--manifest", dataset_manifest, "Expected counts (JSON)");

    auto* config_cmd = app.add_subcommand("config", "Show or create configuration files");
    config_cmd->require_subcommand(1);
    auto* config_show = config_cmd->add_subcommand("show", "Print the effective configuration");
    std::string init_path;
    bool init_force = false;
    auto* config_init = config_cmd->add_subcommand("init", "Write the default configuration");
    config_init->add_option("path", init_path, "Destination file")->required();
    config_init->add_flag("--force", init_force, "Overwrite an existing file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        const AppConfig config = effective_config(o);
        if (o.verbose) err << "effective configuration:\n" << config_to_json(config);
        std::ostream* trace = o.http_trace ? &err : nullptr;

        if (ingest->parsed()) return cmd_ingest(ingest_args, config, trace, out, err);
        if (query->parsed()) return cmd_query(query_args, config, trace, out);
        if (eval->parsed()) return cmd_eval(eval_args, config, trace, o.verbose, out, err);
        if (stats->parsed()) return cmd_stats(stats_input, out);
        if (dataset->parsed()) return cmd_dataset(dataset_input, dataset_manifest, out);
        if (config_show->parsed()) {
            out << config_to_json(config);
            return kExitOk;
        }
        if (config_init->parsed()) {
            if (fs::exists(init_path) && !init_force) {
                err << "error: " << init_path << " already exists (use --force to overwrite)\n";
                return kExitInput;
            }
            save_config(AppConfig{}, init_path);
            out << "wrote " << init_path << "\n";
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace assocmem
