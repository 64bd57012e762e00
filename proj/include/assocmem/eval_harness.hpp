#pragma once
// Generate-then-judge evaluation: retrieve and pack memory for each question,
// answer from the pack, score the answer with the judge prompt, and
// aggregate fractional rewards per category and per conversation.

#include "assocmem/gateway.hpp"
#include "assocmem/graph_store.hpp"
#include "assocmem/locomo.hpp"
#include "assocmem/retriever.hpp"
#include "assocmem/vector_index.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace assocmem {

// Gaama: full retrieval with the configured w_ppr. SemanticOnly: the same
// pipeline with w_ppr = 0. FlatRag: similarity over episodes only.
enum class EvalMode { Gaama, SemanticOnly, FlatRag };

std::string_view mode_name(EvalMode mode);  // "gaama", "semantic", "rag"
EvalMode parse_mode(std::string_view s);    // throws InvalidArgument

std::string answer(const std::string& question, const std::string& memory_text, Gateway& gateway);

struct JudgeOutcome {
    std::optional<double> reward;  // empty when both attempts were malformed
    std::string justification;
    bool clamped = false;
    int attempts = 0;
};

// Malformed judge output is retried once.
JudgeOutcome judge(const std::string& question, const std::string& reference, const std::string& hypothesis,
                   Gateway& gateway);

enum class RecordStatus { Ok, JudgeFailed, Error };

struct TraceEntry {
    std::string node_id;
    double score = 0.0;

    bool operator==(const TraceEntry&) const = default;
};

struct EvalRecord {
    std::string key;  // "<conversation id>#<question index within the conversation>"
    QAItem qa;
    std::string mode;
    std::string fingerprint;
    RecordStatus status = RecordStatus::Ok;
    std::string hypothesis;
    std::optional<double> reward;
    std::string justification;
    bool judge_clamped = false;
    std::string error;
    std::vector<TraceEntry> trace;  // packed node ids with final scores
    std::size_t memory_words = 0;
    double retrieve_ms = 0.0;
    double answer_ms = 0.0;
    double judge_ms = 0.0;
};

std::string to_json_line(const EvalRecord& record);
EvalRecord record_from_json_line(const std::string& line);  // throws CorruptFile

struct RewardBucket {
    std::size_t n = 0;
    double sum = 0.0;

    double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
    void add(double reward) {
        ++n;
        sum += reward;
    }
};

struct EvalSummary {
    std::string mode;
    std::string fingerprint;
    std::size_t attempted = 0;
    std::size_t completed = 0;       // judged, reward present
    std::size_t failed = 0;          // gateway or pipeline errors
    std::size_t missing_reward = 0;  // judge output unusable after retry
    std::size_t reused = 0;          // records taken from an existing log
    RewardBucket overall;
    std::map<Category, RewardBucket> per_category;
    std::map<std::string, RewardBucket> per_conversation;
    std::vector<EvalRecord> records;  // question order

    double completion_rate() const {
        return attempted == 0 ? 1.0 : static_cast<double>(completed) / static_cast<double>(attempted);
    }
};

// Aggregates records (in the given order) into a summary.
EvalSummary summarize(const std::vector<EvalRecord>& records, const std::string& mode, const std::string& fingerprint);

// Machine-readable summary; timings are excluded so reruns are byte-identical.
std::string summary_json(const EvalSummary& summary);
EvalSummary summary_from_json(const std::string& text);  // aggregates only, no records
std::string format_summary(const EvalSummary& summary);
// Per-category and per-conversation tables: baseline, candidate, delta in points.
std::string format_delta(const EvalSummary& baseline, const EvalSummary& candidate);

struct EvalTarget {
    const GraphStore* graph = nullptr;
    const VectorIndex* index = nullptr;
};

struct EvalOptions {
    EvalMode mode = EvalMode::Gaama;
    RetrievalConfig retrieval;
    std::size_t jobs = 1;
    std::optional<std::size_t> limit;
    std::filesystem::path results_log;  // empty: no log, no resume
    std::string provider_tag;           // folded into the fingerprint (model names)
    std::ostream* progress = nullptr;
};

// Identifies everything that changes results: mode, retrieval settings, models.
std::string config_fingerprint(const EvalOptions& options);

// Questions whose conversation has no target become Error records.
// Completed records already in the log with the same fingerprint are reused.
EvalSummary run_eval(const std::vector<QAItem>& qa, const std::map<std::string, EvalTarget>& targets,
                     Gateway& gateway, const EvalOptions& options);

// Keys for the questions in dataset order.
std::vector<std::string> question_keys(const std::vector<QAItem>& qa);

}  // namespace assocmem
