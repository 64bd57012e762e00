#pragma once
// Deterministic offline provider.
//
// chat() recognises the four prompt templates and answers from the rendered
// text alone:
//   extraction  one fact per new episode ("FACT: " + its first 8 tokens) and
//               one concept per episode from its two most frequent
//               non-stopword tokens, preferring an existing concept whose
//               words all occur in the episode
//   reflection  one reflection over the new facts when there are at least two
//   answer      echoes the first fact line of the memory (else first item)
//   judge       fraction of reference sentences found verbatim
//               (case-insensitive) in the hypothesis, rounded to 2 places
// embed() hashes the lowercased token multiset into a fixed-size vector and
// unit-normalises it, so shared tokens raise cosine similarity.

#include "assocmem/gateway.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace assocmem {

struct MockOptions {
    std::size_t dim = 256;
    std::uint64_t seed = 0x5eed;
};

class MockGateway : public Gateway {
public:
    // Returning a value replaces the built-in reply for that prompt. Tests use
    // it to force malformed or dangling extraction output.
    using ChatOverride = std::function<std::optional<std::string>(const std::string& prompt)>;

    explicit MockGateway(MockOptions options = {});

    std::string chat(const ChatRequest& request) override;
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    std::string chat_model() const override { return "mock-chat"; }
    std::string embedding_model() const override { return "mock-embedding"; }

    void set_chat_override(ChatOverride fn) { override_ = std::move(fn); }

    std::size_t chat_calls() const { return chat_calls_.load(); }
    std::size_t embed_calls() const { return embed_calls_.load(); }
    void reset_counters() {
        chat_calls_ = 0;
        embed_calls_ = 0;
    }

    std::vector<float> embed_text(std::string_view text) const;

    static std::string reply_extraction(const std::string& prompt);
    static std::string reply_reflection(const std::string& prompt);
    static std::string reply_answer(const std::string& prompt);
    static std::string reply_judge(const std::string& prompt);
    // Sentence-containment coverage used by reply_judge, unrounded.
    static double sentence_coverage(std::string_view reference, std::string_view hypothesis);

private:
    MockOptions options_;
    ChatOverride override_;
    std::atomic<std::size_t> chat_calls_{0};
    std::atomic<std::size_t> embed_calls_{0};
};

}  // namespace assocmem
