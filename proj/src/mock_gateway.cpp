#include "assocmem/mock_gateway.hpp"

#include "assocmem/prompts.hpp"
#include "assocmem/text.hpp"
#include "assocmem/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace assocmem {

using nlohmann::json;

std::vector<float> embed_one(Gateway& gateway, const std::string& text) {
    auto out = gateway.embed({text});
    if (out.size() != 1) throw Error(Errc::EmptyResponse, "embedding provider returned no vector");
    return std::move(out.front());
}

namespace {

std::vector<std::string> lines_of(std::string_view body) {
    std::vector<std::string> out;
    std::istringstream in{std::string(body)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

// Most frequent non-stopword tokens; ties keep first occurrence.
std::vector<std::string> top_tokens(const std::vector<std::string>& tokens, std::size_t n,
                                    const std::vector<std::string>& exclude = {}) {
    std::vector<std::pair<std::string, int>> counts;
    for (const auto& t : tokens) {
        if (text::is_stopword(t) || std::find(exclude.begin(), exclude.end(), t) != exclude.end()) continue;
        auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& p) { return p.first == t; });
        if (it == counts.end()) {
            counts.emplace_back(t, 1);
        } else {
            ++it->second;
        }
    }
    std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < counts.size() && i < n; ++i) out.push_back(counts[i].first);
    return out;
}

struct EpisodeLine {
    std::string id;
    std::string text;
};

EpisodeLine parse_episode_line(const std::string& line) {
    EpisodeLine ep;
    std::string rest;
    if (!prompt_lines::split_id_suffix(line, rest, ep.id)) return ep;
    // "[ts] speaker: text"
    std::string_view v = rest;
    if (!v.empty() && v.front() == '[') {
        const auto close = v.find("] ");
        if (close != std::string_view::npos) v.remove_prefix(close + 2);
    }
    const auto colon = v.find(": ");
    if (colon != std::string_view::npos) v.remove_prefix(colon + 2);
    ep.text = std::string(v);
    return ep;
}

std::string round2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", std::round(x * 100.0) / 100.0);
    return buf;
}

std::string between(std::string_view s, std::string_view open, std::string_view close, bool close_from_end) {
    const auto a = s.find(open);
    if (a == std::string_view::npos) return {};
    const auto begin = a + open.size();
    const auto b = close_from_end ? s.rfind(close) : s.find(close, begin);
    if (b == std::string_view::npos || b < begin) return std::string(s.substr(begin));
    return std::string(s.substr(begin, b - begin));
}

}  // namespace

MockGateway::MockGateway(MockOptions options) : options_(options) {
    if (options_.dim == 0) throw Error(Errc::InvalidArgument, "mock embedding dimension must be positive");
}

std::string MockGateway::chat(const ChatRequest& request) {
    ++chat_calls_;
    if (override_) {
        if (auto r = override_(request.prompt)) return *r;
    }
    if (looks_like(PromptName::FactConceptExtraction, request.prompt)) return reply_extraction(request.prompt);
    if (looks_like(PromptName::ReflectionGeneration, request.prompt)) return reply_reflection(request.prompt);
    if (looks_like(PromptName::AnswerFromMemory, request.prompt)) return reply_answer(request.prompt);
    if (looks_like(PromptName::Judge, request.prompt)) return reply_judge(request.prompt);
    throw Error(Errc::EmptyResponse, "mock provider does not recognise the prompt");
}

std::vector<std::vector<float>> MockGateway::embed(const std::vector<std::string>& texts) {
    ++embed_calls_;
    if (texts.empty()) throw Error(Errc::InvalidArgument, "embed: empty input list");
    std::vector<std::vector<float>> out;
    out.reserve(texts.size());
    for (const auto& t : texts) {
        if (t.empty()) throw Error(Errc::InvalidArgument, "embed: empty text");
        out.push_back(embed_text(t));
    }
    return out;
}

std::vector<float> MockGateway::embed_text(std::string_view s) const {
    constexpr int kHashesPerToken = 4;
    std::vector<double> acc(options_.dim, 0.0);
    auto tokens = text::word_tokens(s);
    if (tokens.empty()) tokens.emplace_back(s);
    for (const auto& tok : tokens) {
        for (int r = 0; r < kHashesPerToken; ++r) {
            const std::uint64_t h = text::fnv1a64(tok, options_.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(r) + 1);
            const std::size_t bucket = static_cast<std::size_t>(h % options_.dim);
            acc[bucket] += ((h >> 40) & 1U) ? 1.0 : -1.0;
        }
    }
    double norm = 0.0;
    for (double x : acc) norm += x * x;
    if (norm == 0.0) {
        acc[static_cast<std::size_t>(text::fnv1a64(s) % options_.dim)] = 1.0;
        norm = 1.0;
    }
    norm = std::sqrt(norm);
    std::vector<float> v(options_.dim);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(acc[i] / norm);
    return v;
}

std::string MockGateway::reply_extraction(const std::string& prompt) {
    const auto new_eps = prompt_lines::section(prompt, "New conversation episodes (extract from these)");
    std::vector<std::string> existing;
    for (const auto& line : lines_of(prompt_lines::section(prompt, "Existing concepts (reuse when applicable, do NOT duplicate)"))) {
        if (text::starts_with(line, "- ")) existing.push_back(line.substr(2));
    }

    json facts = json::array();
    std::vector<std::pair<std::string, std::vector<std::string>>> concepts;
    for (const auto& line : lines_of(new_eps)) {
        const auto ep = parse_episode_line(line);
        if (ep.id.empty()) continue;

        const auto words = text::split_whitespace(ep.text);
        std::string fact_text = "FACT:";
        for (std::size_t i = 0; i < words.size() && i < 8; ++i) fact_text += " " + words[i];

        const auto tokens = text::word_tokens(ep.text);
        std::string label;
        for (const auto& c : existing) {
            bool all = true;
            for (const auto& w : text::word_tokens(c)) {
                if (std::find(tokens.begin(), tokens.end(), w) == tokens.end()) {
                    all = false;
                    break;
                }
            }
            if (all && text::is_concept_label(c)) {
                label = c;
                break;
            }
        }
        if (label.empty()) {
            const auto top = top_tokens(tokens, 2);
            if (top.size() == 2) label = top[0] + "_" + top[1];
        }

        json f{{"fact_text", fact_text}, {"source_episode_ids", {ep.id}}, {"concepts", json::array()}};
        if (!label.empty()) {
            f["concepts"].push_back(label);
            auto it = std::find_if(concepts.begin(), concepts.end(), [&](const auto& p) { return p.first == label; });
            if (it == concepts.end()) {
                concepts.push_back({label, {ep.id}});
            } else {
                it->second.push_back(ep.id);
            }
        }
        facts.push_back(std::move(f));
    }
    json out{{"facts", facts}, {"concepts", json::array()}};
    for (const auto& [label, eps] : concepts) out["concepts"].push_back({{"concept_label", label}, {"episode_ids", eps}});
    return out.dump();
}

std::string MockGateway::reply_reflection(const std::string& prompt) {
    std::vector<std::string> ids;
    std::vector<std::string> tokens;
    for (const auto& line : lines_of(prompt_lines::section(prompt, "New facts (generate reflections from these)"))) {
        std::string txt, id;
        if (!prompt_lines::split_id_suffix(line, txt, id)) continue;
        ids.push_back(id);
        for (auto& t : text::word_tokens(txt)) tokens.push_back(std::move(t));
    }
    json out{{"reflections", json::array()}};
    if (ids.size() < 2) return out.dump();

    const auto themes = top_tokens(tokens, 3, {"fact"});
    if (themes.empty()) return out.dump();
    std::string reflection = "REFLECTION: recurring themes";
    for (std::size_t i = 0; i < themes.size(); ++i) reflection += (i ? ", " : ": ") + themes[i];

    const auto existing = prompt_lines::section(prompt, "Existing reflections (do NOT duplicate these)");
    if (existing.find(reflection + " (id: ") != std::string::npos) return out.dump();

    if (ids.size() > 5) ids.resize(5);
    out["reflections"].push_back({{"reflection_text", reflection}, {"belief", 0.7}, {"source_fact_ids", ids}});
    return out.dump();
}

std::string MockGateway::reply_answer(const std::string& prompt) {
    const std::string memory = text::trim(between(prompt, "## Retrieved memory\n", "\n\n## Instructions", true));
    const auto lines = lines_of(memory);
    bool in_facts = false;
    for (const auto& line : lines) {
        if (line == "Facts:") {
            in_facts = true;
            continue;
        }
        if (!line.empty() && line.back() == ':' && !text::starts_with(line, "- ")) in_facts = false;
        if (in_facts && text::starts_with(line, "- ")) return line.substr(2);
    }
    for (const auto& line : lines) {
        if (text::starts_with(line, "- ")) return line.substr(2);
    }
    return "The memory does not contain this information.";
}

double MockGateway::sentence_coverage(std::string_view reference, std::string_view hypothesis) {
    std::vector<std::string> sentences;
    std::string cur;
    auto flush = [&] {
        auto t = text::trim(cur);
        if (!t.empty()) sentences.push_back(text::to_lower(t));
        cur.clear();
    };
    for (char c : reference) {
        if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    if (sentences.empty()) return 0.0;
    const std::string hyp = text::to_lower(hypothesis);
    std::size_t found = 0;
    for (const auto& s : sentences) {
        if (hyp.find(s) != std::string::npos) ++found;
    }
    return static_cast<double>(found) / static_cast<double>(sentences.size());
}

std::string MockGateway::reply_judge(const std::string& prompt) {
    const std::string reference = between(prompt, "\n\nCorrect Reference Answer: ", "\n\nGenerated Response: ", false);
    const std::string hypothesis = between(prompt, "\n\nGenerated Response: ",
                                           "\n\nEvaluate ONLY the coverage of the reference answer's facts.", true);
    const double coverage = sentence_coverage(reference, hypothesis);
    // Emitted as text so the reply goes through parse_judge like a real one.
    return std::string("{\"reward\": ") + round2(coverage) + ", \"justification\": \"sentence coverage " +
           round2(coverage) + "\"}";
}

}  // namespace assocmem
