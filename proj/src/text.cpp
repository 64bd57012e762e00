#include "assocmem/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>

namespace assocmem::text {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return std::string(buf, 16);
}

std::string content_hash(std::initializer_list<std::string_view> parts) {
    std::string joined;
    bool first = true;
    for (auto p : parts) {
        if (!first) joined.push_back('\x1f');
        joined.append(p);
        first = false;
    }
    return hex64(fnv1a64(joined)).substr(0, 12);
}

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::vector<std::string> split_whitespace(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::size_t count_words(std::string_view s) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::vector<std::string> word_tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (is_alnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stopword(std::string_view w) {
    static constexpr std::array<std::string_view, 96> kStop{
        "a",     "about", "after", "again", "all",   "also",  "am",    "an",    "and",   "any",   "are",
        "as",    "at",    "be",    "been",  "but",   "by",    "can",   "could", "did",   "do",    "does",
        "doing", "for",   "from",  "had",   "has",   "have",  "he",    "her",   "here",  "him",   "his",
        "how",   "i",     "if",    "in",    "into",  "is",    "it",    "its",   "just",  "me",    "more",
        "my",    "no",    "not",   "now",   "of",    "on",    "one",   "or",    "our",   "out",   "over",
        "really", "s",    "she",   "so",    "some",  "t",     "than",  "that",  "the",   "their", "them",
        "then",  "there", "these", "they",  "this",  "to",    "too",   "up",    "us",    "very",  "was",
        "we",    "were",  "what",  "when",  "where", "which", "who",   "will",  "with",  "would", "you",
        "your",  "yeah",  "oh",    "hey",   "m",     "re",    "ve",    "ll"};
    return std::find(kStop.begin(), kStop.end(), w) != kStop.end();
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
}

bool is_concept_label(std::string_view label) {
    if (label.empty() || label.front() == '_' || label.back() == '_') return false;
    int words = 1;
    char prev = 0;
    for (char c : label) {
        if (c == '_') {
            if (prev == '_') return false;
            ++words;
        } else if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)))) {
            return false;
        }
        prev = c;
    }
    return words >= 2 && words <= 5;
}

std::string normalize_concept_label(std::string_view raw) {
    std::string out;
    for (char c : trim(raw)) {
        if (c == ' ' || c == '-') {
            c = '_';
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace assocmem::text
