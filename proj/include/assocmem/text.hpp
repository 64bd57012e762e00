#pragma once
// Small text helpers shared by ids, mock providers and packing.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace assocmem::text {

// 64-bit FNV-1a. Stable across platforms, used for ids and fingerprints.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
// First 12 hex digits of fnv1a64 over the parts joined with '\x1f'.
std::string content_hash(std::initializer_list<std::string_view> parts);

// Whitespace-separated tokens, verbatim.
std::vector<std::string> split_whitespace(std::string_view s);
std::size_t count_words(std::string_view s);

// Lowercased alphanumeric runs; everything else separates.
std::vector<std::string> word_tokens(std::string_view s);
bool is_stopword(std::string_view lowered);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

// snake_case label of 2-5 lowercase alphanumeric words.
bool is_concept_label(std::string_view label);
// Lowercases and maps spaces/hyphens to underscores; does not validate.
std::string normalize_concept_label(std::string_view raw);

}  // namespace assocmem::text
