#pragma once
// Benchmark dataset loading. Two input shapes are accepted:
//   * LoCoMo: an array of samples with "conversation" (session_N,
//     session_N_date_time) and "qa" (category codes 1-5; 5 is adversarial
//     and skipped)
//   * generic: {"conversation_id", "sessions": [{"session_id", "timestamp",
//     "turns": [{"speaker", "text"}]}], "qa": [...]}, or an array of those

#include "assocmem/memory_builder.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace assocmem {

enum class Category { MultiHop = 1, Temporal = 2, OpenDomain = 3, SingleHop = 4 };

inline constexpr std::array<Category, 4> kAllCategories = {Category::MultiHop, Category::Temporal,
                                                           Category::OpenDomain, Category::SingleHop};

int category_code(Category c);
std::string_view category_name(Category c);  // "multi-hop", "temporal", ...
// Codes 1-4; throws UnknownCategoryCode otherwise.
Category category_from_code(long long code);
// Accepts codes ("1") and names ("multi-hop", "single_hop", ...).
Category parse_category(std::string_view s);

struct QAItem {
    std::string question;
    std::string reference_answer;
    Category category = Category::SingleHop;
    std::string conversation_id;
    std::vector<std::string> evidence;  // dialogue ids, informational only

    bool operator==(const QAItem&) const = default;
};

struct Conversation {
    std::string conversation_id;
    std::vector<ConversationSession> sessions;  // chronological
};

struct Dataset {
    std::vector<Conversation> conversations;
    std::vector<QAItem> qa;
    std::size_t skipped_adversarial = 0;

    const Conversation* find(const std::string& conversation_id) const;
    std::map<Category, std::size_t> category_counts() const;
};

// Expected counts; absent fields are not checked.
struct DatasetManifest {
    std::optional<std::size_t> conversations;
    std::optional<std::size_t> qa_total;
    std::map<Category, std::size_t> categories;
    std::map<std::string, std::size_t> qa_per_conversation;
};

// "1:56 pm on 8 May, 2023" -> "2023-05-08T13:56:00". ISO input passes
// through after validation. Throws ParseFailure.
std::string to_iso_timestamp(std::string_view raw);

// Throws ParseFailure with a JSON path ("$[2].conversation.session_3_date_time")
// and UnknownCategoryCode.
Dataset parse_dataset(std::string_view json_text, const std::string& origin = "$");
Dataset load_dataset(const std::filesystem::path& path);

DatasetManifest load_manifest(const std::filesystem::path& path);
// Throws ParseFailure listing every mismatch.
void validate_counts(const Dataset& data, const DatasetManifest& manifest);

}  // namespace assocmem
