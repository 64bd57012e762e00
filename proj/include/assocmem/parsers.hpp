#pragma once
// Parsers for the JSON replies of the extraction, reflection and judge
// prompts. All three are total: they return a value or throw assocmem::Error
// (MalformedJson / MissingField), never anything else.

#include <string>
#include <string_view>
#include <vector>

namespace assocmem {

inline constexpr double kDefaultBelief = 0.8;

struct ExtractedFact {
    std::string text;
    double belief = kDefaultBelief;
    std::vector<std::string> source_episode_ids;
    std::vector<std::string> concepts;
};

struct ExtractedConcept {
    std::string label;
    std::vector<std::string> episode_ids;
};

struct ExtractionResult {
    std::vector<ExtractedFact> facts;
    std::vector<ExtractedConcept> concepts;
};

struct ExtractedReflection {
    std::string text;
    double belief = kDefaultBelief;
    std::vector<std::string> source_fact_ids;
};

struct JudgeVerdict {
    double reward = 0.0;
    std::string justification;
    bool clamped = false;  // the model returned a reward outside [0,1]
};

// Removes a surrounding ```/```json fence if present.
std::string strip_code_fence(std::string_view raw);

ExtractionResult parse_extraction(std::string_view raw);
std::vector<ExtractedReflection> parse_reflections(std::string_view raw);
JudgeVerdict parse_judge(std::string_view raw);

}  // namespace assocmem
