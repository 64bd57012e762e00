#include "doctest.h"

#include "assocmem/parsers.hpp"
#include "assocmem/prompts.hpp"
#include "assocmem/types.hpp"

using namespace assocmem;

namespace {

constexpr std::string_view kExtractionSample = R"({"facts": [
    {"fact_text": "Melanie painted a lake sunrise in 2022",
     "belief": 0.95,
     "source_episode_ids": ["ep-abc123", "ep-def456"],
     "concepts": ["artistic_creation", "painting_hobby"]}
  ],
 "concepts": [
    {"concept_label": "artistic_creation",
     "episode_ids": ["ep-abc123", "ep-def456", "ep-ghi789"]},
    {"concept_label": "painting_hobby",
     "episode_ids": ["ep-abc123"]}
  ]})";

constexpr std::string_view kReflectionSample = R"({"reflections": [
    {"reflection_text": "User consistently prefers minimalist tools",
     "belief": 0.8,
     "source_fact_ids": ["fact-abc123", "fact-def456"]}
  ]})";

constexpr std::string_view kScoringGuidelines = R"(Scoring guidelines:
- 1.0: All key facts and details from the reference answer are
  present in the generated response (even if the response also
  contains extra information).
- 0.0: None of the key facts from the reference answer appear
  in the generated response.
- Between 0.0 and 1.0: Some key facts from the reference
  answer are present. Score = (number of reference answer key
  facts found) / (total key facts in reference answer). For
  example, if the answer has 3 key facts and 2 are found in
  the response, score = 0.67.)";

Errc code_of(std::string_view raw, int which) {
    try {
        if (which == 0) parse_extraction(raw);
        if (which == 1) parse_reflections(raw);
        if (which == 2) parse_judge(raw);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::InvalidArgument;
}

std::map<std::string, std::string> filler(PromptName name) {
    std::map<std::string, std::string> values;
    for (auto slot : placeholders(name)) {
        std::string key(slot);
        key.erase(std::remove(key.begin(), key.end(), '{'), key.end());
        key.erase(std::remove(key.begin(), key.end(), '}'), key.end());
        values[key] = "VALUE_" + key + " with {{braces}}";
    }
    return values;
}

}  // namespace

TEST_CASE("every template renders without leftover placeholders") {
    for (auto name : {PromptName::FactConceptExtraction, PromptName::ReflectionGeneration,
                      PromptName::AnswerFromMemory, PromptName::Judge}) {
        const auto values = filler(name);
        const auto out = render_prompt(name, values);
        for (auto slot : placeholders(name)) CHECK(out.find(slot) == std::string::npos);
        for (const auto& [k, v] : values) CHECK(out.find(v) != std::string::npos);
        CHECK(looks_like(name, out));
        // Substituted values are not scanned again.
        CHECK(out.find("{{braces}}") != std::string::npos);
    }
    CHECK(placeholders(PromptName::FactConceptExtraction).size() == 4);
    CHECK(placeholders(PromptName::ReflectionGeneration).size() == 3);
    CHECK(placeholders(PromptName::AnswerFromMemory).size() == 2);
    CHECK(placeholders(PromptName::Judge).size() == 3);
}

TEST_CASE("rendering checks its keys") {
    CHECK_THROWS_AS(render_prompt(PromptName::AnswerFromMemory, {{"query", "q"}}), Error);
    CHECK_THROWS_AS(render_prompt(PromptName::AnswerFromMemory, {{"query", "q"}, {"memory_text", "m"}, {"x", "y"}}),
                    Error);
}

TEST_CASE("judge prompt carries the scoring guidelines verbatim") {
    const auto out = render_prompt(PromptName::Judge, {{"question", "Q"}, {"answer", "A"}, {"hypothesis", "H"}});
    CHECK(out.find(kScoringGuidelines) != std::string::npos);
    CHECK(out.find("Question: Q\n\nCorrect Reference Answer: A\n\nGenerated Response: H") != std::string::npos);
    CHECK(out.find("Do NOT penalize the\nresponse for containing extra information") != std::string::npos);
}

TEST_CASE("prompt line helpers") {
    CHECK(prompt_lines::episode("2023-01-01T00:00:00", "Ann", "a\nb", "ep-1") == "[2023-01-01T00:00:00] Ann: a b (id: ep-1)");
    CHECK(prompt_lines::item("x", "f-1") == "- x (id: f-1)");
    CHECK(prompt_lines::join({}) == "(none)");
    CHECK(prompt_lines::join({"a", "b"}) == "a\nb");
    std::string text, id;
    CHECK(prompt_lines::split_id_suffix("- hello (id: fact-9)", text, id));
    CHECK(text == "- hello");
    CHECK(id == "fact-9");
    CHECK_FALSE(prompt_lines::split_id_suffix("no id", text, id));
    CHECK(prompt_lines::section("## A\nbody a\n\n## B\nbody b", "B") == "body b");
    CHECK(prompt_lines::section("## A\nbody a\n\n## B\nbody b", "A") == "body a");
    CHECK(prompt_lines::section("x", "A").empty());
}

TEST_CASE("extraction parser reads the documented shape") {
    const auto r = parse_extraction(kExtractionSample);
    REQUIRE(r.facts.size() == 1);
    CHECK(r.facts[0].text == "Melanie painted a lake sunrise in 2022");
    CHECK(r.facts[0].belief == doctest::Approx(0.95));
    CHECK(r.facts[0].source_episode_ids == std::vector<std::string>{"ep-abc123", "ep-def456"});
    CHECK(r.facts[0].concepts == std::vector<std::string>{"artistic_creation", "painting_hobby"});
    REQUIRE(r.concepts.size() == 2);
    CHECK(r.concepts[0].label == "artistic_creation");
    CHECK(r.concepts[0].episode_ids.size() == 3);
    CHECK(parse_extraction(R"({"facts": [], "concepts": []})").facts.empty());
}

TEST_CASE("extraction parser tolerance and failures") {
    const std::string fenced = "```json\n" + std::string(kExtractionSample) + "\n```";
    CHECK(parse_extraction(fenced).facts.size() == 1);
    CHECK(parse_extraction("Here you go:\n" + std::string(kExtractionSample) + "\nDone.").facts.size() == 1);
    CHECK(parse_extraction(R"({"facts":[{"fact_text":"x","source_episode_ids":[],"concepts":[]}],"concepts":[]})")
              .facts[0]
              .belief == kDefaultBelief);
    CHECK(parse_extraction(R"({"facts":[{"fact_text":"x","belief":7,"source_episode_ids":[],"concepts":[]}],"concepts":[]})")
              .facts[0]
              .belief == 1.0);
    CHECK(code_of("not json at all", 0) == Errc::MalformedJson);
    CHECK(code_of(R"({"facts":[{"fact_text":"x","concepts":[]}],"concepts":[]})", 0) == Errc::MissingField);
    try {
        parse_extraction(R"({"facts":[{"fact_text":"x","concepts":[]}],"concepts":[]})");
    } catch (const Error& e) {
        CHECK(e.detail().find("facts[0].source_episode_ids") != std::string::npos);
    }
    CHECK(code_of(R"({"facts":[],"concepts":[{"episode_ids":[]}]})", 0) == Errc::MissingField);
}

TEST_CASE("reflection parser") {
    const auto r = parse_reflections(kReflectionSample);
    REQUIRE(r.size() == 1);
    CHECK(r[0].belief == doctest::Approx(0.8));
    CHECK(r[0].source_fact_ids.size() == 2);
    CHECK(parse_reflections(R"({"reflections": []})").empty());
    CHECK(code_of(R"({"reflections":[{"belief":0.5,"source_fact_ids":[]}]})", 1) == Errc::MissingField);
    CHECK(code_of("[]", 1) != Errc::InvalidArgument);
}

TEST_CASE("judge parser") {
    auto v = parse_judge(R"({"reward": 0.67, "justification": "two of three"})");
    CHECK(v.reward == doctest::Approx(0.67));
    CHECK(v.justification == "two of three");
    CHECK_FALSE(v.clamped);
    v = parse_judge(R"({"reward": "0.5", "justification": ""})");
    CHECK(v.reward == doctest::Approx(0.5));
    v = parse_judge(R"({"reward": 1.4})");
    CHECK(v.reward == 1.0);
    CHECK(v.clamped);
    v = parse_judge("```\n{\"reward\": 0}\n```");
    CHECK(v.reward == 0.0);
    CHECK(code_of(R"({"justification": "no reward"})", 2) == Errc::MalformedJson);
    CHECK(code_of("I think it is about 0.5", 2) == Errc::MalformedJson);
    CHECK(code_of(R"({"reward": "high"})", 2) == Errc::MalformedJson);
}

TEST_CASE("fence stripping") {
    CHECK(strip_code_fence("```json\n{}\n```") == "{}");
    CHECK(strip_code_fence("```\n{}\n```") == "{}");
    CHECK(strip_code_fence("{}") == "{}");
}
