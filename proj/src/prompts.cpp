#include "assocmem/prompts.hpp"

#include "assocmem/types.hpp"

#include <array>
#include <set>

namespace assocmem {

namespace {

constexpr std::string_view kFactConceptExtraction = R"PROMPT(# Extract facts and concepts from conversation episodes

You are a knowledge extraction system. Given a set of new
conversation episodes and context, extract NEW factual claims
AND topic concepts.

## Part 1: Facts

### Rules
1. Each fact must be a **single, specific, atomic claim**
   (e.g., "User's birthday is March 15, 1990").
2. **Do NOT duplicate existing facts.** If an existing fact
   already captures the information, skip it.
3. **Resolve relative dates to absolute dates** using the
   conversation timestamp. For example, if the conversation
   date is "2023-06-15" and the user says "last week",
   resolve to approximately "2023-06-08".
4. Derive general knowledge from episodes by doing multi-step
   reasoning where possible.
5. Do not extract events or interactions as facts. Only extract
   general knowledge, preferences, attributes, or relationships
   that can be applied broadly.
6. Each fact should stand alone without requiring the original
   conversation for context.
7. For each fact, list which concept(s) it relates to (from
   the concepts you extract below).

## Part 2: Concepts

### Rules
1. Concepts are short topic labels (2-5 words, snake_case)
   representing activities, events, topics, or themes.
2. **Good concepts**: camping_trip, adoption_process,
   beach_outing, charity_run, art_expression,
   career_transition, family_vacation, marathon_training
3. **Do NOT use**: Person names, generic words (e.g., NOT
   family, life, experience, conversation, sharing),
   adjectives (e.g., NOT beautiful, amazing), dates.
4. **Reuse existing concepts** when applicable. Only create
   new concepts when no existing one fits.
5. Each new episode should have 1-3 concepts.
6. Each concept must be linked to the episode IDs it
   appears in.

## Output format (JSON only, no markdown fences)

Return a single JSON object:

{"facts": [
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
  ]}

### Facts fields
- **fact_text** (required): The complete fact statement.
- **belief** (0.0-1.0): Confidence. 1.0 = explicit. 0.8 = inferred.
- **source_episode_ids** (required): Episode node_ids that
  support this fact.
- **concepts** (required): Concept labels this fact relates to.

### Concepts fields
- **concept_label** (required): Short snake_case topic label.
- **episode_ids** (required): Episode node_ids for this concept.

If no new facts, return {"facts": [], "concepts": []}.
Do **not** add markdown code fences around the JSON.

---

## Existing facts (do NOT duplicate these)
{{existing_facts}}

## Existing concepts (reuse when applicable, do NOT duplicate)
{{existing_concepts}}

## Related older episodes (for context)
{{related_episodes}}

## New conversation episodes (extract from these)
{{new_episodes}})PROMPT";

constexpr std::string_view kReflectionGeneration = R"PROMPT(# Generate new reflections from facts

You are an insight generation system. Given a set of new facts
and context (related existing facts and existing reflections),
generate NEW reflections or insights.

## What is a reflection?

A reflection is a generalized insight, preference pattern,
lesson learned, or higher-order observation that emerges from
combining multiple facts. Examples:
- "User tends to prefer lightweight tools over full-featured
  IDEs"
- "User's debugging approach always starts with log analysis
  before code inspection"
- "User values documentation and testing in their development
  workflow"

## Rules

1. Each reflection should synthesize information from multiple
   facts when possible.
2. **Do NOT duplicate existing reflections.** If an existing
   reflection already captures the insight, skip it.
3. Reflections should be actionable or informative -- they
   should help in future interactions.
4. Each reflection should stand alone without requiring the
   original facts for context.
5. Only generate reflections when there is genuine insight to
   be drawn. It is perfectly fine to return zero reflections.

## Output format (JSON only, no markdown fences)

Return a single JSON object:

{"reflections": [
    {"reflection_text": "User consistently prefers minimalist
      tools and configurations across all development
      environments",
     "belief": 0.8,
     "source_fact_ids": ["fact-abc123", "fact-def456"]}
  ]}

- **reflection_text** (required): The insight in natural language.
- **belief** (0.0-1.0): Confidence. Higher when supported by
  multiple consistent facts.
- **source_fact_ids** (required): Fact node_ids this reflection
  is derived from.

If no new reflections, return {"reflections": []}.
Do **not** add markdown code fences around the JSON.

---

## Existing reflections (do NOT duplicate these)
{{existing_reflections}}

## Related existing facts (for context)
{{related_facts}}

## New facts (generate reflections from these)
{{new_facts}})PROMPT";

constexpr std::string_view kAnswerFromMemory = R"PROMPT(# Answer from memory

You are a precise answer assistant. Given a **query** and the
**retrieved memory** below, answer the query using the provided
memory.

## Query

{{query}}

## Retrieved memory

{{memory_text}}

## Instructions

- Answer the query in one or two short paragraphs. Be direct
  and specific.
- Extract concrete answers from the memory even if the
  information is scattered across multiple items. Synthesize
  and combine partial evidence.
- When counting occurrences (e.g., "how many times"),
  carefully scan ALL memory items and count each distinct
  instance.
- When listing items (e.g., "which cities"), exhaustively
  list EVERY item mentioned across all memory entries.
- Prefer giving a direct answer over saying "the memory does
  not specify." If the memory contains relevant clues, use
  them to form a best-effort answer.
- Do not repeat the query. Do not cite section headers; use
  the memory content naturally.)PROMPT";

constexpr std::string_view kJudge = R"PROMPT(You are an evaluator. Given a question, a correct reference
answer, and a generated response (hypothesis), determine what
fraction of the reference answer is present in the generated
response.

IMPORTANT: Only check whether the key facts from the reference
answer appear in the generated response. Do NOT penalize the
response for containing extra information, additional details,
or tangential content beyond the reference answer. The ONLY
thing that matters is whether the reference answer's key facts
are covered.

Scoring guidelines:
- 1.0: All key facts and details from the reference answer are
  present in the generated response (even if the response also
  contains extra information).
- 0.0: None of the key facts from the reference answer appear
  in the generated response.
- Between 0.0 and 1.0: Some key facts from the reference
  answer are present. Score = (number of reference answer key
  facts found) / (total key facts in reference answer). For
  example, if the answer has 3 key facts and 2 are found in
  the response, score = 0.67.

You MUST respond in the following JSON format (no markdown,
no extra text):
{"reward": <float between 0.0 and 1.0>, "justification":
 "<brief explanation of which reference answer facts are
  present and which are missing>"}

Question: {question}

Correct Reference Answer: {answer}

Generated Response: {hypothesis}

Evaluate ONLY the coverage of the reference answer's facts.
Do NOT reduce the score for extra information. Respond with
the JSON only.)PROMPT";


constexpr std::array<std::string_view, 4> kExtractionSlots{"{{existing_facts}}", "{{existing_concepts}}",
                                                          "{{related_episodes}}", "{{new_episodes}}"};
constexpr std::array<std::string_view, 3> kReflectionSlots{"{{existing_reflections}}", "{{related_facts}}",
                                                          "{{new_facts}}"};
constexpr std::array<std::string_view, 2> kAnswerSlots{"{{query}}", "{{memory_text}}"};
constexpr std::array<std::string_view, 3> kJudgeSlots{"{question}", "{answer}", "{hypothesis}"};

std::string_view bare(std::string_view token) {
    while (!token.empty() && token.front() == '{') token.remove_prefix(1);
    while (!token.empty() && token.back() == '}') token.remove_suffix(1);
    return token;
}

}  // namespace

std::string_view prompt_name(PromptName name) {
    switch (name) {
        case PromptName::FactConceptExtraction: return "fact_concept_extraction";
        case PromptName::ReflectionGeneration: return "reflection_generation";
        case PromptName::AnswerFromMemory: return "answer_from_memory";
        case PromptName::Judge: return "judge";
    }
    return "?";
}

std::string_view template_body(PromptName name) {
    switch (name) {
        case PromptName::FactConceptExtraction: return kFactConceptExtraction;
        case PromptName::ReflectionGeneration: return kReflectionGeneration;
        case PromptName::AnswerFromMemory: return kAnswerFromMemory;
        case PromptName::Judge: return kJudge;
    }
    return {};
}

std::span<const std::string_view> placeholders(PromptName name) {
    switch (name) {
        case PromptName::FactConceptExtraction: return kExtractionSlots;
        case PromptName::ReflectionGeneration: return kReflectionSlots;
        case PromptName::AnswerFromMemory: return kAnswerSlots;
        case PromptName::Judge: return kJudgeSlots;
    }
    return {};
}

std::string render_prompt(PromptName name, const std::map<std::string, std::string>& values) {
    const auto slots = placeholders(name);
    std::set<std::string, std::less<>> known;
    for (auto s : slots) {
        const auto key = std::string(bare(s));
        known.insert(key);
        if (!values.contains(key)) {
            throw Error(Errc::InvalidArgument, std::string(prompt_name(name)) + ": missing value for " + key);
        }
    }
    for (const auto& [k, v] : values) {
        if (!known.contains(k)) {
            throw Error(Errc::InvalidArgument, std::string(prompt_name(name)) + ": unknown placeholder " + k);
        }
    }

    const std::string_view body = template_body(name);
    std::string out;
    out.reserve(body.size() + 256);
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t best = std::string_view::npos;
        std::string_view best_slot;
        for (auto s : slots) {
            const auto at = body.find(s, pos);
            if (at < best) {
                best = at;
                best_slot = s;
            }
        }
        if (best == std::string_view::npos) {
            out.append(body.substr(pos));
            break;
        }
        out.append(body.substr(pos, best - pos));
        out.append(values.find(std::string(bare(best_slot)))->second);
        pos = best + best_slot.size();
    }
    return out;
}

bool looks_like(PromptName name, std::string_view rendered) {
    const std::string_view body = template_body(name);
    const auto first_line = body.substr(0, body.find('\n'));
    return rendered.substr(0, first_line.size()) == first_line;
}

}  // namespace assocmem

namespace assocmem::prompt_lines {

namespace {
std::string one_line(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}
}  // namespace

std::string episode(std::string_view timestamp, std::string_view speaker, std::string_view text,
                    std::string_view id) {
    std::string out = "[";
    out.append(timestamp).append("] ").append(one_line(speaker)).append(": ").append(one_line(text));
    out.append(" (id: ").append(id).append(")");
    return out;
}

std::string item(std::string_view text, std::string_view id) {
    std::string out = "- ";
    out.append(one_line(text)).append(" (id: ").append(id).append(")");
    return out;
}

std::string label(std::string_view l) { return "- " + one_line(l); }

std::string join(const std::vector<std::string>& lines) {
    if (lines.empty()) return std::string(kNone);
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out.push_back('\n');
        out += lines[i];
    }
    return out;
}

bool split_id_suffix(std::string_view line, std::string& text, std::string& id) {
    constexpr std::string_view kTag = " (id: ";
    const auto at = line.rfind(kTag);
    if (at == std::string_view::npos || line.empty() || line.back() != ')') return false;
    text = std::string(line.substr(0, at));
    id = std::string(line.substr(at + kTag.size(), line.size() - at - kTag.size() - 1));
    return !id.empty();
}

std::string section(std::string_view rendered, std::string_view heading) {
    const std::string marker = "## " + std::string(heading) + "\n";
    const auto at = rendered.find(marker);
    if (at == std::string_view::npos) return {};
    const auto begin = at + marker.size();
    const auto end = rendered.find("\n\n## ", begin);
    std::string_view body = rendered.substr(begin, end == std::string_view::npos ? std::string_view::npos : end - begin);
    while (!body.empty() && body.back() == '\n') body.remove_suffix(1);
    return std::string(body);
}

}  // namespace assocmem::prompt_lines
