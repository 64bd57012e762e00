#pragma once
// The four prompt templates used by construction, answering and judging.
//
// Extraction, reflection and answer templates use {{name}} placeholders; the
// judge template uses {name}. Rendering is a single left-to-right pass, so
// substituted values are never re-scanned for placeholders.

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace assocmem {

enum class PromptName { FactConceptExtraction, ReflectionGeneration, AnswerFromMemory, Judge };

std::string_view prompt_name(PromptName name);
std::string_view template_body(PromptName name);

// Placeholder tokens as they appear in the body, e.g. "{{query}}".
std::span<const std::string_view> placeholders(PromptName name);

// Keys are bare names ("query", "question"). Every placeholder of the
// template must be supplied; extra keys are rejected. Throws InvalidArgument.
std::string render_prompt(PromptName name, const std::map<std::string, std::string>& values);

// Best-effort identification of a rendered prompt by its leading line.
bool looks_like(PromptName name, std::string_view rendered);

}  // namespace assocmem

namespace assocmem::prompt_lines {

inline constexpr std::string_view kNone = "(none)";

// "[{timestamp}] {speaker}: {text} (id: {id})" with newlines in text folded
// to spaces so one episode stays on one line.
std::string episode(std::string_view timestamp, std::string_view speaker, std::string_view text,
                    std::string_view id);
// "- {text} (id: {id})"
std::string item(std::string_view text, std::string_view id);
// "- {label}"
std::string label(std::string_view label);
// Lines joined with '\n', or kNone when empty.
std::string join(const std::vector<std::string>& lines);

// Splits "... (id: xyz)" into text and id. Returns false if no id suffix.
bool split_id_suffix(std::string_view line, std::string& text, std::string& id);

// Body of a "## {heading}\n" section up to the next blank-line-delimited
// "## " heading (or end). Empty when the heading is absent.
std::string section(std::string_view rendered, std::string_view heading);

}  // namespace assocmem::prompt_lines
