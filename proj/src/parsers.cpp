#include "assocmem/parsers.hpp"

#include "assocmem/text.hpp"
#include "assocmem/types.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>

namespace assocmem {

using nlohmann::json;

namespace {

std::string snippet(std::string_view raw) {
    constexpr std::size_t kMax = 120;
    std::string s(raw.substr(0, kMax));
    if (raw.size() > kMax) s += "...";
    return s;
}

json parse_object(std::string_view raw) {
    const std::string body = strip_code_fence(raw);
    try {
        auto j = json::parse(body);
        if (!j.is_object()) throw Error(Errc::MalformedJson, "expected a JSON object: " + snippet(raw));
        return j;
    } catch (const json::parse_error&) {
    }
    // Models sometimes wrap the object in a sentence; take the outermost braces.
    const auto open = body.find('{');
    const auto close = body.rfind('}');
    if (open != std::string::npos && close != std::string::npos && close > open) {
        try {
            auto j = json::parse(body.substr(open, close - open + 1));
            if (j.is_object()) return j;
        } catch (const json::parse_error&) {
        }
    }
    throw Error(Errc::MalformedJson, snippet(raw));
}

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) throw Error(Errc::MissingField, path + key);
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_string()) throw Error(Errc::MissingField, path + key + " (expected string)");
    return v.get<std::string>();
}

std::vector<std::string> require_string_list(const json& obj, const char* key, const std::string& path) {
    const auto& v = require(obj, key, path);
    if (!v.is_array()) throw Error(Errc::MissingField, path + key + " (expected array)");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) {
            throw Error(Errc::MissingField, path + key + "[" + std::to_string(i) + "] (expected string)");
        }
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

const json& require_array(const json& obj, const char* key) {
    const auto& v = require(obj, key, "");
    if (!v.is_array()) throw Error(Errc::MissingField, std::string(key) + " (expected array)");
    return v;
}

double belief_of(const json& obj) {
    auto it = obj.find("belief");
    if (it == obj.end() || it->is_null()) return kDefaultBelief;
    double b = kDefaultBelief;
    if (it->is_number()) {
        b = it->get<double>();
    } else if (it->is_string()) {
        try {
            b = std::stod(it->get<std::string>());
        } catch (const std::exception&) {
            return kDefaultBelief;
        }
    }
    if (!std::isfinite(b)) return kDefaultBelief;
    return std::clamp(b, 0.0, 1.0);
}

}  // namespace

std::string strip_code_fence(std::string_view raw) {
    std::string s = text::trim(raw);
    if (!text::starts_with(s, "```")) return s;
    const auto first_nl = s.find('\n');
    if (first_nl == std::string::npos) return s;
    s.erase(0, first_nl + 1);
    const auto last = s.rfind("```");
    if (last != std::string::npos) s.erase(last);
    return text::trim(s);
}

ExtractionResult parse_extraction(std::string_view raw) {
    const json root = parse_object(raw);
    ExtractionResult out;
    const auto& facts = require_array(root, "facts");
    for (std::size_t i = 0; i < facts.size(); ++i) {
        const std::string path = "facts[" + std::to_string(i) + "].";
        if (!facts[i].is_object()) throw Error(Errc::MissingField, path + " (expected object)");
        ExtractedFact f;
        f.text = require_string(facts[i], "fact_text", path);
        f.source_episode_ids = require_string_list(facts[i], "source_episode_ids", path);
        f.concepts = require_string_list(facts[i], "concepts", path);
        f.belief = belief_of(facts[i]);
        out.facts.push_back(std::move(f));
    }
    const auto& concepts = require_array(root, "concepts");
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        const std::string path = "concepts[" + std::to_string(i) + "].";
        if (!concepts[i].is_object()) throw Error(Errc::MissingField, path + " (expected object)");
        ExtractedConcept c;
        c.label = require_string(concepts[i], "concept_label", path);
        c.episode_ids = require_string_list(concepts[i], "episode_ids", path);
        out.concepts.push_back(std::move(c));
    }
    return out;
}

std::vector<ExtractedReflection> parse_reflections(std::string_view raw) {
    const json root = parse_object(raw);
    std::vector<ExtractedReflection> out;
    const auto& items = require_array(root, "reflections");
    for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string path = "reflections[" + std::to_string(i) + "].";
        if (!items[i].is_object()) throw Error(Errc::MissingField, path + " (expected object)");
        ExtractedReflection r;
        r.text = require_string(items[i], "reflection_text", path);
        r.source_fact_ids = require_string_list(items[i], "source_fact_ids", path);
        r.belief = belief_of(items[i]);
        out.push_back(std::move(r));
    }
    return out;
}

JudgeVerdict parse_judge(std::string_view raw) {
    const json root = parse_object(raw);
    auto it = root.find("reward");
    if (it == root.end()) throw Error(Errc::MalformedJson, "no reward field: " + snippet(raw));
    double reward = 0.0;
    if (it->is_number()) {
        reward = it->get<double>();
    } else if (it->is_string()) {
        try {
            reward = std::stod(it->get<std::string>());
        } catch (const std::exception&) {
            throw Error(Errc::MalformedJson, "reward is not numeric: " + snippet(raw));
        }
    } else {
        throw Error(Errc::MalformedJson, "reward is not numeric: " + snippet(raw));
    }
    if (!std::isfinite(reward)) throw Error(Errc::MalformedJson, "reward is not finite: " + snippet(raw));

    JudgeVerdict v;
    v.reward = std::clamp(reward, 0.0, 1.0);
    v.clamped = v.reward != reward;
    if (auto j = root.find("justification"); j != root.end() && j->is_string()) v.justification = j->get<std::string>();
    return v;
}

}  // namespace assocmem
