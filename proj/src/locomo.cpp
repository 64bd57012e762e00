#include "assocmem/locomo.hpp"

#include "assocmem/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace assocmem {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw Error(Errc::ParseFailure, path + ": " + what);
}

const json& field(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing");
    return *it;
}

std::string string_field(const json& obj, const std::string& key, const std::string& path) {
    const auto& v = field(obj, key, path);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

// Answers are strings in most records but plain numbers in a few.
std::string scalar_text(const json& v, const std::string& path) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
        std::ostringstream out;
        out << v.get<double>();
        return out.str();
    }
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    fail(path, "expected a string or number");
}

int days_in_month(int year, int month) {
    static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return month == 2 && leap ? 29 : kDays[month - 1];
}

int month_number(std::string name) {
    static const std::array<std::string, 12> kMonths = {"january", "february", "march",     "april",   "may",      "june",
                                                        "july",    "august",   "september", "october", "november", "december"};
    name = text::to_lower(name);
    for (std::size_t i = 0; i < kMonths.size(); ++i) {
        if (name == kMonths[i] || (name.size() >= 3 && kMonths[i].starts_with(name))) return static_cast<int>(i) + 1;
    }
    return 0;
}

std::string format_iso(int y, int mo, int d, int h, int mi, int s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", y, mo, d, h, mi, s);
    return buf;
}

std::optional<std::string> iso_from_parts(int y, int mo, int d, int h, int mi, int s) {
    if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
        s > 59) {
        return std::nullopt;
    }
    return format_iso(y, mo, d, h, mi, s);
}

std::optional<std::string> try_iso(std::string_view raw) {
    const std::string s = text::trim(raw);
    static const std::regex locomo(R"(^(\d{1,2}):(\d{2})\s*([AaPp][Mm])\s+on\s+(\d{1,2})\s+([A-Za-z]+),?\s+(\d{4})$)");
    static const std::regex iso(R"(^(\d{4})-(\d{2})-(\d{2})(?:[T ](\d{2}):(\d{2})(?::(\d{2}))?)?$)");
    std::smatch m;
    if (std::regex_match(s, m, locomo)) {
        int h = std::stoi(m[1]);
        const int mi = std::stoi(m[2]);
        const bool pm = std::tolower(static_cast<unsigned char>(m[3].str()[0])) == 'p';
        if (h < 1 || h > 12) return std::nullopt;
        h = h % 12 + (pm ? 12 : 0);
        const int mo = month_number(m[5]);
        if (mo == 0) return std::nullopt;
        return iso_from_parts(std::stoi(m[6]), mo, std::stoi(m[4]), h, mi, 0);
    }
    if (std::regex_match(s, m, iso)) {
        const int h = m[4].matched ? std::stoi(m[4]) : 0;
        const int mi = m[5].matched ? std::stoi(m[5]) : 0;
        const int sec = m[6].matched ? std::stoi(m[6]) : 0;
        return iso_from_parts(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), h, mi, sec);
    }
    return std::nullopt;
}

std::string iso_at(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a timestamp string");
    auto iso = try_iso(v.get<std::string>());
    if (!iso) fail(path, "unrecognised timestamp '" + v.get<std::string>() + "'");
    return *iso;
}

void sort_sessions(std::vector<std::pair<long long, ConversationSession>>& numbered, Conversation& conv) {
    std::stable_sort(numbered.begin(), numbered.end(), [](const auto& a, const auto& b) {
        if (a.second.session_timestamp != b.second.session_timestamp) {
            return a.second.session_timestamp < b.second.session_timestamp;
        }
        return a.first < b.first;
    });
    for (auto& [n, s] : numbered) conv.sessions.push_back(std::move(s));
}

// Category code 5 (adversarial) returns nullopt.
std::optional<Category> qa_category(const json& q, const std::string& path) {
    const auto& c = field(q, "category", path);
    const std::string cpath = path + ".category";
    try {
        if (c.is_number_integer()) {
            if (c.get<long long>() == 5) return std::nullopt;
            return category_from_code(c.get<long long>());
        }
        if (c.is_string()) {
            const auto s = text::to_lower(text::trim(c.get<std::string>()));
            if (s == "5" || s == "adversarial") return std::nullopt;
            return parse_category(s);
        }
    } catch (const Error& e) {
        throw Error(Errc::UnknownCategoryCode, cpath + ": " + e.detail());
    }
    fail(cpath, "expected an integer code or name");
}

void parse_qa(const json& list, const std::string& conversation_id, const std::string& path, Dataset& out) {
    if (!list.is_array()) fail(path, "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string qpath = path + "[" + std::to_string(i) + "]";
        const auto& q = list[i];
        const auto category = qa_category(q, qpath);
        if (!category) {
            ++out.skipped_adversarial;
            continue;
        }
        QAItem item;
        item.question = string_field(q, "question", qpath);
        item.reference_answer = scalar_text(field(q, "answer", qpath), qpath + ".answer");
        item.category = *category;
        item.conversation_id = conversation_id;
        if (auto ev = q.find("evidence"); ev != q.end() && ev->is_array()) {
            for (const auto& e : *ev) {
                if (e.is_string()) item.evidence.push_back(e.get<std::string>());
            }
        }
        out.qa.push_back(std::move(item));
    }
}

std::string turn_text(const json& t, const std::string& path) {
    std::string body = string_field(t, "text", path);
    if (auto cap = t.find("blip_caption"); cap != t.end() && cap->is_string() && !cap->get<std::string>().empty()) {
        body += " [shares an image: " + cap->get<std::string>() + "]";
    }
    return body;
}

void parse_locomo_sample(const json& sample, const std::string& path, Dataset& out) {
    Conversation conv;
    conv.conversation_id = string_field(sample, "sample_id", path);
    const std::string cpath = path + ".conversation";
    const auto& c = field(sample, "conversation", path);
    if (!c.is_object()) fail(cpath, "expected an object");

    static const std::regex session_key(R"(^session_(\d+)$)");
    std::vector<std::pair<long long, ConversationSession>> numbered;
    for (const auto& [key, value] : c.items()) {
        std::smatch m;
        if (!std::regex_match(key, m, session_key)) continue;
        const std::string spath = cpath + "." + key;
        if (!value.is_array()) fail(spath, "expected an array of turns");
        if (value.empty()) continue;
        ConversationSession s;
        s.conversation_id = conv.conversation_id;
        s.session_id = key;
        s.session_timestamp = iso_at(field(c, key + "_date_time", cpath), cpath + "." + key + "_date_time");
        for (std::size_t i = 0; i < value.size(); ++i) {
            const std::string tpath = spath + "[" + std::to_string(i) + "]";
            s.turns.push_back({string_field(value[i], "speaker", tpath), turn_text(value[i], tpath)});
        }
        numbered.emplace_back(std::stoll(m[1]), std::move(s));
    }
    sort_sessions(numbered, conv);
    if (auto qa = sample.find("qa"); qa != sample.end()) parse_qa(*qa, conv.conversation_id, path + ".qa", out);
    out.conversations.push_back(std::move(conv));
}

void parse_generic(const json& obj, const std::string& path, Dataset& out) {
    Conversation conv;
    conv.conversation_id = string_field(obj, "conversation_id", path);
    const auto& sessions = field(obj, "sessions", path);
    if (!sessions.is_array()) fail(path + ".sessions", "expected an array");
    std::vector<std::pair<long long, ConversationSession>> numbered;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        const std::string spath = path + ".sessions[" + std::to_string(i) + "]";
        ConversationSession s;
        s.conversation_id = conv.conversation_id;
        s.session_id = string_field(sessions[i], "session_id", spath);
        s.session_timestamp = iso_at(field(sessions[i], "timestamp", spath), spath + ".timestamp");
        const auto& turns = field(sessions[i], "turns", spath);
        if (!turns.is_array()) fail(spath + ".turns", "expected an array");
        for (std::size_t j = 0; j < turns.size(); ++j) {
            const std::string tpath = spath + ".turns[" + std::to_string(j) + "]";
            s.turns.push_back({string_field(turns[j], "speaker", tpath), string_field(turns[j], "text", tpath)});
        }
        if (s.turns.empty()) continue;
        numbered.emplace_back(static_cast<long long>(i), std::move(s));
    }
    sort_sessions(numbered, conv);
    if (auto qa = obj.find("qa"); qa != obj.end()) parse_qa(*qa, conv.conversation_id, path + ".qa", out);
    out.conversations.push_back(std::move(conv));
}

void parse_entry(const json& entry, const std::string& path, Dataset& out) {
    if (!entry.is_object()) fail(path, "expected an object");
    if (entry.contains("sample_id") || (entry.contains("conversation") && entry["conversation"].is_object())) {
        parse_locomo_sample(entry, path, out);
    } else {
        parse_generic(entry, path, out);
    }
}

}  // namespace

int category_code(Category c) { return static_cast<int>(c); }

std::string_view category_name(Category c) {
    switch (c) {
        case Category::MultiHop: return "multi-hop";
        case Category::Temporal: return "temporal";
        case Category::OpenDomain: return "open-domain";
        case Category::SingleHop: return "single-hop";
    }
    return "?";
}

Category category_from_code(long long code) {
    if (code < 1 || code > 4) throw Error(Errc::UnknownCategoryCode, "category code " + std::to_string(code));
    return static_cast<Category>(code);
}

Category parse_category(std::string_view s) {
    std::string key = text::to_lower(text::trim(s));
    std::replace(key.begin(), key.end(), '_', '-');
    std::replace(key.begin(), key.end(), ' ', '-');
    long long code = 0;
    auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), code);
    if (ec == std::errc{} && ptr == key.data() + key.size()) return category_from_code(code);
    for (auto c : kAllCategories) {
        if (key == category_name(c)) return c;
    }
    if (key == "multihop") return Category::MultiHop;
    if (key == "singlehop") return Category::SingleHop;
    if (key == "opendomain") return Category::OpenDomain;
    throw Error(Errc::UnknownCategoryCode, "category '" + std::string(s) + "'");
}

const Conversation* Dataset::find(const std::string& conversation_id) const {
    for (const auto& c : conversations) {
        if (c.conversation_id == conversation_id) return &c;
    }
    return nullptr;
}

std::map<Category, std::size_t> Dataset::category_counts() const {
    std::map<Category, std::size_t> counts;
    for (auto c : kAllCategories) counts[c] = 0;
    for (const auto& q : qa) ++counts[q.category];
    return counts;
}

std::string to_iso_timestamp(std::string_view raw) {
    auto iso = try_iso(raw);
    if (!iso) throw Error(Errc::ParseFailure, "unrecognised timestamp '" + std::string(raw) + "'");
    return *iso;
}

Dataset parse_dataset(std::string_view json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(origin, std::string("invalid JSON (") + e.what() + ")");
    }
    Dataset out;
    if (doc.is_array()) {
        for (std::size_t i = 0; i < doc.size(); ++i) parse_entry(doc[i], origin + "[" + std::to_string(i) + "]", out);
    } else {
        parse_entry(doc, origin, out);
    }
    std::set<std::string> seen;
    for (const auto& c : out.conversations) {
        if (!seen.insert(c.conversation_id).second) fail(origin, "duplicate conversation id '" + c.conversation_id + "'");
    }
    return out;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, path.string() + ": file not found or unreadable");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), "$");
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoFailure, path.string() + ": file not found or unreadable");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(path.string(), std::string("invalid JSON (") + e.what() + ")");
    }
    DatasetManifest m;
    try {
        if (doc.contains("conversations")) m.conversations = doc["conversations"].get<std::size_t>();
        if (doc.contains("qa_total")) m.qa_total = doc["qa_total"].get<std::size_t>();
        if (doc.contains("categories")) {
            for (const auto& [k, v] : doc["categories"].items()) m.categories[parse_category(k)] = v.get<std::size_t>();
        }
        if (doc.contains("qa_per_conversation")) {
            for (const auto& [k, v] : doc["qa_per_conversation"].items()) m.qa_per_conversation[k] = v.get<std::size_t>();
        }
    } catch (const json::exception& e) {
        fail(path.string(), std::string("bad manifest (") + e.what() + ")");
    }
    return m;
}

void validate_counts(const Dataset& data, const DatasetManifest& manifest) {
    std::vector<std::string> problems;
    auto check = [&](const std::string& what, std::size_t expected, std::size_t actual) {
        if (expected != actual) {
            problems.push_back(what + " expected " + std::to_string(expected) + ", found " + std::to_string(actual));
        }
    };
    if (manifest.conversations) check("conversations", *manifest.conversations, data.conversations.size());
    if (manifest.qa_total) check("qa items", *manifest.qa_total, data.qa.size());
    const auto counts = data.category_counts();
    for (const auto& [cat, n] : manifest.categories) check(std::string(category_name(cat)), n, counts.at(cat));
    for (const auto& [conv, n] : manifest.qa_per_conversation) {
        const auto actual = static_cast<std::size_t>(std::count_if(
            data.qa.begin(), data.qa.end(), [&](const QAItem& q) { return q.conversation_id == conv; }));
        check(conv, n, actual);
    }
    if (problems.empty()) return;
    std::string msg = "count mismatch:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw Error(Errc::ParseFailure, msg);
}

}  // namespace assocmem
