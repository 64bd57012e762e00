#include "assocmem/config.hpp"

#include "assocmem/mock_gateway.hpp"
#include "assocmem/remote_gateway.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace assocmem {

using nlohmann::json;

namespace {

class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw Error(Errc::ConfigError, path_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            throw Error(Errc::ConfigError, path_ + "." + key + ": wrong type");
        }
    }

    const json* child(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (const auto& [k, v] : obj_.items()) {
            if (!seen_.contains(k)) throw Error(Errc::ConfigError, path_ + "." + k + ": unknown key");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace

std::string config_to_json(const AppConfig& c) {
    json weights = json::object();
    for (auto k : kAllEdgeKinds) weights[std::string(to_string(k))] = c.retrieval.edge_base_weights[k];
    const auto& p = c.provider;
    const auto& r = c.retrieval;
    const json j = {
        {"provider",
         {{"kind", p.kind},
          {"base_url", p.base_url},
          {"chat_model", p.chat_model},
          {"embedding_model", p.embedding_model},
          {"api_key_env", p.api_key_env},
          {"max_in_flight", p.max_in_flight},
          {"timeout_seconds", p.timeout_seconds},
          {"max_attempts", p.max_attempts},
          {"mock_dim", p.mock_dim}}},
        {"retrieval",
         {{"alpha", r.alpha},
          {"k_seeds", r.k_seeds},
          {"depth", r.depth},
          {"hub_threshold", r.hub_threshold},
          {"w_ppr", r.w_ppr},
          {"w_sim", r.w_sim},
          {"edge_weights", weights},
          {"max_facts", r.max_facts},
          {"max_reflections", r.max_reflections},
          {"max_episodes", r.max_episodes},
          {"max_memory_words", r.max_memory_words},
          {"ppr_max_iters", r.ppr_max_iters},
          {"ppr_tolerance", r.ppr_tolerance}}},
        {"builder", {{"chunk_size", c.builder.chunk_size}, {"context_k", c.builder.context_k}}},
        {"eval",
         {{"jobs", c.eval.jobs},
          {"min_completion", c.eval.min_completion},
          {"limit", c.eval.limit},
          {"conversations", c.eval.conversations}}},
        {"paths", {{"graph_dir", c.paths.graph_dir}, {"results_dir", c.paths.results_dir}}}};
    return j.dump(2) + "\n";
}

AppConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ConfigError, std::string("invalid JSON (") + e.what() + ")");
    }
    AppConfig c;
    Reader top(doc, "$");
    if (const auto* p = top.child("provider")) {
        Reader r(*p, "$.provider");
        r.get("kind", c.provider.kind);
        r.get("base_url", c.provider.base_url);
        r.get("chat_model", c.provider.chat_model);
        r.get("embedding_model", c.provider.embedding_model);
        r.get("api_key_env", c.provider.api_key_env);
        r.get("max_in_flight", c.provider.max_in_flight);
        r.get("timeout_seconds", c.provider.timeout_seconds);
        r.get("max_attempts", c.provider.max_attempts);
        r.get("mock_dim", c.provider.mock_dim);
        r.finish();
        if (c.provider.kind != "openai" && c.provider.kind != "mock") {
            throw Error(Errc::ConfigError, "$.provider.kind: expected \"openai\" or \"mock\"");
        }
    }
    if (const auto* p = top.child("retrieval")) {
        Reader r(*p, "$.retrieval");
        auto& q = c.retrieval;
        r.get("alpha", q.alpha);
        r.get("k_seeds", q.k_seeds);
        r.get("depth", q.depth);
        r.get("hub_threshold", q.hub_threshold);
        r.get("w_ppr", q.w_ppr);
        r.get("w_sim", q.w_sim);
        if (const auto* w = r.child("edge_weights")) {
            Reader wr(*w, "$.retrieval.edge_weights");
            for (auto k : kAllEdgeKinds) {
                const std::string name(to_string(k));
                wr.get(name.c_str(), q.edge_base_weights[k]);
            }
            wr.finish();
        }
        r.get("max_facts", q.max_facts);
        r.get("max_reflections", q.max_reflections);
        r.get("max_episodes", q.max_episodes);
        r.get("max_memory_words", q.max_memory_words);
        r.get("ppr_max_iters", q.ppr_max_iters);
        r.get("ppr_tolerance", q.ppr_tolerance);
        r.finish();
        try {
            q.validate();
        } catch (const Error& e) {
            throw Error(Errc::ConfigError, "$.retrieval: " + e.detail());
        }
    }
    if (const auto* p = top.child("builder")) {
        Reader r(*p, "$.builder");
        r.get("chunk_size", c.builder.chunk_size);
        r.get("context_k", c.builder.context_k);
        r.finish();
        if (c.builder.chunk_size == 0) throw Error(Errc::ConfigError, "$.builder.chunk_size: must be positive");
    }
    if (const auto* p = top.child("eval")) {
        Reader r(*p, "$.eval");
        r.get("jobs", c.eval.jobs);
        r.get("min_completion", c.eval.min_completion);
        r.get("limit", c.eval.limit);
        r.get("conversations", c.eval.conversations);
        r.finish();
        if (c.eval.min_completion < 0.0 || c.eval.min_completion > 1.0) {
            throw Error(Errc::ConfigError, "$.eval.min_completion: must be in [0, 1]");
        }
    }
    if (const auto* p = top.child("paths")) {
        Reader r(*p, "$.paths");
        r.get("graph_dir", c.paths.graph_dir);
        r.get("results_dir", c.paths.results_dir);
        r.finish();
    }
    top.finish();
    return c;
}

AppConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, path.string() + ": file not found or unreadable");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return config_from_json(buf.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.detail());
    }
}

void save_config(const AppConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, path.string() + ": cannot write");
    out << config_to_json(config);
    if (!out) throw Error(Errc::IoFailure, path.string() + ": write failed");
}

std::unique_ptr<Gateway> make_gateway(const AppConfig& config, std::ostream* trace) {
    const auto& p = config.provider;
    if (p.kind == "mock") return std::make_unique<MockGateway>(MockOptions{p.mock_dim});
    const char* key = std::getenv(p.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw Error(Errc::ConfigError, "environment variable " + p.api_key_env + " is not set (use --mock for offline runs)");
    }
    RemoteOptions o;
    o.base_url = p.base_url;
    o.chat_model = p.chat_model;
    o.embedding_model = p.embedding_model;
    o.api_key = key;
    o.max_in_flight = p.max_in_flight;
    o.timeout = std::chrono::seconds(p.timeout_seconds);
    o.retry.max_attempts = p.max_attempts;
    o.trace = trace;
    return std::make_unique<RemoteGateway>(std::move(o));
}

std::string provider_tag(const ProviderConfig& p) {
    if (p.kind == "mock") return "mock/" + std::to_string(p.mock_dim);
    return p.chat_model + "|" + p.embedding_model;
}

}  // namespace assocmem
