#pragma once
// Application configuration: provider, retrieval, builder, eval and paths.
// Stored as JSON; every CLI override has a key here.

#include "assocmem/gateway.hpp"
#include "assocmem/memory_builder.hpp"
#include "assocmem/retriever.hpp"

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

namespace assocmem {

struct ProviderConfig {
    std::string kind = "openai";  // "openai" (any chat-completions endpoint) or "mock"
    std::string base_url = "https://api.openai.com/v1";
    std::string chat_model = "gpt-4o-mini";
    std::string embedding_model = "text-embedding-3-small";
    std::string api_key_env = "OPENAI_API_KEY";
    std::size_t max_in_flight = 4;
    std::size_t timeout_seconds = 120;
    int max_attempts = 5;
    std::size_t mock_dim = 256;

    bool operator==(const ProviderConfig&) const = default;
};

struct EvalSettings {
    std::size_t jobs = 1;
    double min_completion = 0.95;
    std::size_t limit = 0;  // 0: all questions
    std::vector<std::string> conversations;  // empty: all

    bool operator==(const EvalSettings&) const = default;
};

struct PathsConfig {
    std::string graph_dir = "graphs";
    std::string results_dir = "results";

    bool operator==(const PathsConfig&) const = default;
};

struct AppConfig {
    ProviderConfig provider;
    RetrievalConfig retrieval;
    BuilderConfig builder;
    EvalSettings eval;
    PathsConfig paths;

    bool operator==(const AppConfig&) const = default;
};

std::string config_to_json(const AppConfig& config);  // pretty, trailing newline
// Missing keys keep their defaults; unknown keys and bad values raise ConfigError.
AppConfig config_from_json(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);
void save_config(const AppConfig& config, const std::filesystem::path& path);

// Mock when provider.kind == "mock"; otherwise the HTTP gateway with the
// credential read from provider.api_key_env (ConfigError when unset).
std::unique_ptr<Gateway> make_gateway(const AppConfig& config, std::ostream* trace = nullptr);

// Folded into eval fingerprints.
std::string provider_tag(const ProviderConfig& provider);

}  // namespace assocmem
