#pragma once
// Chat-completions compatible HTTP provider:
//   POST {base_url}/chat/completions  {model, messages, temperature}
//   POST {base_url}/embeddings        {model, input}
// Transient failures (transport errors, 408, 429, 5xx) are retried with
// capped exponential backoff and jitter; 401/403 fail immediately.

#include "assocmem/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <ostream>
#include <string>

namespace assocmem {

struct RetryPolicy {
    int max_attempts = 5;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{8000};
    double jitter = 0.25;  // delay *= 1 + U[0, jitter)
};

struct RemoteOptions {
    std::string base_url = "https://api.openai.com/v1";
    std::string chat_model = "gpt-4o-mini";
    std::string embedding_model = "text-embedding-3-small";
    std::string api_key;
    std::size_t max_in_flight = 4;
    std::chrono::seconds timeout{120};
    RetryPolicy retry;
    std::ostream* trace = nullptr;  // request/response bodies, credential redacted
};

class RemoteGateway : public Gateway {
public:
    explicit RemoteGateway(RemoteOptions options);
    ~RemoteGateway() override;

    std::string chat(const ChatRequest& request) override;
    std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
    std::string chat_model() const override { return options_.chat_model; }
    std::string embedding_model() const override { return options_.embedding_model; }

    std::size_t attempts_made() const;

private:
    std::string post_json(const std::string& path, const std::string& body);
    void log(const std::string& line);

    RemoteOptions options_;
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // e.g. "/v1"

    std::mutex slots_mu_;
    std::condition_variable slots_cv_;
    std::size_t in_flight_ = 0;

    mutable std::mutex state_mu_;
    std::size_t embed_dim_ = 0;
    std::size_t attempts_ = 0;
};

}  // namespace assocmem
