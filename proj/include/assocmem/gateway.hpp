#pragma once
// Model provider interface: one chat-completion call and one batch embedding
// call. Implementations: MockGateway (offline, deterministic) and
// RemoteGateway (chat-completions compatible HTTP API).

#include <optional>
#include <string>
#include <vector>

namespace assocmem {

struct ChatRequest {
    std::string prompt;  // a single rendered prompt template
    double temperature = 0.0;
    std::string model_name;
    std::optional<int> max_output_tokens;
};

class Gateway {
public:
    virtual ~Gateway() = default;

    // Throws Error with a gateway failure code (see Error::is_gateway_failure).
    virtual std::string chat(const ChatRequest& request) = 0;
    // One vector per text, all of one dimensionality.
    virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;

    virtual std::string chat_model() const = 0;
    virtual std::string embedding_model() const = 0;
};

// Temperature-0 request for the gateway's configured chat model.
inline ChatRequest chat_request(const Gateway& gateway, std::string prompt) {
    return ChatRequest{std::move(prompt), 0.0, gateway.chat_model(), std::nullopt};
}

// Convenience: embed a single text.
std::vector<float> embed_one(Gateway& gateway, const std::string& text);

}  // namespace assocmem
