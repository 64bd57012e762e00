#include "assocmem/remote_gateway.hpp"

#include "assocmem/types.hpp"

#include <httplib.h>
#include "json.hpp"

#include <algorithm>
#include <random>
#include <thread>

namespace assocmem {

using nlohmann::json;

namespace {

class SlotGuard {
public:
    SlotGuard(std::mutex& mu, std::condition_variable& cv, std::size_t& used, std::size_t cap)
        : mu_(mu), cv_(cv), used_(used) {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return used_ < cap; });
        ++used_;
    }
    ~SlotGuard() {
        {
            std::lock_guard lock(mu_);
            --used_;
        }
        cv_.notify_one();
    }
    SlotGuard(const SlotGuard&) = delete;
    SlotGuard& operator=(const SlotGuard&) = delete;

private:
    std::mutex& mu_;
    std::condition_variable& cv_;
    std::size_t& used_;
};

std::string redact(std::string s, const std::string& secret) {
    if (secret.empty()) return s;
    for (auto at = s.find(secret); at != std::string::npos; at = s.find(secret, at)) s.replace(at, secret.size(), "***");
    return s;
}

}  // namespace

RemoteGateway::RemoteGateway(RemoteOptions options) : options_(std::move(options)) {
    const auto scheme_end = options_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(Errc::ConfigError, "base_url must include a scheme: " + options_.base_url);
    }
    const auto path_start = options_.base_url.find('/', scheme_end + 3);
    origin_ = options_.base_url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : options_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (options_.max_in_flight == 0) options_.max_in_flight = 1;
    if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
}

RemoteGateway::~RemoteGateway() = default;

std::size_t RemoteGateway::attempts_made() const {
    std::lock_guard lock(state_mu_);
    return attempts_;
}

void RemoteGateway::log(const std::string& line) {
    if (!options_.trace) return;
    std::lock_guard lock(state_mu_);
    *options_.trace << redact(line, options_.api_key) << '\n';
}

std::string RemoteGateway::post_json(const std::string& path, const std::string& body) {
    SlotGuard slot(slots_mu_, slots_cv_, in_flight_, options_.max_in_flight);

    httplib::Client client(origin_);
    if (!client.is_valid()) throw Error(Errc::TransportFailure, "unsupported base_url " + origin_);
    const auto timeout_s = static_cast<time_t>(options_.timeout.count());
    client.set_connection_timeout(std::min<time_t>(timeout_s, 30), 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_write_timeout(timeout_s, 0);
    const httplib::Headers headers{{"Authorization", "Bearer " + options_.api_key}};
    const std::string url = path_prefix_ + path;

    std::mt19937 rng(std::random_device{}());
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    Errc last_code = Errc::TransportFailure;
    std::string last_detail;
    for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
        {
            std::lock_guard lock(state_mu_);
            ++attempts_;
        }
        log("-> POST " + origin_ + url + " (attempt " + std::to_string(attempt) +
            ")\nAuthorization: Bearer ***\n" + body);
        auto res = client.Post(url, headers, body, "application/json");

        std::chrono::milliseconds floor{0};
        if (!res) {
            last_code = Errc::TransportFailure;
            last_detail = "POST " + url + ": " + httplib::to_string(res.error());
        } else {
            log("<- " + std::to_string(res->status) + "\n" + res->body);
            const int status = res->status;
            if (status >= 200 && status < 300) return res->body;
            last_detail = "POST " + url + " returned HTTP " + std::to_string(status) + ": " + res->body.substr(0, 300);
            if (status == 401 || status == 403) throw Error(Errc::AuthFailure, last_detail);
            if (status == 429) {
                last_code = Errc::RateLimited;
                if (res->has_header("Retry-After")) {
                    try {
                        floor = std::chrono::seconds(std::stoi(res->get_header_value("Retry-After")));
                    } catch (const std::exception&) {
                    }
                }
            } else if (status == 408 || status >= 500) {
                last_code = Errc::TransportFailure;
            } else {
                throw Error(Errc::TransportFailure, last_detail);
            }
        }
        if (attempt == options_.retry.max_attempts) break;

        const auto exp = options_.retry.base_delay * (1LL << std::min(attempt - 1, 20));
        auto delay = std::min<std::chrono::milliseconds>(exp, options_.retry.max_delay);
        delay = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(delay.count()) * (1.0 + options_.retry.jitter * unit(rng))));
        delay = std::min(std::max(delay, floor), options_.retry.max_delay + floor);
        std::this_thread::sleep_for(delay);
    }
    throw Error(last_code, last_detail + " (after " + std::to_string(options_.retry.max_attempts) + " attempts)");
}

std::string RemoteGateway::chat(const ChatRequest& request) {
    json body{{"model", request.model_name.empty() ? options_.chat_model : request.model_name},
              {"messages", json::array({json{{"role", "user"}, {"content", request.prompt}}})},
              {"temperature", request.temperature}};
    if (request.max_output_tokens) body["max_tokens"] = *request.max_output_tokens;

    const std::string raw = post_json("/chat/completions", body.dump());
    json reply;
    try {
        reply = json::parse(raw);
    } catch (const json::parse_error&) {
        throw Error(Errc::EmptyResponse, "chat reply is not JSON");
    }
    const auto choices = reply.find("choices");
    if (choices == reply.end() || !choices->is_array() || choices->empty()) {
        throw Error(Errc::EmptyResponse, "chat reply has no choices");
    }
    const auto& msg = (*choices)[0].value("message", json::object());
    const auto content = msg.find("content");
    if (content == msg.end() || !content->is_string() || content->get<std::string>().empty()) {
        throw Error(Errc::EmptyResponse, "chat reply has no content");
    }
    return content->get<std::string>();
}

std::vector<std::vector<float>> RemoteGateway::embed(const std::vector<std::string>& texts) {
    if (texts.empty()) throw Error(Errc::InvalidArgument, "embed: empty input list");
    for (const auto& t : texts) {
        if (t.empty()) throw Error(Errc::InvalidArgument, "embed: empty text");
    }
    json body{{"model", options_.embedding_model}, {"input", texts}};
    const std::string raw = post_json("/embeddings", body.dump());
    json reply;
    try {
        reply = json::parse(raw);
    } catch (const json::parse_error&) {
        throw Error(Errc::EmptyResponse, "embedding reply is not JSON");
    }
    const auto data = reply.find("data");
    if (data == reply.end() || !data->is_array() || data->size() != texts.size()) {
        throw Error(Errc::EmptyResponse, "embedding reply has wrong number of vectors");
    }
    std::vector<std::vector<float>> out(texts.size());
    for (std::size_t i = 0; i < data->size(); ++i) {
        const auto& item = (*data)[i];
        const std::size_t slot = item.value("index", i);
        if (slot >= out.size() || !item.contains("embedding") || !item["embedding"].is_array()) {
            throw Error(Errc::EmptyResponse, "malformed embedding item " + std::to_string(i));
        }
        for (const auto& v : item["embedding"]) out[slot].push_back(static_cast<float>(v.get<double>()));
    }
    std::lock_guard lock(state_mu_);
    for (const auto& v : out) {
        if (v.empty()) throw Error(Errc::EmptyResponse, "empty embedding vector");
        if (embed_dim_ == 0) embed_dim_ = v.size();
        if (v.size() != embed_dim_) {
            throw Error(Errc::DimensionDrift,
                        "expected " + std::to_string(embed_dim_) + " dims, got " + std::to_string(v.size()));
        }
    }
    return out;
}

}  // namespace assocmem
