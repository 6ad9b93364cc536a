#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "absakit/llm.hpp"
#include "absakit/llm_mock.hpp"

namespace absakit {

// Chat-completion client. Request body:
//   {"model": <model>, "messages": [{"role": "user", "content": <prompt>}],
//    "temperature": <t>, "max_tokens": <n>}
// The bearer token is read from the environment variable named in the config.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {
        config_.validate();
        split_endpoint();
    }

    GenerationResponse generate(const GenerationRequest& request) override {
        const char* token = std::getenv(config_.credential_env.c_str());
        if (!token || !*token)
            throw BackendError("credential environment variable '" + config_.credential_env +
                                   "' is not set",
                               0, /*retryable=*/false, /*auth=*/true);

        nlohmann::json body{
            {"model", config_.model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens},
        };

        httplib::Client client(base_);
        client.set_connection_timeout(30);
        client.set_read_timeout(120);
        httplib::Headers headers{{"Authorization", std::string("Bearer ") + token}};
        auto result = client.Post(path_, headers, body.dump(), "application/json");

        if (!result)
            throw BackendError("network error talking to " + base_ + ": " +
                                   httplib::to_string(result.error()),
                               0, /*retryable=*/true);
        int status = result->status;
        if (status == 401 || status == 403)
            throw BackendError("authentication rejected (HTTP " + std::to_string(status) + ")",
                               status, /*retryable=*/false, /*auth=*/true);
        if (status == 408 || status == 429 || status >= 500)
            throw BackendError("transient HTTP " + std::to_string(status) + " from " + base_,
                               status, /*retryable=*/true);
        if (status != 200)
            throw BackendError("HTTP " + std::to_string(status) + ": " +
                                   result->body.substr(0, 200),
                               status);

        try {
            auto j = nlohmann::json::parse(result->body);
            return GenerationResponse{request.id,
                                      j.at("choices").at(0).at("message").at("content")
                                          .get<std::string>(),
                                      name()};
        } catch (const nlohmann::json::exception& e) {
            throw BackendError("malformed completion response: " + std::string(e.what()), status);
        }
    }

    std::string name() const override { return config_.model.empty() ? "http" : config_.model; }

private:
    void split_endpoint() {
        const std::string& url = config_.endpoint;
        std::size_t scheme = url.find("://");
        std::size_t path_start =
            url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        if (path_start == std::string::npos) {
            base_ = url;
            path_ = "/v1/chat/completions";
        } else {
            base_ = url.substr(0, path_start);
            path_ = url.substr(path_start);
        }
    }

    BackendConfig config_;
    std::string base_;
    std::string path_;
};

inline std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
    config.validate();
    if (config.kind == BackendConfig::Kind::mock)
        return std::make_unique<MockBackend>(config.mock_seed);
    return std::make_unique<HttpBackend>(config);
}

inline GenerationResponse complete(const BackendConfig& config, const GenerationRequest& request) {
    auto backend = make_backend(config);
    return complete(*backend, request, config.retry);
}

inline BatchResult complete_batch(const BackendConfig& config,
                                  const std::vector<GenerationRequest>& requests) {
    auto backend = make_backend(config);
    return complete_batch(*backend, requests, config.retry, config.max_in_flight);
}

}  // namespace absakit
