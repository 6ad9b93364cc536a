#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "absakit/common.hpp"

namespace absakit {

struct GenerationRequest {
    std::uint64_t id = 0;
    std::string prompt;
    double temperature = 1.0;
    int max_tokens = 1024;
};

struct GenerationResponse {
    std::uint64_t id = 0;
    std::string text;  // completion text, verbatim
    std::string backend;
};

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 250;
};

struct BackendConfig {
    enum class Kind { http, mock };

    Kind kind = Kind::mock;
    std::string endpoint;                          // http: full chat-completions URL
    std::string model;                             // http: model name in the request body
    std::string credential_env = "ABSAKIT_API_KEY";  // env var holding the bearer token
    int max_in_flight = 4;
    RetryPolicy retry;
    double temperature = 1.0;
    std::uint64_t mock_seed = 0;

    void validate() const {
        if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
        if (retry.max_attempts < 1) throw ConfigError("retry.max_attempts must be >= 1");
        if (temperature < 0.0) throw ConfigError("temperature must be non-negative");
        if (kind == Kind::http && endpoint.empty())
            throw ConfigError("http backend requires an endpoint");
    }

    static Kind parse_kind(std::string_view s) {
        if (s == "http") return Kind::http;
        if (s == "mock") return Kind::mock;
        throw ConfigError("unknown backend kind '" + std::string(s) + "'");
    }
};

/// Generation backend. Implementations throw BackendError; the retry loop in
/// complete() re-issues attempts only when the error is marked retryable.
class Backend {
public:
    virtual ~Backend() = default;
    virtual GenerationResponse generate(const GenerationRequest& request) = 0;
    virtual std::string name() const = 0;
};

inline GenerationResponse complete(Backend& backend, const GenerationRequest& request,
                                   const RetryPolicy& retry = {}) {
    if (request.prompt.empty()) throw BackendError("request prompt must be non-empty");
    for (int attempt = 1;; ++attempt) {
        try {
            GenerationResponse response = backend.generate(request);
            if (response.text.empty())
                throw BackendError("empty generation for request " + std::to_string(request.id));
            return response;
        } catch (const BackendError& e) {
            if (!e.retryable() || attempt >= retry.max_attempts) throw;
            auto delay = std::chrono::milliseconds(
                static_cast<long long>(retry.base_backoff_ms) << (attempt - 1));
            std::this_thread::sleep_for(delay);
        }
    }
}

struct BatchItem {
    std::uint64_t id = 0;
    std::optional<GenerationResponse> response;
    std::string error;

    bool ok() const { return response.has_value(); }
};

struct BatchResult {
    std::vector<BatchItem> items;  // sorted by request id

    std::size_t ok_count() const {
        std::size_t n = 0;
        for (const auto& item : items) n += item.ok() ? 1 : 0;
        return n;
    }
};

// Runs requests with at most max_in_flight outstanding at once. Per-request
// failures are recorded alongside successes; only a total wipeout throws.
inline BatchResult complete_batch(Backend& backend, const std::vector<GenerationRequest>& requests,
                                  const RetryPolicy& retry, int max_in_flight) {
    if (requests.empty()) throw BackendError("complete_batch requires at least one request");
    if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");

    BatchResult result;
    result.items.resize(requests.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= requests.size()) return;
            BatchItem& item = result.items[i];
            item.id = requests[i].id;
            try {
                item.response = complete(backend, requests[i], retry);
            } catch (const std::exception& e) {
                item.error = e.what();
            }
        }
    };

    std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(max_in_flight),
                                                  requests.size());
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
    for (auto& t : workers) t.join();

    std::sort(result.items.begin(), result.items.end(),
              [](const BatchItem& a, const BatchItem& b) { return a.id < b.id; });
    if (result.ok_count() == 0) {
        std::string first = result.items.front().error;
        throw BackendError("all " + std::to_string(requests.size()) +
                           " batch requests failed; first error: " + first);
    }
    return result;
}

}  // namespace absakit
