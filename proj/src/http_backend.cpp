#include <httplib.h>

#include <chrono>

#include "aquadapt/dispatch.hpp"
#include "aquadapt/error.hpp"
#include "aquadapt/genkit.hpp"

namespace aquadapt {

namespace {

struct Endpoint {
    std::string base;  // scheme://host:port
    std::string path;
};

Endpoint split_endpoint(const std::string& uri) {
    auto scheme = uri.find("://");
    if (scheme == std::string::npos) {
        fail(ErrorCode::ConfigError, "endpoint '" + uri + "' lacks a scheme");
    }
    auto slash = uri.find('/', scheme + 3);
    if (slash == std::string::npos) {
        return {uri, "/"};
    }
    return {uri.substr(0, slash), uri.substr(slash)};
}

}  // namespace

struct HttpBackend::Impl {
    Endpoint endpoint;
    RateLimiter limiter;
    std::optional<JsonlAppender> audit;

    Impl(const GeneratorRef& ref, const std::optional<std::filesystem::path>& audit_log)
        : endpoint(split_endpoint(ref.endpoint)),
          limiter(std::chrono::milliseconds(ref.min_interval_ms)) {
        if (audit_log) {
            audit.emplace(*audit_log);
        }
    }
};

HttpBackend::HttpBackend(GeneratorRef ref, std::optional<std::filesystem::path> audit_log)
    : ref_(std::move(ref)) {
    ref_.validate();
    impl_ = std::make_unique<Impl>(ref_, audit_log);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::complete(const BackendRequest& request) {
    impl_->limiter.acquire();
    httplib::Client client(impl_->endpoint.base);
    auto timeout = std::chrono::milliseconds(ref_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    httplib::Headers headers = {{"X-Model-Label", ref_.model_label},
                                {"X-Pair-Count", std::to_string(request.pair_count)}};
    auto result = client.Post(impl_->endpoint.path, headers, request.prompt, "text/plain");

    Json entry{{"model_label", ref_.model_label},
               {"endpoint", ref_.endpoint},
               {"request", request.prompt}};
    if (!result) {
        entry["error"] = httplib::to_string(result.error());
        if (impl_->audit) impl_->audit->append(entry);
        fail(ErrorCode::BackendUnavailable,
             ref_.endpoint + ": " + httplib::to_string(result.error()));
    }
    entry["status"] = result->status;
    entry["response"] = result->body;
    if (impl_->audit) impl_->audit->append(entry);
    if (result->status != 200) {
        fail(ErrorCode::BackendUnavailable,
             ref_.endpoint + " returned HTTP " + std::to_string(result->status));
    }
    return result->body;
}

}  // namespace aquadapt
