#include <httplib.h>
#include <json.hpp>

#include "armed/backend.hpp"
#include "armed/errors.hpp"

namespace armed {

namespace {

// Splits "scheme://host[:port]/path" into base and path.
void split_url(const std::string& url, std::string& base, std::string& path) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        raise(Errc::config_error, "backend url must include a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base = url;
        path = "/";
    } else {
        base = url.substr(0, path_start);
        path = url.substr(path_start);
    }
}

}  // namespace

HttpBackend::HttpBackend(std::string url, std::string token, std::chrono::milliseconds backoff)
    : token_(std::move(token)), backoff_(backoff) {
    split_url(url, base_, path_);
}

std::string HttpBackend::attempt(const BackendRequest& request) {
    httplib::Client client(base_);
    const auto timeout_s = std::max(1, request.params.timeout_ms / 1000);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_write_timeout(timeout_s, 0);

    nlohmann::ordered_json body = {
        {"role", role_name(request.role)},
        {"prompt", request.prompt},
        {"attachments", request.attachments},
        {"params",
         {{"timeout_ms", request.params.timeout_ms},
          {"temperature", request.params.temperature},
          {"max_retries", request.params.max_retries}}},
    };

    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        if (res.error() == httplib::Error::ConnectionTimeout ||
            res.error() == httplib::Error::Read || res.error() == httplib::Error::Write) {
            raise(Errc::timeout, "backend request timed out: " + base_);
        }
        raise(Errc::transport, "backend unreachable: " + base_);
    }
    if (res->status != 200) {
        raise(Errc::transport, "backend returned status " + std::to_string(res->status));
    }
    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("text") ||
        !doc["text"].is_string()) {
        raise(Errc::transport, "backend response missing text field");
    }
    return doc["text"].get<std::string>();
}

}  // namespace armed
