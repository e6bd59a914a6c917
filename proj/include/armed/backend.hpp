#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "armed/core.hpp"

namespace armed {

/// Model roles served by completion backends.
enum class Role {
    similarity,
    consistency,
    ner,
    cheating,
    standardize,
    extend,
    judge,
};

const char* role_name(Role role);
std::optional<Role> role_from_name(std::string_view name);

struct RequestParams {
    int timeout_ms = 30000;
    double temperature = 0.0;
    int max_retries = 2;
};

struct BackendRequest {
    Role role = Role::judge;
    std::string prompt;
    std::vector<std::string> attachments;  // opaque payload refs (e.g. image ids)
    RequestParams params;
};

struct BackendResponse {
    std::string text;
    std::int64_t latency_ms = 0;
    int attempt_count = 1;
};

/// Completion contract shared by every model call. complete() retries
/// transport-class failures up to params.max_retries with exponential backoff
/// (base * 2^k) and never returns an empty success for a failure.
/// Implementations must be safe for concurrent calls.
class CompletionBackend {
public:
    virtual ~CompletionBackend() = default;

    BackendResponse complete(const BackendRequest& request);

protected:
    virtual std::string attempt(const BackendRequest& request) = 0;
    virtual std::chrono::milliseconds backoff_base() const {
        return std::chrono::milliseconds(100);
    }
};

/// Deterministic mock driven by a prompt->response script. Exact matching by
/// default; prefix mode picks the longest scripted key that prefixes the
/// prompt. Transient failures can be scripted to exercise the retry path.
class ScriptedMockBackend : public CompletionBackend {
public:
    enum class Match { exact, prefix };

    explicit ScriptedMockBackend(Match match = Match::exact,
                                 std::chrono::milliseconds backoff = std::chrono::milliseconds(1));

    void script(const std::string& prompt, const std::string& response);
    /// The next `failures` calls hitting `prompt` throw TransportError.
    void script_transient_failures(const std::string& prompt, int failures);

    /// Script file: either a flat JSON object {prompt: response} (exact match)
    /// or {"match": "exact"|"prefix", "responses": {...}, "failures": {prompt: n}}.
    static std::shared_ptr<ScriptedMockBackend> from_file(const std::string& path);

    std::vector<std::string> call_log() const;

protected:
    std::string attempt(const BackendRequest& request) override;
    std::chrono::milliseconds backoff_base() const override { return backoff_; }

private:
    const std::string* resolve(const std::string& prompt) const;

    Match match_;
    std::chrono::milliseconds backoff_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> responses_;
    std::map<std::string, int> pending_failures_;
    std::vector<std::string> calls_;
};

/// POSTs {role, prompt, attachments, params} as JSON to the configured URL and
/// expects {"text": ...} back. A bearer token is attached when provided.
class HttpBackend : public CompletionBackend {
public:
    explicit HttpBackend(std::string url, std::string token = "",
                         std::chrono::milliseconds backoff = std::chrono::milliseconds(100));

protected:
    std::string attempt(const BackendRequest& request) override;
    std::chrono::milliseconds backoff_base() const override { return backoff_; }

private:
    std::string base_;  // scheme://host[:port]
    std::string path_;
    std::string token_;
    std::chrono::milliseconds backoff_;
};

/// Role -> backend registry used by the pipeline.
class BackendSet {
public:
    void set(Role role, std::shared_ptr<CompletionBackend> backend);
    bool has(Role role) const;
    CompletionBackend& require(Role role) const;  // throws NoBackendForRole

    BackendResponse complete(Role role, std::string prompt,
                             std::vector<std::string> attachments = {},
                             RequestParams params = {}) const;

private:
    std::map<Role, std::shared_ptr<CompletionBackend>> backends_;
};

struct ParsedResult {
    std::optional<RelevanceLevel> level;
    bool failed = true;
    std::string stripped_think;  // concatenated content of removed <think> blocks
    std::string raw;             // original text, kept for failure logging
};

/// Strips well-formed <think>...</think> blocks, then reads the LAST
/// <result>...</result> tag. The tag body is normalized and matched against
/// the four level names plus the synonyms "low relevance" (weakly) and
/// "less relevant" (moderately). No tag or no match -> failed. Never throws.
ParsedResult parse_result(std::string_view text);

}  // namespace armed
