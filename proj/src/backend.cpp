#include "armed/backend.hpp"

#include <fstream>
#include <thread>

#include <json.hpp>

#include "armed/errors.hpp"

namespace armed {

const char* role_name(Role role) {
    switch (role) {
        case Role::similarity: return "similarity";
        case Role::consistency: return "consistency";
        case Role::ner: return "ner";
        case Role::cheating: return "cheating";
        case Role::standardize: return "standardize";
        case Role::extend: return "extend";
        case Role::judge: return "judge";
    }
    return "judge";
}

std::optional<Role> role_from_name(std::string_view name) {
    if (name == "similarity") return Role::similarity;
    if (name == "consistency") return Role::consistency;
    if (name == "ner") return Role::ner;
    if (name == "cheating") return Role::cheating;
    if (name == "standardize") return Role::standardize;
    if (name == "extend") return Role::extend;
    if (name == "judge") return Role::judge;
    return std::nullopt;
}

BackendResponse CompletionBackend::complete(const BackendRequest& request) {
    if (request.prompt.empty()) raise(Errc::schema_error, "backend prompt must be non-empty");
    const int max_retries = std::max(0, request.params.max_retries);
    const auto start = std::chrono::steady_clock::now();
    for (int attempt_index = 0;; ++attempt_index) {
        try {
            std::string text = attempt(request);
            BackendResponse response;
            response.text = std::move(text);
            response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                      std::chrono::steady_clock::now() - start)
                                      .count();
            response.attempt_count = attempt_index + 1;
            return response;
        } catch (const Error& e) {
            if (!errc_retryable(e.code()) || attempt_index >= max_retries) throw;
            std::this_thread::sleep_for(backoff_base() * (1 << attempt_index));
        }
    }
}

ScriptedMockBackend::ScriptedMockBackend(Match match, std::chrono::milliseconds backoff)
    : match_(match), backoff_(backoff) {}

void ScriptedMockBackend::script(const std::string& prompt, const std::string& response) {
    std::lock_guard lock(mutex_);
    responses_[prompt] = response;
}

void ScriptedMockBackend::script_transient_failures(const std::string& prompt, int failures) {
    std::lock_guard lock(mutex_);
    pending_failures_[prompt] = failures;
}

const std::string* ScriptedMockBackend::resolve(const std::string& prompt) const {
    if (match_ == Match::exact) {
        auto it = responses_.find(prompt);
        return it == responses_.end() ? nullptr : &it->first;
    }
    // Longest scripted key that prefixes the prompt.
    const std::string* best = nullptr;
    for (const auto& [key, value] : responses_) {
        if (key.size() <= prompt.size() && prompt.compare(0, key.size(), key) == 0) {
            if (!best || key.size() > best->size()) best = &key;
        }
    }
    return best;
}

std::string ScriptedMockBackend::attempt(const BackendRequest& request) {
    std::lock_guard lock(mutex_);
    calls_.push_back(request.prompt);
    const std::string* key = resolve(request.prompt);
    if (key) {
        auto fail = pending_failures_.find(*key);
        if (fail != pending_failures_.end() && fail->second > 0) {
            --fail->second;
            raise(Errc::transport, "scripted transient failure for prompt");
        }
        return responses_.at(*key);
    }
    // Failures may be scripted for prompts without a response.
    auto fail = pending_failures_.find(request.prompt);
    if (fail != pending_failures_.end() && fail->second > 0) {
        --fail->second;
        raise(Errc::transport, "scripted transient failure for prompt");
    }
    raise(Errc::no_scripted_response,
          "no scripted response for prompt: " + request.prompt.substr(0, 120));
}

std::shared_ptr<ScriptedMockBackend> ScriptedMockBackend::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::io_error, "cannot open mock script: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) raise(Errc::parse_error, "mock script is not valid JSON: " + path);

    Match match = Match::exact;
    const nlohmann::json* responses = &doc;
    const nlohmann::json* failures = nullptr;
    if (doc.is_object() && doc.contains("responses")) {
        if (doc.value("match", "exact") == std::string("prefix")) match = Match::prefix;
        responses = &doc.at("responses");
        if (doc.contains("failures")) failures = &doc.at("failures");
    }
    if (!responses->is_object()) {
        raise(Errc::parse_error, "mock script must map prompts to responses: " + path);
    }
    auto backend = std::make_shared<ScriptedMockBackend>(match);
    for (auto it = responses->begin(); it != responses->end(); ++it) {
        if (!it.value().is_string()) {
            raise(Errc::parse_error, "mock response for prompt must be a string: " + path);
        }
        backend->script(it.key(), it.value().get<std::string>());
    }
    if (failures) {
        for (auto it = failures->begin(); it != failures->end(); ++it) {
            backend->script_transient_failures(it.key(), it.value().get<int>());
        }
    }
    return backend;
}

std::vector<std::string> ScriptedMockBackend::call_log() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

void BackendSet::set(Role role, std::shared_ptr<CompletionBackend> backend) {
    backends_[role] = std::move(backend);
}

bool BackendSet::has(Role role) const { return backends_.count(role) > 0; }

CompletionBackend& BackendSet::require(Role role) const {
    auto it = backends_.find(role);
    if (it == backends_.end() || !it->second) {
        raise(Errc::no_backend_for_role,
              std::string("no backend configured for role ") + role_name(role));
    }
    return *it->second;
}

BackendResponse BackendSet::complete(Role role, std::string prompt,
                                     std::vector<std::string> attachments,
                                     RequestParams params) const {
    BackendRequest request;
    request.role = role;
    request.prompt = std::move(prompt);
    request.attachments = std::move(attachments);
    request.params = params;
    return require(role).complete(request);
}

namespace {

std::optional<RelevanceLevel> level_from_tag_body(const std::string& normalized) {
    if (normalized == "highly relevant") return RelevanceLevel::highly_relevant;
    if (normalized == "moderately relevant") return RelevanceLevel::moderately_relevant;
    if (normalized == "weakly relevant") return RelevanceLevel::weakly_relevant;
    if (normalized == "irrelevant") return RelevanceLevel::irrelevant;
    // Synonyms the level names appear under elsewhere in prompts/labels.
    if (normalized == "low relevance") return RelevanceLevel::weakly_relevant;
    if (normalized == "less relevant") return RelevanceLevel::moderately_relevant;
    return std::nullopt;
}

}  // namespace

ParsedResult parse_result(std::string_view text) {
    static constexpr std::string_view kThinkOpen = "<think>";
    static constexpr std::string_view kThinkClose = "</think>";
    static constexpr std::string_view kResultOpen = "<result>";
    static constexpr std::string_view kResultClose = "</result>";

    ParsedResult result;
    result.raw.assign(text);

    std::string body;
    body.reserve(text.size());
    std::size_t pos = 0;
    while (true) {
        auto open = text.find(kThinkOpen, pos);
        if (open == std::string_view::npos) {
            body.append(text.substr(pos));
            break;
        }
        auto close = text.find(kThinkClose, open + kThinkOpen.size());
        if (close == std::string_view::npos) {
            // Unclosed block is not well-formed; keep it verbatim.
            body.append(text.substr(pos));
            break;
        }
        body.append(text.substr(pos, open - pos));
        result.stripped_think.append(
            text.substr(open + kThinkOpen.size(), close - open - kThinkOpen.size()));
        pos = close + kThinkClose.size();
    }

    std::optional<std::string> tag_body;
    std::size_t p = 0;
    while (true) {
        auto open = body.find(kResultOpen, p);
        if (open == std::string::npos) break;
        auto close = body.find(kResultClose, open + kResultOpen.size());
        if (close == std::string::npos) break;
        tag_body = body.substr(open + kResultOpen.size(), close - open - kResultOpen.size());
        p = close + kResultClose.size();
    }

    if (tag_body) result.level = level_from_tag_body(normalize_text(*tag_body));
    result.failed = !result.level.has_value();
    return result;
}

}  // namespace armed
