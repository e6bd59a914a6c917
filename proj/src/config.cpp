#include "armed/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "armed/errors.hpp"

namespace armed {

namespace {

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? value : "";
}

BackendEntryConfig entry_from_json(const nlohmann::json& doc,
                                   const std::filesystem::path& base_dir) {
    BackendEntryConfig entry;
    entry.url = doc.value("url", "");
    entry.token = doc.value("token", "");
    entry.mock_script = doc.value("mock_script", "");
    entry.prefix_match = doc.value("prefix_match", false);
    if (!entry.mock_script.empty()) {
        std::filesystem::path p(entry.mock_script);
        if (p.is_relative()) entry.mock_script = (base_dir / p).string();
    }
    return entry;
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) return;
    if (!std::filesystem::exists(path)) {
        raise(Errc::config_error, std::string(what) + " does not exist: " + path);
    }
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::config_error, "cannot open config: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        raise(Errc::config_error, "config is not a JSON object: " + path);
    }
    const std::filesystem::path base_dir = std::filesystem::path(path).parent_path();
    auto resolve = [&](std::string value) {
        if (value.empty()) return value;
        std::filesystem::path p(value);
        return p.is_relative() ? (base_dir / p).string() : value;
    };

    PipelineConfig config;
    config.tau = doc.value("tau", 0.7);
    config.lexicon_path = resolve(doc.value("lexicon", ""));
    config.rules_path = resolve(doc.value("rules", ""));
    config.image_attrs_path = resolve(doc.value("image_attrs", ""));
    config.prompts_path = resolve(doc.value("prompts", ""));
    if (doc.contains("evidence") && doc.at("evidence").is_object()) {
        const auto& evidence = doc.at("evidence");
        config.evidence_fixture = resolve(evidence.value("fixture", ""));
        config.evidence_url = evidence.value("url", "");
        config.evidence_token = evidence.value("token", "");
    }
    if (doc.contains("categories") && doc.at("categories").is_array()) {
        for (const auto& item : doc.at("categories")) {
            config.categories.push_back(item.get<std::string>());
        }
    }
    if (doc.contains("failed_policy")) {
        config.failed_policy = FailedPolicy::parse(doc.at("failed_policy").get<std::string>());
    }
    config.concurrency = doc.value("concurrency", 4);
    config.max_evidence_chars = doc.value("max_evidence_chars", std::size_t{2000});
    if (doc.contains("hard") && doc.at("hard").is_object()) {
        const auto& hard = doc.at("hard");
        config.hard.max_query_chars = hard.value("max_query_chars", std::size_t{6});
        config.hard.min_spu_chars = hard.value("min_spu_chars", std::size_t{20});
        config.hard.seed = hard.value("seed", std::uint64_t{0});
    }
    if (doc.contains("backends") && doc.at("backends").is_object()) {
        for (auto it = doc.at("backends").begin(); it != doc.at("backends").end(); ++it) {
            if (it.key() == "*") {
                config.backend_wildcard = entry_from_json(it.value(), base_dir);
                continue;
            }
            auto role = role_from_name(it.key());
            if (!role) raise(Errc::config_error, "unknown backend role: " + it.key());
            config.backends[*role] = entry_from_json(it.value(), base_dir);
        }
    }
    config.validate();
    return config;
}

void PipelineConfig::validate() const {
    if (tau < 0.0 || tau > 1.0) raise(Errc::config_error, "tau must be within [0, 1]");
    if (concurrency < 1) raise(Errc::config_error, "concurrency must be positive");
    require_file(lexicon_path, "lexicon file");
    require_file(rules_path, "rule file");
    require_file(evidence_fixture, "evidence fixture");
    require_file(image_attrs_path, "image attribute fixture");
    require_file(prompts_path, "prompt template file");
    for (const auto& [role, entry] : backends) {
        require_file(entry.mock_script, "mock script");
        if (!entry.mock_script.empty() && !entry.url.empty()) {
            raise(Errc::config_error,
                  std::string("backend for role ") + role_name(role) +
                      " must not set both url and mock_script");
        }
    }
    if (backend_wildcard) require_file(backend_wildcard->mock_script, "mock script");
}

BackendSet PipelineConfig::build_backends() const {
    BackendSet set;
    const std::string env_url = env_or_empty("ARMED_BACKEND_URL");
    const std::string env_token = env_or_empty("ARMED_BACKEND_TOKEN");

    // A wildcard mock script is shared across the roles it serves.
    std::shared_ptr<CompletionBackend> wildcard;
    if (backend_wildcard) {
        if (!backend_wildcard->mock_script.empty()) {
            auto mock = ScriptedMockBackend::from_file(backend_wildcard->mock_script);
            wildcard = mock;
        } else if (!backend_wildcard->url.empty()) {
            wildcard = std::make_shared<HttpBackend>(
                backend_wildcard->url,
                backend_wildcard->token.empty() ? env_token : backend_wildcard->token);
        }
    }

    for (Role role : {Role::similarity, Role::consistency, Role::ner, Role::cheating,
                      Role::standardize, Role::extend, Role::judge}) {
        auto it = backends.find(role);
        if (it != backends.end()) {
            const BackendEntryConfig& entry = it->second;
            if (!entry.mock_script.empty()) {
                set.set(role, ScriptedMockBackend::from_file(entry.mock_script));
            } else {
                std::string url = entry.url.empty() ? env_url : entry.url;
                if (url.empty()) {
                    raise(Errc::config_error,
                          std::string("backend for role ") + role_name(role) +
                              " has neither url nor mock_script and ARMED_BACKEND_URL is unset");
                }
                set.set(role, std::make_shared<HttpBackend>(
                                  url, entry.token.empty() ? env_token : entry.token));
            }
        } else if (wildcard) {
            set.set(role, wildcard);
        } else if (!env_url.empty()) {
            set.set(role, std::make_shared<HttpBackend>(env_url, env_token));
        }
        // No entry, no wildcard, no env default: the role stays unserved and
        // pipeline stages degrade per their contracts.
    }
    return set;
}

}  // namespace armed
