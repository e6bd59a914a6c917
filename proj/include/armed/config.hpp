#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "armed/backend.hpp"
#include "armed/eval.hpp"

namespace armed {

struct BackendEntryConfig {
    std::string url;          // HTTP backend when set
    std::string token;
    std::string mock_script;  // scripted mock when set
    bool prefix_match = false;
};

/// Pipeline configuration, loadable from a JSON file. Relative paths resolve
/// against the config file's directory. ARMED_BACKEND_URL / ARMED_BACKEND_TOKEN
/// provide endpoint defaults for roles without an explicit entry.
struct PipelineConfig {
    double tau = 0.7;
    std::string lexicon_path;
    std::string rules_path;
    std::string evidence_fixture;
    std::string evidence_url;
    std::string evidence_token;
    std::string image_attrs_path;
    std::string prompts_path;
    std::vector<std::string> categories;  // empty -> default vocabulary
    FailedPolicy failed_policy;           // default: default_highly
    int concurrency = 4;
    std::size_t max_evidence_chars = 2000;
    HardParams hard;
    std::map<Role, BackendEntryConfig> backends;
    std::optional<BackendEntryConfig> backend_wildcard;  // "*" entry

    static PipelineConfig load(const std::string& path);

    /// Throws ConfigError on out-of-range tau, bad concurrency or missing files.
    void validate() const;

    /// Builds the role registry from the entries plus env-var defaults.
    BackendSet build_backends() const;
};

}  // namespace armed
