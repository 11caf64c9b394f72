#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dre/gateway.hpp"

namespace dre::config {

using nlohmann::json;

enum class Source { defaults, file, flag, environment };
std::string_view source_name(Source source);

const std::vector<std::string>& default_domains();

struct HarnessConfig {
    std::vector<std::string> domains = default_domains();
    int personas_per_domain = 5;
    int tasks_per_persona = 4;
    double qualification_threshold = 0.7;
    double quality_drop_threshold = 0.8;
    std::string taskgen_profile = "taskgen-default";
    std::string judge_profile = "judge-default";
    std::string factcheck_profile = "factcheck-default";
    int max_turns = 30;
    int max_tool_calls_per_turn = 10;
    std::filesystem::path cache_dir = "cache";
    std::filesystem::path run_dir = "runs";
    int workers = 4;
    long base_seed = 42;
    std::string provider = "live";
    double requests_per_minute = 0.0;
    long page_byte_budget = 200'000;
    std::string log_level = "warn";
    std::map<std::string, gateway::ModelProfile> profiles;

    // Where each field's final value came from.
    std::map<std::string, Source> provenance;

    const gateway::ModelProfile& profile(const std::string& name) const;
    json to_json() const;
    json provenance_json() const;
};

std::map<std::string, gateway::ModelProfile> default_profiles();

// Layered resolution, later layers win: defaults < file < flags < environment.
// `flags` holds only explicitly set values, keyed by field name. `env` is the
// process environment subset (DRE_CACHE_DIR, DRE_RUN_DIR); pass a custom map
// in tests.
HarnessConfig resolve_config(const std::optional<std::filesystem::path>& file,
                             const json& flags,
                             const std::map<std::string, std::string>& env);

std::map<std::string, std::string> env_from_process();

}  // namespace dre::config
