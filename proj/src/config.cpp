#include "dre/config.hpp"

#include <cmath>
#include <cstdlib>

#include "dre/jsonio.hpp"
#include "dre/logging.hpp"
#include "dre/util.hpp"

namespace dre::config {

std::string_view source_name(Source source) {
    switch (source) {
        case Source::defaults: return "defaults";
        case Source::file: return "file";
        case Source::flag: return "flag";
        case Source::environment: return "environment";
    }
    return "defaults";
}

const std::vector<std::string>& default_domains() {
    static const std::vector<std::string> domains{
        "Transportation", "Politics",          "Finance & Business",
        "History",        "Software Development", "Industrial",
        "Sports & Fitness", "Health",          "Science & Technology",
        "Education & Jobs",
    };
    return domains;
}

std::map<std::string, gateway::ModelProfile> default_profiles() {
    std::map<std::string, gateway::ModelProfile> profiles;

    gateway::ModelProfile judge;
    judge.provider_id = "gemini";
    judge.model_name = "gemini-2.5-pro";
    judge.temperature = 0.1;
    judge.seed = 42;
    judge.max_new_tokens = 8192;
    judge.max_context = 1'000'000;
    profiles["judge-default"] = judge;

    gateway::ModelProfile factcheck;
    factcheck.provider_id = "openai";
    factcheck.model_name = "gpt-5-mini";
    factcheck.temperature = 1.0;
    factcheck.max_new_tokens = 128'000;
    factcheck.max_context = 190'000;
    profiles["factcheck-default"] = factcheck;

    gateway::ModelProfile taskgen = factcheck;
    profiles["taskgen-default"] = taskgen;

    return profiles;
}

const gateway::ModelProfile& HarnessConfig::profile(const std::string& name) const {
    auto it = profiles.find(name);
    if (it == profiles.end()) {
        throw Error(ErrorCode::ConfigInvalid, "unknown model profile '" + name + "'");
    }
    return it->second;
}

json HarnessConfig::to_json() const {
    json profile_map = json::object();
    for (const auto& [name, p] : profiles) profile_map[name] = p.to_json();
    return json{{"domains", domains},
                {"personas_per_domain", personas_per_domain},
                {"tasks_per_persona", tasks_per_persona},
                {"qualification_threshold", qualification_threshold},
                {"quality_drop_threshold", quality_drop_threshold},
                {"taskgen_profile", taskgen_profile},
                {"judge_profile", judge_profile},
                {"factcheck_profile", factcheck_profile},
                {"max_turns", max_turns},
                {"max_tool_calls_per_turn", max_tool_calls_per_turn},
                {"cache_dir", cache_dir.string()},
                {"run_dir", run_dir.string()},
                {"workers", workers},
                {"base_seed", base_seed},
                {"provider", provider},
                {"requests_per_minute", requests_per_minute},
                {"page_byte_budget", page_byte_budget},
                {"log_level", log_level},
                {"profiles", profile_map}};
}

json HarnessConfig::provenance_json() const {
    json out = json::object();
    for (const auto& [field, source] : provenance) out[field] = std::string(source_name(source));
    return out;
}

namespace {

void apply_layer(HarnessConfig& config, const json& layer, Source source,
                 std::vector<std::string>& unknown) {
    auto mark = [&](const std::string& field) { config.provenance[field] = source; };
    for (const auto& [key, value] : layer.items()) {
        try {
            if (key == "domains") {
                config.domains.clear();
                for (const json& d : value) config.domains.push_back(d.get<std::string>());
                mark(key);
            } else if (key == "personas_per_domain") {
                config.personas_per_domain = value.get<int>();
                mark(key);
            } else if (key == "tasks_per_persona") {
                config.tasks_per_persona = value.get<int>();
                mark(key);
            } else if (key == "qualification_threshold") {
                config.qualification_threshold = value.get<double>();
                mark(key);
            } else if (key == "quality_drop_threshold") {
                config.quality_drop_threshold = value.get<double>();
                mark(key);
            } else if (key == "taskgen_profile") {
                config.taskgen_profile = value.get<std::string>();
                mark(key);
            } else if (key == "judge_profile") {
                config.judge_profile = value.get<std::string>();
                mark(key);
            } else if (key == "factcheck_profile") {
                config.factcheck_profile = value.get<std::string>();
                mark(key);
            } else if (key == "max_turns") {
                config.max_turns = value.get<int>();
                mark(key);
            } else if (key == "max_tool_calls_per_turn") {
                config.max_tool_calls_per_turn = value.get<int>();
                mark(key);
            } else if (key == "cache_dir") {
                config.cache_dir = value.get<std::string>();
                mark(key);
            } else if (key == "run_dir") {
                config.run_dir = value.get<std::string>();
                mark(key);
            } else if (key == "workers") {
                config.workers = value.get<int>();
                mark(key);
            } else if (key == "base_seed") {
                config.base_seed = value.get<long>();
                mark(key);
            } else if (key == "provider") {
                config.provider = value.get<std::string>();
                mark(key);
            } else if (key == "requests_per_minute") {
                config.requests_per_minute = value.get<double>();
                mark(key);
            } else if (key == "page_byte_budget") {
                config.page_byte_budget = value.get<long>();
                mark(key);
            } else if (key == "log_level") {
                config.log_level = value.get<std::string>();
                mark(key);
            } else if (key == "profiles") {
                if (!value.is_object()) throw json::type_error::create(302, "object expected", &value);
                for (const auto& [name, body] : value.items()) {
                    config.profiles[name] = gateway::ModelProfile::from_json(body);
                }
                mark(key);
            } else {
                unknown.push_back(key);
            }
        } catch (const json::exception&) {
            unknown.push_back(key + " (wrong type)");
        } catch (const Error&) {
            unknown.push_back(key + " (invalid value)");
        }
    }
}

}  // namespace

HarnessConfig resolve_config(const std::optional<std::filesystem::path>& file, const json& flags,
                             const std::map<std::string, std::string>& env) {
    HarnessConfig config;
    config.profiles = default_profiles();
    std::vector<std::string> problems;

    if (file.has_value()) {
        json body;
        try {
            body = jsonio::load_file(*file);
        } catch (const Error& e) {
            throw Error(ErrorCode::ConfigInvalid,
                        "config file '" + file->string() + "': " + e.what());
        }
        if (!body.is_object()) {
            throw Error(ErrorCode::ConfigInvalid,
                        "config file '" + file->string() + "' must hold a JSON object");
        }
        std::vector<std::string> unknown;
        apply_layer(config, body, Source::file, unknown);
        for (const std::string& field : unknown) problems.push_back("unknown field: " + field);
    }

    if (!flags.is_null()) {
        if (!flags.is_object()) {
            throw Error(ErrorCode::ConfigInvalid, "flag overrides must form a JSON object");
        }
        std::vector<std::string> unknown;
        apply_layer(config, flags, Source::flag, unknown);
        for (const std::string& field : unknown) problems.push_back("unknown flag: " + field);
    }

    if (auto it = env.find("DRE_CACHE_DIR"); it != env.end() && !it->second.empty()) {
        config.cache_dir = it->second;
        config.provenance["cache_dir"] = Source::environment;
    }
    if (auto it = env.find("DRE_RUN_DIR"); it != env.end() && !it->second.empty()) {
        config.run_dir = it->second;
        config.provenance["run_dir"] = Source::environment;
    }

    if (config.domains.empty()) problems.push_back("domains: list is empty");
    for (const std::string& d : config.domains) {
        if (util::trim(d).empty()) problems.push_back("domains: blank entry");
    }
    if (config.personas_per_domain < 1) problems.push_back("personas_per_domain: must be >= 1");
    if (config.tasks_per_persona < 1) problems.push_back("tasks_per_persona: must be >= 1");
    if (!(config.qualification_threshold >= 0.0 && config.qualification_threshold <= 1.0)) {
        problems.push_back("qualification_threshold: must lie in [0,1]");
    }
    if (!(config.quality_drop_threshold >= 0.0 && config.quality_drop_threshold <= 1.0)) {
        problems.push_back("quality_drop_threshold: must lie in [0,1]");
    }
    if (config.max_turns < 1) problems.push_back("max_turns: must be >= 1");
    if (config.max_tool_calls_per_turn < 1) {
        problems.push_back("max_tool_calls_per_turn: must be >= 1");
    }
    if (config.workers < 1) problems.push_back("workers: must be >= 1");
    if (config.requests_per_minute < 0.0 || !std::isfinite(config.requests_per_minute)) {
        problems.push_back("requests_per_minute: must be >= 0");
    }
    if (config.page_byte_budget < 1) problems.push_back("page_byte_budget: must be >= 1");
    if (config.provider != "live" && config.provider.rfind("mock:", 0) != 0) {
        problems.push_back("provider: must be 'live' or 'mock:<auto|script.json>'");
    }
    try {
        log::level_from_name(config.log_level);
    } catch (const Error&) {
        problems.push_back("log_level: must be debug/info/warn/error");
    }
    for (const std::string* name :
         {&config.taskgen_profile, &config.judge_profile, &config.factcheck_profile}) {
        if (config.profiles.find(*name) == config.profiles.end()) {
            problems.push_back("profiles: missing profile '" + *name + "'");
        }
    }

    if (!problems.empty()) {
        std::string message = "invalid configuration:";
        for (const std::string& p : problems) message += "\n  - " + p;
        throw Error(ErrorCode::ConfigInvalid, message);
    }
    return config;
}

std::map<std::string, std::string> env_from_process() {
    std::map<std::string, std::string> env;
    for (const char* name : {"DRE_CACHE_DIR", "DRE_RUN_DIR"}) {
        if (const char* value = std::getenv(name); value != nullptr) env[name] = value;
    }
    return env;
}

}  // namespace dre::config
