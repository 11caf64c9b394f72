#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dre/gateway.hpp"
#include "dre/logging.hpp"

namespace dre::taskgen {

using nlohmann::json;

struct Persona {
    std::string domain;
    std::string name;
    std::string role;
    std::string affiliation;
    std::string background;
    std::string subdomain;

    json to_json() const;
    static Persona from_json(const json& value);
};

struct TaskCandidate {
    std::string task_id;
    std::string persona_ref;
    std::string query;
    std::string key_challenges;
    int expected_search_rounds = 0;
    bool time_sensitivity = false;
    std::optional<std::string> time_constraint;

    json to_json() const;
    static TaskCandidate from_json(const json& value);
};

struct QualificationVerdict {
    std::string task_id;
    bool needs_deep_research = false;
    double confidence_score = 0.0;
    std::string reasoning;
    std::string search_complexity;  // High | Medium | Low
    std::vector<std::string> information_sources_needed;
    bool latest_info_required = false;
    bool cross_domain_integration = false;

    json to_json() const;
    static QualificationVerdict from_json(const json& value);
};

struct BaselineAssessment {
    std::string task_id;
    std::string overall_quality;  // lower-cased
    double quality_score = 0.0;
    double completeness_score = 0.0;
    double accuracy_score = 0.0;
    double depth_score = 0.0;
    double timeliness_score = 0.0;
    std::string accuracy_concerns;
    std::string missing_aspects;
    std::string outdated_info;
    bool requires_search = false;
    std::string search_necessity_reasoning;

    json to_json() const;
    static BaselineAssessment from_json(const json& value);
};

struct TaskSet {
    std::string run_ref;
    std::vector<Persona> personas;
    std::vector<TaskCandidate> candidates;
    std::map<std::string, QualificationVerdict> verdicts;
    std::map<std::string, BaselineAssessment> assessments;
    std::map<std::string, std::string> baselines;
    std::vector<std::string> retained;

    json to_json() const;
    static TaskSet from_json(const json& value);
    const TaskCandidate* find_candidate(const std::string& task_id) const;
    const Persona* find_persona(const std::string& name) const;
};

struct TaskGenOptions {
    std::vector<std::string> domains;
    int personas_per_domain = 5;
    int tasks_per_persona = 4;
    double qualification_threshold = 0.7;
    double quality_drop_threshold = 0.8;
    int workers = 4;
    std::optional<std::vector<std::string>> ranking;  // ordered task_id subset
};

// Tasks pass qualification only with needs_deep_research AND confidence
// strictly above the threshold.
std::vector<std::string> retain_qualified(
    const std::map<std::string, QualificationVerdict>& verdicts, double threshold);

// A task is dropped iff the baseline needed no search OR already answered
// well (quality_score >= theta_q).
std::vector<std::string> filter_search_necessity(
    const std::map<std::string, BaselineAssessment>& assessments, double theta_q);

class TaskGenerator {
public:
    TaskGenerator(gateway::Gateway& gw, gateway::ModelProfile model, log::WarningLog& warnings)
        : gw_(gw), model_(std::move(model)), warnings_(warnings) {}

    std::vector<Persona> synthesize_personas(const std::string& domain, int n);
    std::vector<TaskCandidate> generate_tasks(const Persona& persona, int m);
    QualificationVerdict qualify_task(const TaskCandidate& candidate, const Persona& persona);
    std::string baseline_answer(const TaskCandidate& candidate, const Persona& persona);
    BaselineAssessment assess_baseline(const TaskCandidate& candidate, const std::string& answer,
                                       const Persona& persona);

    TaskSet run_pipeline(const TaskGenOptions& options, const std::string& run_ref);

private:
    gateway::Gateway& gw_;
    gateway::ModelProfile model_;
    log::WarningLog& warnings_;
};

}  // namespace dre::taskgen
