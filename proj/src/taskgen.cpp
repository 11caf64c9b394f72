#include "dre/taskgen.hpp"

#include <algorithm>
#include <set>

#include "dre/jsonio.hpp"
#include "dre/prompts.hpp"
#include "dre/util.hpp"

namespace dre::taskgen {

using gateway::Message;
using gateway::Role;

json Persona::to_json() const {
    return json{{"domain", domain},         {"name", name},
                {"role", role},             {"affiliation", affiliation},
                {"background", background}, {"subdomain", subdomain}};
}

Persona Persona::from_json(const json& value) {
    Persona p;
    p.domain = jsonio::require_string(value, "domain", "persona");
    p.name = jsonio::require_string(value, "name", "persona");
    p.role = jsonio::require_string(value, "role", "persona");
    p.affiliation = jsonio::require_string(value, "affiliation", "persona");
    p.background = jsonio::require_string(value, "background", "persona");
    p.subdomain = jsonio::require_string(value, "subdomain", "persona");
    return p;
}

json TaskCandidate::to_json() const {
    json j{{"task_id", task_id},
           {"persona_ref", persona_ref},
           {"query", query},
           {"key_challenges", key_challenges},
           {"expected_search_rounds", expected_search_rounds},
           {"time_sensitivity", time_sensitivity}};
    j["time_constraint"] = time_constraint.has_value() ? json(*time_constraint) : json(nullptr);
    return j;
}

TaskCandidate TaskCandidate::from_json(const json& value) {
    TaskCandidate c;
    c.task_id = jsonio::require_string(value, "task_id", "candidate");
    c.persona_ref = jsonio::require_string(value, "persona_ref", "candidate");
    c.query = jsonio::require_string(value, "query", "candidate");
    c.key_challenges = value.value("key_challenges", "");
    c.expected_search_rounds =
        static_cast<int>(jsonio::require_number(value, "expected_search_rounds", "candidate"));
    c.time_sensitivity = jsonio::require_bool(value, "time_sensitivity", "candidate");
    if (const json* t = jsonio::find_key(value, "time_constraint"); t != nullptr && t->is_string()) {
        c.time_constraint = t->get<std::string>();
    }
    return c;
}

json QualificationVerdict::to_json() const {
    return json{{"task_id", task_id},
                {"needs_deep_research", needs_deep_research},
                {"confidence_score", confidence_score},
                {"reasoning", reasoning},
                {"search_complexity", search_complexity},
                {"information_sources_needed", information_sources_needed},
                {"latest_info_required", latest_info_required},
                {"cross_domain_integration", cross_domain_integration}};
}

QualificationVerdict QualificationVerdict::from_json(const json& value) {
    QualificationVerdict v;
    v.task_id = jsonio::require_string(value, "task_id", "verdict");
    v.needs_deep_research = jsonio::require_bool(value, "needs_deep_research", "verdict");
    v.confidence_score = jsonio::require_number(value, "confidence_score", "verdict");
    v.reasoning = value.value("reasoning", "");
    v.search_complexity = value.value("search_complexity", "");
    if (const json* s = jsonio::find_key(value, "information_sources_needed");
        s != nullptr && s->is_array()) {
        for (const json& item : *s) {
            if (item.is_string()) v.information_sources_needed.push_back(item.get<std::string>());
        }
    }
    v.latest_info_required = value.value("latest_info_required", false);
    v.cross_domain_integration = value.value("cross_domain_integration", false);
    return v;
}

json BaselineAssessment::to_json() const {
    return json{{"task_id", task_id},
                {"overall_quality", overall_quality},
                {"quality_score", quality_score},
                {"completeness_score", completeness_score},
                {"accuracy_score", accuracy_score},
                {"depth_score", depth_score},
                {"timeliness_score", timeliness_score},
                {"accuracy_concerns", accuracy_concerns},
                {"missing_aspects", missing_aspects},
                {"outdated_info", outdated_info},
                {"requires_search", requires_search},
                {"search_necessity_reasoning", search_necessity_reasoning}};
}

BaselineAssessment BaselineAssessment::from_json(const json& value) {
    BaselineAssessment a;
    a.task_id = jsonio::require_string(value, "task_id", "assessment");
    a.overall_quality = value.value("overall_quality", "");
    a.quality_score = jsonio::require_number(value, "quality_score", "assessment");
    a.completeness_score = value.value("completeness_score", 0.0);
    a.accuracy_score = value.value("accuracy_score", 0.0);
    a.depth_score = value.value("depth_score", 0.0);
    a.timeliness_score = value.value("timeliness_score", 0.0);
    a.accuracy_concerns = value.value("accuracy_concerns", "");
    a.missing_aspects = value.value("missing_aspects", "");
    a.outdated_info = value.value("outdated_info", "");
    a.requires_search = jsonio::require_bool(value, "requires_search", "assessment");
    a.search_necessity_reasoning = value.value("search_necessity_reasoning", "");
    return a;
}

json TaskSet::to_json() const {
    json personas_json = json::array();
    for (const Persona& p : personas) personas_json.push_back(p.to_json());
    json candidates_json = json::array();
    for (const TaskCandidate& c : candidates) candidates_json.push_back(c.to_json());
    json verdicts_json = json::object();
    for (const auto& [id, v] : verdicts) verdicts_json[id] = v.to_json();
    json assessments_json = json::object();
    for (const auto& [id, a] : assessments) assessments_json[id] = a.to_json();
    json baselines_json = json::object();
    for (const auto& [id, b] : baselines) baselines_json[id] = b;
    return json{{"run_ref", run_ref},
                {"personas", personas_json},
                {"candidates", candidates_json},
                {"verdicts", verdicts_json},
                {"assessments", assessments_json},
                {"baselines", baselines_json},
                {"retained", retained}};
}

TaskSet TaskSet::from_json(const json& value) {
    TaskSet set;
    set.run_ref = value.value("run_ref", "");
    for (const json& p : jsonio::require_array(value, "personas", "taskset")) {
        set.personas.push_back(Persona::from_json(p));
    }
    for (const json& c : jsonio::require_array(value, "candidates", "taskset")) {
        set.candidates.push_back(TaskCandidate::from_json(c));
    }
    if (const json* v = jsonio::find_key(value, "verdicts")) {
        for (const auto& [id, item] : v->items()) {
            set.verdicts[id] = QualificationVerdict::from_json(item);
        }
    }
    if (const json* a = jsonio::find_key(value, "assessments")) {
        for (const auto& [id, item] : a->items()) {
            set.assessments[id] = BaselineAssessment::from_json(item);
        }
    }
    if (const json* b = jsonio::find_key(value, "baselines")) {
        for (const auto& [id, item] : b->items()) set.baselines[id] = item.get<std::string>();
    }
    if (const json* r = jsonio::find_key(value, "retained")) {
        for (const json& id : *r) set.retained.push_back(id.get<std::string>());
    }
    return set;
}

const TaskCandidate* TaskSet::find_candidate(const std::string& task_id) const {
    for (const TaskCandidate& c : candidates) {
        if (c.task_id == task_id) return &c;
    }
    return nullptr;
}

const Persona* TaskSet::find_persona(const std::string& name) const {
    for (const Persona& p : personas) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::vector<std::string> retain_qualified(
    const std::map<std::string, QualificationVerdict>& verdicts, double threshold) {
    std::vector<std::string> retained;
    for (const auto& [id, verdict] : verdicts) {
        if (verdict.needs_deep_research && verdict.confidence_score > threshold) {
            retained.push_back(id);
        }
    }
    return retained;
}

std::vector<std::string> filter_search_necessity(
    const std::map<std::string, BaselineAssessment>& assessments, double theta_q) {
    std::vector<std::string> survivors;
    for (const auto& [id, assessment] : assessments) {
        if (assessment.requires_search && assessment.quality_score < theta_q) {
            survivors.push_back(id);
        }
    }
    return survivors;
}

namespace {

constexpr const char* kShortfall = "shortfall:";

std::string normalize_complexity(const std::string& raw) {
    std::string lower = util::to_lower(util::trim(raw));
    if (lower == "high") return "High";
    if (lower == "medium") return "Medium";
    if (lower == "low") return "Low";
    throw Error(ErrorCode::MalformedOutput,
                "search_complexity must be High/Medium/Low, got '" + raw + "'");
}

double require_unit_interval(const json& object, const char* key, const char* context) {
    double value = jsonio::require_number(object, key, context);
    if (value < 0.0 || value > 1.0) {
        throw Error(ErrorCode::MalformedOutput, std::string(context) + ": " + key + " value " +
                                                    std::to_string(value) + " outside [0,1]");
    }
    return value;
}

}  // namespace

std::vector<Persona> TaskGenerator::synthesize_personas(const std::string& domain, int n) {
    if (util::trim(domain).empty()) {
        throw Error(ErrorCode::DomainUnknown, "domain name is blank");
    }
    if (n < 1) throw Error(ErrorCode::Precondition, "persona count must be >= 1");

    std::vector<Message> messages{{Role::user, prompts::persona_generation(domain, n)}};
    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        const json& list = jsonio::require_array(value, "personas", "persona response");
        std::vector<Persona> personas;
        std::set<std::string> names;
        for (const json& item : list) {
            Persona p;
            p.domain = domain;
            p.name = jsonio::require_string(item, "name", "persona response");
            p.role = jsonio::require_string(item, "role", "persona response");
            p.affiliation = jsonio::require_string(item, "affiliation", "persona response");
            p.background = jsonio::require_string(item, "background", "persona response");
            p.subdomain = jsonio::require_string(item, "subdomain", "persona response");
            if (!names.insert(p.name).second) {
                throw Error(ErrorCode::MalformedOutput,
                            "duplicate persona name '" + p.name + "' in one domain");
            }
            personas.push_back(std::move(p));
        }
        if (static_cast<int>(personas.size()) < n) {
            throw Error(ErrorCode::MalformedOutput,
                        "persona response returned " + std::to_string(personas.size()) +
                            " personas, expected " + std::to_string(n),
                        kShortfall + std::to_string(personas.size()));
        }
        return personas;
    };

    std::vector<Persona> personas;
    try {
        personas = gateway::complete_with_retry(gw_, model_, messages, parse);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedOutput && e.detail().rfind(kShortfall, 0) == 0) {
            throw Error(ErrorCode::PartialGeneration,
                        "persona generation for '" + domain + "' produced " +
                            e.detail().substr(std::string(kShortfall).size()) + " of " +
                            std::to_string(n) + " requested personas");
        }
        throw;
    }
    if (static_cast<int>(personas.size()) > n) {
        warnings_.add("persona_overflow", "domain:" + domain,
                      "model returned " + std::to_string(personas.size()) +
                          " personas, truncated to " + std::to_string(n));
        personas.resize(static_cast<size_t>(n));
    }
    return personas;
}

std::vector<TaskCandidate> TaskGenerator::generate_tasks(const Persona& persona, int m) {
    if (m < 1) throw Error(ErrorCode::Precondition, "task count must be >= 1");

    std::vector<Message> messages{{Role::user, prompts::task_generation(persona.to_json(), m)}};
    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        const json& list = jsonio::require_array(value, "tasks", "task response");
        std::vector<TaskCandidate> tasks;
        std::set<std::string> ids;
        for (const json& item : list) {
            TaskCandidate c;
            c.task_id = jsonio::require_string(item, "task_id", "task response");
            c.persona_ref = persona.name;
            c.query = jsonio::require_string(item, "deep_research_query", "task response");
            c.key_challenges = jsonio::require_string(item, "key_challenges", "task response");
            c.expected_search_rounds = static_cast<int>(
                jsonio::require_number(item, "expected_search_rounds", "task response"));
            if (c.expected_search_rounds < 1) {
                throw Error(ErrorCode::MalformedOutput, "expected_search_rounds must be >= 1");
            }
            c.time_sensitivity = jsonio::require_bool(item, "time_sensitivity", "task response");
            if (const json* t = jsonio::find_key(item, "time_constraint");
                t != nullptr && t->is_string()) {
                c.time_constraint = t->get<std::string>();
            }
            if (!ids.insert(c.task_id).second) {
                throw Error(ErrorCode::MalformedOutput, "duplicate task_id '" + c.task_id + "'");
            }
            tasks.push_back(std::move(c));
        }
        if (static_cast<int>(tasks.size()) < m) {
            throw Error(ErrorCode::MalformedOutput,
                        "task response returned " + std::to_string(tasks.size()) +
                            " tasks, expected " + std::to_string(m),
                        kShortfall + std::to_string(tasks.size()));
        }
        return tasks;
    };

    std::vector<TaskCandidate> tasks;
    try {
        tasks = gateway::complete_with_retry(gw_, model_, messages, parse);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedOutput && e.detail().rfind(kShortfall, 0) == 0) {
            throw Error(ErrorCode::PartialGeneration,
                        "task generation for persona '" + persona.name + "' produced " +
                            e.detail().substr(std::string(kShortfall).size()) + " of " +
                            std::to_string(m) + " requested tasks");
        }
        throw;
    }
    if (static_cast<int>(tasks.size()) > m) {
        warnings_.add("task_overflow", "persona:" + persona.name,
                      "model returned " + std::to_string(tasks.size()) + " tasks, truncated to " +
                          std::to_string(m));
        tasks.resize(static_cast<size_t>(m));
    }

    for (TaskCandidate& task : tasks) {
        // Time fields must agree; repair toward the weaker claim.
        if (task.time_sensitivity && !task.time_constraint.has_value()) {
            task.time_sensitivity = false;
            warnings_.add("time_repair", "task:" + task.task_id,
                          "time_sensitivity set without time_constraint; cleared flag");
        } else if (!task.time_sensitivity && task.time_constraint.has_value()) {
            task.time_constraint.reset();
            warnings_.add("time_repair", "task:" + task.task_id,
                          "time_constraint present without time_sensitivity; dropped constraint");
        }
        int words = util::count_words(task.query);
        if (words < 10 || words > 50) {
            warnings_.add("query_length", "task:" + task.task_id,
                          "query word count " + std::to_string(words) + " outside 10-50");
        }
    }
    return tasks;
}

QualificationVerdict TaskGenerator::qualify_task(const TaskCandidate& candidate,
                                                 const Persona& persona) {
    std::vector<Message> messages{
        {Role::user,
         prompts::task_qualification(candidate.query, persona.background, candidate.key_challenges)}};
    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        QualificationVerdict v;
        v.task_id = candidate.task_id;
        v.needs_deep_research = jsonio::require_bool(value, "needs_deep_research", "verdict");
        v.confidence_score = require_unit_interval(value, "confidence_score", "verdict");
        v.reasoning = jsonio::require_string(value, "reasoning", "verdict");
        if (util::trim(v.reasoning).empty()) {
            throw Error(ErrorCode::MalformedOutput, "verdict: reasoning is empty");
        }
        v.search_complexity =
            normalize_complexity(jsonio::require_string(value, "search_complexity", "verdict"));
        for (const json& s : jsonio::require_array(value, "information_sources_needed", "verdict")) {
            if (!s.is_string()) {
                throw Error(ErrorCode::MalformedOutput,
                            "verdict: information_sources_needed entries must be strings");
            }
            v.information_sources_needed.push_back(s.get<std::string>());
        }
        v.latest_info_required = jsonio::require_bool(value, "latest_info_required", "verdict");
        v.cross_domain_integration =
            jsonio::require_bool(value, "cross_domain_integration", "verdict");
        return v;
    };
    return gateway::complete_with_retry(gw_, model_, messages, parse);
}

std::string TaskGenerator::baseline_answer(const TaskCandidate& candidate, const Persona& persona) {
    std::vector<Message> messages{
        {Role::user, prompts::baseline_answer(candidate.query, persona.background)}};
    std::string answer;
    try {
        answer = gw_.complete(model_, messages).response_text;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ProviderUnavailable && e.detail() == "empty_response") {
            throw Error(ErrorCode::EmptyBaseline,
                        "baseline answer for task '" + candidate.task_id + "' is empty");
        }
        throw;
    }
    if (util::trim(answer).empty()) {
        throw Error(ErrorCode::EmptyBaseline,
                    "baseline answer for task '" + candidate.task_id + "' is blank");
    }
    return answer;
}

BaselineAssessment TaskGenerator::assess_baseline(const TaskCandidate& candidate,
                                                  const std::string& answer,
                                                  const Persona& persona) {
    if (util::trim(answer).empty()) {
        throw Error(ErrorCode::Precondition, "assess_baseline: empty baseline answer");
    }
    std::vector<Message> messages{
        {Role::user, prompts::baseline_assessment(candidate.query, candidate.key_challenges,
                                                  persona.background, answer)}};
    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        BaselineAssessment a;
        a.task_id = candidate.task_id;
        a.overall_quality =
            util::to_lower(jsonio::require_string(value, "overall_quality", "assessment"));
        a.quality_score = require_unit_interval(value, "quality_score", "assessment");
        a.completeness_score = require_unit_interval(value, "completeness_score", "assessment");
        a.accuracy_score = require_unit_interval(value, "accuracy_score", "assessment");
        a.depth_score = require_unit_interval(value, "depth_score", "assessment");
        a.timeliness_score = require_unit_interval(value, "timeliness_score", "assessment");
        a.accuracy_concerns = value.value("accuracy_concerns", "");
        a.missing_aspects = value.value("missing_aspects", "");
        a.outdated_info = value.value("outdated_info", "");
        a.requires_search = jsonio::require_bool(value, "requires_search", "assessment");
        a.search_necessity_reasoning =
            jsonio::require_string(value, "search_necessity_reasoning", "assessment");
        return a;
    };
    return gateway::complete_with_retry(gw_, model_, messages, parse);
}

TaskSet TaskGenerator::run_pipeline(const TaskGenOptions& options, const std::string& run_ref) {
    if (options.domains.empty()) {
        throw Error(ErrorCode::Precondition, "pipeline: no domains configured");
    }
    for (const std::string& domain : options.domains) {
        if (util::trim(domain).empty()) {
            throw Error(ErrorCode::DomainUnknown, "pipeline: blank domain name");
        }
    }

    TaskSet set;
    set.run_ref = run_ref;

    auto persona_results = util::parallel_map(
        options.domains, options.workers,
        [&](const std::string& domain) { return synthesize_personas(domain, options.personas_per_domain); });
    for (size_t i = 0; i < options.domains.size(); ++i) {
        if (persona_results[i].ok()) {
            for (Persona& p : *persona_results[i].value) set.personas.push_back(std::move(p));
        } else {
            rethrow_if_fatal(*persona_results[i].error);
            warnings_.add("domain_failed", "domain:" + options.domains[i],
                          persona_results[i].error->what());
        }
    }

    auto task_results = util::parallel_map(set.personas, options.workers, [&](const Persona& p) {
        return generate_tasks(p, options.tasks_per_persona);
    });
    for (size_t i = 0; i < set.personas.size(); ++i) {
        const Persona& persona = set.personas[i];
        if (!task_results[i].ok()) {
            rethrow_if_fatal(*task_results[i].error);
            warnings_.add("persona_tasks_failed", "persona:" + persona.name,
                          task_results[i].error->what());
            continue;
        }
        for (TaskCandidate& task : *task_results[i].value) {
            // Model-issued ids repeat per persona; qualify them for set-wide
            // uniqueness.
            task.task_id = util::slugify(persona.domain) + "." + util::slugify(persona.name) + "." +
                           task.task_id;
            set.candidates.push_back(std::move(task));
        }
    }

    auto persona_of = [&](const TaskCandidate& task) -> const Persona& {
        for (const Persona& p : set.personas) {
            if (p.name == task.persona_ref) return p;
        }
        throw Error(ErrorCode::Internal, "candidate with unknown persona_ref " + task.persona_ref);
    };

    auto verdict_results = util::parallel_map(
        set.candidates, options.workers,
        [&](const TaskCandidate& task) { return qualify_task(task, persona_of(task)); });
    for (size_t i = 0; i < set.candidates.size(); ++i) {
        if (verdict_results[i].ok()) {
            set.verdicts[set.candidates[i].task_id] = *verdict_results[i].value;
        } else {
            rethrow_if_fatal(*verdict_results[i].error);
            warnings_.add("qualification_failed", "task:" + set.candidates[i].task_id,
                          verdict_results[i].error->what());
        }
    }

    std::vector<std::string> qualified =
        retain_qualified(set.verdicts, options.qualification_threshold);

    struct BaselinePair {
        std::string answer;
        BaselineAssessment assessment;
    };
    auto baseline_results = util::parallel_map(qualified, options.workers, [&](const std::string& id) {
        const TaskCandidate* task = set.find_candidate(id);
        if (task == nullptr) throw Error(ErrorCode::Internal, "qualified id missing candidate");
        const Persona& persona = persona_of(*task);
        BaselinePair pair;
        pair.answer = baseline_answer(*task, persona);
        pair.assessment = assess_baseline(*task, pair.answer, persona);
        return pair;
    });
    for (size_t i = 0; i < qualified.size(); ++i) {
        if (baseline_results[i].ok()) {
            set.baselines[qualified[i]] = baseline_results[i].value->answer;
            set.assessments[qualified[i]] = baseline_results[i].value->assessment;
        } else {
            rethrow_if_fatal(*baseline_results[i].error);
            warnings_.add("baseline_failed", "task:" + qualified[i],
                          baseline_results[i].error->what());
        }
    }

    std::vector<std::string> survivors =
        filter_search_necessity(set.assessments, options.quality_drop_threshold);

    if (options.ranking.has_value()) {
        std::set<std::string> pool(survivors.begin(), survivors.end());
        std::vector<std::string> ranked;
        for (const std::string& id : *options.ranking) {
            if (pool.count(id) != 0) {
                ranked.push_back(id);
            } else {
                warnings_.add("ranking_unknown_task", "task:" + id,
                              "ranked id not among surviving tasks");
            }
        }
        set.retained = std::move(ranked);
    } else {
        set.retained = std::move(survivors);
    }

    if (set.retained.empty()) {
        throw Error(ErrorCode::PipelineEmpty, "no tasks survived the generation pipeline");
    }
    return set;
}

}  // namespace dre::taskgen
