#include "dre/quality.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dre/jsonio.hpp"
#include "dre/prompts.hpp"
#include "dre/util.hpp"

namespace dre::quality {

using gateway::Message;
using gateway::Role;

namespace {

constexpr double kSumTolerance = 1e-9;

double round2(double value) { return std::round(value * 100.0) / 100.0; }

std::string kind_name(DimensionKind kind) {
    return kind == DimensionKind::general ? "general" : "task_specific";
}

DimensionKind kind_from_name(const std::string& name) {
    if (name == "general") return DimensionKind::general;
    if (name == "task_specific") return DimensionKind::task_specific;
    throw Error(ErrorCode::MalformedOutput, "unknown dimension kind '" + name + "'");
}

// Dimension names compare case-insensitively with collapsed separators.
std::string normalize_name(const std::string& name) {
    std::string out = util::to_lower(util::trim(name));
    std::replace(out.begin(), out.end(), '_', ' ');
    return util::normalize_whitespace(out);
}

const std::set<std::string>& reserved_names() {
    static const std::set<std::string> names{"coverage", "insight", "instruction following",
                                             "clarity"};
    return names;
}

bool factuality_like(const std::string& normalized) {
    return normalized.find("factual") != std::string::npos ||
           normalized.find("accuracy of facts") != std::string::npos;
}

json dimensions_to_prompt_json(const std::vector<MetaDimension>& dimensions) {
    json out = json::array();
    for (const MetaDimension& d : dimensions) {
        out.push_back(json{{"meta_dimension_name", d.name}, {"definition", d.definition}});
    }
    return out;
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (const std::string& n : names) {
        if (!out.empty()) out += ", ";
        out += "'" + n + "'";
    }
    return out;
}

}  // namespace

json MetaDimension::to_json() const {
    json criteria_json = json::array();
    for (const Criterion& c : criteria) {
        criteria_json.push_back(
            json{{"criterion", c.text}, {"explanation", c.explanation}, {"weight", c.weight}});
    }
    return json{{"name", name},
                {"definition", definition},
                {"kind", kind_name(kind)},
                {"weight", weight},
                {"criteria", criteria_json}};
}

MetaDimension MetaDimension::from_json(const json& value) {
    MetaDimension d;
    d.name = jsonio::require_string(value, "name", "dimension");
    d.definition = jsonio::require_string(value, "definition", "dimension");
    d.kind = kind_from_name(jsonio::require_string(value, "kind", "dimension"));
    d.weight = jsonio::require_number(value, "weight", "dimension");
    for (const json& c : jsonio::require_array(value, "criteria", "dimension")) {
        Criterion criterion;
        criterion.text = jsonio::require_string(c, "criterion", "criterion");
        criterion.explanation = c.value("explanation", "");
        criterion.weight = jsonio::require_number(c, "weight", "criterion");
        d.criteria.push_back(std::move(criterion));
    }
    return d;
}

json Rubric::to_json() const {
    json dims = json::array();
    for (const MetaDimension& d : dimensions) dims.push_back(d.to_json());
    return json{{"task_ref", task_ref},
                {"dimensions", dims},
                {"judge_profile", judge_profile.to_json()}};
}

Rubric Rubric::from_json(const json& value) {
    Rubric r;
    r.task_ref = jsonio::require_string(value, "task_ref", "rubric");
    for (const json& d : jsonio::require_array(value, "dimensions", "rubric")) {
        r.dimensions.push_back(MetaDimension::from_json(d));
    }
    if (const json* p = jsonio::find_key(value, "judge_profile")) {
        r.judge_profile = gateway::ModelProfile::from_json(*p);
    }
    return r;
}

void Rubric::validate() const {
    if (dimensions.size() < 5 || dimensions.size() > 7) {
        throw Error(ErrorCode::CardinalityMismatch,
                    "rubric has " + std::to_string(dimensions.size()) +
                        " dimensions, expected 5 to 7");
    }
    std::set<std::string> general_seen;
    std::set<std::string> all_names;
    int task_specific = 0;
    double dim_sum = 0.0;
    for (const MetaDimension& d : dimensions) {
        std::string norm = normalize_name(d.name);
        if (!all_names.insert(norm).second) {
            throw Error(ErrorCode::DimensionCollision, "duplicate dimension name '" + d.name + "'");
        }
        if (d.kind == DimensionKind::general) {
            if (reserved_names().count(norm) == 0) {
                throw Error(ErrorCode::MissingDimension,
                            "unexpected general dimension '" + d.name + "'");
            }
            general_seen.insert(norm);
        } else {
            ++task_specific;
        }
        if (d.weight < 0.0) {
            throw Error(ErrorCode::NegativeWeight,
                        "dimension '" + d.name + "' has negative weight");
        }
        dim_sum += d.weight;
        if (d.criteria.empty()) {
            throw Error(ErrorCode::EmptyCriteria, "dimension '" + d.name + "' has no criteria");
        }
        if (d.criteria.size() > 10) {
            throw Error(ErrorCode::CardinalityMismatch,
                        "dimension '" + d.name + "' has more than 10 criteria");
        }
        std::set<std::string> texts;
        double crit_sum = 0.0;
        for (const Criterion& c : d.criteria) {
            if (util::trim(c.text).empty()) {
                throw Error(ErrorCode::EmptyCriteria,
                            "dimension '" + d.name + "' has a blank criterion");
            }
            if (!texts.insert(c.text).second) {
                throw Error(ErrorCode::CriterionMismatch,
                            "dimension '" + d.name + "' repeats criterion '" + c.text + "'");
            }
            if (c.weight < 0.0) {
                throw Error(ErrorCode::NegativeWeight,
                            "criterion '" + c.text + "' has negative weight");
            }
            crit_sum += c.weight;
        }
        if (std::abs(crit_sum - 1.0) > kSumTolerance) {
            throw Error(ErrorCode::SchemaViolation,
                        "criterion weights for '" + d.name + "' sum to " +
                            std::to_string(crit_sum) + ", expected 1");
        }
    }
    if (general_seen.size() != 4) {
        throw Error(ErrorCode::MissingDimension,
                    "rubric must contain all four general dimensions");
    }
    if (task_specific < 1 || task_specific > 3) {
        throw Error(ErrorCode::CardinalityMismatch,
                    "rubric has " + std::to_string(task_specific) +
                        " task-specific dimensions, expected 1 to 3");
    }
    if (std::abs(dim_sum - 1.0) > kSumTolerance) {
        throw Error(ErrorCode::SchemaViolation, "dimension weights sum to " +
                                                    std::to_string(dim_sum) + ", expected 1");
    }
}

json CriterionScore::to_json() const {
    return json{{"criterion", criterion_text}, {"analysis", analysis}, {"score", score}};
}

CriterionScore CriterionScore::from_json(const json& value) {
    CriterionScore s;
    s.criterion_text = jsonio::require_string(value, "criterion", "criterion score");
    s.analysis = value.value("analysis", "");
    s.score = jsonio::require_number(value, "score", "criterion score");
    return s;
}

json DimensionScore::to_json() const {
    json scores = json::array();
    for (const CriterionScore& s : criterion_scores) scores.push_back(s.to_json());
    return json{{"name", name},           {"kind", kind_name(kind)},
                {"weight", weight},       {"weighted_score", weighted_score},
                {"mean_score", mean_score}, {"criterion_scores", scores}};
}

DimensionScore DimensionScore::from_json(const json& value) {
    DimensionScore d;
    d.name = jsonio::require_string(value, "name", "dimension score");
    d.kind = kind_from_name(jsonio::require_string(value, "kind", "dimension score"));
    d.weight = jsonio::require_number(value, "weight", "dimension score");
    d.weighted_score = jsonio::require_number(value, "weighted_score", "dimension score");
    d.mean_score = jsonio::require_number(value, "mean_score", "dimension score");
    for (const json& s : jsonio::require_array(value, "criterion_scores", "dimension score")) {
        d.criterion_scores.push_back(CriterionScore::from_json(s));
    }
    return d;
}

json QualityResult::to_json() const {
    json dims = json::array();
    for (const DimensionScore& d : per_dimension) dims.push_back(d.to_json());
    return json{{"report_ref", report_ref},
                {"rubric", rubric.to_json()},
                {"per_dimension", dims},
                {"overall", overall}};
}

QualityResult QualityResult::from_json(const json& value) {
    QualityResult r;
    r.report_ref = jsonio::require_string(value, "report_ref", "quality result");
    if (const json* rub = jsonio::find_key(value, "rubric")) r.rubric = Rubric::from_json(*rub);
    for (const json& d : jsonio::require_array(value, "per_dimension", "quality result")) {
        r.per_dimension.push_back(DimensionScore::from_json(d));
    }
    r.overall = jsonio::require_number(value, "overall", "quality result");
    return r;
}

std::vector<MetaDimension> general_dimensions() {
    std::vector<MetaDimension> dims(4);
    dims[0].name = "Coverage";
    dims[0].definition = "Breadth, depth, and relevance of coverage.";
    dims[1].name = "Insight";
    dims[1].definition = "Depth, originality, logic, and value of analysis.";
    dims[2].name = "Instruction Following";
    dims[2].definition = "Accuracy in meeting all requirements and constraints.";
    dims[3].name = "Clarity";
    dims[3].definition = "Readability, fluency, structure, and ease of understanding.";
    for (MetaDimension& d : dims) d.kind = DimensionKind::general;
    return dims;
}

WeightRepair repair_weights(std::vector<double>& weights, double tolerance) {
    if (weights.empty()) throw Error(ErrorCode::Precondition, "no weights to repair");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w)) throw Error(ErrorCode::MalformedOutput, "non-finite weight");
        if (w < 0.0) throw Error(ErrorCode::NegativeWeight, "negative weight in repair ladder");
        sum += w;
    }
    if (sum <= 0.0) throw Error(ErrorCode::MalformedOutput, "weights sum to zero");
    if (std::abs(sum - 1.0) <= tolerance) {
        for (double& w : weights) w /= sum;
        return WeightRepair::accepted;
    }
    return WeightRepair::regenerate;
}

void force_renormalize(std::vector<double>& weights) {
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error(ErrorCode::NegativeWeight, "cannot renormalize invalid weight");
        }
        sum += w;
    }
    if (sum <= 0.0) throw Error(ErrorCode::MalformedOutput, "weights sum to zero");
    for (double& w : weights) w /= sum;
}

QualityResult aggregate_quality(const Rubric& rubric,
                                const std::map<std::string, std::vector<CriterionScore>>& scores,
                                const std::string& report_ref) {
    rubric.validate();
    for (const auto& [name, entry] : scores) {
        (void)entry;
        bool known = false;
        for (const MetaDimension& d : rubric.dimensions) {
            if (d.name == name) known = true;
        }
        if (!known) {
            throw Error(ErrorCode::Precondition, "scores contain unknown dimension '" + name + "'");
        }
    }

    QualityResult result;
    result.report_ref = report_ref;
    result.rubric = rubric;
    double overall = 0.0;
    for (const MetaDimension& dim : rubric.dimensions) {
        auto it = scores.find(dim.name);
        if (it == scores.end()) {
            throw Error(ErrorCode::MissingDimension,
                        "no scores for dimension '" + dim.name + "'");
        }
        const std::vector<CriterionScore>& entries = it->second;
        if (entries.size() != dim.criteria.size()) {
            throw Error(ErrorCode::CardinalityMismatch,
                        "dimension '" + dim.name + "' expects " +
                            std::to_string(dim.criteria.size()) + " scores, got " +
                            std::to_string(entries.size()));
        }
        DimensionScore ds;
        ds.name = dim.name;
        ds.kind = dim.kind;
        ds.weight = dim.weight;
        double weighted = 0.0;
        double total = 0.0;
        for (const Criterion& criterion : dim.criteria) {
            const CriterionScore* match = nullptr;
            for (const CriterionScore& entry : entries) {
                if (entry.criterion_text == criterion.text) {
                    if (match != nullptr) {
                        throw Error(ErrorCode::CriterionMismatch,
                                    "duplicate score for criterion '" + criterion.text + "'");
                    }
                    match = &entry;
                }
            }
            if (match == nullptr) {
                throw Error(ErrorCode::CriterionMismatch,
                            "no score for criterion '" + criterion.text + "'");
            }
            if (!std::isfinite(match->score) || match->score < 0.0 || match->score > 10.0) {
                throw Error(ErrorCode::ScoreOutOfRange,
                            "score " + std::to_string(match->score) + " for criterion '" +
                                criterion.text + "' outside [0,10]");
            }
            weighted += criterion.weight * match->score;
            total += match->score;
            ds.criterion_scores.push_back(*match);
        }
        ds.weighted_score = weighted;
        ds.mean_score = total / static_cast<double>(dim.criteria.size());
        overall += dim.weight * weighted;
        result.per_dimension.push_back(std::move(ds));
    }
    result.overall = overall;
    return result;
}

std::vector<MetaDimension> QualityEvaluator::generate_task_dimensions(
    const std::string& task_query) {
    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        const json* list = &value;
        if (value.is_object()) list = &jsonio::require_array(value, "meta_dimensions", "dimensions");
        if (!list->is_array() || list->empty()) {
            throw Error(ErrorCode::MalformedOutput, "dimension response is not a non-empty list");
        }
        std::vector<MetaDimension> dims;
        for (const json& item : *list) {
            MetaDimension d;
            d.name = util::trim(jsonio::require_string(item, "meta_dimension_name", "dimensions"));
            d.definition = jsonio::require_string(item, "definition", "dimensions");
            d.kind = DimensionKind::task_specific;
            if (d.name.empty()) {
                throw Error(ErrorCode::MalformedOutput, "dimension with blank name");
            }
            dims.push_back(std::move(d));
        }
        return dims;
    };

    auto collisions_of = [](const std::vector<MetaDimension>& dims) {
        std::vector<std::string> bad;
        std::set<std::string> seen;
        for (const MetaDimension& d : dims) {
            std::string norm = normalize_name(d.name);
            if (reserved_names().count(norm) != 0 || factuality_like(norm) ||
                !seen.insert(norm).second) {
                bad.push_back(d.name);
            }
        }
        return bad;
    };

    std::vector<Message> messages{{Role::user, prompts::dimension_generation(task_query)}};
    std::vector<MetaDimension> dims =
        gateway::complete_with_retry(gw_, judge_, messages, parse);
    if (dims.size() > 3) {
        warnings_.add("dimension_truncated", "task_dimensions",
                      "model returned " + std::to_string(dims.size()) +
                          " task-specific dimensions, keeping the first 3");
        dims.resize(3);
    }
    std::vector<std::string> collisions = collisions_of(dims);
    if (!collisions.empty()) {
        messages.push_back({Role::assistant, dimensions_to_prompt_json(dims).dump(2)});
        messages.push_back(
            {Role::user,
             "The dimension names " + join_names(collisions) +
                 " collide with the standard dimensions, repeat each other, or cover factuality. "
                 "Generate replacement task-specific dimensions with distinct names."});
        dims = gateway::complete_with_retry(gw_, judge_, messages, parse);
        if (dims.size() > 3) {
            warnings_.add("dimension_truncated", "task_dimensions",
                          "regenerated response returned " + std::to_string(dims.size()) +
                              " dimensions, keeping the first 3");
            dims.resize(3);
        }
        collisions = collisions_of(dims);
        if (!collisions.empty()) {
            throw Error(ErrorCode::DimensionCollision,
                        "task-specific dimension names collide after regeneration: " +
                            join_names(collisions));
        }
    }
    return dims;
}

Rubric QualityEvaluator::assign_weights(const std::string& task_query,
                                        std::vector<MetaDimension> dimensions) {
    if (dimensions.size() < 5 || dimensions.size() > 7) {
        throw Error(ErrorCode::Precondition,
                    "weight assignment expects 5 to 7 dimensions, got " +
                        std::to_string(dimensions.size()));
    }
    std::vector<MetaDimension> specific;
    for (const MetaDimension& d : dimensions) {
        if (d.kind == DimensionKind::task_specific) specific.push_back(d);
    }
    if (specific.size() + 4 != dimensions.size()) {
        throw Error(ErrorCode::Precondition, "weight assignment expects exactly four general dimensions");
    }

    // Response keys for the fixed dimensions are snake_case; a few close
    // synonyms seen in judge output map to the same dimension.
    std::map<std::string, std::string> key_map{
        {"coverage", "Coverage"},
        {"comprehensiveness", "Coverage"},
        {"insight", "Insight"},
        {"instruction following", "Instruction Following"},
        {"clarity", "Clarity"},
        {"readability", "Clarity"},
    };
    for (const MetaDimension& d : specific) key_map[normalize_name(d.name)] = d.name;

    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        if (!value.is_object()) {
            throw Error(ErrorCode::MalformedOutput, "weight response is not a JSON object");
        }
        std::map<std::string, double> by_name;
        for (const auto& [key, entry] : value.items()) {
            auto mapped = key_map.find(normalize_name(key));
            if (mapped == key_map.end()) {
                warnings_.add("weight_extra_key", "weights", "ignored unknown weight key '" + key + "'");
                continue;
            }
            if (!entry.is_number()) {
                throw Error(ErrorCode::MalformedOutput, "weight for '" + key + "' is not a number");
            }
            double w = entry.get<double>();
            if (!std::isfinite(w)) {
                throw Error(ErrorCode::MalformedOutput, "weight for '" + key + "' is not finite");
            }
            if (w < 0.0) {
                throw Error(ErrorCode::NegativeWeight,
                            "weight for '" + mapped->second + "' is negative");
            }
            if (!by_name.emplace(mapped->second, w).second) {
                throw Error(ErrorCode::MalformedOutput,
                            "duplicate weight entry for '" + mapped->second + "'");
            }
        }
        std::vector<double> ordered;
        for (const MetaDimension& d : dimensions) {
            auto it = by_name.find(d.name);
            if (it == by_name.end()) {
                throw Error(ErrorCode::MalformedOutput, "missing weight for '" + d.name + "'");
            }
            ordered.push_back(it->second);
        }
        return ordered;
    };

    std::vector<Message> messages{
        {Role::user, prompts::weight_assignment(task_query, dimensions_to_prompt_json(specific))}};
    std::vector<double> weights = gateway::complete_with_retry(gw_, judge_, messages, parse);
    if (repair_weights(weights) == WeightRepair::regenerate) {
        double sum = 0.0;
        for (double w : weights) sum += w;
        json current = json::object();
        for (size_t i = 0; i < dimensions.size(); ++i) current[dimensions[i].name] = weights[i];
        messages.push_back({Role::assistant, current.dump(2)});
        messages.push_back({Role::user,
                            "The weights sum to " + std::to_string(sum) +
                                ", outside the allowed tolerance. Re-emit the full weight object "
                                "so the values sum to exactly 1.0."});
        weights = gateway::complete_with_retry(gw_, judge_, messages, parse);
        if (repair_weights(weights) == WeightRepair::regenerate) {
            force_renormalize(weights);
            warnings_.add("weight_renormalized", "weights",
                          "weight sum stayed outside tolerance after regeneration; "
                          "proportionally renormalized");
        }
    }

    Rubric rubric;
    rubric.dimensions = std::move(dimensions);
    rubric.judge_profile = judge_;
    for (size_t i = 0; i < rubric.dimensions.size(); ++i) {
        rubric.dimensions[i].weight = weights[i];
    }
    return rubric;
}

std::vector<Criterion> QualityEvaluator::generate_criteria(
    const std::string& task_query, const MetaDimension& dimension,
    const std::vector<MetaDimension>& all_dimensions) {
    constexpr const char* kEmpty = "empty_criteria";
    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        if (!value.is_array()) {
            throw Error(ErrorCode::MalformedOutput, "criteria response is not a JSON list");
        }
        if (value.empty()) {
            throw Error(ErrorCode::MalformedOutput, "criteria list is empty", kEmpty);
        }
        std::vector<Criterion> criteria;
        std::set<std::string> texts;
        for (const json& item : value) {
            Criterion c;
            c.text = util::trim(jsonio::require_string(item, "criterion", "criteria"));
            if (c.text.empty()) {
                throw Error(ErrorCode::MalformedOutput, "criteria: blank criterion text");
            }
            c.explanation = item.value("explanation", "");
            c.weight = jsonio::require_number(item, "weight", "criteria");
            if (!std::isfinite(c.weight)) {
                throw Error(ErrorCode::MalformedOutput, "criteria: non-finite weight");
            }
            if (c.weight < 0.0) {
                throw Error(ErrorCode::NegativeWeight,
                            "criterion '" + c.text + "' has negative weight");
            }
            if (!texts.insert(c.text).second) {
                throw Error(ErrorCode::MalformedOutput,
                            "criteria: duplicate criterion '" + c.text + "'");
            }
            criteria.push_back(std::move(c));
        }
        return criteria;
    };

    json all_json = dimensions_to_prompt_json(all_dimensions);
    std::vector<Message> messages{
        {Role::user, prompts::criteria_generation(task_query, static_cast<int>(all_dimensions.size()),
                                                  all_json, dimension.name)}};
    std::vector<Criterion> criteria;
    try {
        criteria = gateway::complete_with_retry(gw_, judge_, messages, parse);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedOutput && e.detail() == kEmpty) {
            throw Error(ErrorCode::EmptyCriteria,
                        "criteria generation for '" + dimension.name + "' returned no criteria");
        }
        throw;
    }

    // One regeneration budget shared by the two repairable defects: an
    // oversized list and an out-of-tolerance weight sum.
    bool regenerated = false;
    auto regenerate = [&](const std::string& complaint) {
        json current = json::array();
        for (const Criterion& c : criteria) {
            current.push_back(
                json{{"criterion", c.text}, {"explanation", c.explanation}, {"weight", c.weight}});
        }
        messages.push_back({Role::assistant, current.dump(2)});
        messages.push_back({Role::user, complaint});
        try {
            criteria = gateway::complete_with_retry(gw_, judge_, messages, parse);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedOutput && e.detail() == kEmpty) {
                throw Error(ErrorCode::EmptyCriteria,
                            "criteria regeneration for '" + dimension.name +
                                "' returned no criteria");
            }
            throw;
        }
        regenerated = true;
    };

    if (criteria.size() > 10 && !regenerated) {
        regenerate("The list has " + std::to_string(criteria.size()) +
                   " criteria; return at most 10, with weights summing to 1.0.");
    }
    if (criteria.size() > 10) {
        warnings_.add("criteria_truncated", "dimension:" + dimension.name,
                      "criteria list stayed above 10 after regeneration; truncated");
        criteria.resize(10);
    }

    std::vector<double> weights;
    for (const Criterion& c : criteria) weights.push_back(c.weight);
    if (repair_weights(weights) == WeightRepair::regenerate) {
        if (!regenerated) {
            double sum = 0.0;
            for (double w : weights) sum += w;
            regenerate("The criterion weights sum to " + std::to_string(sum) +
                       "; re-emit the list with weights summing to exactly 1.0.");
            if (criteria.size() > 10) {
                warnings_.add("criteria_truncated", "dimension:" + dimension.name,
                              "regenerated criteria list above 10; truncated");
                criteria.resize(10);
            }
            weights.clear();
            for (const Criterion& c : criteria) weights.push_back(c.weight);
        }
        if (repair_weights(weights) == WeightRepair::regenerate) {
            force_renormalize(weights);
            warnings_.add("criteria_weights_renormalized", "dimension:" + dimension.name,
                          "criterion weight sum stayed outside tolerance; proportionally "
                          "renormalized");
        }
    }
    for (size_t i = 0; i < criteria.size(); ++i) criteria[i].weight = weights[i];
    return criteria;
}

std::vector<CriterionScore> QualityEvaluator::score_dimension(const std::string& task_query,
                                                              const std::string& report,
                                                              const MetaDimension& dimension) {
    if (util::trim(report).empty()) {
        throw Error(ErrorCode::EmptyReport, "cannot score an empty report");
    }
    if (dimension.criteria.empty()) {
        throw Error(ErrorCode::Precondition,
                    "dimension '" + dimension.name + "' has no criteria to score");
    }
    constexpr const char* kMismatch = "criterion_mismatch";

    json criteria_json = json::array();
    for (const Criterion& c : dimension.criteria) {
        criteria_json.push_back(
            json{{"criterion", c.text}, {"explanation", c.explanation}, {"weight", c.weight}});
    }

    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        if (!value.is_array()) {
            throw Error(ErrorCode::MalformedOutput, "score response is not a JSON list");
        }
        std::map<std::string, CriterionScore> by_text;
        for (const json& item : value) {
            CriterionScore s;
            s.criterion_text = jsonio::require_string(item, "criterion", "scores");
            s.analysis = item.value("analysis", "");
            s.score = jsonio::require_number(item, "report_score_0_to_10", "scores");
            if (!std::isfinite(s.score)) {
                throw Error(ErrorCode::MalformedOutput, "scores: non-finite score");
            }
            bool known = false;
            for (const Criterion& c : dimension.criteria) {
                if (c.text == s.criterion_text) known = true;
            }
            if (!known) {
                throw Error(ErrorCode::MalformedOutput,
                            "score for unknown criterion '" + s.criterion_text + "'", kMismatch);
            }
            if (!by_text.emplace(s.criterion_text, s).second) {
                throw Error(ErrorCode::MalformedOutput,
                            "duplicate score for criterion '" + s.criterion_text + "'", kMismatch);
            }
        }
        std::vector<CriterionScore> ordered;
        for (const Criterion& c : dimension.criteria) {
            auto it = by_text.find(c.text);
            if (it == by_text.end()) {
                throw Error(ErrorCode::MalformedOutput,
                            "missing score for criterion '" + c.text + "'", kMismatch);
            }
            ordered.push_back(it->second);
        }
        return ordered;
    };

    std::vector<Message> messages{
        {Role::user, prompts::dimension_scoring(task_query, report, criteria_json)}};
    std::vector<CriterionScore> scores;
    try {
        scores = gateway::complete_with_retry(gw_, judge_, messages, parse);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedOutput && e.detail() == kMismatch) {
            throw Error(ErrorCode::CriterionMismatch,
                        std::string("judge scores do not match the rubric criteria: ") + e.what());
        }
        throw;
    }

    auto out_of_range = [](const std::vector<CriterionScore>& list) {
        for (const CriterionScore& s : list) {
            if (s.score < 0.0 || s.score > 10.0) return true;
        }
        return false;
    };
    if (out_of_range(scores)) {
        json current = json::array();
        for (const CriterionScore& s : scores) {
            current.push_back(json{{"criterion", s.criterion_text},
                                   {"analysis", s.analysis},
                                   {"report_score_0_to_10", s.score}});
        }
        messages.push_back({Role::assistant, current.dump(2)});
        messages.push_back({Role::user,
                            "One or more scores fall outside [0,10]. Re-emit the full list with "
                            "every report_score_0_to_10 inside [0,10]."});
        try {
            scores = gateway::complete_with_retry(gw_, judge_, messages, parse);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedOutput && e.detail() == kMismatch) {
                throw Error(ErrorCode::CriterionMismatch,
                            std::string("judge scores do not match the rubric criteria: ") +
                                e.what());
            }
            throw;
        }
        for (CriterionScore& s : scores) {
            if (s.score < 0.0 || s.score > 10.0) {
                double clamped = std::min(10.0, std::max(0.0, s.score));
                warnings_.add("score_clamped", "dimension:" + dimension.name,
                              "criterion '" + s.criterion_text + "' score " +
                                  std::to_string(s.score) + " clamped to " +
                                  std::to_string(clamped));
                s.score = clamped;
            }
        }
    }
    for (CriterionScore& s : scores) s.score = round2(s.score);
    return scores;
}

Rubric QualityEvaluator::build_rubric(const std::string& task_ref, const std::string& task_query) {
    std::vector<MetaDimension> dims = general_dimensions();
    for (MetaDimension& d : generate_task_dimensions(task_query)) dims.push_back(std::move(d));
    Rubric rubric = assign_weights(task_query, std::move(dims));
    rubric.task_ref = task_ref;

    auto results = util::parallel_map(rubric.dimensions, workers_, [&](const MetaDimension& d) {
        return generate_criteria(task_query, d, rubric.dimensions);
    });
    for (size_t i = 0; i < rubric.dimensions.size(); ++i) {
        if (!results[i].ok()) throw *results[i].error;
        rubric.dimensions[i].criteria = std::move(*results[i].value);
    }
    rubric.validate();
    return rubric;
}

QualityResult QualityEvaluator::evaluate_report(const std::string& task_query, const Rubric& rubric,
                                                const std::string& report,
                                                const std::string& report_ref) {
    if (util::trim(report).empty()) {
        throw Error(ErrorCode::EmptyReport, "report '" + report_ref + "' is empty");
    }
    rubric.validate();
    auto results = util::parallel_map(rubric.dimensions, workers_, [&](const MetaDimension& d) {
        return score_dimension(task_query, report, d);
    });
    std::map<std::string, std::vector<CriterionScore>> scores;
    for (size_t i = 0; i < rubric.dimensions.size(); ++i) {
        if (!results[i].ok()) throw *results[i].error;
        scores[rubric.dimensions[i].name] = std::move(*results[i].value);
    }
    return aggregate_quality(rubric, scores, report_ref);
}

}  // namespace dre::quality
