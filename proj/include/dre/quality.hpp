#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dre/gateway.hpp"
#include "dre/logging.hpp"

namespace dre::quality {

using nlohmann::json;

enum class DimensionKind { general, task_specific };

struct Criterion {
    std::string text;
    std::string explanation;
    double weight = 0.0;
};

struct MetaDimension {
    std::string name;
    std::string definition;
    DimensionKind kind = DimensionKind::task_specific;
    double weight = 0.0;
    std::vector<Criterion> criteria;

    json to_json() const;
    static MetaDimension from_json(const json& value);
};

// Exactly the four general dimensions plus 1-3 task-specific ones; dimension
// weights sum to 1 within 1e-9, each dimension's criterion weights likewise.
struct Rubric {
    std::string task_ref;
    std::vector<MetaDimension> dimensions;
    gateway::ModelProfile judge_profile;

    json to_json() const;
    static Rubric from_json(const json& value);
    void validate() const;
};

struct CriterionScore {
    std::string criterion_text;
    std::string analysis;
    double score = 0.0;  // [0,10], two decimals

    json to_json() const;
    static CriterionScore from_json(const json& value);
};

struct DimensionScore {
    std::string name;
    DimensionKind kind = DimensionKind::task_specific;
    double weight = 0.0;
    // Criterion-weighted score for the overall sum, plus the unweighted mean
    // used for leaderboard dimension columns.
    double weighted_score = 0.0;
    double mean_score = 0.0;
    std::vector<CriterionScore> criterion_scores;

    json to_json() const;
    static DimensionScore from_json(const json& value);
};

struct QualityResult {
    std::string report_ref;
    Rubric rubric;
    std::vector<DimensionScore> per_dimension;
    double overall = 0.0;

    json to_json() const;
    static QualityResult from_json(const json& value);
};

// The four fixed dimensions with their protocol definitions, weights unset.
std::vector<MetaDimension> general_dimensions();

enum class WeightRepair { accepted, renormalized, regenerate };

// Weight repair ladder step: sums within tolerance of 1 are renormalized to
// exactly 1 and accepted, other valid sums request a regeneration first.
WeightRepair repair_weights(std::vector<double>& weights, double tolerance = 0.001);

// Forced proportional renormalization (last ladder rung).
void force_renormalize(std::vector<double>& weights);

// Pure aggregation: overall = sum_d W_d * sum_c w_dc * s_dc over the stored
// rounded scores. scores_by_dimension must cover every rubric dimension with
// matching criterion cardinality.
QualityResult aggregate_quality(const Rubric& rubric,
                                const std::map<std::string, std::vector<CriterionScore>>& scores,
                                const std::string& report_ref);

class QualityEvaluator {
public:
    QualityEvaluator(gateway::Gateway& gw, gateway::ModelProfile judge, log::WarningLog& warnings,
                     int workers = 4)
        : gw_(gw), judge_(std::move(judge)), warnings_(warnings), workers_(workers) {}

    std::vector<MetaDimension> generate_task_dimensions(const std::string& task_query);
    Rubric assign_weights(const std::string& task_query, std::vector<MetaDimension> dimensions);
    std::vector<Criterion> generate_criteria(const std::string& task_query,
                                             const MetaDimension& dimension,
                                             const std::vector<MetaDimension>& all_dimensions);
    std::vector<CriterionScore> score_dimension(const std::string& task_query,
                                                const std::string& report,
                                                const MetaDimension& dimension);

    Rubric build_rubric(const std::string& task_ref, const std::string& task_query);
    QualityResult evaluate_report(const std::string& task_query, const Rubric& rubric,
                                  const std::string& report, const std::string& report_ref);

private:
    gateway::Gateway& gw_;
    gateway::ModelProfile judge_;
    log::WarningLog& warnings_;
    int workers_;
};

}  // namespace dre::quality
