#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dre/errors.hpp"
#include "dre/logging.hpp"
#include "dre/quality.hpp"
#include "support.hpp"

using namespace dre;
using gateway::Message;
using gateway::ModelProfile;
using nlohmann::json;
using quality::Criterion;
using quality::CriterionScore;
using quality::DimensionKind;
using quality::MetaDimension;
using quality::QualityEvaluator;
using quality::Rubric;
using quality::WeightRepair;
using testsupport::MockRig;
using testsupport::TempDir;

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

MetaDimension make_dim(const std::string& name, DimensionKind kind, double weight,
                       const std::vector<std::pair<std::string, double>>& criteria) {
    MetaDimension d;
    d.name = name;
    d.definition = "definition of " + name;
    d.kind = kind;
    d.weight = weight;
    for (const auto& [text, w] : criteria) {
        Criterion c;
        c.text = text;
        c.explanation = "why " + text;
        c.weight = w;
        d.criteria.push_back(c);
    }
    return d;
}

// Valid five-dimension rubric: the four fixed dimensions plus one
// task-specific, every weight family summing to 1.
Rubric small_rubric(double coverage_weight = 0.6) {
    Rubric r;
    r.task_ref = "task_x";
    double rest = (1.0 - coverage_weight) / 4.0;
    r.dimensions.push_back(make_dim("Coverage", DimensionKind::general, coverage_weight,
                                    {{"covers sources", 1.0}}));
    r.dimensions.push_back(
        make_dim("Insight", DimensionKind::general, rest, {{"novel synthesis", 1.0}}));
    r.dimensions.push_back(make_dim("Instruction Following", DimensionKind::general, rest,
                                    {{"meets constraints", 1.0}}));
    r.dimensions.push_back(make_dim("Clarity", DimensionKind::general, rest, {{"readable", 1.0}}));
    r.dimensions.push_back(
        make_dim("Evidence Depth", DimensionKind::task_specific, rest, {{"cites data", 1.0}}));
    return r;
}

std::map<std::string, std::vector<CriterionScore>> uniform_scores(const Rubric& rubric,
                                                                  double value) {
    std::map<std::string, std::vector<CriterionScore>> scores;
    for (const auto& dim : rubric.dimensions) {
        for (const auto& criterion : dim.criteria) {
            CriterionScore s;
            s.criterion_text = criterion.text;
            s.analysis = "set to fixed value";
            s.score = value;
            scores[dim.name].push_back(s);
        }
    }
    return scores;
}

struct RandomRubric {
    Rubric rubric;
    std::map<std::string, std::vector<CriterionScore>> scores;
};

RandomRubric random_rubric(std::mt19937& rng) {
    std::uniform_real_distribution<double> uniform(0.05, 1.0);
    std::uniform_int_distribution<int> extra_dist(1, 3);
    std::uniform_int_distribution<int> ncrit_dist(1, 10);
    std::uniform_int_distribution<int> score_cents(0, 1000);

    int extras = extra_dist(rng);
    std::vector<std::string> names{"Coverage", "Insight", "Instruction Following", "Clarity"};
    for (int i = 0; i < extras; ++i) names.push_back("Special Angle " + std::to_string(i + 1));

    std::vector<double> dim_weights;
    double total_w = 0.0;
    for (size_t i = 0; i < names.size(); ++i) dim_weights.push_back(uniform(rng));
    for (double w : dim_weights) total_w += w;
    for (double& w : dim_weights) w /= total_w;

    RandomRubric out;
    out.rubric.task_ref = "task_random";
    for (size_t i = 0; i < names.size(); ++i) {
        DimensionKind kind = i < 4 ? DimensionKind::general : DimensionKind::task_specific;
        int ncrit = ncrit_dist(rng);
        std::vector<double> cw;
        double csum = 0.0;
        for (int c = 0; c < ncrit; ++c) cw.push_back(uniform(rng));
        for (double w : cw) csum += w;
        for (double& w : cw) w /= csum;

        std::vector<std::pair<std::string, double>> criteria;
        for (int c = 0; c < ncrit; ++c) {
            criteria.emplace_back("criterion " + std::to_string(c) + " of " + names[i], cw[c]);
        }
        out.rubric.dimensions.push_back(make_dim(names[i], kind, dim_weights[i], criteria));
        for (int c = 0; c < ncrit; ++c) {
            CriterionScore s;
            s.criterion_text = criteria[c].first;
            s.score = score_cents(rng) / 100.0;
            out.scores[names[i]].push_back(s);
        }
    }
    return out;
}

bool has_warning(const log::WarningLog& warnings, const std::string& code) {
    for (const auto& w : warnings.sorted()) {
        if (w.code == code) return true;
    }
    return false;
}

// Canned judge: serves every rubric-building and scoring prompt with fixed,
// schema-valid content.
std::string canned_judge(const std::vector<Message>& messages) {
    std::string all = testsupport::all_text(messages);
    if (all.find("query-specific meta-evaluation dimensions") != std::string::npos) {
        return json{{"meta_dimensions",
                     json::array({{{"meta_dimension_name", "Evidence Depth"},
                                   {"definition", "Grounding in primary data."}},
                                  {{"meta_dimension_name", "Data Recency"},
                                   {"definition", "Freshness of the evidence."}}})}}
            .dump(2);
    }
    if (all.find("You are a senior research evaluation expert") != std::string::npos) {
        return json{{"coverage", 0.3},    {"insight", 0.25},      {"instruction_following", 0.15},
                    {"clarity", 0.1},     {"evidence_depth", 0.1}, {"data_recency", 0.1}}
            .dump(2);
    }
    if (all.find("break down a meta-evaluation dimension") != std::string::npos) {
        return json::array({{{"criterion", "states concrete facts"},
                             {"explanation", "facts anchor the analysis"},
                             {"weight", 0.5}},
                            {{"criterion", "cites its sources"},
                             {"explanation", "sources allow checking"},
                             {"weight", 0.5}}})
            .dump(2);
    }
    if (all.find("You are a strict, meticulous, and objective evaluator") != std::string::npos) {
        return json::array({{{"criterion", "states concrete facts"},
                             {"analysis", "solid"},
                             {"report_score_0_to_10", 6.0}},
                            {{"criterion", "cites its sources"},
                             {"analysis", "thorough"},
                             {"report_score_0_to_10", 8.0}}})
            .dump(2);
    }
    return "{}";
}

}  // namespace

TEST_SUITE("quality") {

TEST_CASE("the general dimension catalog is fixed") {
    auto dims = quality::general_dimensions();
    REQUIRE(dims.size() == 4);
    CHECK(dims[0].name == "Coverage");
    CHECK(dims[0].definition == "Breadth, depth, and relevance of coverage.");
    CHECK(dims[1].name == "Insight");
    CHECK(dims[1].definition == "Depth, originality, logic, and value of analysis.");
    CHECK(dims[2].name == "Instruction Following");
    CHECK(dims[2].definition == "Accuracy in meeting all requirements and constraints.");
    CHECK(dims[3].name == "Clarity");
    CHECK(dims[3].definition == "Readability, fluency, structure, and ease of understanding.");
    for (const auto& d : dims) CHECK(d.kind == DimensionKind::general);
}

TEST_CASE("dimension generation truncates to three and regenerates collisions") {
    TempDir tmp;
    log::WarningLog warnings;
    std::atomic<int> calls{0};
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>& messages) {
        ++calls;
        bool is_regen = testsupport::all_text(messages).find("collide") != std::string::npos;
        json list = json::array();
        if (is_regen) {
            list.push_back({{"meta_dimension_name", "Field Awareness"},
                            {"definition", "Knows the field."}});
        } else {
            // First response: five entries, the first colliding with a
            // reserved name.
            list.push_back({{"meta_dimension_name", "Coverage"}, {"definition", "dup"}});
            for (int i = 0; i < 4; ++i) {
                list.push_back({{"meta_dimension_name", "Angle " + std::to_string(i)},
                                {"definition", "d"}});
            }
        }
        return json{{"meta_dimensions", list}}.dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);

    auto dims = eval.generate_task_dimensions("How do microgrids handle storm recovery?");
    REQUIRE(dims.size() == 1);
    CHECK(dims[0].name == "Field Awareness");
    CHECK(has_warning(warnings, "dimension_truncated"));
    CHECK(calls.load() == 2);
}

TEST_CASE("persistently colliding dimensions raise DimensionCollision") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        return json{{"meta_dimensions",
                     json::array({{{"meta_dimension_name", "Factual Accuracy"},
                                   {"definition", "overlaps the fact checker"}}})}}
            .dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);
    try {
        eval.generate_task_dimensions("Any question at all");
        FAIL("expected DimensionCollision");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionCollision);
    }
}

TEST_CASE("the weight repair ladder renormalizes, regenerates, or rejects") {
    std::vector<double> near{0.5005, 0.5};  // sum 1.0005, inside tolerance
    CHECK(quality::repair_weights(near) == WeightRepair::accepted);
    double sum = near[0] + near[1];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> off{0.5, 0.3};  // sum 0.8, outside tolerance
    CHECK(quality::repair_weights(off) == WeightRepair::regenerate);
    CHECK(off[0] == doctest::Approx(0.5));  // untouched until the forced rung
    quality::force_renormalize(off);
    CHECK(off[0] == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(off[1] == doctest::Approx(0.375).epsilon(1e-12));

    std::vector<double> negative{0.5, -0.1, 0.6};
    try {
        quality::repair_weights(negative);
        FAIL("expected NegativeWeight");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeWeight);
    }

    std::vector<double> zeros{0.0, 0.0};
    CHECK_THROWS_AS(quality::repair_weights(zeros), Error);
}

TEST_CASE("weight assignment falls through the ladder to a forced renormalization") {
    TempDir tmp;
    log::WarningLog warnings;
    // Sum 0.8 on both attempts: ladder must regenerate once, then force.
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        return json{{"coverage", 0.2},
                    {"insight", 0.2},
                    {"instruction_following", 0.2},
                    {"clarity", 0.1},
                    {"evidence_depth", 0.1}}
            .dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);

    std::vector<MetaDimension> dims = quality::general_dimensions();
    dims.push_back(make_dim("Evidence Depth", DimensionKind::task_specific, 0.0, {}));
    // Criteria are attached later in the pipeline; give each dimension a
    // stand-in so validation concerns stay out of this test.
    Rubric rubric = eval.assign_weights("some task", dims);

    double total = 0.0;
    for (const auto& d : rubric.dimensions) total += d.weight;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(has_warning(warnings, "weight_renormalized"));
    CHECK(rig.chat->call_count() == 2);
    // Proportions preserved: every weight scaled by 1/0.8.
    CHECK(rubric.dimensions[0].weight == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(rubric.dimensions[4].weight == doctest::Approx(0.125).epsilon(1e-9));
}

TEST_CASE("negative judge weights abort immediately") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        return json{{"coverage", -0.2},
                    {"insight", 0.4},
                    {"instruction_following", 0.3},
                    {"clarity", 0.3},
                    {"evidence_depth", 0.2}}
            .dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);
    std::vector<MetaDimension> dims = quality::general_dimensions();
    dims.push_back(make_dim("Evidence Depth", DimensionKind::task_specific, 0.0, {}));
    try {
        eval.assign_weights("some task", dims);
        FAIL("expected NegativeWeight");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeWeight);
    }
    CHECK(rig.chat->call_count() == 1);
}

TEST_CASE("unknown weight keys are ignored with a warning, missing ones are malformed") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        return json{{"coverage", 0.25},
                    {"insight", 0.25},
                    {"instruction_following", 0.25},
                    {"clarity", 0.15},
                    {"evidence_depth", 0.1},
                    {"swagger", 0.9}}
            .dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);
    std::vector<MetaDimension> dims = quality::general_dimensions();
    dims.push_back(make_dim("Evidence Depth", DimensionKind::task_specific, 0.0, {}));

    Rubric rubric = eval.assign_weights("some task", dims);
    double total = 0.0;
    for (const auto& d : rubric.dimensions) total += d.weight;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(has_warning(warnings, "weight_extra_key"));
}

TEST_CASE("criteria generation truncates above ten and repairs weight sums") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        // Twelve criteria at 0.11 each: still 12 after the one regeneration,
        // and the surviving ten sum to 1.1, outside tolerance.
        json list = json::array();
        for (int i = 0; i < 12; ++i) {
            list.push_back({{"criterion", "aspect " + std::to_string(i)},
                            {"explanation", "e"},
                            {"weight", 0.11}});
        }
        return list.dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);

    MetaDimension dim = make_dim("Coverage", DimensionKind::general, 0.25, {});
    auto criteria = eval.generate_criteria("task", dim, quality::general_dimensions());
    CHECK(criteria.size() == 10);
    double total = 0.0;
    for (const auto& c : criteria) total += c.weight;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(has_warning(warnings, "criteria_truncated"));
    CHECK(has_warning(warnings, "criteria_weights_renormalized"));
    // One base call plus exactly one regeneration.
    CHECK(rig.chat->call_count() == 2);
}

TEST_CASE("empty criteria lists raise EmptyCriteria") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        return std::string("[]");
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);
    MetaDimension dim = make_dim("Insight", DimensionKind::general, 0.25, {});
    try {
        eval.generate_criteria("task", dim, quality::general_dimensions());
        FAIL("expected EmptyCriteria");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyCriteria);
    }
}

TEST_CASE("scores outside the range are regenerated then clamped with warnings") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        return json::array({{{"criterion", "states concrete facts"},
                             {"analysis", "over the top"},
                             {"report_score_0_to_10", 11.5}},
                            {{"criterion", "cites its sources"},
                             {"analysis", "below the floor"},
                             {"report_score_0_to_10", -0.25}},
                            {{"criterion", "stays on topic"},
                             {"analysis", "fine"},
                             {"report_score_0_to_10", 7.456}}})
            .dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);

    MetaDimension dim = make_dim("Clarity", DimensionKind::general, 0.25,
                                 {{"states concrete facts", 0.4},
                                  {"cites its sources", 0.4},
                                  {"stays on topic", 0.2}});
    auto scores = eval.score_dimension("task", "the report body", dim);
    REQUIRE(scores.size() == 3);
    CHECK(scores[0].score == doctest::Approx(10.0));
    CHECK(scores[1].score == doctest::Approx(0.0));
    CHECK(scores[2].score == doctest::Approx(7.46));
    CHECK(has_warning(warnings, "score_clamped"));
    CHECK(rig.chat->call_count() == 2);
}

TEST_CASE("scores for unknown criteria raise CriterionMismatch") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>&) {
        return json::array({{{"criterion", "some other thing"},
                             {"analysis", "n/a"},
                             {"report_score_0_to_10", 5.0}}})
            .dump(2);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);
    MetaDimension dim =
        make_dim("Insight", DimensionKind::general, 0.25, {{"finds the pattern", 1.0}});
    try {
        eval.score_dimension("task", "report", dim);
        FAIL("expected CriterionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CriterionMismatch);
    }
}

TEST_CASE("rubric validation rejects structural defects one by one") {
    CHECK_NOTHROW(small_rubric().validate());

    auto expect_code = [](Rubric r, ErrorCode code) {
        try {
            r.validate();
            FAIL("expected ", error_code_name(code));
        } catch (const Error& e) {
            CHECK(e.code() == code);
        }
    };

    {  // only the four generals: too few dimensions
        Rubric r = small_rubric();
        r.dimensions.pop_back();
        expect_code(r, ErrorCode::CardinalityMismatch);
    }
    {  // four extras on top of the generals: too many
        Rubric r = small_rubric();
        for (int i = 0; i < 3; ++i) {
            r.dimensions.push_back(make_dim("Extra " + std::to_string(i),
                                            DimensionKind::task_specific, 0.0,
                                            {{"c" + std::to_string(i), 1.0}}));
        }
        expect_code(r, ErrorCode::CardinalityMismatch);
    }
    {  // a renamed general dimension goes missing
        Rubric r = small_rubric();
        r.dimensions[1].name = "Brilliance";
        expect_code(r, ErrorCode::MissingDimension);
    }
    {  // duplicate dimension names collide
        Rubric r = small_rubric();
        r.dimensions[4].name = "Clarity";
        expect_code(r, ErrorCode::DimensionCollision);
    }
    {  // negative weights
        Rubric r = small_rubric();
        r.dimensions[0].weight = -0.1;
        r.dimensions[1].weight += 0.7;
        expect_code(r, ErrorCode::NegativeWeight);
    }
    {  // dimension weights off unit sum
        Rubric r = small_rubric();
        r.dimensions[0].weight += 0.25;
        expect_code(r, ErrorCode::SchemaViolation);
    }
    {  // criterion weights off unit sum inside one dimension
        Rubric r = small_rubric();
        r.dimensions[2].criteria[0].weight = 0.5;
        expect_code(r, ErrorCode::SchemaViolation);
    }
    {  // blank criterion text
        Rubric r = small_rubric();
        r.dimensions[3].criteria[0].text = "   ";
        expect_code(r, ErrorCode::EmptyCriteria);
    }
    {  // no criteria at all
        Rubric r = small_rubric();
        r.dimensions[3].criteria.clear();
        expect_code(r, ErrorCode::EmptyCriteria);
    }
    {  // eleven criteria in one dimension
        Rubric r = small_rubric();
        r.dimensions[0].criteria.clear();
        for (int i = 0; i < 11; ++i) {
            Criterion c;
            c.text = "c" + std::to_string(i);
            c.weight = 1.0 / 11.0;
            r.dimensions[0].criteria.push_back(c);
        }
        expect_code(r, ErrorCode::CardinalityMismatch);
    }
    {  // duplicate criterion text inside a dimension
        Rubric r = small_rubric();
        Criterion c = r.dimensions[0].criteria[0];
        c.weight = 0.0;
        r.dimensions[0].criteria.push_back(c);
        expect_code(r, ErrorCode::CriterionMismatch);
    }
}

TEST_CASE("aggregation reproduces hand-computed values") {
    Rubric rubric = small_rubric(0.6);
    // Coverage scores 7, everything else 5: overall = 0.6*7 + 0.4*5 = 6.2.
    auto scores = uniform_scores(rubric, 5.0);
    scores["Coverage"][0].score = 7.0;
    auto result = quality::aggregate_quality(rubric, scores, "report_1");
    CHECK(result.overall == doctest::Approx(6.2).epsilon(1e-12));
    CHECK(result.per_dimension.size() == 5);
    CHECK(result.per_dimension[0].weighted_score == doctest::Approx(7.0));
    CHECK(result.per_dimension[0].mean_score == doctest::Approx(7.0));

    // Uniform scores pass through exactly regardless of the weights.
    auto sevens = quality::aggregate_quality(rubric, uniform_scores(rubric, 7.5), "report_2");
    CHECK(sevens.overall == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("aggregation matches an independent double loop on random rubrics") {
    std::mt19937 rng(99173);
    for (int round = 0; round < 1000; ++round) {
        RandomRubric rr = random_rubric(rng);
        auto result = quality::aggregate_quality(rr.rubric, rr.scores, "report_r");

        // Oracle: textbook nested sum, computed without the library code.
        long double expected = 0.0L;
        for (const auto& dim : rr.rubric.dimensions) {
            long double inner = 0.0L;
            for (const auto& criterion : dim.criteria) {
                double score = 0.0;
                for (const auto& s : rr.scores.at(dim.name)) {
                    if (s.criterion_text == criterion.text) score = s.score;
                }
                inner += static_cast<long double>(criterion.weight) * score;
            }
            expected += static_cast<long double>(dim.weight) * inner;
        }
        REQUIRE(result.overall == doctest::Approx(static_cast<double>(expected)).epsilon(1e-9));
        REQUIRE(result.overall >= 0.0);
        REQUIRE(result.overall <= 10.0 + 1e-9);

        // Permutation invariance: dimension and score order are irrelevant.
        if (round % 10 == 0) {
            Rubric shuffled = rr.rubric;
            std::shuffle(shuffled.dimensions.begin(), shuffled.dimensions.end(), rng);
            auto scores = rr.scores;
            for (auto& [name, list] : scores) std::shuffle(list.begin(), list.end(), rng);
            auto permuted = quality::aggregate_quality(shuffled, scores, "report_p");
            REQUIRE(permuted.overall == doctest::Approx(result.overall).epsilon(1e-12));
        }
    }
}

TEST_CASE("aggregation rejects incomplete or inflated score maps") {
    Rubric rubric = small_rubric();
    auto good = uniform_scores(rubric, 5.0);

    {
        auto scores = good;
        scores.erase("Insight");
        try {
            quality::aggregate_quality(rubric, scores, "r");
            FAIL("expected MissingDimension");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingDimension);
        }
    }
    {
        auto scores = good;
        scores["Bonus Round"] = scores["Coverage"];
        try {
            quality::aggregate_quality(rubric, scores, "r");
            FAIL("expected Precondition");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::Precondition);
        }
    }
    {
        auto scores = good;
        scores["Coverage"].push_back(scores["Coverage"][0]);
        try {
            quality::aggregate_quality(rubric, scores, "r");
            FAIL("expected CardinalityMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CardinalityMismatch);
        }
    }
    {
        auto scores = good;
        scores["Coverage"][0].criterion_text = "renamed";
        try {
            quality::aggregate_quality(rubric, scores, "r");
            FAIL("expected CriterionMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::CriterionMismatch);
        }
    }
    {
        auto scores = good;
        scores["Coverage"][0].score = 10.5;
        try {
            quality::aggregate_quality(rubric, scores, "r");
            FAIL("expected ScoreOutOfRange");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ScoreOutOfRange);
        }
    }
}

TEST_CASE("empty reports are rejected before any judge call") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>& messages) {
        return canned_judge(messages);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 1);
    Rubric rubric = small_rubric();
    try {
        eval.evaluate_report("task", rubric, "   \n ", "report_1");
        FAIL("expected EmptyReport");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyReport);
    }
    CHECK(rig.chat->call_count() == 0);
}

TEST_CASE("a full rubric build and evaluation stays internally consistent") {
    TempDir tmp;
    log::WarningLog warnings;
    MockRig rig(tmp / "cache", [&](const ModelProfile&, const std::vector<Message>& messages) {
        return canned_judge(messages);
    });
    QualityEvaluator eval(*rig.gw, testsupport::mock_profile(), warnings, 2);

    Rubric rubric = eval.build_rubric("task_7", "How will grid storage costs evolve?");
    CHECK_NOTHROW(rubric.validate());
    REQUIRE(rubric.dimensions.size() == 6);
    CHECK(rubric.task_ref == "task_7");

    auto result = eval.evaluate_report("How will grid storage costs evolve?", rubric,
                                       "# Report\nStorage costs fall steadily.", "report_7");
    // Every dimension scores 0.5*6 + 0.5*8 = 7, so the overall is exactly 7.
    CHECK(result.overall == doctest::Approx(7.0).epsilon(1e-9));
    for (const auto& d : result.per_dimension) {
        CHECK(d.weighted_score == doctest::Approx(7.0).epsilon(1e-9));
        CHECK(d.mean_score == doctest::Approx(7.0).epsilon(1e-9));
    }

    // The reported overall always equals a recomputation from its own parts.
    double recomputed = 0.0;
    for (const auto& d : result.per_dimension) recomputed += d.weight * d.weighted_score;
    CHECK(result.overall == doctest::Approx(recomputed).epsilon(1e-12));

    // Serialization round-trip preserves the result exactly.
    auto reloaded = quality::QualityResult::from_json(result.to_json());
    CHECK(reloaded.to_json().dump() == result.to_json().dump());
    CHECK(round2(reloaded.overall * 100.0) == round2(result.overall * 100.0));
}

}  // TEST_SUITE
