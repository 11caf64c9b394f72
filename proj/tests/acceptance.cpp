// Acceptance gate for the evaluation harness. Each criterion checks one
// protocol guarantee end to end and prints exactly one PASS/FAIL line; the
// process exits nonzero iff any criterion fails. The live-provider smoke
// test reports SKIP when no credentials are present.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dre/commands.hpp"
#include "dre/config.hpp"
#include "dre/errors.hpp"
#include "dre/factcheck.hpp"
#include "dre/gateway.hpp"
#include "dre/jsonio.hpp"
#include "dre/logging.hpp"
#include "dre/providers.hpp"
#include "dre/quality.hpp"
#include "dre/runstore.hpp"
#include "dre/taskgen.hpp"
#include "dre/util.hpp"
#include "support.hpp"

using namespace dre;
namespace fs = std::filesystem;
using nlohmann::json;
using testsupport::TempDir;

namespace {

struct CheckFailure : std::runtime_error {
    explicit CheckFailure(const std::string& message) : std::runtime_error(message) {}
};

void expect(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure(message);
}

std::unique_ptr<gateway::Gateway> automock_gateway(const fs::path& cache_dir) {
    gateway::GatewayOptions options;
    options.cache_dir = cache_dir;
    options.fetch_backoff_ms = 0;
    auto gw = std::make_unique<gateway::Gateway>(options);
    providers::install_providers(*gw, "mock:auto", {"mock"});
    return gw;
}

int run_cli_quiet(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::ostringstream out;
    std::ostringstream err;
    std::streambuf* old_out = std::cout.rdbuf(out.rdbuf());
    std::streambuf* old_err = std::cerr.rdbuf(err.rdbuf());
    int code = -1;
    try {
        code = cli::run_cli(args);
    } catch (...) {
        std::cout.rdbuf(old_out);
        std::cerr.rdbuf(old_err);
        throw;
    }
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    if (out_text != nullptr) *out_text = out.str();
    return code;
}

// --- C1: persona pipeline cardinality over the default domain catalog ---

std::string criterion_pipeline_counts() {
    TempDir tmp;
    auto gw = automock_gateway(tmp / "cache");
    log::WarningLog warnings;
    taskgen::TaskGenerator generator(*gw, testsupport::mock_profile(), warnings);

    taskgen::TaskGenOptions options;
    options.domains = config::default_domains();
    options.personas_per_domain = 5;
    options.tasks_per_persona = 4;
    options.workers = 4;
    taskgen::TaskSet set = generator.run_pipeline(options, "acceptance-c1");

    expect(set.personas.size() == 50, "expected 50 personas, got " +
                                          std::to_string(set.personas.size()));
    expect(set.candidates.size() == 200, "expected 200 candidates, got " +
                                             std::to_string(set.candidates.size()));
    std::set<std::string> ids;
    for (const taskgen::TaskCandidate& c : set.candidates) {
        ids.insert(c.task_id);
        expect(c.task_id.find(".task_") != std::string::npos,
               "task id lacks the .task_N suffix: " + c.task_id);
    }
    expect(ids.size() == set.candidates.size(), "task ids are not globally unique");
    expect(!set.retained.empty(), "pipeline retained no tasks");
    return "50 personas, 200 candidates, " + std::to_string(set.retained.size()) +
           " retained over 10 domains";
}

// --- C2: strict qualification threshold against a brute-force oracle ---

std::string criterion_qualification() {
    std::mt19937 rng(20240602);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int round = 0; round < 1000; ++round) {
        std::map<std::string, taskgen::QualificationVerdict> verdicts;
        int n = 3 + static_cast<int>(rng() % 18);
        for (int i = 0; i < n; ++i) {
            taskgen::QualificationVerdict v;
            v.task_id = "t" + std::to_string(i);
            v.needs_deep_research = rng() % 2 == 0;
            switch (rng() % 5) {
                case 0: v.confidence_score = 0.7; break;
                case 1: v.confidence_score = 0.700001; break;
                case 2: v.confidence_score = 0.699999; break;
                default: v.confidence_score = uniform(rng); break;
            }
            verdicts[v.task_id] = v;
        }
        std::vector<std::string> got = taskgen::retain_qualified(verdicts, 0.7);
        std::vector<std::string> want;
        for (const auto& [id, v] : verdicts) {
            if (v.needs_deep_research && v.confidence_score > 0.7) want.push_back(id);
        }
        std::sort(want.begin(), want.end());
        std::vector<std::string> got_sorted = got;
        std::sort(got_sorted.begin(), got_sorted.end());
        expect(got_sorted == want, "round " + std::to_string(round) +
                                       ": retained set disagrees with the brute-force oracle");
    }

    // The boundary itself: 0.70 exactly fails, the next representable step
    // above passes.
    std::map<std::string, taskgen::QualificationVerdict> edge;
    taskgen::QualificationVerdict at;
    at.task_id = "at";
    at.needs_deep_research = true;
    at.confidence_score = 0.70;
    taskgen::QualificationVerdict above = at;
    above.task_id = "above";
    above.confidence_score = 0.700001;
    edge["at"] = at;
    edge["above"] = above;
    std::vector<std::string> kept = taskgen::retain_qualified(edge, 0.7);
    expect(kept == std::vector<std::string>{"above"},
           "threshold is not strict: 0.70 must fail, 0.700001 must pass");
    return "1000 random verdict maps match the oracle; the > 0.7 boundary is strict";
}

// --- C3: weight repair ladder always lands on a unit sum ---

std::string criterion_weight_repair() {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> uniform(0.01, 1.0);
    std::uniform_real_distribution<double> near_one(-0.0009, 0.0009);
    std::uniform_real_distribution<double> off(0.2, 3.0);
    int accepted = 0;
    int regenerated = 0;
    int negatives = 0;
    for (int round = 0; round < 1000; ++round) {
        size_t n = 5 + rng() % 3;
        std::vector<double> weights;
        int mode = static_cast<int>(rng() % 3);
        if (mode == 0) {
            // Sum within the acceptance tolerance of 1.
            double target = 1.0 + near_one(rng);
            std::vector<double> raw;
            double total = 0.0;
            for (size_t i = 0; i < n; ++i) raw.push_back(uniform(rng));
            for (double w : raw) total += w;
            for (double w : raw) weights.push_back(w / total * target);
        } else if (mode == 1) {
            double target = off(rng);
            if (std::fabs(target - 1.0) < 0.002) target += 0.01;
            std::vector<double> raw;
            double total = 0.0;
            for (size_t i = 0; i < n; ++i) raw.push_back(uniform(rng));
            for (double w : raw) total += w;
            for (double w : raw) weights.push_back(w / total * target);
        } else {
            for (size_t i = 0; i < n; ++i) weights.push_back(uniform(rng));
            weights[rng() % n] = -uniform(rng);
        }

        if (mode == 2) {
            try {
                quality::repair_weights(weights);
                throw CheckFailure("negative weight was not rejected");
            } catch (const Error& e) {
                expect(e.code() == ErrorCode::NegativeWeight,
                       std::string("negative weight raised ") + std::string(e.code_name()));
                ++negatives;
            }
            continue;
        }

        std::vector<double> original = weights;
        quality::WeightRepair outcome = quality::repair_weights(weights);
        if (outcome == quality::WeightRepair::accepted ||
            outcome == quality::WeightRepair::renormalized) {
            double total = 0.0;
            for (double w : weights) total += w;
            expect(std::fabs(total - 1.0) <= 1e-9, "accepted weights do not sum to 1");
            ++accepted;
        } else {
            expect(weights == original, "a regeneration request must leave weights untouched");
            quality::force_renormalize(weights);
            double total = 0.0;
            for (double w : weights) total += w;
            expect(std::fabs(total - 1.0) <= 1e-9, "forced renormalization missed a unit sum");
            double original_total = 0.0;
            for (double w : original) original_total += w;
            for (size_t i = 0; i < weights.size(); ++i) {
                expect(std::fabs(weights[i] - original[i] / original_total) <= 1e-9,
                       "forced renormalization is not proportional");
            }
            ++regenerated;
        }
    }
    expect(accepted > 0 && regenerated > 0 && negatives > 0,
           "fuzz did not exercise every ladder rung");
    return "1000 weight vectors: " + std::to_string(accepted) + " accepted, " +
           std::to_string(regenerated) + " renormalized after regeneration, " +
           std::to_string(negatives) + " negative rejections";
}

// --- C4: score aggregation against an independent oracle ---

struct RandomRubric {
    quality::Rubric rubric;
    std::map<std::string, std::vector<quality::CriterionScore>> scores;
};

RandomRubric make_random_rubric(std::mt19937& rng) {
    std::uniform_real_distribution<double> uniform(0.05, 1.0);
    int extras = 1 + static_cast<int>(rng() % 3);
    std::vector<std::string> names{"Coverage", "Insight", "Instruction Following", "Clarity"};
    for (int i = 0; i < extras; ++i) names.push_back("Special Angle " + std::to_string(i + 1));

    std::vector<double> dim_weights;
    double total = 0.0;
    for (size_t i = 0; i < names.size(); ++i) dim_weights.push_back(uniform(rng));
    for (double w : dim_weights) total += w;
    for (double& w : dim_weights) w /= total;

    RandomRubric out;
    out.rubric.task_ref = "acceptance_c4";
    for (size_t i = 0; i < names.size(); ++i) {
        quality::MetaDimension dim;
        dim.name = names[i];
        dim.definition = "Probe " + names[i] + " quality.";
        dim.kind = i < 4 ? quality::DimensionKind::general : quality::DimensionKind::task_specific;
        dim.weight = dim_weights[i];
        int ncrit = 1 + static_cast<int>(rng() % 10);
        std::vector<double> cw;
        double csum = 0.0;
        for (int c = 0; c < ncrit; ++c) cw.push_back(uniform(rng));
        for (double w : cw) csum += w;
        for (int c = 0; c < ncrit; ++c) {
            quality::Criterion criterion;
            criterion.text = "criterion " + std::to_string(c) + " of " + names[i];
            criterion.explanation = "weighted probe";
            criterion.weight = cw[c] / csum;
            dim.criteria.push_back(criterion);

            quality::CriterionScore score;
            score.criterion_text = criterion.text;
            score.analysis = "scored";
            score.score = static_cast<double>(rng() % 1001) / 100.0;
            out.scores[dim.name].push_back(score);
        }
        out.rubric.dimensions.push_back(std::move(dim));
    }
    return out;
}

std::string criterion_aggregation() {
    std::mt19937 rng(4242);
    for (int round = 0; round < 1000; ++round) {
        RandomRubric rr = make_random_rubric(rng);
        quality::QualityResult result =
            quality::aggregate_quality(rr.rubric, rr.scores, "acceptance/c4");

        long double oracle = 0.0L;
        for (const auto& dim : rr.rubric.dimensions) {
            long double inner = 0.0L;
            for (size_t c = 0; c < dim.criteria.size(); ++c) {
                inner += static_cast<long double>(dim.criteria[c].weight) *
                         static_cast<long double>(rr.scores.at(dim.name)[c].score);
            }
            oracle += static_cast<long double>(dim.weight) * inner;
        }
        expect(std::fabs(result.overall - static_cast<double>(oracle)) <= 1e-9,
               "round " + std::to_string(round) + ": overall diverges from the oracle");
        expect(result.overall >= -1e-9 && result.overall <= 10.0 + 1e-9,
               "overall escaped the [0,10] range");

        if (round % 10 == 0) {
            RandomRubric shuffled = rr;
            std::shuffle(shuffled.rubric.dimensions.begin(), shuffled.rubric.dimensions.end(),
                         rng);
            quality::QualityResult again =
                quality::aggregate_quality(shuffled.rubric, shuffled.scores, "acceptance/c4");
            expect(std::fabs(again.overall - result.overall) <= 1e-9,
                   "dimension order changed the overall score");
        }
    }

    // Degenerate anchors: all-zero and all-ten score sheets.
    std::mt19937 anchor_rng(9);
    RandomRubric anchor = make_random_rubric(anchor_rng);
    for (auto& [name, list] : anchor.scores) {
        (void)name;
        for (auto& s : list) s.score = 0.0;
    }
    expect(std::fabs(quality::aggregate_quality(anchor.rubric, anchor.scores, "z").overall) <=
               1e-9,
           "all-zero scores must aggregate to 0");
    for (auto& [name, list] : anchor.scores) {
        (void)name;
        for (auto& s : list) s.score = 10.0;
    }
    expect(std::fabs(quality::aggregate_quality(anchor.rubric, anchor.scores, "z").overall -
                     10.0) <= 1e-9,
           "all-ten scores must aggregate to 10");
    return "1000 random rubrics match the nested-sum oracle within 1e-9";
}

// --- C5: micro accuracy ratios reproduce the reference leaderboard ---

std::string criterion_reference_ratios() {
    struct Row {
        const char* system;
        long right;
        long statements;
        double expected;
    };
    // Reference rows: verified statement counts and the published accuracy
    // column, ascending.
    const std::vector<Row> reference{
        {"perplexity", 3616, 6134, 58.94}, {"claude", 3479, 5730, 60.72},
        {"grok", 2915, 4716, 61.81},       {"doubao", 5612, 8075, 69.50},
        {"qwen", 2711, 3745, 72.39},       {"openai", 3504, 4598, 76.21},
        {"deepseek", 1917, 2508, 76.44},   {"gemini", 6665, 8699, 76.62},
        {"manus", 4765, 5790, 82.30},
    };

    TempDir tmp;
    runstore::RunStore store(tmp / "runs");
    runstore::RunManifest manifest;
    manifest.run_id = "ref";
    manifest.created_at = "2024-01-01T00:00:00Z";
    manifest.stage = "factcheck";
    store.begin_run(manifest);
    for (const Row& row : reference) {
        runstore::RecordEnvelope record;
        record.kind = runstore::RecordKind::factcheck_report;
        record.run_ref = "ref";
        record.payload = json{{"report_ref", std::string(row.system) + "/task"},
                              {"system", row.system},
                              {"task_id", "task"},
                              {"n_statements", row.statements},
                              {"n_right", row.right},
                              {"n_wrong", row.statements - row.right},
                              {"n_unknown", 0}};
        store.append_record(record);
    }

    runstore::Leaderboard board = runstore::build_leaderboard(store, {}, {"ref"});
    expect(board.factual.size() == reference.size(), "leaderboard dropped a reference system");
    for (size_t i = 0; i < reference.size(); ++i) {
        expect(board.factual[i].system == reference[i].system,
               "ascending order broke at rank " + std::to_string(i) + ": got " +
                   board.factual[i].system);
        double raw = board.factual[i].micro_ratio;
        double rounded = std::round(raw * 100.0) / 100.0;
        double delta = std::min(std::fabs(raw - reference[i].expected),
                                std::fabs(rounded - reference[i].expected));
        expect(delta <= 0.01 + 1e-12,
               std::string(reference[i].system) + ": ratio " + std::to_string(raw) +
                   " misses the reference " + std::to_string(reference[i].expected));
    }
    return "all 9 reference accuracy rows reproduced within 0.01, order preserved";
}

// --- C6: segmentation preserves report content ---

std::string make_corpus_doc(std::mt19937& rng, int index) {
    std::vector<std::string> blocks;
    int nblocks = 2 + static_cast<int>(rng() % 5);
    for (int b = 0; b < nblocks; ++b) {
        switch (rng() % 4) {
            case 0:
                blocks.push_back("## Section " + std::to_string(index) + "." +
                                 std::to_string(b));
                break;
            case 1:
                blocks.push_back("- supply rose " + std::to_string(rng() % 90) +
                                 " percent\n- demand stayed flat\n- margins narrowed again");
                break;
            case 2:
                blocks.push_back("Fleet turnover accelerated during the survey window. "
                                 "Analysts counted " +
                                 std::to_string(100 + rng() % 900) +
                                 " retirements across the region. Replacement orders lag by "
                                 "two quarters.");
                break;
            default:
                blocks.push_back("Net of subsidies, unit economics improved. The effect was "
                                 "strongest in document " +
                                 std::to_string(index) + ".");
                break;
        }
    }
    std::string doc;
    for (size_t b = 0; b < blocks.size(); ++b) {
        if (b > 0) doc += "\n\n";
        doc += blocks[b];
    }
    return doc;
}

std::string criterion_segmentation() {
    TempDir tmp;
    auto gw = automock_gateway(tmp / "cache");
    log::WarningLog warnings;
    factcheck::FactChecker checker(*gw, testsupport::mock_profile(), warnings);

    std::mt19937 rng(606);
    for (int i = 0; i < 20; ++i) {
        std::string doc = make_corpus_doc(rng, i);
        std::vector<factcheck::Segment> segments = checker.segment_report(doc);
        expect(!segments.empty(), "doc " + std::to_string(i) + " produced no segments");
        expect(factcheck::concatenation_invariant_holds(doc, segments),
               "doc " + std::to_string(i) + " broke the concatenation invariant");
    }

    // A model that paraphrases instead of splitting must be overridden by the
    // deterministic fallback, which keeps the invariant.
    log::WarningLog fallback_warnings;
    testsupport::MockRig rig(tmp / "cache2", [](const gateway::ModelProfile&,
                                                const std::vector<gateway::Message>& messages) {
        (void)messages;
        return std::string("[\"A completely paraphrased rendition of the text.\"]");
    });
    factcheck::FactChecker fallback_checker(*rig.gw, testsupport::mock_profile(),
                                            fallback_warnings);
    std::string doc = make_corpus_doc(rng, 99);
    std::vector<factcheck::Segment> segments = fallback_checker.segment_report(doc);
    expect(factcheck::concatenation_invariant_holds(doc, segments),
           "fallback segmentation broke the concatenation invariant");
    bool warned = false;
    for (const auto& w : fallback_warnings.sorted()) {
        if (w.code == "segmentation_fallback") warned = true;
    }
    expect(warned, "paraphrased segmentation did not record the fallback warning");
    return "20 docs segmented losslessly; paraphrasing model forced onto the fallback";
}

// --- C7: the tool budget caps a maximally greedy agent ---

std::string criterion_agent_budget() {
    TempDir tmp;
    log::WarningLog warnings;
    testsupport::MockRig rig(tmp / "cache", [](const gateway::ModelProfile&,
                                               const std::vector<gateway::Message>& messages) {
        std::string all = testsupport::all_text(messages);
        if (all.find("We are now ending this session") != std::string::npos) {
            json entry{{"statement", "The budget held."},
                       {"verification", "Right"},
                       {"reasoning", "confirmed"},
                       {"evidence", json::array({{{"source", "https://example.org"},
                                                  {"excerpt", "held"}}})}};
            return json{{"core_state", json::array({entry})}}.dump(2);
        }
        std::string out = "Casting a wide net.\n";
        for (int i = 0; i < 50; ++i) {
            out += "<tool_call>\n" +
                   json{{"tool", "google_search"},
                        {"arguments", {{"query", "probe " + std::to_string(i)}}}}
                       .dump() +
                   "\n</tool_call>\n";
        }
        return out;
    });
    factcheck::FactChecker checker(*rig.gw, testsupport::mock_profile(), warnings,
                                   factcheck::AgentBudget{}, 1);
    expect(checker.budget().max_turns == 30 && checker.budget().max_tool_calls_per_turn == 10,
           "default budget is not 30 turns x 10 calls");

    factcheck::AgentTranscript transcript =
        checker.verify_segment("the query", factcheck::Segment{0, "The budget held."});
    expect(transcript.turns.size() == 30,
           "expected 30 turns, got " + std::to_string(transcript.turns.size()));
    for (size_t i = 0; i < transcript.turns.size(); ++i) {
        expect(transcript.turns[i].requested_calls == 50,
               "turn " + std::to_string(i) + " did not request 50 calls");
        expect(transcript.turns[i].executed_calls == 10,
               "turn " + std::to_string(i) + " executed " +
                   std::to_string(transcript.turns[i].executed_calls) + " calls, cap is 10");
    }
    expect(transcript.messages.size() == 2 + 2 * 30,
           "transcript shape is wrong: " + std::to_string(transcript.messages.size()) +
               " messages");

    std::vector<factcheck::Verification> verifications = checker.summarize_session(transcript);
    expect(transcript.summary_attempted, "summary was never attempted after the budget ran out");
    expect(verifications.size() == 1 && verifications[0].label == factcheck::Label::Right,
           "summary did not yield the scripted verification");
    return "greedy agent capped at 30 turns x 10 executed calls, summary still collected";
}

// --- C8: fact metrics partition statements; labels stay a closed set ---

std::string criterion_fact_metrics() {
    std::mt19937 rng(31337);
    for (int round = 0; round < 1000; ++round) {
        int n = static_cast<int>(rng() % 51);
        std::vector<factcheck::Verification> verifications;
        long right = 0;
        long wrong = 0;
        long unknown = 0;
        for (int i = 0; i < n; ++i) {
            factcheck::Verification v;
            v.statement = "statement " + std::to_string(i);
            switch (rng() % 3) {
                case 0: v.label = factcheck::Label::Right; ++right; break;
                case 1: v.label = factcheck::Label::Wrong; ++wrong; break;
                default: v.label = factcheck::Label::Unknown; ++unknown; break;
            }
            verifications.push_back(std::move(v));
        }
        factcheck::FactCounts counts = factcheck::compute_fact_metrics(verifications);
        expect(counts.statements == n, "statement count mismatch");
        expect(counts.right == right && counts.wrong == wrong && counts.unknown == unknown,
               "label tallies do not match the input");
        expect(counts.right + counts.wrong + counts.unknown == counts.statements,
               "label tallies do not partition the statements");
        if (n == 0) {
            expect(!counts.ratio.has_value(), "empty input must leave the ratio absent");
        } else {
            expect(counts.ratio.has_value(), "ratio missing for a populated input");
            double want = static_cast<double>(right) / static_cast<double>(n);
            expect(std::fabs(*counts.ratio - want) <= 1e-12, "ratio is not right/statements");
        }
    }

    for (const char* good : {"Right", "Wrong", "Unknown"}) {
        factcheck::label_from_name(good);
    }
    int rejected = 0;
    for (const char* bad : {"right", "WRONG", "unknown", "Correct", "True", "False",
                            "Right ", " Wrong", "", "Mostly Right"}) {
        try {
            factcheck::label_from_name(bad);
        } catch (const Error& e) {
            expect(e.code() == ErrorCode::LabelUnknownValue,
                   std::string("non-canonical label raised ") + std::string(e.code_name()));
            ++rejected;
        }
    }
    expect(rejected == 10, "a non-canonical label spelling slipped through");
    return "1000 metric partitions exact; all 10 non-canonical label spellings rejected";
}

// --- C9: the CLI is deterministic against a warm cache ---

std::string criterion_cli_determinism() {
    TempDir tmp;
    std::string cache = (tmp / "cache").string();

    auto taskgen_once = [&](const std::string& root) {
        int code = run_cli_quiet({"--provider", "mock:auto", "--cache-dir", cache, "--run-dir",
                                  root, "--workers", "1", "--run-id", "t1", "taskgen",
                                  "--domains", "Health", "--personas-per-domain", "2",
                                  "--tasks-per-persona", "2"});
        expect(code == 0, "taskgen exited with code " + std::to_string(code));
        return fs::path(root) / "t1" / "out" / "taskset.json";
    };
    fs::path first = taskgen_once((tmp / "runs1").string());
    fs::path second = taskgen_once((tmp / "runs2").string());
    std::string a = jsonio::canonical(jsonio::strip_volatile(jsonio::load_file(first)));
    std::string b = jsonio::canonical(jsonio::strip_volatile(jsonio::load_file(second)));
    expect(a == b, "two cached taskgen runs differ after volatile fields are stripped");

    taskgen::TaskSet set = taskgen::TaskSet::from_json(jsonio::load_file(first));
    expect(!set.retained.empty(), "taskgen retained nothing to evaluate");
    fs::path reports = tmp / "reports";
    for (const std::string& id : set.retained) {
        fs::create_directories(reports / "sys-a");
        util::write_text_file_atomic(reports / "sys-a" / (id + ".md"),
                                     "# Report\n\nSteel output doubled. Inventories fell to a "
                                     "nine year low across the tracked ports.\n");
    }

    int code = run_cli_quiet({"--provider", "mock:auto", "--cache-dir", cache, "--run-dir",
                              (tmp / "runs1").string(), "--workers", "1", "--run-id", "q1",
                              "evaluate-quality", "--tasks", first.string(), "--reports",
                              reports.string(), "--runs", "3"});
    expect(code == 0, "evaluate-quality exited with code " + std::to_string(code));
    fs::path stability = fs::path((tmp / "runs1").string()) / "q1" / "out" / "stability.txt";
    expect(fs::exists(stability), "stability.txt was not written for --runs 3");
    std::string text = util::read_text_file(stability);
    expect(text.find("sys-a:") != std::string::npos, "stability.txt lacks the system row");
    expect(text.find("(±") != std::string::npos,
           "stability.txt lacks the mean (± stddev) format");
    return "taskgen replays byte-identical; --runs 3 yields a stability summary";
}

// --- C10: record envelopes survive canonical serialization under fuzz ---

json fuzz_value(std::mt19937& rng, int depth);

json fuzz_scalar(std::mt19937& rng) {
    switch (rng() % 5) {
        case 0: return static_cast<long>(rng()) - 2'000'000'000L;
        case 1: return static_cast<double>(rng() % 100000) / 97.0;
        case 2: return rng() % 2 == 0;
        case 3: return nullptr;
        default: {
            std::string s;
            int len = static_cast<int>(rng() % 12);
            for (int i = 0; i < len; ++i) {
                s.push_back(static_cast<char>('a' + rng() % 26));
            }
            if (rng() % 4 == 0) s += " \"quoted\" \\ / \n tail";
            return s;
        }
    }
}

json fuzz_value(std::mt19937& rng, int depth) {
    if (depth <= 0 || rng() % 3 == 0) return fuzz_scalar(rng);
    if (rng() % 2 == 0) {
        json arr = json::array();
        int n = static_cast<int>(rng() % 4);
        for (int i = 0; i < n; ++i) arr.push_back(fuzz_value(rng, depth - 1));
        return arr;
    }
    json obj = json::object();
    int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
        obj["k" + std::to_string(rng() % 10)] = fuzz_value(rng, depth - 1);
    }
    return obj;
}

json minimal_acceptance_payload(runstore::RecordKind kind) {
    using runstore::RecordKind;
    switch (kind) {
        case RecordKind::persona:
            return {{"domain", "Health"},      {"name", "Dr. Vega"},
                    {"role", "analyst"},       {"affiliation", "institute"},
                    {"background", "surveys"}, {"subdomain", "trends"}};
        case RecordKind::candidate:
            return {{"task_id", "health.dr-vega.task_1"},
                    {"persona_ref", "Dr. Vega"},
                    {"query", "How fast are retirements outpacing replacements?"},
                    {"expected_search_rounds", 3},
                    {"time_sensitivity", true}};
        case RecordKind::verdict:
            return {{"task_id", "t"}, {"needs_deep_research", true}, {"confidence_score", 0.8}};
        case RecordKind::assessment:
            return {{"task_id", "t"}, {"quality_score", 0.5}, {"requires_search", true}};
        case RecordKind::rubric:
            return {{"task_ref", "t"}, {"dimensions", json::array()}};
        case RecordKind::quality_result:
            return {{"report_ref", "s/t"}, {"system", "s"},   {"task_id", "t"},
                    {"overall", 5.5},      {"per_dimension", json::array()}};
        case RecordKind::factcheck_report:
            return {{"report_ref", "s/t"}, {"system", "s"},  {"task_id", "t"},
                    {"n_statements", 4},   {"n_right", 2},   {"n_wrong", 1},
                    {"n_unknown", 1}};
        case RecordKind::transcript:
            return {{"report_ref", "s/t"}, {"segment_index", 0}, {"messages", json::array()}};
        case RecordKind::warning:
            return {{"code", "x"}, {"context", "y"}};
    }
    return json::object();
}

std::string criterion_envelope_roundtrip() {
    std::mt19937 rng(1010);
    long total = 0;
    for (runstore::RecordKind kind : runstore::all_record_kinds()) {
        for (int round = 0; round < 1000; ++round) {
            runstore::RecordEnvelope record;
            record.kind = kind;
            record.schema_version = 1 + static_cast<int>(rng() % 9);
            record.run_ref = "run-" + std::to_string(rng() % 100000);
            record.payload = minimal_acceptance_payload(kind);
            int extras = static_cast<int>(rng() % 4);
            for (int i = 0; i < extras; ++i) {
                record.payload["extra_" + std::to_string(rng() % 20)] = fuzz_value(rng, 2);
            }

            std::string wire = jsonio::canonical(record.to_json());
            runstore::RecordEnvelope back = runstore::RecordEnvelope::from_json(json::parse(wire));
            expect(back.kind == record.kind, "kind changed across the round trip");
            expect(back.run_ref == record.run_ref, "run_ref changed across the round trip");
            expect(back.schema_version == record.schema_version,
                   "schema_version changed across the round trip");
            expect(jsonio::canonical(back.to_json()) == wire,
                   "canonical form changed across the round trip");
            ++total;
        }
    }
    return std::to_string(total) + " fuzzed envelopes round-tripped canonically";
}

// --- C11: optional live provider smoke test ---

bool criterion_live_smoke(std::string& detail) {
    const char* openai = std::getenv("OPENAI_API_KEY");
    const char* gemini = std::getenv("GEMINI_API_KEY");
    if ((openai == nullptr || *openai == '\0') && (gemini == nullptr || *gemini == '\0')) {
        detail = "no provider credentials in the environment";
        return false;
    }
    TempDir tmp;
    gateway::GatewayOptions options;
    options.cache_dir = tmp / "cache";
    auto gw = std::make_unique<gateway::Gateway>(options);
    std::string provider_id = (openai != nullptr && *openai != '\0') ? "openai" : "gemini";
    providers::install_providers(*gw, "live", {provider_id});
    gateway::ModelProfile profile;
    profile.provider_id = provider_id;
    profile.model_name = provider_id == "openai" ? "gpt-5-mini" : "gemini-2.5-pro";
    profile.temperature = 0.0;
    profile.max_new_tokens = 32;
    profile.max_context = 100000;
    gateway::ChatExchange reply = gw->complete(
        profile, {gateway::Message{gateway::Role::user, "Reply with the word ready."}});
    expect(!reply.response_text.empty(), "live provider returned an empty response");
    detail = "live " + provider_id + " chat call completed";
    return true;
}

}  // namespace

int main() {
    struct Entry {
        int number;
        const char* title;
        std::function<std::string()> body;
    };
    const std::vector<Entry> criteria{
        {1, "persona pipeline cardinality", criterion_pipeline_counts},
        {2, "strict qualification threshold", criterion_qualification},
        {3, "weight repair ladder", criterion_weight_repair},
        {4, "rubric aggregation oracle", criterion_aggregation},
        {5, "reference accuracy ratios", criterion_reference_ratios},
        {6, "lossless segmentation", criterion_segmentation},
        {7, "agent tool budget", criterion_agent_budget},
        {8, "fact metric partition", criterion_fact_metrics},
        {9, "deterministic CLI replay", criterion_cli_determinism},
        {10, "record envelope round-trip", criterion_envelope_roundtrip},
    };

    int failures = 0;
    for (const Entry& entry : criteria) {
        try {
            std::string detail = entry.body();
            std::cout << "C" << entry.number << " PASS: " << entry.title << ": " << detail
                      << "\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "C" << entry.number << " FAIL: " << entry.title << ": " << e.what()
                      << "\n";
        }
    }

    std::string live_detail;
    try {
        if (criterion_live_smoke(live_detail)) {
            std::cout << "C11 PASS: live provider smoke: " << live_detail << "\n";
        } else {
            std::cout << "C11 SKIP: live provider smoke: " << live_detail << "\n";
        }
    } catch (const std::exception& e) {
        ++failures;
        std::cout << "C11 FAIL: live provider smoke: " << e.what() << "\n";
    }

    std::cout << (failures == 0 ? "acceptance: all criteria satisfied"
                                : "acceptance: " + std::to_string(failures) + " criteria failed")
              << "\n";
    return failures == 0 ? 0 : 1;
}
