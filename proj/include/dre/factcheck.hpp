#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dre/gateway.hpp"
#include "dre/logging.hpp"

namespace dre::factcheck {

using nlohmann::json;

struct Segment {
    int index = 0;
    std::string text;
};

struct EvidenceItem {
    std::string source;
    std::string excerpt;
};

enum class Label { Right, Wrong, Unknown };

std::string_view label_name(Label label);
// Strict closed-set parse; anything else throws Error(LabelUnknownValue).
Label label_from_name(std::string_view name);

struct Verification {
    std::string statement;
    Label label = Label::Unknown;
    std::vector<EvidenceItem> evidence;
    std::string reasoning;

    json to_json() const;
    static Verification from_json(const json& value);
};

struct AgentBudget {
    int max_turns = 30;
    int max_tool_calls_per_turn = 10;
};

struct TurnStats {
    int requested_calls = 0;
    int executed_calls = 0;
};

struct AgentTranscript {
    int segment_index = 0;
    std::vector<gateway::Message> messages;
    std::vector<TurnStats> turns;
    bool summary_attempted = false;

    json to_json() const;
};

struct FactCounts {
    long statements = 0;
    long right = 0;
    long wrong = 0;
    long unknown = 0;
    std::optional<double> ratio;  // absent when statements == 0
};

struct FactCheckReport {
    std::string report_ref;
    std::vector<Segment> segments;
    std::vector<Verification> verifications;
    FactCounts counts;
    std::vector<int> failed_segments;  // coverage gaps, excluded from counts

    json to_json() const;
};

// Deterministic fallback splitter: blank-line blocks, headings merged
// forward, short blocks merged into their successor.
std::vector<Segment> heuristic_split(const std::string& report);

// True iff joining the segments reproduces the report after whitespace-run
// normalization.
bool concatenation_invariant_holds(const std::string& report, const std::vector<Segment>& segments);

FactCounts compute_fact_metrics(const std::vector<Verification>& verifications);

class FactChecker {
public:
    FactChecker(gateway::Gateway& gw, gateway::ModelProfile model, log::WarningLog& warnings,
                AgentBudget budget = {}, int workers = 4)
        : gw_(gw), model_(std::move(model)), warnings_(warnings), budget_(budget),
          workers_(workers) {}

    std::vector<Segment> segment_report(const std::string& report);
    AgentTranscript verify_segment(const std::string& task_query, const Segment& segment);
    std::vector<Verification> summarize_session(AgentTranscript& transcript);
    FactCheckReport check_report(const std::string& task_query, const std::string& report,
                                 const std::string& report_ref,
                                 std::vector<AgentTranscript>* transcripts_out = nullptr);

    const AgentBudget& budget() const { return budget_; }

private:
    gateway::Gateway& gw_;
    gateway::ModelProfile model_;
    log::WarningLog& warnings_;
    AgentBudget budget_;
    int workers_;
};

}  // namespace dre::factcheck
