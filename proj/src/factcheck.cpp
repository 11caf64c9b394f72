#include "dre/factcheck.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "dre/jsonio.hpp"
#include "dre/prompts.hpp"
#include "dre/util.hpp"

namespace dre::factcheck {

using gateway::Message;
using gateway::Role;

std::string_view label_name(Label label) {
    switch (label) {
        case Label::Right: return "Right";
        case Label::Wrong: return "Wrong";
        case Label::Unknown: return "Unknown";
    }
    return "Unknown";
}

Label label_from_name(std::string_view name) {
    if (name == "Right") return Label::Right;
    if (name == "Wrong") return Label::Wrong;
    if (name == "Unknown") return Label::Unknown;
    throw Error(ErrorCode::LabelUnknownValue,
                "verification label must be Right/Wrong/Unknown, got '" + std::string(name) + "'");
}

json Verification::to_json() const {
    json ev = json::array();
    for (const EvidenceItem& item : evidence) {
        ev.push_back(json{{"source", item.source}, {"excerpt", item.excerpt}});
    }
    return json{{"statement", statement},
                {"verification", std::string(label_name(label))},
                {"evidence", ev},
                {"reasoning", reasoning}};
}

Verification Verification::from_json(const json& value) {
    Verification v;
    v.statement = jsonio::require_string(value, "statement", "verification");
    v.label = label_from_name(jsonio::require_string(value, "verification", "verification"));
    for (const json& item : jsonio::require_array(value, "evidence", "verification")) {
        EvidenceItem e;
        e.source = jsonio::require_string(item, "source", "evidence");
        e.excerpt = jsonio::require_string(item, "excerpt", "evidence");
        v.evidence.push_back(std::move(e));
    }
    v.reasoning = value.value("reasoning", "");
    return v;
}

json AgentTranscript::to_json() const {
    json msgs = json::array();
    for (const Message& m : messages) {
        msgs.push_back(json{{"role", std::string(gateway::role_name(m.role))}, {"text", m.text}});
    }
    json turn_list = json::array();
    for (const TurnStats& t : turns) {
        turn_list.push_back(
            json{{"requested_calls", t.requested_calls}, {"executed_calls", t.executed_calls}});
    }
    return json{{"segment_index", segment_index},
                {"messages", msgs},
                {"turns", turn_list},
                {"summary_attempted", summary_attempted}};
}

json FactCheckReport::to_json() const {
    json segs = json::array();
    for (const Segment& s : segments) segs.push_back(json{{"index", s.index}, {"text", s.text}});
    json checks = json::array();
    for (const Verification& v : verifications) checks.push_back(v.to_json());
    json out{{"report_ref", report_ref},
             {"segments", segs},
             {"verifications", checks},
             {"n_statements", counts.statements},
             {"n_right", counts.right},
             {"n_wrong", counts.wrong},
             {"n_unknown", counts.unknown},
             {"failed_segments", failed_segments}};
    if (counts.ratio.has_value()) out["ratio"] = *counts.ratio;
    return out;
}

namespace {

bool heading_only(const std::string& block) {
    bool saw_line = false;
    size_t start = 0;
    while (start <= block.size()) {
        size_t end = block.find('\n', start);
        std::string line = block.substr(start, end == std::string::npos ? std::string::npos
                                                                        : end - start);
        std::string trimmed = util::trim(line);
        if (!trimmed.empty()) {
            if (trimmed[0] != '#') return false;
            saw_line = true;
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return saw_line;
}

std::vector<std::string> blank_line_blocks(const std::string& report) {
    std::vector<std::string> blocks;
    std::string current;
    size_t start = 0;
    while (start <= report.size()) {
        size_t end = report.find('\n', start);
        std::string line = report.substr(start, end == std::string::npos ? std::string::npos
                                                                         : end - start);
        if (util::trim(line).empty()) {
            if (!util::trim(current).empty()) blocks.push_back(util::trim(current));
            current.clear();
        } else {
            current += line;
            current += '\n';
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (!util::trim(current).empty()) blocks.push_back(util::trim(current));
    return blocks;
}

}  // namespace

std::vector<Segment> heuristic_split(const std::string& report) {
    std::vector<std::string> blocks = blank_line_blocks(report);

    // Headings carry no checkable content of their own; attach them to the
    // section they introduce.
    for (size_t i = 0; i < blocks.size();) {
        if (!heading_only(blocks[i]) || blocks.size() == 1) {
            ++i;
            continue;
        }
        if (i + 1 < blocks.size()) {
            blocks[i + 1] = blocks[i] + "\n" + blocks[i + 1];
        } else {
            blocks[i - 1] += "\n" + blocks[i];
        }
        blocks.erase(blocks.begin() + static_cast<long>(i));
    }

    // Avoid sub-two-sentence segments; fold them into the following block.
    for (size_t i = 0; blocks.size() > 1 && i < blocks.size();) {
        if (util::count_sentences(blocks[i]) >= 2) {
            ++i;
            continue;
        }
        if (i + 1 < blocks.size()) {
            blocks[i + 1] = blocks[i] + "\n\n" + blocks[i + 1];
            blocks.erase(blocks.begin() + static_cast<long>(i));
        } else {
            blocks[i - 1] += "\n\n" + blocks[i];
            blocks.erase(blocks.begin() + static_cast<long>(i));
            break;
        }
    }

    std::vector<Segment> segments;
    for (size_t i = 0; i < blocks.size(); ++i) {
        segments.push_back(Segment{static_cast<int>(i), blocks[i]});
    }
    return segments;
}

bool concatenation_invariant_holds(const std::string& report,
                                   const std::vector<Segment>& segments) {
    std::string joined;
    for (const Segment& s : segments) {
        if (!joined.empty()) joined += ' ';
        joined += s.text;
    }
    return util::normalize_whitespace(report) == util::normalize_whitespace(joined);
}

FactCounts compute_fact_metrics(const std::vector<Verification>& verifications) {
    FactCounts counts;
    counts.statements = static_cast<long>(verifications.size());
    for (const Verification& v : verifications) {
        switch (v.label) {
            case Label::Right: ++counts.right; break;
            case Label::Wrong: ++counts.wrong; break;
            case Label::Unknown: ++counts.unknown; break;
        }
    }
    if (counts.statements > 0) {
        counts.ratio = static_cast<double>(counts.right) / static_cast<double>(counts.statements);
    }
    return counts;
}

namespace {

// Overridable so cached agent sessions replay across days.
std::string formatted_today() {
    if (const char* fixed = std::getenv("DRE_TODAY"); fixed != nullptr && *fixed != '\0') {
        return fixed;
    }
    return util::iso8601_utc_now().substr(0, 10);
}

std::vector<std::string> extract_tool_call_blocks(const std::string& text) {
    std::vector<std::string> blocks;
    const std::string open = "<tool_call>";
    const std::string close = "</tool_call>";
    size_t pos = 0;
    while (true) {
        size_t begin = text.find(open, pos);
        if (begin == std::string::npos) break;
        size_t end = text.find(close, begin + open.size());
        if (end == std::string::npos) break;
        blocks.push_back(util::trim(text.substr(begin + open.size(), end - begin - open.size())));
        pos = end + close.size();
    }
    return blocks;
}

struct ToolOutcome {
    std::string tool = "invalid";
    json result;
};

ToolOutcome run_tool_call(gateway::Gateway& gw, const std::string& raw) {
    ToolOutcome outcome;
    json call = json::parse(raw, nullptr, false);
    if (call.is_discarded() || !call.is_object() || !call.contains("tool") ||
        !call["tool"].is_string()) {
        outcome.result = json{{"error", "invalid tool call: expected {\"tool\", \"arguments\"}"}};
        return outcome;
    }
    outcome.tool = call["tool"].get<std::string>();
    json args = call.value("arguments", json::object());
    if (!args.is_object()) args = json::object();
    try {
        if (outcome.tool == "google_search") {
            std::string query = args.value("query", "");
            if (util::trim(query).empty()) {
                outcome.result = json{{"error", "google_search requires a query"}};
                return outcome;
            }
            int k = 10;
            if (args.contains("num_results") && args["num_results"].is_number()) {
                k = args["num_results"].get<int>();
            }
            json hits = json::array();
            for (const gateway::SearchHit& hit : gw.web_search(query, k)) {
                hits.push_back(hit.to_json());
            }
            outcome.result = json{{"query", query}, {"results", hits}};
        } else if (outcome.tool == "scrape_website") {
            std::string url = args.value("url", "");
            if (util::trim(url).empty()) {
                outcome.result = json{{"error", "scrape_website requires a url"}};
                return outcome;
            }
            gateway::PageCapture page = gw.fetch_page(url);
            outcome.result =
                json{{"url", url}, {"content", page.text}, {"truncated", page.truncated}};
        } else if (outcome.tool == "wiki_get_page_content") {
            std::string title = args.value("title", "");
            if (util::trim(title).empty()) {
                outcome.result = json{{"error", "wiki_get_page_content requires a title"}};
                return outcome;
            }
            gateway::PageCapture page = gw.wiki_page(title);
            outcome.result = json{{"title", title}, {"content", page.text}};
        } else {
            outcome.result = json{{"error", "unknown tool '" + outcome.tool + "'"}};
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Interrupted) throw;
        outcome.result = json{{"error", std::string(e.code_name()) + ": " + e.what()}};
    }
    return outcome;
}

struct ParsedSummary {
    std::vector<Verification> valid;
    std::vector<std::string> problems;
    bool label_fault = false;
    size_t total_entries = 0;
};

ParsedSummary parse_summary(const std::string& text) {
    json value = gateway::extract_tagged_block(text, "json_output");
    if (!value.is_object()) {
        throw Error(ErrorCode::MalformedOutput, "summary is not a JSON object");
    }
    const json& core = jsonio::require_array(value, "core_state", "summary");
    ParsedSummary parsed;
    parsed.total_entries = core.size();
    for (size_t i = 0; i < core.size(); ++i) {
        const json& entry = core[i];
        std::string where = "core_state[" + std::to_string(i) + "]";
        if (!entry.is_object()) {
            parsed.problems.push_back(where + " is not an object");
            continue;
        }
        Verification v;
        if (!entry.contains("statement") || !entry["statement"].is_string() ||
            util::trim(entry["statement"].get<std::string>()).empty()) {
            parsed.problems.push_back(where + " lacks a non-empty statement");
            continue;
        }
        v.statement = entry["statement"].get<std::string>();
        if (!entry.contains("verification") || !entry["verification"].is_string()) {
            parsed.problems.push_back(where + " lacks a verification label");
            continue;
        }
        try {
            v.label = label_from_name(entry["verification"].get<std::string>());
        } catch (const Error&) {
            parsed.problems.push_back(where + " has label '" +
                                      entry["verification"].get<std::string>() +
                                      "' outside Right/Wrong/Unknown");
            parsed.label_fault = true;
            continue;
        }
        bool evidence_ok = true;
        if (entry.contains("evidence")) {
            if (!entry["evidence"].is_array()) {
                parsed.problems.push_back(where + " evidence is not a list");
                continue;
            }
            for (const json& item : entry["evidence"]) {
                if (!item.is_object() || !item.contains("source") || !item["source"].is_string() ||
                    util::trim(item["source"].get<std::string>()).empty() ||
                    !item.contains("excerpt") || !item["excerpt"].is_string() ||
                    util::trim(item["excerpt"].get<std::string>()).empty()) {
                    parsed.problems.push_back(where +
                                              " evidence items need non-empty source and excerpt");
                    evidence_ok = false;
                    break;
                }
                v.evidence.push_back(EvidenceItem{item["source"].get<std::string>(),
                                                  item["excerpt"].get<std::string>()});
            }
            if (!evidence_ok) continue;
        }
        if (v.label != Label::Unknown && v.evidence.empty()) {
            parsed.problems.push_back(where + " is labeled " + std::string(label_name(v.label)) +
                                      " but carries no evidence");
            continue;
        }
        if (!entry.contains("reasoning") || !entry["reasoning"].is_string() ||
            util::trim(entry["reasoning"].get<std::string>()).empty()) {
            parsed.problems.push_back(where + " lacks reasoning");
            continue;
        }
        v.reasoning = entry["reasoning"].get<std::string>();
        parsed.valid.push_back(std::move(v));
    }
    return parsed;
}

}  // namespace

std::vector<Segment> FactChecker::segment_report(const std::string& report) {
    if (util::trim(report).empty()) {
        throw Error(ErrorCode::EmptyReport, "cannot segment an empty report");
    }
    auto parse = [&](const std::string& text) {
        json value = gateway::extract_tagged_block(text, "json_output");
        if (!value.is_array() || value.empty()) {
            throw Error(ErrorCode::MalformedOutput, "segmentation output is not a non-empty list");
        }
        std::vector<Segment> segments;
        for (const json& item : value) {
            if (!item.is_string() || util::trim(item.get<std::string>()).empty()) {
                throw Error(ErrorCode::MalformedOutput, "segmentation parts must be non-empty strings");
            }
            segments.push_back(
                Segment{static_cast<int>(segments.size()), item.get<std::string>()});
        }
        return segments;
    };

    std::vector<Message> messages{{Role::user, prompts::report_segmentation(report)}};
    std::string fallback_reason;
    try {
        std::vector<Segment> segments =
            gateway::complete_with_retry(gw_, model_, messages, parse);
        if (concatenation_invariant_holds(report, segments)) return segments;
        fallback_reason = "segment concatenation does not reproduce the report";
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedOutput) throw;
        fallback_reason = e.what();
    }
    warnings_.add("segmentation_fallback", "report", fallback_reason);
    return heuristic_split(report);
}

AgentTranscript FactChecker::verify_segment(const std::string& task_query, const Segment& segment) {
    if (util::trim(segment.text).empty()) {
        throw Error(ErrorCode::Precondition, "cannot verify an empty segment");
    }
    AgentTranscript transcript;
    transcript.segment_index = segment.index;
    transcript.messages.push_back(
        {Role::system,
         prompts::agent_system(formatted_today(), budget_.max_tool_calls_per_turn)});
    transcript.messages.push_back({Role::user, prompts::verification_task(task_query, segment.text)});

    for (int turn = 0; turn < budget_.max_turns; ++turn) {
        util::throw_if_interrupted();
        gateway::ChatExchange exchange = gw_.complete(model_, transcript.messages);
        transcript.messages.push_back({Role::assistant, exchange.response_text});

        std::vector<std::string> calls = extract_tool_call_blocks(exchange.response_text);
        TurnStats stats;
        stats.requested_calls = static_cast<int>(calls.size());
        if (calls.empty()) {
            transcript.turns.push_back(stats);
            break;
        }
        // Calls beyond the per-turn cap are dropped, never queued; the final
        // in-budget turn's calls still execute.
        std::string results;
        for (size_t i = 0; i < calls.size() &&
                           stats.executed_calls < budget_.max_tool_calls_per_turn;
             ++i) {
            ToolOutcome outcome = run_tool_call(gw_, calls[i]);
            ++stats.executed_calls;
            results += "<tool_result tool=\"" + outcome.tool + "\" index=\"" + std::to_string(i) +
                       "\">\n" + outcome.result.dump(2) + "\n</tool_result>\n";
        }
        transcript.turns.push_back(stats);
        transcript.messages.push_back({Role::user, results});
    }
    return transcript;
}

std::vector<Verification> FactChecker::summarize_session(AgentTranscript& transcript) {
    bool has_agent_turn = false;
    for (const Message& m : transcript.messages) {
        if (m.role == Role::assistant) has_agent_turn = true;
    }
    if (!has_agent_turn) {
        throw Error(ErrorCode::Precondition, "summary requested before any agent turn");
    }

    transcript.messages.push_back({Role::user, prompts::summary_request()});
    transcript.summary_attempted = true;
    gateway::ChatExchange first = gw_.complete(model_, transcript.messages);
    transcript.messages.push_back({Role::assistant, first.response_text});

    ParsedSummary primary;
    bool primary_ok = false;
    try {
        primary = parse_summary(first.response_text);
        primary_ok = true;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedOutput) throw;
    }
    if (primary_ok && primary.problems.empty()) return primary.valid;

    std::string complaint = "Your previous summary could not be fully parsed";
    if (primary_ok) {
        complaint += " (";
        for (size_t i = 0; i < primary.problems.size(); ++i) {
            if (i != 0) complaint += "; ";
            complaint += primary.problems[i];
        }
        complaint += ")";
    }
    complaint += ". Re-emit the complete core_state JSON object exactly in the required format, "
                 "with no text outside it.";
    transcript.messages.push_back({Role::user, complaint});
    gateway::ChatExchange second = gw_.complete(model_, transcript.messages);
    transcript.messages.push_back({Role::assistant, second.response_text});

    ParsedSummary retry;
    bool retry_ok = false;
    try {
        retry = parse_summary(second.response_text);
        retry_ok = true;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedOutput) throw;
    }

    const ParsedSummary* chosen = nullptr;
    if (retry_ok && retry.problems.empty()) return retry.valid;
    if (retry_ok) {
        chosen = &retry;
    } else if (primary_ok) {
        chosen = &primary;
    } else {
        throw Error(ErrorCode::MalformedOutput,
                    "session summary was not parseable after one retry");
    }

    std::string context = "segment:" + std::to_string(transcript.segment_index);
    for (const std::string& problem : chosen->problems) {
        warnings_.add("summary_entry_dropped", context, problem);
    }
    if (chosen->total_entries > 0 && chosen->valid.empty()) {
        if (chosen->label_fault) {
            throw Error(ErrorCode::LabelUnknownValue,
                        "every summary entry used an unrecognized verification label");
        }
        throw Error(ErrorCode::MalformedOutput, "every summary entry was invalid after retry");
    }
    return chosen->valid;
}

FactCheckReport FactChecker::check_report(const std::string& task_query, const std::string& report,
                                          const std::string& report_ref,
                                          std::vector<AgentTranscript>* transcripts_out) {
    if (util::trim(report).empty()) {
        throw Error(ErrorCode::EmptyReport, "report '" + report_ref + "' is empty");
    }
    std::vector<Segment> segments = segment_report(report);

    struct SegmentOutcome {
        std::vector<Verification> verifications;
        AgentTranscript transcript;
    };
    auto outcomes = util::parallel_map(segments, workers_, [&](const Segment& segment) {
        SegmentOutcome outcome;
        outcome.transcript = verify_segment(task_query, segment);
        outcome.verifications = summarize_session(outcome.transcript);
        return outcome;
    });

    FactCheckReport result;
    result.report_ref = report_ref;
    result.segments = segments;
    const Error* first_error = nullptr;
    std::set<std::string> seen;
    for (size_t i = 0; i < segments.size(); ++i) {
        if (!outcomes[i].ok()) {
            rethrow_if_fatal(*outcomes[i].error);
            result.failed_segments.push_back(segments[i].index);
            warnings_.add("segment_failed", "segment:" + std::to_string(segments[i].index),
                          outcomes[i].error->what());
            if (first_error == nullptr) first_error = &*outcomes[i].error;
            continue;
        }
        if (transcripts_out != nullptr) {
            transcripts_out->push_back(std::move(outcomes[i].value->transcript));
        }
        for (Verification& v : outcomes[i].value->verifications) {
            // Repeated statements across segments count once; first wins.
            if (!seen.insert(v.statement).second) continue;
            result.verifications.push_back(std::move(v));
        }
    }
    if (!segments.empty() && result.failed_segments.size() == segments.size()) {
        throw *first_error;
    }
    result.counts = compute_fact_metrics(result.verifications);
    return result;
}

}  // namespace dre::factcheck
