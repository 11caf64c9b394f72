#include "dre/providers.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <sstream>

#include "dre/factcheck.hpp"
#include "dre/jsonio.hpp"
#include "dre/util.hpp"

namespace dre::providers {

using jsonio::json;

namespace {

std::string concat_texts(const std::vector<Message>& messages) {
    std::string all;
    for (const Message& m : messages) {
        all += m.text;
        all += '\n';
    }
    return all;
}

std::string last_user_text(const std::vector<Message>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == gateway::Role::user) return it->text;
    }
    return {};
}

// Substring between two anchors, or empty when either is absent.
std::string between(const std::string& text, const std::string& a, const std::string& b) {
    size_t start = text.find(a);
    if (start == std::string::npos) return {};
    start += a.size();
    size_t end = text.find(b, start);
    if (end == std::string::npos) return {};
    return text.substr(start, end - start);
}

int parse_int_after(const std::string& text, const std::string& anchor, int fallback) {
    size_t pos = text.find(anchor);
    if (pos == std::string::npos) return fallback;
    pos += anchor.size();
    size_t end = pos;
    while (end < text.size() && std::isdigit(static_cast<unsigned char>(text[end]))) ++end;
    if (end == pos) return fallback;
    return std::stoi(text.substr(pos, end - pos));
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }
double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (size_t i = 0; i < text.size(); ++i) {
        current.push_back(text[i]);
        char c = text[i];
        bool terminator = (c == '.' || c == '!' || c == '?');
        bool run_end = terminator && (i + 1 == text.size() ||
                                      (text[i + 1] != '.' && text[i + 1] != '!' && text[i + 1] != '?'));
        bool boundary = run_end && (i + 1 == text.size() ||
                                    std::isspace(static_cast<unsigned char>(text[i + 1])));
        if (boundary) {
            std::string s = util::trim(current);
            if (!s.empty()) out.push_back(s);
            current.clear();
        }
    }
    std::string rest = util::trim(current);
    if (!rest.empty()) out.push_back(rest);
    return out;
}

std::string first_words(const std::string& text, int n) {
    std::istringstream in(text);
    std::string word, out;
    int count = 0;
    while (count < n && in >> word) {
        if (!out.empty()) out += ' ';
        out += word;
        ++count;
    }
    return out;
}

const std::vector<std::string>& first_names() {
    static const std::vector<std::string> v{
        "Avery", "Jordan", "Morgan", "Riley",  "Quinn",  "Elena", "Marcus", "Priya", "Tomas",
        "Ingrid", "Kenji", "Amara",  "Lucas",  "Sofia",  "Nadia", "Omar",   "Helena", "Dmitri",
        "Clara",  "Rafael", "Mei",   "Viktor", "Lena",   "Arjun", "Paula"};
    return v;
}

const std::vector<std::string>& last_names() {
    static const std::vector<std::string> v{
        "Chen",    "Okafor",   "Lindqvist", "Marino",   "Petrov", "Tanaka",   "Alvarez",
        "Novak",   "Haddad",   "Kowalski",  "Dube",     "Ferrer", "Schmidt",  "Osei",
        "Ivanova", "Nakamura", "Berg",      "Costa",    "Varga",  "Singh",    "Moreau",
        "Janssen", "Kim",      "Rossi",     "Weber"};
    return v;
}

const std::vector<std::string>& role_pool() {
    static const std::vector<std::string> v{
        "university student", "graduate researcher", "industry analyst",  "policy advisor",
        "software engineer",  "program manager",     "independent consultant", "journalist",
        "educator",           "community organizer"};
    return v;
}

const std::vector<std::string>& affiliation_pool() {
    static const std::vector<std::string> v{
        "Northbrook Institute", "Cedar Valley University", "Halcyon Analytics",
        "Meridian Labs",        "Civic Futures Forum",     "Bluewater Consulting",
        "Stonebridge Group",    "OpenField Collective"};
    return v;
}

const std::vector<std::string>& subdomain_pool() {
    static const std::vector<std::string> v{
        "Emerging Trends",        "Policy & Regulation", "Applied Analytics",
        "Tooling & Infrastructure", "Community Practice", "Market Dynamics",
        "Risk & Resilience",      "Education & Training"};
    return v;
}

const std::vector<std::pair<std::string, std::string>>& task_dimension_pool() {
    static const std::vector<std::pair<std::string, std::string>> v{
        {"Comparative Synthesis",
         "How well the report reconciles findings across sources, regions, or options into a "
         "coherent comparison."},
        {"Implementation Viability",
         "Whether recommendations are concrete, resourced, and realistic for the requester to act "
         "on."},
        {"Temporal Relevance",
         "How well the report anchors findings to the requested time window and flags staleness."},
        {"Stakeholder Alignment",
         "Whether the analysis addresses the distinct needs of the parties named in the task."},
        {"Methodological Rigor",
         "Quality of the analytical approach: stated assumptions, comparable metrics, and "
         "justified conclusions."},
        {"Risk Assessment",
         "Coverage of downside scenarios, uncertainties, and mitigation options relevant to the "
         "decision."},
        {"Recommendation Actionability",
         "Clarity and specificity of next steps, priorities, and decision criteria."}};
    return v;
}

}  // namespace

std::string HandlerChatProvider::complete(const ModelProfile& profile,
                                          const std::vector<Message>& messages, TokenUsage& usage) {
    calls_.fetch_add(1);
    usage.prompt_tokens = static_cast<long>(concat_texts(messages).size() / 4);
    std::string out = handler_(profile, messages);
    usage.completion_tokens = static_cast<long>(out.size() / 4);
    return out;
}

ScriptedChatProvider::ScriptedChatProvider(std::string id, nlohmann::json script)
    : id_(std::move(id)) {
    if (const json* chat = jsonio::find_key(script, "chat")) {
        for (const json& rule : *chat) {
            Rule r;
            r.match = rule.value("match", "");
            if (const json* responses = jsonio::find_key(rule, "responses")) {
                for (const json& resp : *responses) r.responses.push_back(resp.get<std::string>());
            }
            if (r.responses.empty()) continue;
            rules_.push_back(std::move(r));
        }
    }
}

std::string ScriptedChatProvider::complete(const ModelProfile& profile,
                                           const std::vector<Message>& messages,
                                           TokenUsage& usage) {
    std::string haystack = concat_texts(messages);
    std::string response;
    bool matched = false;
    {
        std::lock_guard lock(mutex_);
        for (Rule& rule : rules_) {
            if (rule.match.empty() || haystack.find(rule.match) != std::string::npos) {
                response = rule.responses[std::min(rule.next, rule.responses.size() - 1)];
                ++rule.next;
                matched = true;
                break;
            }
        }
    }
    if (!matched) {
        // Unscripted prompts fall through to the schema-valid generator so a
        // script only has to pin the turns it cares about.
        AutoMockChatProvider fallback(id_);
        return fallback.complete(profile, messages, usage);
    }
    if (response == "__RAISE__") {
        throw Error(ErrorCode::ProviderUnavailable, "scripted provider failure");
    }
    if (response == "__EMPTY__") return "";
    usage.completion_tokens = static_cast<long>(response.size() / 4);
    return response;
}

namespace {

struct Rng {
    std::mt19937_64 engine;
    explicit Rng(std::uint64_t seed) : engine(seed) {}
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine); }
    int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine); }
    template <typename T>
    const T& pick(const std::vector<T>& pool) {
        return pool[static_cast<size_t>(range(0, static_cast<int>(pool.size()) - 1))];
    }
    std::string hex8() {
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (int i = 0; i < 8; ++i) out.push_back(digits[range(0, 15)]);
        return out;
    }
};

json mock_personas(Rng& rng, const std::string& prompt) {
    std::string domain = between(prompt, "For the domain \"", "\"");
    int n = parse_int_after(prompt, "generate ", 5);
    json personas = json::array();
    std::vector<std::string> used;
    for (int i = 0; i < n; ++i) {
        std::string name;
        do {
            name = rng.pick(first_names()) + " " + rng.pick(last_names());
        } while (std::find(used.begin(), used.end(), name) != used.end());
        used.push_back(name);
        std::string role = rng.pick(role_pool());
        std::string subdomain = domain + ": " + rng.pick(subdomain_pool());
        std::string background =
            name + " trained in " + domain + " topics and has spent " +
            std::to_string(rng.range(3, 18)) + " years around " + subdomain +
            ". Their day-to-day work as a " + role +
            " involves tracking developments, talking to practitioners, and turning scattered "
            "findings into decisions. They follow the area closely and often need synthesized, "
            "current information that goes beyond a single source.";
        personas.push_back(json{{"name", name},
                                {"role", role},
                                {"affiliation", rng.pick(affiliation_pool())},
                                {"background", background},
                                {"subdomain", subdomain}});
    }
    return json{{"domain", domain}, {"personas", personas}};
}

json mock_tasks(Rng& rng, const std::string& prompt) {
    int m = parse_int_after(prompt, "generate ", 4);
    std::string persona_name = util::trim(between(prompt, "- Name: ", "\n"));
    std::string subdomain = util::trim(between(prompt, "- Subdomain: ", "\n"));
    if (subdomain.empty()) subdomain = "the field";
    static const std::vector<std::string> angles{
        "regulatory shifts", "adoption trends",   "funding flows",   "tooling changes",
        "regional contrasts", "expert debates",   "cost trajectories", "workforce impacts"};
    static const std::vector<std::string> regions{
        "the US, EU, and Asia", "North America and Europe", "major global markets",
        "leading research hubs"};
    json tasks = json::array();
    for (int i = 1; i <= m; ++i) {
        bool sensitive = rng.uniform() < 0.6;
        std::string query = "How did " + rng.pick(angles) + " around " + subdomain +
                            " evolve across " + rng.pick(regions) +
                            " over the past two years, and what practical implications should " +
                            "guide planning decisions for the coming year?";
        json task{{"task_id", "task_" + std::to_string(i)},
                  {"deep_research_query", query},
                  {"key_challenges",
                   "Needs multiple search rounds across news, reports, and primary sources, plus "
                   "synthesis of conflicting and time-sensitive perspectives."},
                  {"expected_search_rounds", rng.range(2, 6)},
                  {"time_sensitivity", sensitive}};
        task["time_constraint"] =
            sensitive ? json("Focus on developments from the last 24 months.") : json(nullptr);
        tasks.push_back(std::move(task));
    }
    return json{{"persona_name", persona_name}, {"tasks", tasks}};
}

json mock_qualification(Rng& rng) {
    static const std::vector<std::string> sources{"academic papers", "news",          "technical reports",
                                                  "market data",     "policy documents", "statistics"};
    json picked = json::array();
    int count = rng.range(3, 5);
    for (int i = 0; i < count; ++i) picked.push_back(sources[static_cast<size_t>(i)]);
    double confidence = round2(0.71 + 0.29 * rng.uniform());
    if (confidence <= 0.7) confidence = 0.71;
    return json{{"needs_deep_research", true},
                {"confidence_score", confidence},
                {"reasoning",
                 "The query depends on recent cross-source developments that cannot be answered "
                 "from static knowledge; it needs several rounds of retrieval over news, primary "
                 "reports, and data, followed by synthesis of disagreeing accounts into one "
                 "defensible picture."},
                {"search_complexity", rng.uniform() < 0.5 ? "High" : "Medium"},
                {"information_sources_needed", picked},
                {"latest_info_required", true},
                {"cross_domain_integration", rng.uniform() < 0.5}};
}

std::string mock_baseline(Rng& rng, const std::string& prompt) {
    std::string query = util::trim(between(prompt, "Query: ", "\n"));
    std::string opener = first_words(query, 8);
    std::string body =
        "Working only from what I already know: " + opener +
        " has been shifting quickly, and my account here may lag current events. The broad "
        "picture involves several competing actors, uneven regional developments, and figures I "
        "cannot pin down precisely without checking sources. I can sketch the general mechanisms "
        "and past trajectory, but exact dates, recent numbers, and the latest announcements are "
        "uncertain, and parts of this answer may be outdated.";
    if (rng.uniform() < 0.3) {
        body += " A fuller answer would compare primary documents against recent reporting.";
    }
    return body;
}

json mock_assessment(Rng& rng) {
    double quality = round2(0.15 + 0.35 * rng.uniform());
    return json{{"overall_quality", quality > 0.35 ? "medium" : "low"},
                {"quality_score", quality},
                {"completeness_score", round2(0.2 + 0.3 * rng.uniform())},
                {"accuracy_score", round2(0.4 + 0.4 * rng.uniform())},
                {"depth_score", round2(0.1 + 0.4 * rng.uniform())},
                {"timeliness_score", round2(0.05 + 0.25 * rng.uniform())},
                {"accuracy_concerns", "Specific figures and dates are stated from memory only."},
                {"missing_aspects", "Recent developments and primary-source numbers are absent."},
                {"outdated_info", "Regulatory and market details likely postdate the model's knowledge."},
                {"requires_search", true},
                {"search_necessity_reasoning",
                 "The no-search answer concedes uncertainty about current facts and omits the "
                 "recent, source-backed detail the query demands. Search is required to gather "
                 "up-to-date figures, confirm events, and reconcile conflicting accounts before "
                 "a dependable answer is possible."}};
}

std::string mock_dimensions(Rng& rng) {
    int count = rng.range(1, 3);
    std::vector<size_t> indices(task_dimension_pool().size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    std::shuffle(indices.begin(), indices.end(), rng.engine);
    json dims = json::array();
    for (int i = 0; i < count; ++i) {
        const auto& [name, definition] = task_dimension_pool()[indices[static_cast<size_t>(i)]];
        dims.push_back(json{{"meta_dimension_name", name}, {"definition", definition}});
    }
    return "<json_output>\n" + dims.dump(2) + "\n</json_output>";
}

std::string mock_weights(Rng& rng, const std::string& prompt) {
    std::vector<std::string> keys{"coverage", "insight", "instruction_following", "clarity"};
    std::string extra = between(prompt, "<additional_meta_dimensions_json>", "</additional_meta_dimensions_json>");
    if (!util::trim(extra).empty()) {
        json dims = json::parse(util::trim(extra), nullptr, false);
        if (dims.is_array()) {
            for (const json& d : dims) {
                if (d.contains("meta_dimension_name")) {
                    keys.push_back(d["meta_dimension_name"].get<std::string>());
                }
            }
        }
    }
    std::vector<int> raw;
    int total = 0;
    for (size_t i = 0; i < keys.size(); ++i) {
        int r = rng.range(8, 30);
        raw.push_back(r);
        total += r;
    }
    json weights = json::object();
    double acc = 0.0;
    for (size_t i = 0; i < keys.size(); ++i) {
        double w = i + 1 == keys.size() ? round3(1.0 - acc)
                                        : round3(static_cast<double>(raw[i]) / total);
        acc += w;
        weights[keys[i]] = w;
    }
    return "<analysis>\nWeights lean toward the dimensions this task stresses most; each value "
           "reflects the share of effort a strong report would need there.\n</analysis>\n\n"
           "<json_output>\n" +
           weights.dump(2) + "\n</json_output>";
}

std::string mock_criteria(Rng& rng, const std::string& prompt) {
    std::string dimension = between(prompt, "dimension = **", "**");
    int count = rng.range(2, 5);
    static const std::vector<std::string> aspects{
        "names the core entities and time window explicitly",
        "grounds claims in identifiable, recent sources",
        "keeps comparisons on consistent metrics",
        "separates established facts from projection",
        "addresses the requester's stated deliverables",
        "orders material so conclusions follow from evidence"};
    std::vector<size_t> indices(aspects.size());
    for (size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    std::shuffle(indices.begin(), indices.end(), rng.engine);

    std::vector<int> raw;
    int total = 0;
    for (int i = 0; i < count; ++i) {
        int r = rng.range(10, 40);
        raw.push_back(r);
        total += r;
    }
    json criteria = json::array();
    double acc = 0.0;
    for (int i = 0; i < count; ++i) {
        double w = i + 1 == count ? round3(1.0 - acc)
                                  : round3(static_cast<double>(raw[static_cast<size_t>(i)]) / total);
        acc += w;
        criteria.push_back(json{
            {"criterion", dimension + ": report " + aspects[indices[static_cast<size_t>(i)]]},
            {"explanation", "Checks that the report " + aspects[indices[static_cast<size_t>(i)]] +
                                " within the " + dimension + " dimension."},
            {"weight", w}});
    }
    return "<analysis>\nCriteria partition the dimension into independent checks; weights follow "
           "their importance for this task.\n</analysis>\n\n<json_output>\n" +
           criteria.dump(2) + "\n</json_output>";
}

std::string mock_scores(Rng& rng, const std::string& prompt) {
    std::string block = between(prompt, "<criteria_of_one_dimension_json>", "</criteria_of_one_dimension_json>");
    json criteria = json::parse(util::trim(block), nullptr, false);
    json scores = json::array();
    if (criteria.is_array()) {
        for (const json& c : criteria) {
            std::string name = c.value("criterion", "");
            double s = round2(4.0 + 5.0 * rng.uniform());
            scores.push_back(json{{"criterion", name},
                                  {"analysis",
                                   "The report addresses this criterion with reasonable depth; "
                                   "gaps keep it out of the top band."},
                                  {"report_score_0_to_10", s}});
        }
    }
    return "<json_output>\n" + scores.dump(2) + "\n</json_output>";
}

std::string mock_segmentation(const std::string& prompt) {
    std::string anchor = "Please segment the following report into logical parts:";
    size_t pos = prompt.find(anchor);
    std::string report = pos == std::string::npos ? "" : prompt.substr(pos + anchor.size());
    report = util::trim(report);
    json parts = json::array();
    for (const auto& segment : factcheck::heuristic_split(report)) parts.push_back(segment.text);
    if (parts.empty()) parts.push_back(report);
    return parts.dump(2);
}

std::string mock_agent_turn(Rng& rng, const std::vector<Message>& messages) {
    int assistant_turns = 0;
    for (const Message& m : messages) {
        if (m.role == gateway::Role::assistant) ++assistant_turns;
    }
    std::string first_user;
    for (const Message& m : messages) {
        if (m.role == gateway::Role::user) {
            first_user = m.text;
            break;
        }
    }
    std::string part = util::trim(between(first_user, "[part]:\n", "\n\nYour task"));
    if (assistant_turns == 0) {
        std::string query = first_words(util::normalize_whitespace(part), 6);
        json call{{"tool", "google_search"},
                  {"arguments", json{{"query", query}, {"num_results", 10}}}};
        std::string out =
            "1. Identify the key checkable statements in the part.\n"
            "2. Search for corroborating coverage.\n"
            "3. Record a verdict per statement with evidence.\n\n"
            "Starting with a search over the central claim.\n\n<tool_call>\n" +
            call.dump() + "\n</tool_call>";
        if (rng.uniform() < 0.4) {
            json second{{"tool", "wiki_get_page_content"},
                        {"arguments", json{{"title", first_words(part, 2)}}}};
            out += "\n<tool_call>\n" + second.dump() + "\n</tool_call>";
        }
        return out;
    }
    return "The retrieved coverage is sufficient to judge the key statements; no further lookups "
           "are needed.";
}

std::string mock_summary(Rng& rng, const std::vector<Message>& messages) {
    std::string first_user;
    for (const Message& m : messages) {
        if (m.role == gateway::Role::user) {
            first_user = m.text;
            break;
        }
    }
    std::string part = util::trim(between(first_user, "[part]:\n", "\n\nYour task"));
    std::vector<std::string> sentences = split_sentences(util::normalize_whitespace(part));
    std::vector<std::string> statements;
    for (const std::string& s : sentences) {
        if (util::count_words(s) >= 5) statements.push_back(s);
        if (statements.size() == 4) break;
    }
    if (statements.empty() && !part.empty()) {
        statements.push_back(util::normalize_whitespace(part));
    }
    json core = json::array();
    for (const std::string& statement : statements) {
        double u = rng.uniform();
        std::string label = u < 0.70 ? "Right" : (u < 0.85 ? "Wrong" : "Unknown");
        json evidence = json::array();
        if (label != "Unknown") {
            int count = rng.range(1, 2);
            for (int i = 0; i < count; ++i) {
                evidence.push_back(json{
                    {"source", "https://ref.example.org/" + rng.hex8() + "/" + std::to_string(i)},
                    {"excerpt", first_words(statement, 10)}});
            }
        }
        std::string reasoning =
            label == "Right"
                ? "Independent coverage repeats the same figures and framing as the statement."
                : (label == "Wrong"
                       ? "Retrieved sources give a materially different account than the statement."
                       : "No retrieved source spoke to this claim directly, so it stays unverified.");
        core.push_back(json{{"statement", statement},
                            {"verification", label},
                            {"evidence", evidence},
                            {"reasoning", reasoning}});
    }
    return json{{"core_state", core}}.dump(2);
}

}  // namespace

std::string AutoMockChatProvider::complete(const ModelProfile& profile,
                                           const std::vector<Message>& messages,
                                           TokenUsage& usage) {
    std::string all = concat_texts(messages);
    std::string fingerprint = profile.provider_id + "|" + profile.model_name + "|" +
                              std::to_string(profile.temperature) + "|" +
                              (profile.seed ? std::to_string(*profile.seed) : "none") + "|" + all;
    Rng rng(util::digest_seed(fingerprint));
    usage.prompt_tokens = static_cast<long>(all.size() / 4);

    // Summary detection must look past a possible corrective retry message.
    int user_seen = 0;
    bool summary = false;
    for (auto it = messages.rbegin(); it != messages.rend() && user_seen < 2; ++it) {
        if (it->role != gateway::Role::user) continue;
        ++user_seen;
        if (it->text.find("We are now ending this session") != std::string::npos) {
            summary = true;
            break;
        }
    }

    std::string out;
    if (summary) {
        out = mock_summary(rng, messages);
    } else if (all.find("You are a persona generator") != std::string::npos) {
        out = mock_personas(rng, all).dump(2);
    } else if (all.find("You are a deep research query designer") != std::string::npos) {
        out = mock_tasks(rng, all).dump(2);
    } else if (all.find("You are a deep research query analysis expert") != std::string::npos) {
        out = mock_qualification(rng).dump(2);
    } else if (all.find("Based solely on your existing knowledge") != std::string::npos) {
        out = mock_baseline(rng, all);
    } else if (all.find("You are an answer quality evaluator") != std::string::npos) {
        out = mock_assessment(rng).dump(2);
    } else if (all.find("query-specific meta-evaluation dimensions") != std::string::npos &&
               all.find("designs") != std::string::npos) {
        out = mock_dimensions(rng);
    } else if (all.find("You are a senior research evaluation expert") != std::string::npos) {
        out = mock_weights(rng, all);
    } else if (all.find("break down a meta-evaluation dimension") != std::string::npos) {
        out = mock_criteria(rng, all);
    } else if (all.find("You are a strict, meticulous, and objective evaluator") !=
               std::string::npos) {
        out = mock_scores(rng, all);
    } else if (all.find("You are a text segmentation assistant") != std::string::npos) {
        out = mock_segmentation(all);
    } else if (all.find("In this environment you have access to a set of tools") !=
               std::string::npos) {
        out = mock_agent_turn(rng, messages);
    } else {
        out = "Acknowledged: " + first_words(last_user_text(messages), 12);
    }
    usage.completion_tokens = static_cast<long>(out.size() / 4);
    return out;
}

MockSearchProvider::MockSearchProvider(nlohmann::json script) : script_(std::move(script)) {}

std::vector<SearchHit> MockSearchProvider::search(const std::string& query, int k) {
    if (script_.is_object() && script_.contains(query)) {
        const json& entry = script_[query];
        if (entry.is_string() && entry.get<std::string>() == "__RAISE__") {
            throw Error(ErrorCode::ProviderUnavailable, "scripted search failure");
        }
        std::vector<SearchHit> hits;
        int rank = 1;
        for (const json& h : entry) {
            if (rank > k) break;
            SearchHit hit;
            hit.rank = rank++;
            hit.title = h.value("title", "");
            hit.url = h.value("url", "");
            hit.snippet = h.value("snippet", "");
            hits.push_back(std::move(hit));
        }
        return hits;
    }
    Rng rng(util::digest_seed("search|" + query + "|" + std::to_string(k)));
    int count = std::min(k, rng.range(3, k > 3 ? k : 3));
    std::vector<SearchHit> hits;
    for (int i = 1; i <= count; ++i) {
        SearchHit hit;
        hit.rank = i;
        hit.title = "Result " + std::to_string(i) + ": " + first_words(query, 5);
        hit.url = "https://search.example.org/" + rng.hex8() + "/" + std::to_string(i);
        hit.snippet = "Coverage discussing " + first_words(query, 8) + " with figures and dates.";
        hits.push_back(std::move(hit));
    }
    return hits;
}

MockPageProvider::MockPageProvider(nlohmann::json pages, nlohmann::json wiki)
    : pages_(std::move(pages)), wiki_(std::move(wiki)) {}

int MockPageProvider::attempts_for(const std::string& url) const {
    std::lock_guard lock(mutex_);
    auto it = attempts_.find(url);
    return it == attempts_.end() ? 0 : it->second;
}

std::string MockPageProvider::fetch(const std::string& url) {
    int attempt;
    {
        std::lock_guard lock(mutex_);
        attempt = ++attempts_[url];
    }
    if (pages_.is_object() && pages_.contains(url)) {
        const json& entry = pages_[url];
        if (entry.is_string()) return entry.get<std::string>();
        int fail_times = entry.value("fail_times", 0);
        if (fail_times < 0 || attempt <= fail_times) {
            throw Error(ErrorCode::FetchFailed, "scripted fetch failure for " + url);
        }
        return entry.value("text", "");
    }
    if (url.find("unreachable") != std::string::npos) {
        throw Error(ErrorCode::FetchFailed, "host unreachable: " + url);
    }
    Rng rng(util::digest_seed("page|" + url));
    std::string text = "Reference article (" + rng.hex8() + ") covering the queried topic. ";
    for (int i = 0; i < 6; ++i) {
        text += "Paragraph " + std::to_string(i + 1) +
                " summarizes published figures, dates, and positions attributed to named "
                "sources. ";
    }
    return text;
}

std::string MockPageProvider::wiki_extract(const std::string& title) {
    if (wiki_.is_object() && !wiki_.empty()) {
        if (!wiki_.contains(title)) {
            throw Error(ErrorCode::PageNotFound, "no wiki page titled '" + title + "'");
        }
        return wiki_[title].get<std::string>();
    }
    if (title.find("Nonexistent") != std::string::npos) {
        throw Error(ErrorCode::PageNotFound, "no wiki page titled '" + title + "'");
    }
    Rng rng(util::digest_seed("wiki|" + title));
    return title + " is an encyclopedia entry (" + rng.hex8() +
           ") describing the subject's history, context, and notable figures with dated "
           "references.";
}

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* value = std::getenv(name);
    return value == nullptr ? fallback : std::string(value);
}

std::string env_key_for(const std::string& provider_id, const std::string& suffix) {
    std::string out;
    for (char c : provider_id) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c))
                          ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                          : '_');
    }
    return out + suffix;
}

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    size_t scheme = url.find("://");
    if (scheme == std::string::npos) {
        throw Error(ErrorCode::Precondition, "url missing scheme: " + url);
    }
    size_t path_start = url.find('/', scheme + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string url_encode(const std::string& text) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xf]);
        }
    }
    return out;
}

}  // namespace

std::string html_to_text(const std::string& html) {
    std::string work = html;
    for (const char* element : {"script", "style", "noscript"}) {
        std::string open = "<" + std::string(element);
        std::string close = "</" + std::string(element) + ">";
        std::string lower = util::to_lower(work);
        size_t pos;
        while ((pos = lower.find(open)) != std::string::npos) {
            size_t end = lower.find(close, pos);
            end = end == std::string::npos ? work.size() : end + close.size();
            work.erase(pos, end - pos);
            lower = util::to_lower(work);
        }
    }
    std::string out;
    bool in_tag = false;
    for (char c : work) {
        if (c == '<') {
            in_tag = true;
            out.push_back(' ');
        } else if (c == '>') {
            in_tag = false;
        } else if (!in_tag) {
            out.push_back(c);
        }
    }
    static const std::pair<const char*, const char*> entities[] = {
        {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""},
        {"&#39;", "'"}, {"&apos;", "'"}, {"&nbsp;", " "}};
    for (const auto& [needle, value] : entities) {
        size_t pos = 0;
        while ((pos = out.find(needle, pos)) != std::string::npos) {
            out.replace(pos, std::string(needle).size(), value);
            pos += std::string(value).size();
        }
    }
    // Collapse runs of blank space but keep paragraph breaks.
    std::string collapsed;
    int newlines = 0;
    bool spaced = false;
    for (char c : out) {
        if (c == '\n') {
            ++newlines;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            spaced = true;
            continue;
        }
        if (newlines >= 2 && !collapsed.empty()) {
            collapsed += "\n\n";
        } else if ((newlines == 1 || spaced) && !collapsed.empty()) {
            collapsed.push_back(' ');
        }
        newlines = 0;
        spaced = false;
        collapsed.push_back(c);
    }
    return collapsed;
}

HttpChatProvider::HttpChatProvider(std::string provider_id) : id_(std::move(provider_id)) {
    base_url_ = env_or(env_key_for(id_, "_BASE_URL").c_str(), "https://api.openai.com/v1");
    api_key_ = env_or(env_key_for(id_, "_API_KEY").c_str(), "");
}

std::string HttpChatProvider::complete(const ModelProfile& profile,
                                       const std::vector<Message>& messages, TokenUsage& usage) {
    if (api_key_.empty()) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "missing " + env_key_for(id_, "_API_KEY") + " for live provider '" + id_ + "'");
    }
    json body{{"model", profile.model_name}, {"temperature", profile.temperature},
              {"max_tokens", profile.max_new_tokens}};
    if (profile.seed) body["seed"] = *profile.seed;
    json msgs = json::array();
    for (const Message& m : messages) {
        msgs.push_back(json{{"role", std::string(gateway::role_name(m.role))}, {"content", m.text}});
    }
    body["messages"] = std::move(msgs);

    SplitUrl url = split_url(base_url_);
    httplib::Client client(url.origin);
    client.set_connection_timeout(20);
    client.set_read_timeout(300);
    client.set_follow_location(true);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    std::string path = url.path == "/" ? "/chat/completions" : url.path + "/chat/completions";
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "chat request to '" + id_ + "' failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 400 && res->body.find("context") != std::string::npos) {
        throw Error(ErrorCode::BudgetExceeded, "provider rejected request for length: " + res->body);
    }
    if (res->status != 200) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "chat request to '" + id_ + "' returned HTTP " + std::to_string(res->status));
    }
    json parsed = jsonio::parse(res->body, "chat response");
    const json* choices = jsonio::find_key(parsed, "choices");
    if (choices == nullptr || !choices->is_array() || choices->empty()) {
        throw Error(ErrorCode::ProviderUnavailable, "chat response missing choices");
    }
    if (const json* u = jsonio::find_key(parsed, "usage")) {
        usage.prompt_tokens = u->value("prompt_tokens", 0L);
        usage.completion_tokens = u->value("completion_tokens", 0L);
    }
    const json& message = (*choices)[0];
    if (const json* m = jsonio::find_key(message, "message")) {
        return m->value("content", "");
    }
    return message.value("text", "");
}

SerperSearchProvider::SerperSearchProvider() : api_key_(env_or("SERPER_API_KEY", "")) {}

std::vector<SearchHit> SerperSearchProvider::search(const std::string& query, int k) {
    if (api_key_.empty()) {
        throw Error(ErrorCode::ProviderUnavailable, "missing SERPER_API_KEY for live search");
    }
    httplib::Client client("https://google.serper.dev");
    client.set_connection_timeout(20);
    client.set_read_timeout(60);
    httplib::Headers headers{{"X-API-KEY", api_key_}};
    json body{{"q", query}, {"num", k}};
    auto res = client.Post("/search", headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "search request failed" +
                        (res ? " with HTTP " + std::to_string(res->status) : std::string()));
    }
    json parsed = jsonio::parse(res->body, "search response");
    std::vector<SearchHit> hits;
    if (const json* organic = jsonio::find_key(parsed, "organic")) {
        int rank = 1;
        for (const json& item : *organic) {
            if (rank > k) break;
            SearchHit hit;
            hit.rank = rank++;
            hit.title = item.value("title", "");
            hit.url = item.value("link", "");
            hit.snippet = item.value("snippet", "");
            hits.push_back(std::move(hit));
        }
    }
    return hits;
}

std::string HttpPageProvider::fetch(const std::string& url) {
    SplitUrl parts = split_url(url);
    httplib::Client client(parts.origin);
    client.set_connection_timeout(15);
    client.set_read_timeout(60);
    client.set_follow_location(true);
    auto res = client.Get(parts.path);
    if (!res) {
        throw Error(ErrorCode::FetchFailed,
                    "fetch failed: " + url + " (" + httplib::to_string(res.error()) + ")");
    }
    if (res->status >= 400) {
        throw Error(ErrorCode::FetchFailed,
                    "fetch failed: " + url + " (HTTP " + std::to_string(res->status) + ")");
    }
    std::string content_type = res->get_header_value("Content-Type");
    if (content_type.find("html") != std::string::npos) return html_to_text(res->body);
    return res->body;
}

std::string HttpPageProvider::wiki_extract(const std::string& title) {
    httplib::Client client("https://en.wikipedia.org");
    client.set_connection_timeout(15);
    client.set_read_timeout(60);
    std::string path =
        "/w/api.php?action=query&prop=extracts&explaintext=1&format=json&redirects=1&titles=" +
        url_encode(title);
    auto res = client.Get(path);
    if (!res || res->status != 200) {
        throw Error(ErrorCode::FetchFailed, "wiki request failed for '" + title + "'");
    }
    json parsed = jsonio::parse(res->body, "wiki response");
    const json* query = jsonio::find_key(parsed, "query");
    const json* pages = query ? jsonio::find_key(*query, "pages") : nullptr;
    if (pages == nullptr || !pages->is_object()) {
        throw Error(ErrorCode::FetchFailed, "wiki response malformed for '" + title + "'");
    }
    for (const auto& [id, page] : pages->items()) {
        if (id == "-1" || page.contains("missing")) {
            throw Error(ErrorCode::PageNotFound, "no wiki page titled '" + title + "'");
        }
        if (page.contains("extract")) return page["extract"].get<std::string>();
    }
    throw Error(ErrorCode::PageNotFound, "no wiki page titled '" + title + "'");
}

void install_providers(gateway::Gateway& gw, const std::string& spec,
                       const std::vector<std::string>& chat_provider_ids) {
    if (spec == "live") {
        for (const std::string& id : chat_provider_ids) {
            gw.register_chat_provider(std::make_shared<HttpChatProvider>(id));
        }
        gw.set_search_provider(std::make_shared<SerperSearchProvider>());
        gw.set_page_provider(std::make_shared<HttpPageProvider>());
        return;
    }
    if (spec == "mock:auto") {
        for (const std::string& id : chat_provider_ids) {
            gw.register_chat_provider(std::make_shared<AutoMockChatProvider>(id));
        }
        gw.set_search_provider(std::make_shared<MockSearchProvider>());
        gw.set_page_provider(std::make_shared<MockPageProvider>());
        return;
    }
    if (spec.rfind("mock:", 0) == 0) {
        std::filesystem::path script_path = spec.substr(5);
        json script = jsonio::load_file(script_path);
        for (const std::string& id : chat_provider_ids) {
            gw.register_chat_provider(std::make_shared<ScriptedChatProvider>(id, script));
        }
        gw.set_search_provider(
            std::make_shared<MockSearchProvider>(script.value("search", json::object())));
        gw.set_page_provider(std::make_shared<MockPageProvider>(
            script.value("pages", json::object()), script.value("wiki", json::object())));
        return;
    }
    throw Error(ErrorCode::ConfigInvalid,
                "provider must be 'live', 'mock:auto', or 'mock:<script.json>', got '" + spec + "'");
}

}  // namespace dre::providers
