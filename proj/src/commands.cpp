#include "dre/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>

#include <CLI11.hpp>

#include "dre/config.hpp"
#include "dre/factcheck.hpp"
#include "dre/gateway.hpp"
#include "dre/jsonio.hpp"
#include "dre/logging.hpp"
#include "dre/providers.hpp"
#include "dre/quality.hpp"
#include "dre/runstore.hpp"
#include "dre/taskgen.hpp"
#include "dre/util.hpp"

namespace dre::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommandContext {
    config::HarnessConfig cfg;
    std::string run_id;
    fs::path out_dir;
    json args = json::object();
    bool replay = false;
};

std::string default_run_id() {
    std::string stamp = util::iso8601_utc_now();
    std::string compact;
    for (char c : stamp) {
        if (std::isdigit(static_cast<unsigned char>(c))) compact += c;
    }
    return "run-" + compact;
}

std::unique_ptr<gateway::Gateway> make_gateway(const config::HarnessConfig& cfg,
                                               bool cache_only) {
    gateway::GatewayOptions options;
    options.cache_dir = cfg.cache_dir;
    options.page_byte_budget = cfg.page_byte_budget;
    options.requests_per_minute = cfg.requests_per_minute;
    options.cache_only = cache_only;
    auto gw = std::make_unique<gateway::Gateway>(options);
    std::vector<std::string> chat_ids;
    std::set<std::string> seen;
    for (const auto& [name, profile] : cfg.profiles) {
        (void)name;
        if (seen.insert(profile.provider_id).second) chat_ids.push_back(profile.provider_id);
    }
    providers::install_providers(*gw, cfg.provider, chat_ids);
    return gw;
}

void write_json_file(const fs::path& path, const json& value) {
    fs::create_directories(path.parent_path());
    util::write_text_file_atomic(path, jsonio::canonical_pretty(value));
}

void persist_warnings(runstore::RunStore& store, const std::string& run_id,
                      const log::WarningLog& warnings) {
    for (const log::Warning& w : warnings.sorted()) {
        runstore::RecordEnvelope record;
        record.kind = runstore::RecordKind::warning;
        record.run_ref = run_id;
        record.payload = w.to_json();
        store.append_record(record);
    }
}

void append_payload(runstore::RunStore& store, const std::string& run_id,
                    runstore::RecordKind kind, json payload) {
    runstore::RecordEnvelope record;
    record.kind = kind;
    record.run_ref = run_id;
    record.payload = std::move(payload);
    store.append_record(record);
}

void begin_manifest(runstore::RunStore& store, const CommandContext& ctx, const std::string& verb) {
    runstore::RunManifest manifest;
    manifest.run_id = ctx.run_id;
    manifest.created_at = util::iso8601_utc_now();
    manifest.stage = verb;
    manifest.config = json{{"verb", verb}, {"args", ctx.args}, {"resolved", ctx.cfg.to_json()}};
    manifest.profiles = {ctx.cfg.profile(ctx.cfg.taskgen_profile),
                         ctx.cfg.profile(ctx.cfg.judge_profile),
                         ctx.cfg.profile(ctx.cfg.factcheck_profile)};
    store.begin_run(manifest);
}

struct ReportEntry {
    std::string system;
    std::string task_id;
    std::string report;
};

std::vector<ReportEntry> load_reports(const fs::path& path) {
    std::vector<ReportEntry> entries;
    if (fs::is_directory(path)) {
        for (const auto& system_dir : fs::directory_iterator(path)) {
            if (!system_dir.is_directory()) continue;
            for (const auto& file : fs::directory_iterator(system_dir.path())) {
                if (!file.is_regular_file()) continue;
                std::string ext = file.path().extension().string();
                if (ext != ".md" && ext != ".txt" && ext != ".markdown") continue;
                ReportEntry entry;
                entry.system = system_dir.path().filename().string();
                entry.task_id = file.path().stem().string();
                entry.report = util::read_text_file(file.path());
                entries.push_back(std::move(entry));
            }
        }
    } else if (fs::is_regular_file(path)) {
        std::ifstream in(path);
        std::string line;
        long line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (util::trim(line).empty()) continue;
            json value = json::parse(line, nullptr, false);
            if (value.is_discarded() || !value.is_object()) {
                throw Error(ErrorCode::SchemaViolation,
                            "reports file '" + path.string() + "' line " +
                                std::to_string(line_no) + " is not a JSON object");
            }
            ReportEntry entry;
            entry.system = jsonio::require_string(value, "system", "report entry");
            entry.task_id = jsonio::require_string(value, "task_id", "report entry");
            if (!value.contains("report") || !value["report"].is_string()) {
                throw Error(ErrorCode::SchemaViolation,
                            "reports file '" + path.string() + "' line " +
                                std::to_string(line_no) + " lacks a report string");
            }
            entry.report = value["report"].get<std::string>();
            entries.push_back(std::move(entry));
        }
    } else {
        throw Error(ErrorCode::Precondition,
                    "reports path '" + path.string() + "' is neither a file nor a directory");
    }
    std::sort(entries.begin(), entries.end(), [](const ReportEntry& a, const ReportEntry& b) {
        if (a.system != b.system) return a.system < b.system;
        return a.task_id < b.task_id;
    });
    return entries;
}

taskgen::TaskSet load_taskset(const fs::path& path) {
    if (!fs::exists(path)) {
        throw Error(ErrorCode::Precondition, "task set file '" + path.string() + "' not found");
    }
    return taskgen::TaskSet::from_json(jsonio::load_file(path));
}

std::vector<std::string> load_ranking(const fs::path& path) {
    json value = jsonio::load_file(path);
    const json* list = &value;
    if (value.is_object() && value.contains("ranking")) list = &value["ranking"];
    if (!list->is_array()) {
        throw Error(ErrorCode::Precondition,
                    "ranking file '" + path.string() + "' must hold a JSON list of task ids");
    }
    std::vector<std::string> ids;
    for (const json& id : *list) {
        if (!id.is_string()) {
            throw Error(ErrorCode::Precondition, "ranking entries must be task id strings");
        }
        ids.push_back(id.get<std::string>());
    }
    return ids;
}

json cmd_taskgen(CommandContext& ctx) {
    std::unique_ptr<gateway::Gateway> gw_owner = make_gateway(ctx.cfg, ctx.replay);
    gateway::Gateway& gw = *gw_owner;
    runstore::RunStore store(ctx.cfg.run_dir);
    log::WarningLog warnings;
    begin_manifest(store, ctx, "taskgen");

    taskgen::TaskGenerator generator(gw, ctx.cfg.profile(ctx.cfg.taskgen_profile), warnings);
    taskgen::TaskGenOptions options;
    options.domains = ctx.cfg.domains;
    options.personas_per_domain = ctx.cfg.personas_per_domain;
    options.tasks_per_persona = ctx.cfg.tasks_per_persona;
    options.qualification_threshold = ctx.cfg.qualification_threshold;
    options.quality_drop_threshold = ctx.cfg.quality_drop_threshold;
    options.workers = ctx.cfg.workers;
    if (ctx.args.contains("ranking")) {
        options.ranking = load_ranking(ctx.args["ranking"].get<std::string>());
    }

    taskgen::TaskSet set = generator.run_pipeline(options, ctx.run_id);

    for (const taskgen::Persona& p : set.personas) {
        append_payload(store, ctx.run_id, runstore::RecordKind::persona, p.to_json());
    }
    for (const taskgen::TaskCandidate& c : set.candidates) {
        append_payload(store, ctx.run_id, runstore::RecordKind::candidate, c.to_json());
    }
    for (const auto& [id, verdict] : set.verdicts) {
        (void)id;
        append_payload(store, ctx.run_id, runstore::RecordKind::verdict, verdict.to_json());
    }
    for (const auto& [id, assessment] : set.assessments) {
        json payload = assessment.to_json();
        auto baseline = set.baselines.find(id);
        payload["baseline_answer"] = baseline == set.baselines.end() ? "" : baseline->second;
        append_payload(store, ctx.run_id, runstore::RecordKind::assessment, payload);
    }
    persist_warnings(store, ctx.run_id, warnings);

    write_json_file(ctx.out_dir / "taskset.json", set.to_json());
    std::string lines;
    for (const std::string& id : set.retained) {
        const taskgen::TaskCandidate* task = set.find_candidate(id);
        if (task == nullptr) continue;
        json line{{"task_id", task->task_id},
                  {"persona_ref", task->persona_ref},
                  {"query", task->query},
                  {"key_challenges", task->key_challenges},
                  {"time_sensitivity", task->time_sensitivity}};
        line["time_constraint"] =
            task->time_constraint.has_value() ? json(*task->time_constraint) : json(nullptr);
        lines += jsonio::canonical(line) + "\n";
    }
    fs::create_directories(ctx.out_dir);
    util::write_text_file_atomic(ctx.out_dir / "tasks.jsonl", lines);

    return json{{"run_id", ctx.run_id},
                {"stage", "taskgen"},
                {"personas", set.personas.size()},
                {"candidates", set.candidates.size()},
                {"qualified", set.assessments.size()},
                {"retained", set.retained.size()},
                {"warnings", warnings.size()},
                {"out", ctx.out_dir.string()}};
}

struct ScoredPair {
    ReportEntry entry;
    const taskgen::TaskCandidate* task = nullptr;
};

std::vector<ScoredPair> match_reports(const taskgen::TaskSet& set,
                                      const std::vector<ReportEntry>& entries,
                                      log::WarningLog& warnings) {
    std::set<std::string> retained(set.retained.begin(), set.retained.end());
    std::vector<ScoredPair> pairs;
    for (const ReportEntry& entry : entries) {
        const taskgen::TaskCandidate* task = set.find_candidate(entry.task_id);
        if (task == nullptr || retained.count(entry.task_id) == 0) {
            warnings.add("unknown_task", "report:" + entry.system + "/" + entry.task_id,
                         "report references a task outside the retained set");
            continue;
        }
        pairs.push_back(ScoredPair{entry, task});
    }
    return pairs;
}

json cmd_evaluate_quality(CommandContext& ctx) {
    std::unique_ptr<gateway::Gateway> gw_owner = make_gateway(ctx.cfg, ctx.replay);
    gateway::Gateway& gw = *gw_owner;
    runstore::RunStore store(ctx.cfg.run_dir);
    log::WarningLog warnings;
    begin_manifest(store, ctx, "evaluate-quality");

    taskgen::TaskSet set = load_taskset(ctx.args.at("tasks").get<std::string>());
    std::vector<ReportEntry> entries = load_reports(ctx.args.at("reports").get<std::string>());
    std::vector<ScoredPair> pairs = match_reports(set, entries, warnings);
    if (pairs.empty()) {
        throw Error(ErrorCode::NoResults, "no reports match the retained task set");
    }
    int runs = ctx.args.value("runs", 1);

    std::vector<std::string> task_ids;
    for (const ScoredPair& pair : pairs) task_ids.push_back(pair.entry.task_id);
    std::sort(task_ids.begin(), task_ids.end());
    task_ids.erase(std::unique(task_ids.begin(), task_ids.end()), task_ids.end());

    // system -> per-repeat mean overall, for the stability summary
    std::map<std::string, std::vector<double>> per_system_runs;
    long results_written = 0;
    std::optional<Error> first_failure;

    for (int k = 1; k <= runs; ++k) {
        gateway::ModelProfile judge = ctx.cfg.profile(ctx.cfg.judge_profile);
        judge.seed = ctx.cfg.base_seed + (k - 1);
        quality::QualityEvaluator evaluator(gw, judge, warnings, ctx.cfg.workers);

        auto rubric_results =
            util::parallel_map(task_ids, ctx.cfg.workers, [&](const std::string& task_id) {
                const taskgen::TaskCandidate* task = set.find_candidate(task_id);
                return evaluator.build_rubric(task_id, task->query);
            });
        std::map<std::string, quality::Rubric> rubrics;
        for (size_t i = 0; i < task_ids.size(); ++i) {
            if (!rubric_results[i].ok()) {
                rethrow_if_fatal(*rubric_results[i].error);
                warnings.add("rubric_failed", "task:" + task_ids[i],
                             rubric_results[i].error->what());
                if (!first_failure.has_value()) first_failure = *rubric_results[i].error;
                continue;
            }
            json payload = rubric_results[i].value->to_json();
            payload["run_index"] = k;
            append_payload(store, ctx.run_id, runstore::RecordKind::rubric, payload);
            rubrics.emplace(task_ids[i], std::move(*rubric_results[i].value));
        }

        std::vector<const ScoredPair*> ready;
        for (const ScoredPair& pair : pairs) {
            if (rubrics.find(pair.entry.task_id) != rubrics.end()) ready.push_back(&pair);
        }
        auto results = util::parallel_map(ready, ctx.cfg.workers, [&](const ScoredPair* pair) {
            const quality::Rubric& rubric = rubrics.at(pair->entry.task_id);
            std::string report_ref = pair->entry.system + "/" + pair->entry.task_id;
            return evaluator.evaluate_report(pair->task->query, rubric, pair->entry.report,
                                             report_ref);
        });

        std::map<std::string, std::vector<double>> per_system_overalls;
        fs::path run_out = k == 1 ? ctx.out_dir : ctx.out_dir / ("run" + std::to_string(k));
        for (size_t i = 0; i < ready.size(); ++i) {
            const ScoredPair& pair = *ready[i];
            std::string ref = pair.entry.system + "/" + pair.entry.task_id;
            if (!results[i].ok()) {
                rethrow_if_fatal(*results[i].error);
                warnings.add("evaluation_failed", "report:" + ref, results[i].error->what());
                if (!first_failure.has_value()) first_failure = *results[i].error;
                continue;
            }
            json payload = results[i].value->to_json();
            payload["system"] = pair.entry.system;
            payload["task_id"] = pair.entry.task_id;
            payload["run_index"] = k;
            append_payload(store, ctx.run_id, runstore::RecordKind::quality_result, payload);
            write_json_file(run_out / "quality" / pair.entry.system /
                                (pair.entry.task_id + ".json"),
                            payload);
            per_system_overalls[pair.entry.system].push_back(results[i].value->overall);
            ++results_written;
        }
        for (const auto& [system, overalls] : per_system_overalls) {
            per_system_runs[system].push_back(runstore::summarize_runs(overalls).mean);
        }
    }

    if (results_written == 0) {
        if (first_failure.has_value()) throw *first_failure;
        throw Error(ErrorCode::NoResults, "no quality results produced");
    }

    if (runs > 1) {
        json stability = json::object();
        std::string text;
        for (const auto& [system, values] : per_system_runs) {
            runstore::SummaryStat stat = runstore::summarize_runs(values);
            json entry{{"per_run_means", values}, {"mean", stat.mean}};
            if (stat.stddev.has_value()) entry["stddev"] = *stat.stddev;
            stability[system] = entry;
            text += system + ": " + runstore::format_stability(stat) + "\n";
        }
        write_json_file(ctx.out_dir / "stability.json", stability);
        util::write_text_file_atomic(ctx.out_dir / "stability.txt", text);
    }
    persist_warnings(store, ctx.run_id, warnings);

    return json{{"run_id", ctx.run_id},
                {"stage", "evaluate-quality"},
                {"reports", pairs.size()},
                {"tasks", task_ids.size()},
                {"repeats", runs},
                {"results", results_written},
                {"warnings", warnings.size()},
                {"out", ctx.out_dir.string()}};
}

json cmd_factcheck(CommandContext& ctx) {
    // The agent system prompt embeds a date; pin it in the manifest so cached
    // sessions replay across days.
    std::string today = ctx.args.value("today", "");
    if (today.empty()) {
        const char* env_today = std::getenv("DRE_TODAY");
        today = env_today != nullptr && *env_today != '\0'
                    ? env_today
                    : util::iso8601_utc_now().substr(0, 10);
        ctx.args["today"] = today;
    }
    ::setenv("DRE_TODAY", today.c_str(), 1);

    std::unique_ptr<gateway::Gateway> gw_owner = make_gateway(ctx.cfg, ctx.replay);
    gateway::Gateway& gw = *gw_owner;
    runstore::RunStore store(ctx.cfg.run_dir);
    log::WarningLog warnings;
    begin_manifest(store, ctx, "factcheck");

    taskgen::TaskSet set = load_taskset(ctx.args.at("tasks").get<std::string>());
    std::vector<ReportEntry> entries = load_reports(ctx.args.at("reports").get<std::string>());
    std::vector<ScoredPair> pairs = match_reports(set, entries, warnings);
    if (pairs.empty()) {
        throw Error(ErrorCode::NoResults, "no reports match the retained task set");
    }

    factcheck::AgentBudget budget;
    budget.max_turns = ctx.cfg.max_turns;
    budget.max_tool_calls_per_turn = ctx.cfg.max_tool_calls_per_turn;
    factcheck::FactChecker checker(gw, ctx.cfg.profile(ctx.cfg.factcheck_profile), warnings,
                                   budget, ctx.cfg.workers);

    long reports_written = 0;
    std::optional<Error> first_failure;
    for (const ScoredPair& pair : pairs) {
        std::string ref = pair.entry.system + "/" + pair.entry.task_id;
        std::vector<factcheck::AgentTranscript> transcripts;
        factcheck::FactCheckReport result;
        try {
            result = checker.check_report(pair.task->query, pair.entry.report, ref, &transcripts);
        } catch (const Error& e) {
            rethrow_if_fatal(e);
            warnings.add("factcheck_failed", "report:" + ref, e.what());
            if (!first_failure.has_value()) first_failure = e;
            continue;
        }
        json payload = result.to_json();
        payload["system"] = pair.entry.system;
        payload["task_id"] = pair.entry.task_id;
        append_payload(store, ctx.run_id, runstore::RecordKind::factcheck_report, payload);
        write_json_file(ctx.out_dir / "factcheck" / pair.entry.system /
                            (pair.entry.task_id + ".json"),
                        payload);
        for (const factcheck::AgentTranscript& transcript : transcripts) {
            json tp = transcript.to_json();
            tp["report_ref"] = ref;
            tp["system"] = pair.entry.system;
            tp["task_id"] = pair.entry.task_id;
            append_payload(store, ctx.run_id, runstore::RecordKind::transcript, tp);
            write_json_file(ctx.out_dir / "transcripts" / pair.entry.system / pair.entry.task_id /
                                ("segment_" + std::to_string(transcript.segment_index) + ".json"),
                            tp);
        }
        ++reports_written;
    }

    if (reports_written == 0) {
        if (first_failure.has_value()) throw *first_failure;
        throw Error(ErrorCode::NoResults, "no factcheck reports produced");
    }
    persist_warnings(store, ctx.run_id, warnings);

    return json{{"run_id", ctx.run_id},
                {"stage", "factcheck"},
                {"reports", reports_written},
                {"warnings", warnings.size()},
                {"out", ctx.out_dir.string()}};
}

json cmd_leaderboard(const config::HarnessConfig& cfg, const std::vector<std::string>& quality_runs,
                     const std::vector<std::string>& factcheck_runs, const fs::path& out_dir) {
    if (quality_runs.empty() && factcheck_runs.empty()) {
        throw Error(ErrorCode::Precondition,
                    "leaderboard needs --quality-runs and/or --factcheck-runs");
    }
    runstore::RunStore store(cfg.run_dir);
    runstore::Leaderboard board = runstore::build_leaderboard(store, quality_runs, factcheck_runs);
    write_json_file(out_dir / "leaderboard.json", board.to_json());
    std::string text = board.render_text();
    fs::create_directories(out_dir);
    util::write_text_file_atomic(out_dir / "leaderboard.txt", text);
    std::cout << text;
    return json{{"stage", "leaderboard"},
                {"quality_rows", board.quality.size()},
                {"factual_rows", board.factual.size()},
                {"out", out_dir.string()}};
}

json cmd_export_review(const fs::path& tasks_path, const fs::path& out_file) {
    taskgen::TaskSet set = load_taskset(tasks_path);
    std::string lines;
    for (const std::string& id : set.retained) {
        const taskgen::TaskCandidate* task = set.find_candidate(id);
        if (task == nullptr) continue;
        json line{{"task_id", id}, {"query", task->query}};
        if (const taskgen::Persona* persona = set.find_persona(task->persona_ref)) {
            line["persona"] = persona->to_json();
        }
        if (auto v = set.verdicts.find(id); v != set.verdicts.end()) {
            line["verdict"] = v->second.to_json();
        }
        if (auto a = set.assessments.find(id); a != set.assessments.end()) {
            line["assessment"] = a->second.to_json();
        }
        if (auto b = set.baselines.find(id); b != set.baselines.end()) {
            line["baseline_answer"] = b->second;
        }
        lines += jsonio::canonical(line) + "\n";
    }
    if (lines.empty()) {
        throw Error(ErrorCode::NoResults, "task set has no retained tasks to export");
    }
    if (!out_file.parent_path().empty()) fs::create_directories(out_file.parent_path());
    util::write_text_file_atomic(out_file, lines);
    return json{{"stage", "export-review"},
                {"tasks", set.retained.size()},
                {"out", out_file.string()}};
}

// Re-executes a finished run from its manifest against the cache alone, into
// scratch directories, and compares the produced files byte for byte after
// dropping volatile fields.
json cmd_replay(const config::HarnessConfig& base_cfg, const std::string& run_id) {
    runstore::RunStore store(base_cfg.run_dir);
    runstore::RunManifest manifest = store.load_manifest(run_id);
    std::string verb = manifest.config.value("verb", "");
    if (verb != "taskgen" && verb != "evaluate-quality" && verb != "factcheck") {
        throw Error(ErrorCode::Precondition,
                    "run '" + run_id + "' stage '" + verb + "' cannot be replayed");
    }
    if (!manifest.config.contains("resolved") || !manifest.config.contains("args")) {
        throw Error(ErrorCode::Precondition, "run '" + run_id + "' manifest lacks a replay snapshot");
    }

    CommandContext ctx;
    ctx.replay = true;
    ctx.run_id = run_id;
    ctx.args = manifest.config["args"];
    ctx.cfg = config::resolve_config(std::nullopt, manifest.config["resolved"], {});

    fs::path original_out = ctx.args.value("out", (store.run_dir(run_id) / "out").string());
    fs::path scratch = base_cfg.run_dir / (".replay-" + run_id);
    fs::remove_all(scratch);
    ctx.cfg.run_dir = scratch / "runs";
    ctx.out_dir = scratch / "out";

    if (verb == "taskgen") {
        cmd_taskgen(ctx);
    } else if (verb == "evaluate-quality") {
        cmd_evaluate_quality(ctx);
    } else {
        cmd_factcheck(ctx);
    }

    auto list_files = [](const fs::path& root) {
        std::vector<std::string> files;
        if (fs::exists(root)) {
            for (const auto& entry : fs::recursive_directory_iterator(root)) {
                if (entry.is_regular_file()) {
                    files.push_back(fs::relative(entry.path(), root).generic_string());
                }
            }
        }
        std::sort(files.begin(), files.end());
        return files;
    };
    auto normalized = [](const fs::path& path) {
        std::string raw = util::read_text_file(path);
        if (path.extension() == ".json") {
            json value = json::parse(raw, nullptr, false);
            if (!value.is_discarded()) return jsonio::canonical(jsonio::strip_volatile(value));
        }
        if (path.extension() == ".jsonl") {
            std::string out;
            size_t start = 0;
            while (start < raw.size()) {
                size_t end = raw.find('\n', start);
                if (end == std::string::npos) end = raw.size();
                std::string line = raw.substr(start, end - start);
                if (!util::trim(line).empty()) {
                    json value = json::parse(line, nullptr, false);
                    out += value.is_discarded()
                               ? line
                               : jsonio::canonical(jsonio::strip_volatile(value));
                    out += '\n';
                }
                start = end + 1;
            }
            return out;
        }
        return raw;
    };

    std::vector<std::string> original_files = list_files(original_out);
    std::vector<std::string> replay_files = list_files(ctx.out_dir);
    json differences = json::array();
    for (const std::string& file : original_files) {
        if (!std::binary_search(replay_files.begin(), replay_files.end(), file)) {
            differences.push_back(json{{"file", file}, {"problem", "missing from replay"}});
        }
    }
    for (const std::string& file : replay_files) {
        if (!std::binary_search(original_files.begin(), original_files.end(), file)) {
            differences.push_back(json{{"file", file}, {"problem", "only in replay"}});
        }
    }
    for (const std::string& file : original_files) {
        if (!std::binary_search(replay_files.begin(), replay_files.end(), file)) continue;
        if (normalized(original_out / file) != normalized(ctx.out_dir / file)) {
            differences.push_back(json{{"file", file}, {"problem", "content differs"}});
        }
    }

    json summary{{"stage", "replay"},
                 {"run_id", run_id},
                 {"verb", verb},
                 {"files_compared", original_files.size()},
                 {"identical", differences.empty()},
                 {"differences", differences}};
    if (!differences.empty()) {
        throw Error(ErrorCode::Internal, "replay diverged from the recorded run",
                    jsonio::canonical(summary));
    }
    return summary;
}

void emit_error(const Error& error) {
    json body{{"error",
               json{{"code", std::string(error.code_name())}, {"message", error.what()}}}};
    if (!error.detail().empty()) body["error"]["detail"] = error.detail();
    std::cerr << body.dump() << "\n";
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"deep research report evaluation harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string provider;
    std::string cache_dir;
    std::string run_dir;
    std::string log_level;
    int workers = 0;
    long seed = 0;
    double rpm = 0.0;
    long page_budget = 0;
    std::string run_id;
    std::string out_dir;

    auto* opt_config = app.add_option("--config", config_path, "Path to a JSON config file");
    auto* opt_provider =
        app.add_option("--provider", provider, "Provider spec: live, mock:auto, mock:<script>");
    auto* opt_cache = app.add_option("--cache-dir", cache_dir, "Request cache directory");
    auto* opt_rundir = app.add_option("--run-dir", run_dir, "Run store root directory");
    auto* opt_log = app.add_option("--log-level", log_level, "debug/info/warn/error");
    auto* opt_workers = app.add_option("--workers", workers, "Worker thread count");
    auto* opt_seed = app.add_option("--seed", seed, "Base seed for model profiles");
    auto* opt_rpm = app.add_option("--requests-per-minute", rpm, "Provider rate limit (0 = off)");
    auto* opt_page = app.add_option("--page-byte-budget", page_budget, "Fetched page size cap");
    app.add_option("--run-id", run_id, "Run identifier (default: timestamp)");
    app.add_option("--out", out_dir, "Output directory (default: <run-dir>/<run-id>/out)");

    auto* taskgen_cmd = app.add_subcommand("taskgen", "Generate personas and research tasks");
    std::vector<std::string> domains;
    int personas_per_domain = 0;
    int tasks_per_persona = 0;
    double qual_threshold = 0.0;
    double drop_threshold = 0.0;
    std::string ranking_path;
    auto* opt_domains =
        taskgen_cmd->add_option("--domains", domains, "Domain list override")->delimiter(',');
    auto* opt_personas =
        taskgen_cmd->add_option("--personas-per-domain", personas_per_domain, "Personas per domain");
    auto* opt_tasks_pp =
        taskgen_cmd->add_option("--tasks-per-persona", tasks_per_persona, "Tasks per persona");
    auto* opt_qual = taskgen_cmd->add_option("--qualification-threshold", qual_threshold,
                                             "Confidence threshold (strictly exceeded)");
    auto* opt_drop = taskgen_cmd->add_option("--quality-drop-threshold", drop_threshold,
                                             "Baseline quality drop threshold");
    taskgen_cmd->add_option("--ranking", ranking_path, "Reviewer ranking file (task id list)");

    auto* quality_cmd =
        app.add_subcommand("evaluate-quality", "Score reports against adaptive rubrics");
    std::string tasks_path;
    std::string reports_path;
    int repeats = 1;
    quality_cmd->add_option("--tasks", tasks_path, "taskset.json from taskgen")->required();
    quality_cmd->add_option("--reports", reports_path, "reports.jsonl or reports directory")
        ->required();
    quality_cmd->add_option("--runs", repeats, "Repeat count for stability stats")
        ->check(CLI::PositiveNumber);

    auto* factcheck_cmd = app.add_subcommand("factcheck", "Verify report statements with tools");
    std::string fc_tasks_path;
    std::string fc_reports_path;
    int max_turns = 0;
    int max_calls = 0;
    std::string today;
    factcheck_cmd->add_option("--tasks", fc_tasks_path, "taskset.json from taskgen")->required();
    factcheck_cmd->add_option("--reports", fc_reports_path, "reports.jsonl or reports directory")
        ->required();
    auto* opt_turns =
        factcheck_cmd->add_option("--max-turns", max_turns, "Agent turn budget per segment");
    auto* opt_calls = factcheck_cmd->add_option("--max-calls-per-turn", max_calls,
                                                "Executed tool calls per turn");
    factcheck_cmd->add_option("--today", today, "Date shown to the agent (YYYY-MM-DD)");

    auto* board_cmd = app.add_subcommand("leaderboard", "Aggregate runs into leaderboards");
    std::vector<std::string> quality_runs;
    std::vector<std::string> factcheck_runs;
    board_cmd->add_option("--quality-runs", quality_runs, "Quality run ids")->delimiter(',');
    board_cmd->add_option("--factcheck-runs", factcheck_runs, "Factcheck run ids")->delimiter(',');

    auto* replay_cmd =
        app.add_subcommand("replay", "Re-execute a run from cache and compare outputs");
    std::string replay_run;
    replay_cmd->add_option("run_id", replay_run, "Run to replay")->required();

    auto* export_cmd = app.add_subcommand("export-review", "Export retained tasks for review");
    std::string export_tasks;
    std::string export_out;
    export_cmd->add_option("--tasks", export_tasks, "taskset.json from taskgen")->required();
    export_cmd->add_option("--out-file", export_out, "Review JSONL destination");

    std::vector<const char*> argv;
    argv.push_back("dre");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        json flags = json::object();
        if (opt_provider->count() > 0) flags["provider"] = provider;
        if (opt_cache->count() > 0) flags["cache_dir"] = cache_dir;
        if (opt_rundir->count() > 0) flags["run_dir"] = run_dir;
        if (opt_log->count() > 0) flags["log_level"] = log_level;
        if (opt_workers->count() > 0) flags["workers"] = workers;
        if (opt_seed->count() > 0) flags["base_seed"] = seed;
        if (opt_rpm->count() > 0) flags["requests_per_minute"] = rpm;
        if (opt_page->count() > 0) flags["page_byte_budget"] = page_budget;
        if (opt_domains->count() > 0) flags["domains"] = domains;
        if (opt_personas->count() > 0) flags["personas_per_domain"] = personas_per_domain;
        if (opt_tasks_pp->count() > 0) flags["tasks_per_persona"] = tasks_per_persona;
        if (opt_qual->count() > 0) flags["qualification_threshold"] = qual_threshold;
        if (opt_drop->count() > 0) flags["quality_drop_threshold"] = drop_threshold;
        if (opt_turns->count() > 0) flags["max_turns"] = max_turns;
        if (opt_calls->count() > 0) flags["max_tool_calls_per_turn"] = max_calls;

        std::optional<fs::path> config_file;
        if (opt_config->count() > 0) config_file = config_path;
        config::HarnessConfig cfg =
            config::resolve_config(config_file, flags, config::env_from_process());
        log::Logger::instance().set_level(log::level_from_name(cfg.log_level));

        CommandContext ctx;
        ctx.cfg = cfg;
        ctx.run_id = run_id.empty() ? default_run_id() : run_id;
        ctx.out_dir = out_dir.empty() ? cfg.run_dir / ctx.run_id / "out" : fs::path(out_dir);
        log::Logger::instance().set_run_id(ctx.run_id);

        json summary;
        if (app.got_subcommand(taskgen_cmd)) {
            ctx.args = json::object();
            if (!ranking_path.empty()) ctx.args["ranking"] = ranking_path;
            ctx.args["out"] = ctx.out_dir.string();
            summary = cmd_taskgen(ctx);
        } else if (app.got_subcommand(quality_cmd)) {
            ctx.args = json{{"tasks", tasks_path}, {"reports", reports_path}, {"runs", repeats},
                            {"out", ctx.out_dir.string()}};
            summary = cmd_evaluate_quality(ctx);
        } else if (app.got_subcommand(factcheck_cmd)) {
            ctx.args = json{{"tasks", fc_tasks_path}, {"reports", fc_reports_path},
                            {"out", ctx.out_dir.string()}};
            if (!today.empty()) ctx.args["today"] = today;
            summary = cmd_factcheck(ctx);
        } else if (app.got_subcommand(board_cmd)) {
            summary = cmd_leaderboard(cfg, quality_runs, factcheck_runs, ctx.out_dir);
        } else if (app.got_subcommand(replay_cmd)) {
            summary = cmd_replay(cfg, replay_run);
        } else if (app.got_subcommand(export_cmd)) {
            fs::path out_file =
                export_out.empty() ? ctx.out_dir / "review.jsonl" : fs::path(export_out);
            summary = cmd_export_review(export_tasks, out_file);
        } else {
            throw Error(ErrorCode::Precondition, "no command selected");
        }
        std::cout << summary.dump(2) << "\n";
        return 0;
    } catch (const Error& e) {
        emit_error(e);
        return 1;
    } catch (const std::exception& e) {
        emit_error(Error(ErrorCode::Internal, e.what()));
        return 1;
    }
}

}  // namespace dre::cli
