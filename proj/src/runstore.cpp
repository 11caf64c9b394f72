#include "dre/runstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "dre/jsonio.hpp"
#include "dre/util.hpp"

namespace dre::runstore {

namespace fs = std::filesystem;

std::string_view record_kind_name(RecordKind kind) {
    switch (kind) {
        case RecordKind::persona: return "persona";
        case RecordKind::candidate: return "candidate";
        case RecordKind::verdict: return "verdict";
        case RecordKind::assessment: return "assessment";
        case RecordKind::rubric: return "rubric";
        case RecordKind::quality_result: return "quality_result";
        case RecordKind::factcheck_report: return "factcheck_report";
        case RecordKind::transcript: return "transcript";
        case RecordKind::warning: return "warning";
    }
    return "warning";
}

RecordKind record_kind_from_name(std::string_view name) {
    for (RecordKind kind : all_record_kinds()) {
        if (record_kind_name(kind) == name) return kind;
    }
    throw Error(ErrorCode::SchemaViolation, "unknown record kind '" + std::string(name) + "'");
}

const std::vector<RecordKind>& all_record_kinds() {
    static const std::vector<RecordKind> kinds{
        RecordKind::persona,        RecordKind::candidate,  RecordKind::verdict,
        RecordKind::assessment,     RecordKind::rubric,     RecordKind::quality_result,
        RecordKind::factcheck_report, RecordKind::transcript, RecordKind::warning,
    };
    return kinds;
}

namespace {

enum class FieldType { string_t, number_t, boolean_t, array_t };

void require_field(RecordKind kind, const json& payload, const char* field, FieldType type) {
    std::string where = std::string(record_kind_name(kind)) + " payload";
    if (!payload.contains(field)) {
        throw Error(ErrorCode::SchemaViolation, where + " missing field '" + field + "'");
    }
    const json& value = payload.at(field);
    bool ok = false;
    switch (type) {
        case FieldType::string_t:
            ok = value.is_string() && !value.get<std::string>().empty();
            break;
        case FieldType::number_t: ok = value.is_number(); break;
        case FieldType::boolean_t: ok = value.is_boolean(); break;
        case FieldType::array_t: ok = value.is_array(); break;
    }
    if (!ok) {
        throw Error(ErrorCode::SchemaViolation, where + " field '" + field + "' has wrong type");
    }
}

}  // namespace

void validate_payload(RecordKind kind, const json& payload) {
    if (!payload.is_object()) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string(record_kind_name(kind)) + " payload must be an object");
    }
    switch (kind) {
        case RecordKind::persona:
            require_field(kind, payload, "domain", FieldType::string_t);
            require_field(kind, payload, "name", FieldType::string_t);
            require_field(kind, payload, "role", FieldType::string_t);
            require_field(kind, payload, "affiliation", FieldType::string_t);
            require_field(kind, payload, "background", FieldType::string_t);
            require_field(kind, payload, "subdomain", FieldType::string_t);
            break;
        case RecordKind::candidate:
            require_field(kind, payload, "task_id", FieldType::string_t);
            require_field(kind, payload, "persona_ref", FieldType::string_t);
            require_field(kind, payload, "query", FieldType::string_t);
            require_field(kind, payload, "expected_search_rounds", FieldType::number_t);
            require_field(kind, payload, "time_sensitivity", FieldType::boolean_t);
            break;
        case RecordKind::verdict:
            require_field(kind, payload, "task_id", FieldType::string_t);
            require_field(kind, payload, "needs_deep_research", FieldType::boolean_t);
            require_field(kind, payload, "confidence_score", FieldType::number_t);
            break;
        case RecordKind::assessment:
            require_field(kind, payload, "task_id", FieldType::string_t);
            require_field(kind, payload, "quality_score", FieldType::number_t);
            require_field(kind, payload, "requires_search", FieldType::boolean_t);
            break;
        case RecordKind::rubric:
            require_field(kind, payload, "task_ref", FieldType::string_t);
            require_field(kind, payload, "dimensions", FieldType::array_t);
            break;
        case RecordKind::quality_result:
            require_field(kind, payload, "report_ref", FieldType::string_t);
            require_field(kind, payload, "system", FieldType::string_t);
            require_field(kind, payload, "task_id", FieldType::string_t);
            require_field(kind, payload, "overall", FieldType::number_t);
            require_field(kind, payload, "per_dimension", FieldType::array_t);
            break;
        case RecordKind::factcheck_report:
            require_field(kind, payload, "report_ref", FieldType::string_t);
            require_field(kind, payload, "system", FieldType::string_t);
            require_field(kind, payload, "task_id", FieldType::string_t);
            require_field(kind, payload, "n_statements", FieldType::number_t);
            require_field(kind, payload, "n_right", FieldType::number_t);
            require_field(kind, payload, "n_wrong", FieldType::number_t);
            require_field(kind, payload, "n_unknown", FieldType::number_t);
            break;
        case RecordKind::transcript:
            require_field(kind, payload, "report_ref", FieldType::string_t);
            require_field(kind, payload, "segment_index", FieldType::number_t);
            require_field(kind, payload, "messages", FieldType::array_t);
            break;
        case RecordKind::warning:
            require_field(kind, payload, "code", FieldType::string_t);
            require_field(kind, payload, "context", FieldType::string_t);
            break;
    }
}

json RecordEnvelope::to_json() const {
    return json{{"kind", std::string(record_kind_name(kind))},
                {"run_ref", run_ref},
                {"schema_version", schema_version},
                {"payload", payload}};
}

RecordEnvelope RecordEnvelope::from_json(const json& value) {
    if (!value.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "record envelope must be an object");
    }
    RecordEnvelope record;
    if (!value.contains("kind") || !value["kind"].is_string()) {
        throw Error(ErrorCode::SchemaViolation, "record envelope missing 'kind'");
    }
    record.kind = record_kind_from_name(value["kind"].get<std::string>());
    if (!value.contains("run_ref") || !value["run_ref"].is_string() ||
        value["run_ref"].get<std::string>().empty()) {
        throw Error(ErrorCode::SchemaViolation, "record envelope missing 'run_ref'");
    }
    record.run_ref = value["run_ref"].get<std::string>();
    if (!value.contains("schema_version") || !value["schema_version"].is_number_integer() ||
        value["schema_version"].get<int>() < 1) {
        throw Error(ErrorCode::SchemaViolation, "record envelope needs schema_version >= 1");
    }
    record.schema_version = value["schema_version"].get<int>();
    if (!value.contains("payload")) {
        throw Error(ErrorCode::SchemaViolation, "record envelope missing 'payload'");
    }
    record.payload = value["payload"];
    validate_payload(record.kind, record.payload);
    return record;
}

json RunManifest::to_json() const {
    json profile_list = json::array();
    for (const gateway::ModelProfile& p : profiles) profile_list.push_back(p.to_json());
    return json{{"run_id", run_id},
                {"created_at", created_at},
                {"stage", stage},
                {"config", config},
                {"profiles", profile_list}};
}

RunManifest RunManifest::from_json(const json& value) {
    RunManifest m;
    m.run_id = jsonio::require_string(value, "run_id", "manifest");
    m.created_at = value.value("created_at", "");
    m.stage = jsonio::require_string(value, "stage", "manifest");
    if (const json* c = jsonio::find_key(value, "config")) m.config = *c;
    if (const json* p = jsonio::find_key(value, "profiles"); p != nullptr && p->is_array()) {
        for (const json& item : *p) m.profiles.push_back(gateway::ModelProfile::from_json(item));
    }
    return m;
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) {
        throw Error(ErrorCode::StoreUnavailable,
                    "cannot create store root '" + root_.string() + "': " + ec.message());
    }
}

fs::path RunStore::run_dir(const std::string& run_id) const {
    if (run_id.empty() || run_id.find('/') != std::string::npos ||
        run_id.find("..") != std::string::npos) {
        throw Error(ErrorCode::Precondition, "invalid run id '" + run_id + "'");
    }
    return root_ / run_id;
}

void RunStore::begin_run(const RunManifest& manifest) {
    fs::path dir = run_dir(manifest.run_id);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::StoreUnavailable,
                    "cannot create run dir '" + dir.string() + "': " + ec.message());
    }
    util::write_text_file_atomic(dir / "manifest.json",
                                 jsonio::canonical_pretty(manifest.to_json()));
}

bool RunStore::run_exists(const std::string& run_id) const {
    return fs::exists(run_dir(run_id) / "manifest.json");
}

RunManifest RunStore::load_manifest(const std::string& run_id) const {
    fs::path path = run_dir(run_id) / "manifest.json";
    if (!fs::exists(path)) {
        throw Error(ErrorCode::RunNotFound, "run '" + run_id + "' has no manifest");
    }
    return RunManifest::from_json(jsonio::load_file(path));
}

long RunStore::scan_next_position(const std::string& run_id) const {
    long max_position = 0;
    for (RecordKind kind : all_record_kinds()) {
        fs::path path = run_dir(run_id) / (std::string(record_kind_name(kind)) + ".jsonl");
        if (!fs::exists(path)) continue;
        std::ifstream in(path);
        std::string line;
        while (std::getline(in, line)) {
            if (util::trim(line).empty()) continue;
            json value = json::parse(line, nullptr, false);
            if (value.is_discarded() || !value.is_object() || !value.contains("position") ||
                !value["position"].is_number_integer()) {
                continue;  // strict loads report this; appends must still move past it
            }
            max_position = std::max(max_position, value["position"].get<long>());
        }
    }
    return max_position + 1;
}

long RunStore::append_record(const RecordEnvelope& record) {
    if (!run_exists(record.run_ref)) {
        throw Error(ErrorCode::RunNotFound, "run '" + record.run_ref + "' was never begun");
    }
    validate_payload(record.kind, record.payload);
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = next_position_.find(record.run_ref);
    if (it == next_position_.end()) {
        it = next_position_.emplace(record.run_ref, scan_next_position(record.run_ref)).first;
    }
    long position = it->second;
    json line = record.to_json();
    line["position"] = position;

    fs::path path =
        run_dir(record.run_ref) / (std::string(record_kind_name(record.kind)) + ".jsonl");
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw Error(ErrorCode::StoreUnavailable, "cannot open '" + path.string() + "' for append");
    }
    out << jsonio::canonical(line) << '\n';
    out.flush();
    if (!out) {
        throw Error(ErrorCode::StoreUnavailable, "write to '" + path.string() + "' failed");
    }
    it->second = position + 1;
    return position;
}

std::pair<std::vector<PositionedRecord>, std::optional<long>> RunStore::load_records_lenient(
    const std::string& run_id, RecordKind kind) const {
    if (!run_exists(run_id)) {
        throw Error(ErrorCode::RunNotFound, "run '" + run_id + "' has no manifest");
    }
    std::vector<PositionedRecord> records;
    std::optional<long> corrupt;
    fs::path path = run_dir(run_id) / (std::string(record_kind_name(kind)) + ".jsonl");
    if (!fs::exists(path)) return {records, corrupt};
    std::ifstream in(path);
    std::string line;
    long last_position = 0;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        json value = json::parse(line, nullptr, false);
        bool ok = !value.is_discarded() && value.is_object() && value.contains("position") &&
                  value["position"].is_number_integer();
        if (ok) {
            try {
                PositionedRecord record;
                record.position = value["position"].get<long>();
                record.record = RecordEnvelope::from_json(value);
                if (record.record.run_ref != run_id) {
                    throw Error(ErrorCode::SchemaViolation, "record belongs to another run");
                }
                last_position = record.position;
                records.push_back(std::move(record));
                continue;
            } catch (const Error&) {
                ok = false;
            }
        }
        if (!ok) {
            corrupt = last_position + 1;
            break;
        }
    }
    return {records, corrupt};
}

std::vector<PositionedRecord> RunStore::load_records(const std::string& run_id,
                                                     RecordKind kind) const {
    auto [records, corrupt] = load_records_lenient(run_id, kind);
    if (corrupt.has_value()) {
        throw Error(ErrorCode::CorruptRecord,
                    "corrupt " + std::string(record_kind_name(kind)) + " record in run '" +
                        run_id + "' at position " + std::to_string(*corrupt));
    }
    return records;
}

std::vector<PositionedRecord> RunStore::load_run(const std::string& run_id) const {
    std::vector<PositionedRecord> all;
    for (RecordKind kind : all_record_kinds()) {
        for (PositionedRecord& record : load_records(run_id, kind)) {
            all.push_back(std::move(record));
        }
    }
    std::stable_sort(all.begin(), all.end(),
                     [](const PositionedRecord& a, const PositionedRecord& b) {
                         return a.position < b.position;
                     });
    return all;
}

SummaryStat summarize_runs(const std::vector<double>& per_run_values) {
    if (per_run_values.empty()) {
        throw Error(ErrorCode::Precondition, "no values to summarize");
    }
    SummaryStat stat;
    double sum = 0.0;
    for (double v : per_run_values) sum += v;
    stat.mean = sum / static_cast<double>(per_run_values.size());
    if (per_run_values.size() >= 2) {
        double squares = 0.0;
        for (double v : per_run_values) squares += (v - stat.mean) * (v - stat.mean);
        stat.stddev = std::sqrt(squares / static_cast<double>(per_run_values.size() - 1));
    }
    return stat;
}

std::string format_stability(const SummaryStat& stat) {
    char buffer[80];
    if (stat.stddev.has_value()) {
        std::snprintf(buffer, sizeof(buffer), "%.2f (± %.2f)", stat.mean, *stat.stddev);
    } else {
        std::snprintf(buffer, sizeof(buffer), "%.2f", stat.mean);
    }
    return buffer;
}

json QualityRow::to_json() const {
    json dims = json::object();
    for (const auto& [name, mean] : per_dimension_means) dims[name] = mean;
    json out{{"system", system},
             {"n_results", n_results},
             {"mean_overall", mean_overall},
             {"per_dimension_means", dims}};
    if (stddev_overall.has_value()) out["stddev_overall"] = *stddev_overall;
    return out;
}

json FactualRow::to_json() const {
    return json{{"system", system},
                {"n_reports", n_reports},
                {"mean_statements", mean_statements},
                {"mean_right", mean_right},
                {"mean_wrong", mean_wrong},
                {"mean_unknown", mean_unknown},
                {"micro_ratio_pct", micro_ratio},
                {"excluded_empty", excluded_empty}};
}

json Leaderboard::to_json() const {
    json q = json::array();
    for (const QualityRow& row : quality) q.push_back(row.to_json());
    json f = json::array();
    for (const FactualRow& row : factual) f.push_back(row.to_json());
    return json{{"quality", q}, {"factual", f}};
}

namespace {

// Width in display columns, not bytes: UTF-8 continuation bytes do not count.
size_t display_width(const std::string& text) {
    size_t width = 0;
    for (unsigned char c : text) {
        if ((c & 0xC0) != 0x80) ++width;
    }
    return width;
}

std::string pad(const std::string& text, size_t width) {
    size_t have = display_width(text);
    if (have >= width) return text;
    return text + std::string(width - have, ' ');
}

std::string fixed2(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
    std::vector<size_t> widths(header.size());
    for (size_t i = 0; i < header.size(); ++i) widths[i] = display_width(header[i]);
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            widths[i] = std::max(widths[i], display_width(row[i]));
        }
    }
    std::string out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            out += pad(row[i], widths[i]);
            if (i + 1 < row.size()) out += "  ";
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += '\n';
    };
    emit(header);
    std::vector<std::string> rule;
    for (size_t w : widths) rule.push_back(std::string(w, '-'));
    emit(rule);
    for (const auto& row : rows) emit(row);
    return out;
}

}  // namespace

std::string Leaderboard::render_text() const {
    std::string out;
    if (!quality.empty()) {
        out += "Report quality (weighted rubric score, 0-10; higher is better)\n";
        std::vector<std::string> header{"System",  "N",       "Overall",      "Coverage",
                                        "Insight", "Instr. Following", "Clarity",
                                        "Task-Specific"};
        std::vector<std::vector<std::string>> rows;
        for (const QualityRow& row : quality) {
            SummaryStat stat;
            stat.mean = row.mean_overall;
            stat.stddev = row.stddev_overall;
            auto dim = [&](const char* name) {
                auto it = row.per_dimension_means.find(name);
                return it == row.per_dimension_means.end() ? std::string("-") : fixed2(it->second);
            };
            rows.push_back({row.system, std::to_string(row.n_results), format_stability(stat),
                            dim("Coverage"), dim("Insight"), dim("Instruction Following"),
                            dim("Clarity"), dim("Task-Specific")});
        }
        out += render_table(header, rows);
    }
    if (!factual.empty()) {
        if (!out.empty()) out += '\n';
        out += "Factual accuracy (verified statement ratio; higher is better)\n";
        std::vector<std::string> header{"System", "N",     "Accuracy",  "Statements",
                                        "Right",  "Wrong", "Unknown", "Excluded"};
        std::vector<std::vector<std::string>> rows;
        for (const FactualRow& row : factual) {
            rows.push_back({row.system, std::to_string(row.n_reports),
                            fixed2(row.micro_ratio) + "%", fixed2(row.mean_statements),
                            fixed2(row.mean_right), fixed2(row.mean_wrong),
                            fixed2(row.mean_unknown), std::to_string(row.excluded_empty)});
        }
        out += render_table(header, rows);
    }
    return out;
}

Leaderboard build_leaderboard(const RunStore& store, const std::vector<std::string>& quality_runs,
                              const std::vector<std::string>& factcheck_runs) {
    Leaderboard board;

    // Repeated evaluations are separate stability groups: distinct run ids, or
    // distinct run_index values within one run.
    std::map<std::string, std::map<std::string, std::vector<double>>> overall_groups;
    std::map<std::string, std::map<std::string, std::vector<double>>> dimension_pool;
    std::map<std::string, int> result_counts;
    for (const std::string& run_id : quality_runs) {
        for (const PositionedRecord& record :
             store.load_records(run_id, RecordKind::quality_result)) {
            const json& payload = record.record.payload;
            std::string system = payload.at("system").get<std::string>();
            int run_index = payload.value("run_index", 1);
            std::string group = run_id + "#" + std::to_string(run_index);
            overall_groups[system][group].push_back(payload.at("overall").get<double>());
            ++result_counts[system];
            for (const json& dim : payload.at("per_dimension")) {
                if (!dim.is_object() || !dim.contains("mean_score")) continue;
                std::string name = dim.value("kind", "task_specific") == "general"
                                       ? dim.value("name", "")
                                       : std::string("Task-Specific");
                if (name.empty()) continue;
                dimension_pool[system][name].push_back(dim["mean_score"].get<double>());
            }
        }
    }
    for (const auto& [system, groups] : overall_groups) {
        QualityRow row;
        row.system = system;
        row.n_results = result_counts[system];
        std::vector<double> per_group_means;
        for (const auto& [group, values] : groups) {
            (void)group;
            per_group_means.push_back(summarize_runs(values).mean);
        }
        SummaryStat stat = summarize_runs(per_group_means);
        row.mean_overall = stat.mean;
        row.stddev_overall = stat.stddev;
        for (const auto& [name, values] : dimension_pool[system]) {
            row.per_dimension_means[name] = summarize_runs(values).mean;
        }
        board.quality.push_back(std::move(row));
    }
    std::sort(board.quality.begin(), board.quality.end(),
              [](const QualityRow& a, const QualityRow& b) {
                  if (a.mean_overall != b.mean_overall) return a.mean_overall < b.mean_overall;
                  return a.system < b.system;
              });

    struct FactAccumulator {
        long reports = 0;
        long statements = 0;
        long right = 0;
        long wrong = 0;
        long unknown = 0;
        int excluded = 0;
    };
    std::map<std::string, FactAccumulator> fact_groups;
    for (const std::string& run_id : factcheck_runs) {
        for (const PositionedRecord& record :
             store.load_records(run_id, RecordKind::factcheck_report)) {
            const json& payload = record.record.payload;
            FactAccumulator& acc = fact_groups[payload.at("system").get<std::string>()];
            long statements = payload.at("n_statements").get<long>();
            if (statements == 0) {
                ++acc.excluded;
                continue;
            }
            ++acc.reports;
            acc.statements += statements;
            acc.right += payload.at("n_right").get<long>();
            acc.wrong += payload.at("n_wrong").get<long>();
            acc.unknown += payload.at("n_unknown").get<long>();
        }
    }
    for (const auto& [system, acc] : fact_groups) {
        if (acc.reports == 0) continue;  // only zero-statement reports seen
        FactualRow row;
        row.system = system;
        row.n_reports = static_cast<int>(acc.reports);
        double n = static_cast<double>(acc.reports);
        row.mean_statements = static_cast<double>(acc.statements) / n;
        row.mean_right = static_cast<double>(acc.right) / n;
        row.mean_wrong = static_cast<double>(acc.wrong) / n;
        row.mean_unknown = static_cast<double>(acc.unknown) / n;
        row.micro_ratio =
            100.0 * static_cast<double>(acc.right) / static_cast<double>(acc.statements);
        row.excluded_empty = acc.excluded;
        board.factual.push_back(std::move(row));
    }
    std::sort(board.factual.begin(), board.factual.end(),
              [](const FactualRow& a, const FactualRow& b) {
                  if (a.micro_ratio != b.micro_ratio) return a.micro_ratio < b.micro_ratio;
                  return a.system < b.system;
              });

    if (board.quality.empty() && board.factual.empty()) {
        throw Error(ErrorCode::NoResults, "no results found in the requested runs");
    }
    return board;
}

}  // namespace dre::runstore
