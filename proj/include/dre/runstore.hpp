#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dre/gateway.hpp"

namespace dre::runstore {

using nlohmann::json;

enum class RecordKind {
    persona,
    candidate,
    verdict,
    assessment,
    rubric,
    quality_result,
    factcheck_report,
    transcript,
    warning,
};

std::string_view record_kind_name(RecordKind kind);
RecordKind record_kind_from_name(std::string_view name);
const std::vector<RecordKind>& all_record_kinds();

struct RecordEnvelope {
    RecordKind kind = RecordKind::warning;
    std::string run_ref;
    int schema_version = 1;
    json payload;

    json to_json() const;
    static RecordEnvelope from_json(const json& value);
};

// Structural checks per kind; throws Error(SchemaViolation) naming the field.
void validate_payload(RecordKind kind, const json& payload);

struct PositionedRecord {
    long position = 0;
    RecordEnvelope record;
};

struct RunManifest {
    std::string run_id;
    std::string created_at;
    std::string stage;
    json config = json::object();
    std::vector<gateway::ModelProfile> profiles;

    json to_json() const;
    static RunManifest from_json(const json& value);
};

// Append-only line-delimited store: runs/<run_id>/{manifest.json,
// <kind>.jsonl}. Positions increase strictly per run across kinds.
class RunStore {
public:
    explicit RunStore(std::filesystem::path root);

    void begin_run(const RunManifest& manifest);
    long append_record(const RecordEnvelope& record);
    bool run_exists(const std::string& run_id) const;
    RunManifest load_manifest(const std::string& run_id) const;
    std::vector<PositionedRecord> load_records(const std::string& run_id, RecordKind kind) const;
    // Tolerant variant: returns intact prefix plus the corrupt position.
    std::pair<std::vector<PositionedRecord>, std::optional<long>> load_records_lenient(
        const std::string& run_id, RecordKind kind) const;
    std::vector<PositionedRecord> load_run(const std::string& run_id) const;
    std::filesystem::path run_dir(const std::string& run_id) const;
    const std::filesystem::path& root() const { return root_; }

private:
    long scan_next_position(const std::string& run_id) const;

    std::filesystem::path root_;
    std::mutex mutex_;
    std::map<std::string, long> next_position_;
};

struct SummaryStat {
    double mean = 0.0;
    std::optional<double> stddev;  // sample stddev; absent for single runs
};

SummaryStat summarize_runs(const std::vector<double>& per_run_values);
// "5.24 (± 0.02)" or "5.24" for single runs.
std::string format_stability(const SummaryStat& stat);

struct QualityRow {
    std::string system;
    int n_results = 0;
    double mean_overall = 0.0;
    std::optional<double> stddev_overall;
    // Four general dimensions plus pooled "Task-Specific".
    std::map<std::string, double> per_dimension_means;

    json to_json() const;
};

struct FactualRow {
    std::string system;
    int n_reports = 0;
    double mean_statements = 0.0;
    double mean_right = 0.0;
    double mean_wrong = 0.0;
    double mean_unknown = 0.0;
    double micro_ratio = 0.0;  // sum(right)/sum(statements)
    int excluded_empty = 0;

    json to_json() const;
};

struct Leaderboard {
    std::vector<QualityRow> quality;  // ascending by mean_overall
    std::vector<FactualRow> factual;  // ascending by micro_ratio

    json to_json() const;
    std::string render_text() const;
};

Leaderboard build_leaderboard(const RunStore& store, const std::vector<std::string>& quality_runs,
                              const std::vector<std::string>& factcheck_runs);

}  // namespace dre::runstore
