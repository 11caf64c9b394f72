#pragma once

#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace dre::log {

using nlohmann::json;

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

Level level_from_name(const std::string& name);

// Structured event log: one JSON object per line on stderr, correlated by
// run id. Thread safe.
class Logger {
public:
    static Logger& instance();

    void set_level(Level level) { level_ = level; }
    void set_run_id(std::string run_id);

    void event(Level level, const std::string& name, json detail = json::object());

private:
    Logger() = default;
    std::mutex mutex_;
    Level level_ = Level::warn;
    std::string run_id_;
};

struct Warning {
    std::string code;
    std::string context;
    std::string detail;

    json to_json() const;
};

// Collects non-fatal deviations (repairs, clamps, dropped items). Entries are
// sorted before persistence so parallel stages stay replay-deterministic.
class WarningLog {
public:
    void add(std::string code, std::string context, std::string detail);
    std::vector<Warning> sorted() const;
    size_t size() const;
    void clear();

private:
    mutable std::mutex mutex_;
    std::vector<Warning> entries_;
};

}  // namespace dre::log
