#include "dre/util.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "dre/jsonio.hpp"
#include "dre/logging.hpp"

namespace dre {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::Interrupted: return "Interrupted";
        case ErrorCode::MalformedOutput: return "MalformedOutput";
        case ErrorCode::FetchFailed: return "FetchFailed";
        case ErrorCode::PageNotFound: return "PageNotFound";
        case ErrorCode::DomainUnknown: return "DomainUnknown";
        case ErrorCode::PartialGeneration: return "PartialGeneration";
        case ErrorCode::EmptyBaseline: return "EmptyBaseline";
        case ErrorCode::PipelineEmpty: return "PipelineEmpty";
        case ErrorCode::DimensionCollision: return "DimensionCollision";
        case ErrorCode::NegativeWeight: return "NegativeWeight";
        case ErrorCode::EmptyCriteria: return "EmptyCriteria";
        case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
        case ErrorCode::CriterionMismatch: return "CriterionMismatch";
        case ErrorCode::MissingDimension: return "MissingDimension";
        case ErrorCode::CardinalityMismatch: return "CardinalityMismatch";
        case ErrorCode::EmptyReport: return "EmptyReport";
        case ErrorCode::LabelUnknownValue: return "LabelUnknownValue";
        case ErrorCode::SchemaViolation: return "SchemaViolation";
        case ErrorCode::StoreUnavailable: return "StoreUnavailable";
        case ErrorCode::RunNotFound: return "RunNotFound";
        case ErrorCode::CorruptRecord: return "CorruptRecord";
        case ErrorCode::NoResults: return "NoResults";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::CacheMiss: return "CacheMiss";
        case ErrorCode::Precondition: return "Precondition";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

}  // namespace dre

namespace dre::util {

namespace {
std::atomic<bool> g_interrupted{false};
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw Error(ErrorCode::Internal, "EVP_MD_CTX_new failed");
    bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 &&
              EVP_DigestFinal_ex(ctx, digest, &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw Error(ErrorCode::Internal, "SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view text) {
    size_t begin = 0;
    size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

std::string slugify(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool dash = false;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            if (dash && !out.empty()) out.push_back('-');
            dash = false;
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            dash = true;
        }
    }
    if (out.empty()) out = "x";
    return out;
}

int count_words(std::string_view text) {
    int count = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++count;
        in_word = !space;
    }
    return count;
}

int count_sentences(std::string_view text) {
    int count = 0;
    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        // A run of terminators counts once, at its end.
        if (i + 1 < text.size() &&
            (text[i + 1] == '.' || text[i + 1] == '!' || text[i + 1] == '?')) {
            continue;
        }
        if (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]))) {
            ++count;
        }
    }
    if (count == 0 && !trim(text).empty()) count = 1;
    return count;
}

std::string iso8601_utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
    return buf;
}

std::uint64_t digest_seed(std::string_view data) {
    std::string hex = sha256_hex(data);
    std::uint64_t seed = 0;
    for (int i = 0; i < 16; ++i) {
        char c = hex[static_cast<size_t>(i)];
        std::uint64_t nibble =
            c <= '9' ? static_cast<std::uint64_t>(c - '0') : static_cast<std::uint64_t>(c - 'a' + 10);
        seed = (seed << 4) | nibble;
    }
    return seed;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::StoreUnavailable, "cannot read file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::StoreUnavailable, "cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorCode::StoreUnavailable, "short write: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void request_interrupt() { g_interrupted.store(true); }
void clear_interrupt() { g_interrupted.store(false); }
bool interrupt_requested() { return g_interrupted.load(); }

void throw_if_interrupted() {
    if (g_interrupted.load()) throw Error(ErrorCode::Interrupted, "interrupted by signal");
}

}  // namespace dre::util

namespace dre::jsonio {

std::string canonical(const json& value) { return value.dump(); }

std::string canonical_pretty(const json& value) { return value.dump(2) + "\n"; }

json parse(std::string_view text, std::string_view what) {
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        throw Error(ErrorCode::MalformedOutput, std::string(what) + ": invalid JSON");
    }
    return value;
}

json load_file(const std::filesystem::path& path) {
    return parse(util::read_text_file(path), path.string());
}

void save_file(const std::filesystem::path& path, const json& value) {
    util::write_text_file_atomic(path, canonical_pretty(value));
}

json strip_volatile(json value) {
    static const char* kVolatile[] = {"created_at", "fetched_at", "latency_ms"};
    if (value.is_object()) {
        for (const char* key : kVolatile) value.erase(key);
        for (auto& [k, v] : value.items()) {
            (void)k;
            v = strip_volatile(std::move(v));
        }
    } else if (value.is_array()) {
        for (auto& v : value) v = strip_volatile(std::move(v));
    }
    return value;
}

const json* find_key(const json& object, std::string_view key) {
    if (!object.is_object()) return nullptr;
    auto it = object.find(key);
    return it == object.end() ? nullptr : &*it;
}

std::string require_string(const json& object, std::string_view key, std::string_view context) {
    const json* v = find_key(object, key);
    if (v == nullptr || !v->is_string()) {
        throw Error(ErrorCode::MalformedOutput,
                    std::string(context) + ": missing string field '" + std::string(key) + "'");
    }
    return v->get<std::string>();
}

double require_number(const json& object, std::string_view key, std::string_view context) {
    const json* v = find_key(object, key);
    if (v == nullptr || !v->is_number()) {
        throw Error(ErrorCode::MalformedOutput,
                    std::string(context) + ": missing numeric field '" + std::string(key) + "'");
    }
    return v->get<double>();
}

bool require_bool(const json& object, std::string_view key, std::string_view context) {
    const json* v = find_key(object, key);
    if (v == nullptr || !v->is_boolean()) {
        throw Error(ErrorCode::MalformedOutput,
                    std::string(context) + ": missing boolean field '" + std::string(key) + "'");
    }
    return v->get<bool>();
}

const json& require_array(const json& object, std::string_view key, std::string_view context) {
    const json* v = find_key(object, key);
    if (v == nullptr || !v->is_array()) {
        throw Error(ErrorCode::MalformedOutput,
                    std::string(context) + ": missing array field '" + std::string(key) + "'");
    }
    return *v;
}

}  // namespace dre::jsonio

namespace dre::log {

Level level_from_name(const std::string& name) {
    if (name == "debug") return Level::debug;
    if (name == "info") return Level::info;
    if (name == "warn") return Level::warn;
    if (name == "error") return Level::error;
    throw Error(ErrorCode::ConfigInvalid, "log level must be one of debug|info|warn|error, got '" +
                                              name + "'");
}

Logger& Logger::instance() {
    static Logger logger;
    return logger;
}

void Logger::set_run_id(std::string run_id) {
    std::lock_guard lock(mutex_);
    run_id_ = std::move(run_id);
}

void Logger::event(Level level, const std::string& name, json detail) {
    if (static_cast<int>(level) < static_cast<int>(level_)) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::lock_guard lock(mutex_);
    json line = std::move(detail);
    if (!line.is_object()) line = json::object();
    line["ts"] = util::iso8601_utc_now();
    line["level"] = names[static_cast<int>(level)];
    line["event"] = name;
    if (!run_id_.empty()) line["run_id"] = run_id_;
    std::fputs((line.dump() + "\n").c_str(), stderr);
}

json Warning::to_json() const {
    return json{{"code", code}, {"context", context}, {"detail", detail}};
}

void WarningLog::add(std::string code, std::string context, std::string detail) {
    Logger::instance().event(Level::warn, "warning",
                             json{{"code", code}, {"context", context}, {"detail", detail}});
    std::lock_guard lock(mutex_);
    entries_.push_back({std::move(code), std::move(context), std::move(detail)});
}

std::vector<Warning> WarningLog::sorted() const {
    std::lock_guard lock(mutex_);
    std::vector<Warning> out = entries_;
    std::sort(out.begin(), out.end(), [](const Warning& a, const Warning& b) {
        if (a.context != b.context) return a.context < b.context;
        if (a.code != b.code) return a.code < b.code;
        return a.detail < b.detail;
    });
    return out;
}

size_t WarningLog::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

void WarningLog::clear() {
    std::lock_guard lock(mutex_);
    entries_.clear();
}

}  // namespace dre::log
