#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dre/errors.hpp"

namespace dre::gateway {

using nlohmann::json;

enum class Role { system, user, assistant, tool };

std::string_view role_name(Role role);
Role role_from_name(std::string_view name);

struct Message {
    Role role = Role::user;
    std::string text;

    bool operator==(const Message&) const = default;
};

// Invariants: temperature >= 0, max_new_tokens >= 1, max_context > 0.
struct ModelProfile {
    std::string provider_id;
    std::string model_name;
    double temperature = 0.0;
    int max_new_tokens = 1024;
    std::optional<long> seed;
    int max_context = 1'000'000;

    void validate() const;
    json to_json() const;
    static ModelProfile from_json(const json& value);

    bool operator==(const ModelProfile&) const = default;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ChatExchange {
    std::vector<Message> messages;
    ModelProfile profile;
    std::string response_text;
    TokenUsage usage;
    std::chrono::milliseconds latency{0};
    bool from_cache = false;
};

// rank starts at 1 and is contiguous within one result list.
struct SearchHit {
    int rank = 0;
    std::string title;
    std::string url;
    std::string snippet;

    json to_json() const;
    static SearchHit from_json(const json& value);
};

struct PageCapture {
    std::string url;
    std::string fetched_at;
    std::string text;
    bool truncated = false;
    int attempt_count = 1;
};

struct CacheEntry {
    std::string key;
    std::string payload;
    std::string created_at;
    std::string kind;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string id() const = 0;
    // Returns raw response text; usage may stay zero for providers that do
    // not report it. Failures throw Error.
    virtual std::string complete(const ModelProfile& profile, const std::vector<Message>& messages,
                                 TokenUsage& usage) = 0;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    virtual std::vector<SearchHit> search(const std::string& query, int k) = 0;
};

class PageProvider {
public:
    virtual ~PageProvider() = default;
    // Single fetch attempt; throws Error(FetchFailed) on transport trouble.
    virtual std::string fetch(const std::string& url) = 0;
    // Throws Error(PageNotFound) when no such article exists.
    virtual std::string wiki_extract(const std::string& title) = 0;
};

// Content-addressed disk cache: <dir>/<kind>/<key[0:2]>/<key> holds the raw
// payload, a .meta.json sidecar holds the entry metadata. Writes are
// atomic (temp file + rename).
class DiskCache {
public:
    explicit DiskCache(std::filesystem::path root);

    std::optional<std::string> get(const std::string& kind, const std::string& key) const;
    std::optional<json> get_meta(const std::string& kind, const std::string& key) const;
    void put(const std::string& kind, const std::string& key, std::string_view payload,
             const json& meta);
    bool contains(const std::string& kind, const std::string& key) const;
    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path payload_path(const std::string& kind, const std::string& key) const;
    std::filesystem::path root_;
};

// Token bucket limiter; requests_per_minute <= 0 disables limiting. The
// clock is injectable for tests.
class RateLimiter {
public:
    using Clock = std::function<double()>;  // seconds, monotonic

    explicit RateLimiter(double requests_per_minute, Clock clock = {});
    // Blocks (sleeps) until a token is available.
    void acquire();
    // Non-blocking probe used by tests.
    bool try_acquire();

private:
    double refill_per_second_;
    double capacity_;
    double tokens_;
    double last_;
    Clock clock_;
    std::mutex mutex_;
    bool enabled_;
};

struct GatewayOptions {
    std::filesystem::path cache_dir = "cache";
    int fetch_max_attempts = 5;
    int fetch_backoff_ms = 250;
    long page_byte_budget = 200'000;
    double requests_per_minute = 0.0;
    int default_search_k = 10;
    // Replay mode: every request must hit the cache, a miss throws CacheMiss.
    bool cache_only = false;
};

// Front door for every external call. All requests are canonicalized,
// digested, answered from the disk cache when possible, and stored before
// the response is returned otherwise.
class Gateway {
public:
    explicit Gateway(GatewayOptions options);

    void register_chat_provider(std::shared_ptr<ChatProvider> provider);
    void set_search_provider(std::shared_ptr<SearchProvider> provider);
    void set_page_provider(std::shared_ptr<PageProvider> provider);

    ChatExchange complete(const ModelProfile& profile, const std::vector<Message>& messages);
    std::vector<SearchHit> web_search(const std::string& query, std::optional<int> k = {});
    PageCapture fetch_page(const std::string& url);
    PageCapture wiki_page(const std::string& title);

    const GatewayOptions& options() const { return options_; }
    DiskCache& cache() { return cache_; }

    // Canonical request digests; equal inputs give equal keys, any content
    // difference gives a different key.
    static std::string chat_cache_key(const ModelProfile& profile,
                                      const std::vector<Message>& messages);
    static std::string search_cache_key(const std::string& query, int k);
    static std::string page_cache_key(const std::string& url);
    static std::string wiki_cache_key(const std::string& title);

private:
    ChatProvider& chat_provider_for(const std::string& provider_id);
    RateLimiter& limiter_for(const std::string& provider_id);

    GatewayOptions options_;
    DiskCache cache_;
    std::map<std::string, std::shared_ptr<ChatProvider>> chat_providers_;
    std::shared_ptr<SearchProvider> search_provider_;
    std::shared_ptr<PageProvider> page_provider_;
    std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
    std::mutex mutex_;
};

// Pulls the innermost well-formed JSON payload out of <tag>...</tag>. When no
// tag pair is present the whole trimmed text must parse as JSON. Throws
// Error(MalformedOutput) otherwise.
json extract_tagged_block(const std::string& text, const std::string& tag);

// One corrective regeneration for unparseable model output: the failed
// assistant turn plus a format reminder are appended, giving the retry its
// own cache key. parse() receives the raw response and throws
// Error(MalformedOutput) to trigger the retry.
template <typename Parse>
auto complete_with_retry(Gateway& gw, const ModelProfile& profile, std::vector<Message> messages,
                         Parse parse) -> std::invoke_result_t<Parse, const std::string&> {
    ChatExchange first = gw.complete(profile, messages);
    try {
        return parse(first.response_text);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedOutput) throw;
    }
    messages.push_back({Role::assistant, first.response_text});
    messages.push_back({Role::user,
                        "Your previous response could not be parsed. Respond again following the "
                        "required output format exactly, with no text outside it."});
    ChatExchange second = gw.complete(profile, messages);
    return parse(second.response_text);
}

}  // namespace dre::gateway
