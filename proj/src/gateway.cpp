#include "dre/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <thread>

#include "dre/jsonio.hpp"
#include "dre/util.hpp"

namespace dre::gateway {

using jsonio::json;

std::string_view role_name(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

Role role_from_name(std::string_view name) {
    if (name == "system") return Role::system;
    if (name == "user") return Role::user;
    if (name == "assistant") return Role::assistant;
    if (name == "tool") return Role::tool;
    throw Error(ErrorCode::SchemaViolation, "unknown message role: " + std::string(name));
}

void ModelProfile::validate() const {
    if (provider_id.empty()) throw Error(ErrorCode::Precondition, "profile: provider_id empty");
    if (model_name.empty()) throw Error(ErrorCode::Precondition, "profile: model_name empty");
    if (temperature < 0) throw Error(ErrorCode::Precondition, "profile: temperature < 0");
    if (max_new_tokens < 1) throw Error(ErrorCode::Precondition, "profile: max_new_tokens < 1");
    if (max_context <= 0) throw Error(ErrorCode::Precondition, "profile: max_context <= 0");
}

json ModelProfile::to_json() const {
    json j{{"provider_id", provider_id}, {"model_name", model_name},
           {"temperature", temperature}, {"max_new_tokens", max_new_tokens},
           {"max_context", max_context}};
    j["seed"] = seed.has_value() ? json(*seed) : json(nullptr);
    return j;
}

ModelProfile ModelProfile::from_json(const json& value) {
    ModelProfile p;
    p.provider_id = jsonio::require_string(value, "provider_id", "profile");
    p.model_name = jsonio::require_string(value, "model_name", "profile");
    p.temperature = jsonio::require_number(value, "temperature", "profile");
    p.max_new_tokens = static_cast<int>(jsonio::require_number(value, "max_new_tokens", "profile"));
    p.max_context = static_cast<int>(jsonio::require_number(value, "max_context", "profile"));
    if (const json* s = jsonio::find_key(value, "seed"); s != nullptr && s->is_number()) {
        p.seed = s->get<long>();
    }
    p.validate();
    return p;
}

json SearchHit::to_json() const {
    return json{{"rank", rank}, {"title", title}, {"url", url}, {"snippet", snippet}};
}

SearchHit SearchHit::from_json(const json& value) {
    SearchHit hit;
    hit.rank = static_cast<int>(jsonio::require_number(value, "rank", "search hit"));
    hit.title = jsonio::require_string(value, "title", "search hit");
    hit.url = jsonio::require_string(value, "url", "search hit");
    hit.snippet = value.value("snippet", "");
    return hit;
}

DiskCache::DiskCache(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path DiskCache::payload_path(const std::string& kind,
                                              const std::string& key) const {
    return root_ / kind / key.substr(0, 2) / key;
}

std::optional<std::string> DiskCache::get(const std::string& kind, const std::string& key) const {
    auto path = payload_path(kind, key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    return util::read_text_file(path);
}

std::optional<json> DiskCache::get_meta(const std::string& kind, const std::string& key) const {
    auto path = payload_path(kind, key);
    path += ".meta.json";
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    return jsonio::load_file(path);
}

void DiskCache::put(const std::string& kind, const std::string& key, std::string_view payload,
                    const json& meta) {
    auto path = payload_path(kind, key);
    util::write_text_file_atomic(path, payload);
    json full = meta;
    full["key"] = key;
    full["kind"] = kind;
    full["created_at"] = util::iso8601_utc_now();
    auto meta_path = path;
    meta_path += ".meta.json";
    util::write_text_file_atomic(meta_path, jsonio::canonical_pretty(full));
}

bool DiskCache::contains(const std::string& kind, const std::string& key) const {
    std::error_code ec;
    return std::filesystem::exists(payload_path(kind, key), ec);
}

RateLimiter::RateLimiter(double requests_per_minute, Clock clock)
    : refill_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      clock_(std::move(clock)),
      enabled_(requests_per_minute > 0) {
    if (!clock_) {
        clock_ = [] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
                .count();
        };
    }
    last_ = clock_();
}

bool RateLimiter::try_acquire() {
    if (!enabled_) return true;
    std::lock_guard lock(mutex_);
    double now = clock_();
    tokens_ = std::min(capacity_, tokens_ + (now - last_) * refill_per_second_);
    last_ = now;
    if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return true;
    }
    return false;
}

void RateLimiter::acquire() {
    while (!try_acquire()) {
        util::throw_if_interrupted();
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
}

Gateway::Gateway(GatewayOptions options)
    : options_(std::move(options)), cache_(options_.cache_dir) {}

void Gateway::register_chat_provider(std::shared_ptr<ChatProvider> provider) {
    std::lock_guard lock(mutex_);
    chat_providers_[provider->id()] = std::move(provider);
}

void Gateway::set_search_provider(std::shared_ptr<SearchProvider> provider) {
    std::lock_guard lock(mutex_);
    search_provider_ = std::move(provider);
}

void Gateway::set_page_provider(std::shared_ptr<PageProvider> provider) {
    std::lock_guard lock(mutex_);
    page_provider_ = std::move(provider);
}

ChatProvider& Gateway::chat_provider_for(const std::string& provider_id) {
    std::lock_guard lock(mutex_);
    auto it = chat_providers_.find(provider_id);
    if (it == chat_providers_.end()) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "no chat provider registered for '" + provider_id + "'");
    }
    return *it->second;
}

RateLimiter& Gateway::limiter_for(const std::string& provider_id) {
    std::lock_guard lock(mutex_);
    auto it = limiters_.find(provider_id);
    if (it == limiters_.end()) {
        it = limiters_
                 .emplace(provider_id,
                          std::make_unique<RateLimiter>(options_.requests_per_minute))
                 .first;
    }
    return *it->second;
}

std::string Gateway::chat_cache_key(const ModelProfile& profile,
                                    const std::vector<Message>& messages) {
    json canonical{{"kind", "chat"},
                   {"provider", profile.provider_id},
                   {"model", profile.model_name},
                   {"temperature", profile.temperature},
                   {"max_new_tokens", profile.max_new_tokens},
                   {"seed", profile.seed.has_value() ? json(*profile.seed) : json(nullptr)}};
    json msgs = json::array();
    for (const Message& m : messages) {
        msgs.push_back(json::array({std::string(role_name(m.role)), m.text}));
    }
    canonical["messages"] = std::move(msgs);
    return util::sha256_hex(jsonio::canonical(canonical));
}

std::string Gateway::search_cache_key(const std::string& query, int k) {
    return util::sha256_hex(jsonio::canonical(json{{"kind", "search"}, {"query", query}, {"k", k}}));
}

std::string Gateway::page_cache_key(const std::string& url) {
    return util::sha256_hex(jsonio::canonical(json{{"kind", "page"}, {"url", url}}));
}

std::string Gateway::wiki_cache_key(const std::string& title) {
    return util::sha256_hex(jsonio::canonical(json{{"kind", "page"}, {"wiki_title", title}}));
}

ChatExchange Gateway::complete(const ModelProfile& profile, const std::vector<Message>& messages) {
    util::throw_if_interrupted();
    profile.validate();
    if (messages.empty()) throw Error(ErrorCode::Precondition, "chat: empty message list");
    if (messages.front().role != Role::system && messages.front().role != Role::user) {
        throw Error(ErrorCode::Precondition, "chat: first message must be system or user");
    }
    for (const Message& m : messages) {
        if (m.text.empty()) throw Error(ErrorCode::Precondition, "chat: empty message text");
    }
    size_t prompt_bytes = 0;
    for (const Message& m : messages) prompt_bytes += m.text.size();
    // Crude 4-bytes-per-token estimate guards the context window.
    if (static_cast<long>(prompt_bytes / 4) > profile.max_context) {
        throw Error(ErrorCode::BudgetExceeded,
                    "chat: estimated prompt tokens exceed max_context " +
                        std::to_string(profile.max_context));
    }

    ChatExchange ex;
    ex.messages = messages;
    ex.profile = profile;
    std::string key = chat_cache_key(profile, messages);

    if (auto cached = cache_.get("chat", key)) {
        ex.response_text = *cached;
        ex.from_cache = true;
        if (auto meta = cache_.get_meta("chat", key)) {
            ex.usage.prompt_tokens = meta->value("prompt_tokens", 0L);
            ex.usage.completion_tokens = meta->value("completion_tokens", 0L);
        }
        return ex;
    }
    if (options_.cache_only) {
        throw Error(ErrorCode::CacheMiss, "chat request not in cache: " + key, key);
    }

    ChatProvider& provider = chat_provider_for(profile.provider_id);
    limiter_for(profile.provider_id).acquire();
    auto start = std::chrono::steady_clock::now();
    std::string text = provider.complete(profile, messages, ex.usage);
    ex.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);
    if (text.empty()) {
        throw Error(ErrorCode::ProviderUnavailable,
                    "provider '" + profile.provider_id + "' returned an empty response",
                    "empty_response");
    }
    ex.response_text = std::move(text);
    cache_.put("chat", key, ex.response_text,
               json{{"model", profile.model_name},
                    {"provider", profile.provider_id},
                    {"prompt_tokens", ex.usage.prompt_tokens},
                    {"completion_tokens", ex.usage.completion_tokens}});
    return ex;
}

std::vector<SearchHit> Gateway::web_search(const std::string& query, std::optional<int> k_opt) {
    util::throw_if_interrupted();
    int k = k_opt.value_or(options_.default_search_k);
    if (k < 1) throw Error(ErrorCode::Precondition, "web_search: k < 1");
    std::string key = search_cache_key(query, k);

    json hits_json;
    if (auto cached = cache_.get("search", key)) {
        hits_json = jsonio::parse(*cached, "cached search payload");
    } else {
        if (options_.cache_only) {
            throw Error(ErrorCode::CacheMiss, "search request not in cache: " + key, key);
        }
        std::shared_ptr<SearchProvider> provider;
        {
            std::lock_guard lock(mutex_);
            provider = search_provider_;
        }
        if (!provider) throw Error(ErrorCode::ProviderUnavailable, "no search provider registered");
        limiter_for("search").acquire();
        std::vector<SearchHit> hits = provider->search(query, k);
        if (static_cast<int>(hits.size()) > k) hits.resize(static_cast<size_t>(k));
        hits_json = json::array();
        for (size_t i = 0; i < hits.size(); ++i) {
            hits[i].rank = static_cast<int>(i) + 1;
            hits_json.push_back(hits[i].to_json());
        }
        cache_.put("search", key, jsonio::canonical(hits_json), json{{"query", query}, {"k", k}});
    }

    std::vector<SearchHit> out;
    for (const json& h : hits_json) out.push_back(SearchHit::from_json(h));
    return out;
}

PageCapture Gateway::fetch_page(const std::string& url) {
    util::throw_if_interrupted();
    if (url.empty()) throw Error(ErrorCode::Precondition, "fetch_page: empty url");
    std::string key = page_cache_key(url);

    PageCapture capture;
    capture.url = url;
    if (auto cached = cache_.get("page", key)) {
        capture.text = *cached;
        if (auto meta = cache_.get_meta("page", key)) {
            capture.truncated = meta->value("truncated", false);
            capture.attempt_count = meta->value("attempt_count", 1);
            capture.fetched_at = meta->value("created_at", "");
        }
        return capture;
    }
    if (options_.cache_only) {
        throw Error(ErrorCode::CacheMiss, "page request not in cache: " + key, key);
    }

    std::shared_ptr<PageProvider> provider;
    {
        std::lock_guard lock(mutex_);
        provider = page_provider_;
    }
    if (!provider) throw Error(ErrorCode::ProviderUnavailable, "no page provider registered");

    std::string text;
    int attempt = 0;
    while (true) {
        ++attempt;
        util::throw_if_interrupted();
        limiter_for("page").acquire();
        try {
            text = provider->fetch(url);
            break;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::FetchFailed || attempt >= options_.fetch_max_attempts) {
                if (e.code() == ErrorCode::FetchFailed) {
                    throw Error(ErrorCode::FetchFailed,
                                "fetch failed after " + std::to_string(attempt) + " attempts: " +
                                    url + " (" + e.what() + ")");
                }
                throw;
            }
            std::this_thread::sleep_for(
                std::chrono::milliseconds(options_.fetch_backoff_ms * attempt));
        }
    }

    capture.attempt_count = attempt;
    capture.truncated = static_cast<long>(text.size()) > options_.page_byte_budget;
    if (capture.truncated) text.resize(static_cast<size_t>(options_.page_byte_budget));
    capture.text = std::move(text);
    capture.fetched_at = util::iso8601_utc_now();
    cache_.put("page", key, capture.text,
               json{{"url", url},
                    {"truncated", capture.truncated},
                    {"attempt_count", capture.attempt_count}});
    return capture;
}

PageCapture Gateway::wiki_page(const std::string& title) {
    util::throw_if_interrupted();
    if (title.empty()) throw Error(ErrorCode::Precondition, "wiki_page: empty title");
    std::string key = wiki_cache_key(title);

    PageCapture capture;
    capture.url = "wiki:" + title;
    if (auto cached = cache_.get("page", key)) {
        capture.text = *cached;
        if (auto meta = cache_.get_meta("page", key)) {
            capture.truncated = meta->value("truncated", false);
            capture.attempt_count = meta->value("attempt_count", 1);
            capture.fetched_at = meta->value("created_at", "");
        }
        return capture;
    }
    if (options_.cache_only) {
        throw Error(ErrorCode::CacheMiss, "wiki request not in cache: " + key, key);
    }

    std::shared_ptr<PageProvider> provider;
    {
        std::lock_guard lock(mutex_);
        provider = page_provider_;
    }
    if (!provider) throw Error(ErrorCode::ProviderUnavailable, "no page provider registered");
    limiter_for("page").acquire();
    std::string text = provider->wiki_extract(title);

    capture.truncated = static_cast<long>(text.size()) > options_.page_byte_budget;
    if (capture.truncated) text.resize(static_cast<size_t>(options_.page_byte_budget));
    capture.text = std::move(text);
    capture.attempt_count = 1;
    capture.fetched_at = util::iso8601_utc_now();
    cache_.put("page", key, capture.text,
               json{{"wiki_title", title},
                    {"truncated", capture.truncated},
                    {"attempt_count", capture.attempt_count}});
    return capture;
}

namespace {

std::optional<json> try_parse(const std::string& text) {
    std::string trimmed = util::trim(text);
    if (trimmed.empty()) return std::nullopt;
    json value = json::parse(trimmed, nullptr, false);
    if (value.is_discarded()) return std::nullopt;
    return value;
}

}  // namespace

json extract_tagged_block(const std::string& text, const std::string& tag) {
    std::string open = "<" + tag + ">";
    std::string close = "</" + tag + ">";

    std::vector<size_t> opens;
    for (size_t pos = text.find(open); pos != std::string::npos; pos = text.find(open, pos + 1)) {
        opens.push_back(pos);
    }
    // Innermost first: later opening tags enclose less text, and a model's
    // final block supersedes any echoed examples.
    for (auto it = opens.rbegin(); it != opens.rend(); ++it) {
        size_t begin = *it + open.size();
        size_t end = text.find(close, begin);
        if (end == std::string::npos) continue;
        if (auto parsed = try_parse(text.substr(begin, end - begin))) return *parsed;
    }
    if (opens.empty()) {
        // Markdown code fences are a common fallback shape.
        for (const char* fence : {"```json", "```"}) {
            size_t start = text.find(fence);
            if (start == std::string::npos) continue;
            start += std::string(fence).size();
            size_t end = text.find("```", start);
            if (end == std::string::npos) continue;
            if (auto parsed = try_parse(text.substr(start, end - start))) return *parsed;
        }
        if (auto parsed = try_parse(text)) return *parsed;
    }
    throw Error(ErrorCode::MalformedOutput,
                "no parseable <" + tag + "> JSON block found in model output");
}

}  // namespace dre::gateway
