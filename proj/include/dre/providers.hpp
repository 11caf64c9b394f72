#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dre/gateway.hpp"

namespace dre::providers {

using gateway::ChatProvider;
using gateway::Message;
using gateway::ModelProfile;
using gateway::PageProvider;
using gateway::SearchHit;
using gateway::SearchProvider;
using gateway::TokenUsage;

// Thin handler-backed mock for unit tests.
class HandlerChatProvider : public ChatProvider {
public:
    using Handler = std::function<std::string(const ModelProfile&, const std::vector<Message>&)>;

    HandlerChatProvider(std::string id, Handler handler)
        : id_(std::move(id)), handler_(std::move(handler)) {}

    std::string id() const override { return id_; }
    std::string complete(const ModelProfile& profile, const std::vector<Message>& messages,
                         TokenUsage& usage) override;
    int call_count() const { return calls_; }

private:
    std::string id_;
    Handler handler_;
    std::atomic<int> calls_{0};
};

// Substring-match script: first rule whose `match` occurs in the last user
// message wins; each hit consumes the next entry of `responses` (the last
// entry repeats). Scripts drive failure-path tests and canned pipelines.
//
// Script JSON shape:
//   {"chat": [{"match": "...", "responses": ["...", ...]}, ...],
//    "search": {"<query>": [{"title":..., "url":..., "snippet":...}, ...]},
//    "pages": {"<url>": "text" | {"fail_times": N, "text": "..."}},
//    "wiki": {"<title>": "text"}}
class ScriptedChatProvider : public ChatProvider {
public:
    ScriptedChatProvider(std::string id, nlohmann::json script);

    std::string id() const override { return id_; }
    std::string complete(const ModelProfile& profile, const std::vector<Message>& messages,
                         TokenUsage& usage) override;

private:
    struct Rule {
        std::string match;
        std::vector<std::string> responses;
        size_t next = 0;
    };
    std::string id_;
    std::vector<Rule> rules_;
    std::mutex mutex_;
};

// Deterministic schema-valid generator for hermetic runs: recognizes the
// harness prompt kind from template markers and emits output seeded by the
// request digest. Permissive by design (qualification passes, baselines rate
// poorly) so pipelines retain work.
class AutoMockChatProvider : public ChatProvider {
public:
    explicit AutoMockChatProvider(std::string id = "mock") : id_(std::move(id)) {}

    std::string id() const override { return id_; }
    std::string complete(const ModelProfile& profile, const std::vector<Message>& messages,
                         TokenUsage& usage) override;

private:
    std::string id_;
};

class MockSearchProvider : public SearchProvider {
public:
    explicit MockSearchProvider(nlohmann::json script = nlohmann::json::object());
    std::vector<SearchHit> search(const std::string& query, int k) override;

private:
    nlohmann::json script_;
};

class MockPageProvider : public PageProvider {
public:
    explicit MockPageProvider(nlohmann::json pages = nlohmann::json::object(),
                              nlohmann::json wiki = nlohmann::json::object());
    std::string fetch(const std::string& url) override;
    std::string wiki_extract(const std::string& title) override;
    int attempts_for(const std::string& url) const;

private:
    nlohmann::json pages_;
    nlohmann::json wiki_;
    mutable std::mutex mutex_;
    std::map<std::string, int> attempts_;
};

// OpenAI-style chat completions over HTTPS. Base URL and API key come from
// <PROVIDER>_BASE_URL / <PROVIDER>_API_KEY (provider id upper-cased,
// non-alnum mapped to '_').
class HttpChatProvider : public ChatProvider {
public:
    explicit HttpChatProvider(std::string provider_id);

    std::string id() const override { return id_; }
    std::string complete(const ModelProfile& profile, const std::vector<Message>& messages,
                         TokenUsage& usage) override;

private:
    std::string id_;
    std::string base_url_;
    std::string api_key_;
};

// google.serper.dev backend; needs SERPER_API_KEY.
class SerperSearchProvider : public SearchProvider {
public:
    SerperSearchProvider();
    std::vector<SearchHit> search(const std::string& query, int k) override;

private:
    std::string api_key_;
};

// Plain HTTPS fetch with HTML-to-text reduction plus the Wikipedia extract API.
class HttpPageProvider : public PageProvider {
public:
    std::string fetch(const std::string& url) override;
    std::string wiki_extract(const std::string& title) override;
};

std::string html_to_text(const std::string& html);

// Wires chat/search/page providers into the gateway from a provider spec:
// "live", "mock:auto", or "mock:<script.json>".
void install_providers(gateway::Gateway& gw, const std::string& spec,
                       const std::vector<std::string>& chat_provider_ids);

}  // namespace dre::providers
