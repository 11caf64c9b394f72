#pragma once

// Shared scaffolding for the unit suites: throwaway directories, a ready
// profile, and handler-wired gateways.

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dre/gateway.hpp"
#include "dre/providers.hpp"

namespace testsupport {

// Unique directory under the system temp root, removed on destruction.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        auto base = std::filesystem::temp_directory_path();
        path = base / ("dre-test-" + std::to_string(rd()) + "-" +
                       std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& leaf) const { return path / leaf; }
};

inline dre::gateway::ModelProfile mock_profile() {
    dre::gateway::ModelProfile p;
    p.provider_id = "mock";
    p.model_name = "mock-model";
    p.temperature = 0.0;
    p.max_new_tokens = 4096;
    p.seed = 7;
    p.max_context = 1'000'000;
    return p;
}

// Gateway with a handler-backed chat provider and scriptable search/pages.
// Retries are immediate so failure-path tests stay fast.
struct MockRig {
    std::unique_ptr<dre::gateway::Gateway> gw;
    std::shared_ptr<dre::providers::HandlerChatProvider> chat;

    MockRig(const std::filesystem::path& cache_dir,
            dre::providers::HandlerChatProvider::Handler handler,
            nlohmann::json search_script = nlohmann::json::object(),
            nlohmann::json pages = nlohmann::json::object(),
            nlohmann::json wiki = nlohmann::json::object()) {
        dre::gateway::GatewayOptions options;
        options.cache_dir = cache_dir;
        options.fetch_backoff_ms = 0;
        gw = std::make_unique<dre::gateway::Gateway>(options);
        chat = std::make_shared<dre::providers::HandlerChatProvider>("mock", std::move(handler));
        gw->register_chat_provider(chat);
        gw->set_search_provider(
            std::make_shared<dre::providers::MockSearchProvider>(std::move(search_script)));
        gw->set_page_provider(std::make_shared<dre::providers::MockPageProvider>(
            std::move(pages), std::move(wiki)));
    }
};

inline std::string last_user_text(const std::vector<dre::gateway::Message>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == dre::gateway::Role::user) return it->text;
    }
    return {};
}

inline std::string all_text(const std::vector<dre::gateway::Message>& messages) {
    std::string out;
    for (const auto& m : messages) {
        out += m.text;
        out += '\n';
    }
    return out;
}

}  // namespace testsupport
