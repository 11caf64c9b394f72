#include <doctest.h>

#include <atomic>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "dre/errors.hpp"
#include "dre/gateway.hpp"
#include "dre/jsonio.hpp"
#include "dre/providers.hpp"
#include "dre/util.hpp"
#include "support.hpp"

using namespace dre;
using gateway::Gateway;
using gateway::GatewayOptions;
using gateway::Message;
using gateway::ModelProfile;
using gateway::Role;
using nlohmann::json;
using testsupport::MockRig;
using testsupport::TempDir;

namespace {

bool is_hex_digest(const std::string& key) {
    if (key.size() != 64) return false;
    for (char c : key) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    }
    return true;
}

std::vector<Message> simple_messages(const std::string& text) {
    return {{Role::user, text}};
}

}  // namespace

TEST_SUITE("gateway") {

TEST_CASE("chat responses are cached and replayed across gateway instances") {
    TempDir tmp;
    ModelProfile profile = testsupport::mock_profile();
    auto messages = simple_messages("hello there");

    {
        MockRig rig(tmp / "cache", [](const ModelProfile&, const std::vector<Message>&) {
            return std::string("canned answer");
        });
        auto first = rig.gw->complete(profile, messages);
        CHECK(first.response_text == "canned answer");
        CHECK_FALSE(first.from_cache);
        auto second = rig.gw->complete(profile, messages);
        CHECK(second.response_text == "canned answer");
        CHECK(second.from_cache);
        CHECK(rig.chat->call_count() == 1);
    }

    // A fresh gateway over the same directory must answer without touching
    // the provider at all.
    MockRig rig2(tmp / "cache", [](const ModelProfile&, const std::vector<Message>&) -> std::string {
        throw Error(ErrorCode::ProviderUnavailable, "must not be called");
    });
    auto replayed = rig2.gw->complete(profile, messages);
    CHECK(replayed.response_text == "canned answer");
    CHECK(replayed.from_cache);
    CHECK(rig2.chat->call_count() == 0);
}

TEST_CASE("chat cache keys are content digests sensitive to every input part") {
    ModelProfile profile = testsupport::mock_profile();
    auto messages = simple_messages("base text");

    std::string base = Gateway::chat_cache_key(profile, messages);
    CHECK(is_hex_digest(base));
    // Same inputs, same key; a separately built but equal request matches.
    ModelProfile copy = profile;
    CHECK(Gateway::chat_cache_key(copy, simple_messages("base text")) == base);

    std::set<std::string> keys{base};
    auto expect_new_key = [&](const ModelProfile& p, const std::vector<Message>& m) {
        std::string key = Gateway::chat_cache_key(p, m);
        CHECK(is_hex_digest(key));
        CHECK(keys.insert(key).second);
    };

    expect_new_key(profile, simple_messages("base text "));
    expect_new_key(profile, simple_messages("Base text"));
    expect_new_key(profile, {{Role::assistant, "base text"}});
    expect_new_key(profile, {{Role::user, "base text"}, {Role::user, ""}});

    ModelProfile variant = profile;
    variant.model_name = "other-model";
    expect_new_key(variant, messages);
    variant = profile;
    variant.temperature = profile.temperature + 0.5;
    expect_new_key(variant, messages);
    variant = profile;
    variant.seed = 12345;
    expect_new_key(variant, messages);
    variant = profile;
    variant.seed.reset();
    expect_new_key(variant, messages);

    // Message order matters.
    std::vector<Message> ab{{Role::user, "a"}, {Role::assistant, "b"}};
    std::vector<Message> ba{{Role::assistant, "b"}, {Role::user, "a"}};
    CHECK(Gateway::chat_cache_key(profile, ab) != Gateway::chat_cache_key(profile, ba));

    // Concatenation boundaries must not alias: ["ab",""] vs ["a","b"].
    std::vector<Message> two_a{{Role::user, "ab"}, {Role::user, ""}};
    std::vector<Message> two_b{{Role::user, "a"}, {Role::user, "b"}};
    CHECK(Gateway::chat_cache_key(profile, two_a) != Gateway::chat_cache_key(profile, two_b));
}

TEST_CASE("search respects the requested k and caches empty result lists") {
    TempDir tmp;
    json script = {{"solar output 2024",
                    json::array({{{"title", "A"}, {"url", "https://a"}, {"snippet", "sa"}},
                                 {{"title", "B"}, {"url", "https://b"}, {"snippet", "sb"}},
                                 {{"title", "C"}, {"url", "https://c"}, {"snippet", "sc"}}})},
                   {"nothing here", json::array()}};
    MockRig rig(
        tmp / "cache",
        [](const ModelProfile&, const std::vector<Message>&) { return std::string("{}"); },
        script);

    auto hits = rig.gw->web_search("solar output 2024", 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].rank == 1);
    CHECK(hits[1].rank == 2);
    CHECK(hits[0].title == "A");

    auto empty = rig.gw->web_search("nothing here");
    CHECK(empty.empty());
    // The empty list must be a cache hit on replay, not a provider call.
    GatewayOptions replay_options;
    replay_options.cache_dir = tmp / "cache";
    replay_options.cache_only = true;
    Gateway replay(replay_options);
    CHECK(replay.web_search("nothing here").empty());
    CHECK(replay.web_search("solar output 2024", 2).size() == 2);
    CHECK_THROWS_AS(replay.web_search("never asked"), Error);
}

TEST_CASE("page fetches retry to the attempt limit and then fail") {
    TempDir tmp;
    json pages = {{"https://flaky.example", {{"fail_times", 4}, {"text", "finally"}}},
                  {"https://dead.example", {{"fail_times", -1}, {"text", "never"}}}};
    MockRig rig(
        tmp / "cache",
        [](const ModelProfile&, const std::vector<Message>&) { return std::string("{}"); },
        json::object(), pages);

    auto capture = rig.gw->fetch_page("https://flaky.example");
    CHECK(capture.text == "finally");
    CHECK(capture.attempt_count == 5);
    CHECK_FALSE(capture.truncated);

    try {
        rig.gw->fetch_page("https://dead.example");
        FAIL("expected FetchFailed");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::FetchFailed);
    }
}

TEST_CASE("page text is clipped to the byte budget") {
    TempDir tmp;
    std::string body(5000, 'x');
    json pages = {{"https://big.example", body}};
    GatewayOptions options;
    options.cache_dir = tmp / "cache";
    options.page_byte_budget = 120;
    options.fetch_backoff_ms = 0;
    Gateway gw(options);
    gw.set_page_provider(std::make_shared<providers::MockPageProvider>(pages, json::object()));

    auto capture = gw.fetch_page("https://big.example");
    CHECK(capture.text.size() == 120);
    CHECK(capture.truncated);

    json small_pages = {{"https://small.example", "tiny"}};
    Gateway gw2(options);
    gw2.set_page_provider(std::make_shared<providers::MockPageProvider>(small_pages, json::object()));
    auto small = gw2.fetch_page("https://small.example");
    CHECK(small.text == "tiny");
    CHECK_FALSE(small.truncated);
}

TEST_CASE("wiki lookups cache by title and misses raise PageNotFound") {
    TempDir tmp;
    json wiki = {{"Photosynthesis", "Light becomes sugar."}};
    MockRig rig(
        tmp / "cache",
        [](const ModelProfile&, const std::vector<Message>&) { return std::string("{}"); },
        json::object(), json::object(), wiki);

    auto page = rig.gw->wiki_page("Photosynthesis");
    CHECK(page.text == "Light becomes sugar.");

    try {
        rig.gw->wiki_page("No Such Article");
        FAIL("expected PageNotFound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PageNotFound);
    }

    GatewayOptions replay_options;
    replay_options.cache_dir = tmp / "cache";
    replay_options.cache_only = true;
    Gateway replay(replay_options);
    CHECK(replay.wiki_page("Photosynthesis").text == "Light becomes sugar.");
    CHECK(Gateway::wiki_cache_key("Photosynthesis") != Gateway::page_cache_key("Photosynthesis"));
}

TEST_CASE("tagged block extraction peels wrappers and rejects junk") {
    json direct = gateway::extract_tagged_block(R"({"a": 1})", "json_output");
    CHECK(direct["a"] == 1);

    json tagged = gateway::extract_tagged_block(
        "Sure, here you go:\n<json_output>\n{\"a\": [1, 2]}\n</json_output>\nDone.", "json_output");
    CHECK(tagged["a"].size() == 2);

    // The innermost (last-opened) block wins over an echoed example.
    json innermost = gateway::extract_tagged_block(
        "<json_output>example: <json_output>{\"pick\": \"me\"}</json_output></json_output>",
        "json_output");
    CHECK(innermost["pick"] == "me");

    json fenced = gateway::extract_tagged_block("```json\n{\"b\": true}\n```", "json_output");
    CHECK(fenced["b"] == true);

    try {
        gateway::extract_tagged_block("no structure at all", "json_output");
        FAIL("expected MalformedOutput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedOutput);
    }
    try {
        gateway::extract_tagged_block("<json_output>{broken</json_output>", "json_output");
        FAIL("expected MalformedOutput");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedOutput);
    }
}

TEST_CASE("prompts that overflow the context window raise BudgetExceeded") {
    TempDir tmp;
    MockRig rig(tmp / "cache", [](const ModelProfile&, const std::vector<Message>&) {
        return std::string("ok");
    });
    ModelProfile tiny = testsupport::mock_profile();
    tiny.max_context = 10;

    try {
        rig.gw->complete(tiny, simple_messages(std::string(500, 'q')));
        FAIL("expected BudgetExceeded");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BudgetExceeded);
    }
    CHECK(rig.chat->call_count() == 0);

    // A prompt inside the window goes through.
    CHECK(rig.gw->complete(tiny, simple_messages("hi")).response_text == "ok");
}

TEST_CASE("rate limiter paces token grants against an injected clock") {
    double now = 0.0;
    gateway::RateLimiter limiter(60.0, [&]() { return now; });

    CHECK(limiter.try_acquire());
    CHECK_FALSE(limiter.try_acquire());
    now = 0.5;
    CHECK_FALSE(limiter.try_acquire());
    now = 1.0;
    CHECK(limiter.try_acquire());
    CHECK_FALSE(limiter.try_acquire());
    // Long idle refills at most one slot at this rate.
    now = 100.0;
    CHECK(limiter.try_acquire());
    CHECK_FALSE(limiter.try_acquire());

    // Disabled limiter never blocks.
    gateway::RateLimiter open_limiter(0.0, [&]() { return now; });
    for (int i = 0; i < 50; ++i) CHECK(open_limiter.try_acquire());
}

TEST_CASE("malformed output earns one corrective retry with a fresh cache key") {
    TempDir tmp;
    std::atomic<int> calls{0};
    std::vector<Message> second_request;
    MockRig rig(tmp / "cache",
                [&](const ModelProfile&, const std::vector<Message>& messages) -> std::string {
                    int n = ++calls;
                    if (n == 1) return "utter nonsense";
                    second_request = messages;
                    return R"({"value": 41})";
                });
    ModelProfile profile = testsupport::mock_profile();

    auto parse = [](const std::string& text) {
        return gateway::extract_tagged_block(text, "json_output")["value"].get<int>();
    };
    int value = gateway::complete_with_retry(*rig.gw, profile, simple_messages("compute"), parse);
    CHECK(value == 41);
    CHECK(calls.load() == 2);
    // The retry carries the failed turn plus a corrective instruction.
    REQUIRE(second_request.size() == 3);
    CHECK(second_request[1].role == Role::assistant);
    CHECK(second_request[1].text == "utter nonsense");
    CHECK(second_request[2].role == Role::user);
    CHECK(second_request[2].text.find("could not be parsed") != std::string::npos);

    // A parse failure on the retry propagates as-is.
    std::atomic<int> bad_calls{0};
    MockRig always_bad(tmp / "cache2",
                       [&](const ModelProfile&, const std::vector<Message>&) -> std::string {
                           ++bad_calls;
                           return "still nonsense";
                       });
    CHECK_THROWS_AS(
        gateway::complete_with_retry(*always_bad.gw, profile, simple_messages("compute"), parse),
        Error);
    CHECK(bad_calls.load() == 2);
}

TEST_CASE("cache_only gateways refuse to call providers") {
    TempDir tmp;
    GatewayOptions options;
    options.cache_dir = tmp / "cache";
    options.cache_only = true;
    Gateway gw(options);
    gw.register_chat_provider(std::make_shared<providers::HandlerChatProvider>(
        "mock", [](const ModelProfile&, const std::vector<Message>&) -> std::string {
            throw Error(ErrorCode::Internal, "provider must stay untouched in replay");
        }));

    try {
        gw.complete(testsupport::mock_profile(), simple_messages("anything"));
        FAIL("expected CacheMiss");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CacheMiss);
    }
}

TEST_CASE("disk cache stores payloads atomically with metadata sidecars") {
    TempDir tmp;
    gateway::DiskCache cache(tmp / "cache");
    std::string key = util::sha256_hex("some request");
    CHECK_FALSE(cache.contains("chat", key));
    cache.put("chat", key, "payload bytes", json{{"kind", "chat"}});
    CHECK(cache.contains("chat", key));
    CHECK(cache.get("chat", key).value() == "payload bytes");
    auto meta = cache.get_meta("chat", key);
    REQUIRE(meta.has_value());
    CHECK((*meta)["kind"] == "chat");
    // Unknown entries stay absent, across kinds too.
    CHECK_FALSE(cache.get("search", key).has_value());
}

}  // TEST_SUITE
