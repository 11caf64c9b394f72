#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dre/errors.hpp"

namespace dre::util {

std::string sha256_hex(std::string_view data);

// Collapses every whitespace run to a single space and trims the ends.
std::string normalize_whitespace(std::string_view text);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
std::string slugify(std::string_view text);

int count_words(std::string_view text);
// Sentence terminators followed by whitespace or end of text; at least 1 for
// any non-empty text.
int count_sentences(std::string_view text);

std::string iso8601_utc_now();

// Deterministic 64-bit seed from arbitrary bytes (first 8 bytes of SHA-256).
std::uint64_t digest_seed(std::string_view data);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

void request_interrupt();
void clear_interrupt();
bool interrupt_requested();
void throw_if_interrupted();

template <typename T>
struct ItemOutcome {
    std::optional<T> value;
    std::optional<Error> error;
    bool ok() const { return value.has_value(); }
};

// Runs fn over items with at most `workers` threads. Results come back indexed
// by input position regardless of completion order; per-item exceptions are
// captured, never propagated.
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, int workers, Fn fn)
    -> std::vector<ItemOutcome<std::invoke_result_t<Fn, const In&>>> {
    using Out = std::invoke_result_t<Fn, const In&>;
    std::vector<ItemOutcome<Out>> results(items.size());
    if (items.empty()) return results;
    int n = static_cast<int>(items.size());
    int pool = std::max(1, std::min(workers, n));

    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            int i = next.fetch_add(1);
            if (i >= n) break;
            try {
                results[i].value = fn(items[static_cast<size_t>(i)]);
            } catch (const Error& e) {
                results[i].error = e;
            } catch (const std::exception& e) {
                results[i].error = Error(ErrorCode::Internal, e.what());
            }
        }
    };

    if (pool == 1) {
        worker();
        return results;
    }
    std::vector<std::thread> threads;
    threads.reserve(static_cast<size_t>(pool));
    for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& th : threads) th.join();
    return results;
}

}  // namespace dre::util
