#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "dre/errors.hpp"

namespace dre::jsonio {

using nlohmann::json;

// nlohmann's default object map keeps keys sorted, so dump() is already a
// canonical serialization; these helpers pin the convention in one place.
std::string canonical(const json& value);
std::string canonical_pretty(const json& value);

json parse(std::string_view text, std::string_view what);
json load_file(const std::filesystem::path& path);
void save_file(const std::filesystem::path& path, const json& value);

// Recursively removes volatile bookkeeping keys so replay comparisons see
// only substantive content.
json strip_volatile(json value);

const json* find_key(const json& object, std::string_view key);

std::string require_string(const json& object, std::string_view key, std::string_view context);
double require_number(const json& object, std::string_view key, std::string_view context);
bool require_bool(const json& object, std::string_view key, std::string_view context);
const json& require_array(const json& object, std::string_view key, std::string_view context);

}  // namespace dre::jsonio
