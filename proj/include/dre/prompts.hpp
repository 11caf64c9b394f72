#pragma once

#include <string>

#include <json.hpp>

namespace dre::prompts {

using nlohmann::json;

// Task construction
std::string persona_generation(const std::string& domain, int n);
std::string task_generation(const json& persona, int m);
std::string task_qualification(const std::string& query, const std::string& persona_background,
                               const std::string& key_challenges);
std::string baseline_answer(const std::string& query, const std::string& persona_background);
std::string baseline_assessment(const std::string& query, const std::string& key_challenges,
                                const std::string& persona_background,
                                const std::string& baseline_answer);

// Report quality rubric
std::string dimension_generation(const std::string& task_prompt);
std::string weight_assignment(const std::string& task_prompt, const json& additional_dimensions);
std::string criteria_generation(const std::string& task_prompt, int num_dimensions,
                                const json& all_dimensions, const std::string& dimension_name);
std::string dimension_scoring(const std::string& task_prompt, const std::string& report,
                              const json& criteria_of_one_dimension);

// Fact checking
std::string report_segmentation(const std::string& report);
std::string agent_system(const std::string& formatted_date, int max_tool_calls_per_turn);
std::string verification_task(const std::string& user_query, const std::string& part);
std::string summary_request();

}  // namespace dre::prompts
