#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

#include "regime_design/model.hpp"

namespace regime_design {

inline constexpr const char* kInstanceFormat = "regime-design/instance";
inline constexpr const char* kPlanFormat = "regime-design/plan";
inline constexpr int kFormatVersion = 1;

[[nodiscard]] nlohmann::json to_json(const Instance& instance);
[[nodiscard]] Instance instance_from_json(const nlohmann::json& doc,
                                          ValidationOptions options = {});

[[nodiscard]] nlohmann::json to_json(const Instance& instance, const ServicePlan& plan);
[[nodiscard]] ServicePlan plan_from_json(const nlohmann::json& doc, const Instance& instance);

[[nodiscard]] nlohmann::json to_json(const DesignParams& params);
[[nodiscard]] DesignParams params_from_json(const nlohmann::json& doc);

[[nodiscard]] nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

/// FNV-1a over the canonical dump; stable across runs and platforms.
[[nodiscard]] std::string content_hash(const nlohmann::json& doc);

}  // namespace regime_design
