#pragma once

#include <filesystem>

#include <json.hpp>

#include "shiftsel/data_model.hpp"

namespace shiftsel {

nlohmann::json report_to_json(const NoiseReport& report);
NoiseReport report_from_json(const nlohmann::json& doc);

/// Writes the report JSON (two-space indent, trailing newline).
void save_report(const NoiseReport& report, const std::filesystem::path& path);
NoiseReport load_report(const std::filesystem::path& path);

/// Serialization shared by every JSON artifact so outputs are byte-stable.
std::string dump_json(const nlohmann::json& doc);

}  // namespace shiftsel
