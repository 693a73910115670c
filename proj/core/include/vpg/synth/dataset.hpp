#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpg/synth/generator.hpp"

namespace vpg::synth {

inline constexpr std::string_view kCaseSchema = "vpg-case/1";

nlohmann::ordered_json to_json(const CaseRecord& record);
/// Throws InvalidData on a missing field, wrong schema or invalid scene.
CaseRecord case_from_json(const nlohmann::ordered_json& j);

/// One compact JSON object per line.
std::string to_jsonl(const std::vector<CaseRecord>& cases);
std::vector<CaseRecord> from_jsonl(std::string_view text);

/// IoError names the path; InvalidData names the path and line.
void write_dataset(const std::filesystem::path& path, const std::vector<CaseRecord>& cases);
std::vector<CaseRecord> read_dataset(const std::filesystem::path& path);

}  // namespace vpg::synth
