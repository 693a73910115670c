#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vpg/train/trainer.hpp"

namespace vpg::train {

/// Header epoch,stage,loss,acc_final,acc_loc,acc_vqa,err_program,err_module,err_other,seconds
/// and one line per row, reals with six decimals.
std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> metrics_from_csv(std::string_view text);
nlohmann::ordered_json metrics_json(const std::vector<MetricsRow>& rows);

/// IoError naming the path.
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace vpg::train
