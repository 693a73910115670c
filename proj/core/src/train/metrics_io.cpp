#include "vpg/train/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "vpg/util/error.hpp"

namespace vpg::train {

namespace {

constexpr const char* kHeader = "epoch,stage,loss,acc_final,acc_loc,acc_vqa,err_program,err_module,err_other,seconds";

}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = std::string(kHeader) + "\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f,%.6f,%zu,%zu,%zu,%.3f\n", r.epoch, r.stage, r.loss,
                  r.acc_final, r.acc_loc, r.acc_vqa, r.err_program, r.err_module, r.err_other, r.seconds);
    out += buf;
  }
  return out;
}

std::vector<MetricsRow> metrics_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw Error(ErrorCode::InvalidData, "not a metrics CSV");
  std::vector<MetricsRow> rows;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    MetricsRow r;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf,%lf,%zu,%zu,%zu,%lf", &r.epoch, &r.stage, &r.loss, &r.acc_final,
                    &r.acc_loc, &r.acc_vqa, &r.err_program, &r.err_module, &r.err_other, &r.seconds) != 10) {
      throw Error(ErrorCode::InvalidData, "metrics CSV line " + std::to_string(n) + " is malformed");
    }
    rows.push_back(r);
  }
  return rows;
}

nlohmann::ordered_json metrics_json(const std::vector<MetricsRow>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"epoch", r.epoch},
                   {"stage", r.stage},
                   {"loss", r.loss},
                   {"acc_final", r.acc_final},
                   {"acc_loc", r.acc_loc},
                   {"acc_vqa", r.acc_vqa},
                   {"err_program", r.err_program},
                   {"err_module", r.err_module},
                   {"err_other", r.err_other},
                   {"skipped", r.skipped},
                   {"seconds", r.seconds}});
  }
  return arr;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace vpg::train
