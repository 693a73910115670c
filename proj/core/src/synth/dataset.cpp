#include "vpg/synth/dataset.hpp"

#include <fstream>
#include <sstream>

#include "vpg/util/error.hpp"

namespace vpg::synth {

nlohmann::ordered_json to_json(const CaseRecord& r) {
  return {{"schema", kCaseSchema},
          {"id", r.id},
          {"images", to_json(r.world)},
          {"program", r.program_text},
          {"question", r.question},
          {"label", r.label},
          {"meta",
           {{"num_visual_steps", r.meta.num_visual_steps},
            {"stage", r.meta.stage},
            {"template_id", r.meta.template_id},
            {"seed", r.meta.seed}}}};
}

CaseRecord case_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("schema").get<std::string>() != kCaseSchema) {
      throw Error(ErrorCode::InvalidData, "unsupported schema '" + j.at("schema").get<std::string>() + "'");
    }
    CaseRecord r;
    r.id = j.at("id").get<std::string>();
    r.world = world_from_json(j.at("images"));
    for (const auto& s : r.world.scenes) s.validate();
    r.program_text = j.at("program").get<std::string>();
    r.question = j.value("question", "");
    r.label = j.at("label").get<std::string>();
    const auto& m = j.at("meta");
    r.meta.num_visual_steps = m.at("num_visual_steps").get<int>();
    r.meta.stage = m.at("stage").get<int>();
    r.meta.template_id = m.at("template_id").get<std::string>();
    r.meta.seed = m.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidData, std::string("malformed case: ") + e.what());
  }
}

std::string to_jsonl(const std::vector<CaseRecord>& cases) {
  std::string out;
  for (const auto& c : cases) out += to_json(c).dump() + "\n";
  return out;
}

namespace {

std::vector<CaseRecord> parse_lines(std::istream& in, const std::string& where) {
  std::vector<CaseRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(case_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidData, where + ":" + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), where + ":" + std::to_string(n) + ": " + e.detail());
    }
  }
  return out;
}

}  // namespace

std::vector<CaseRecord> from_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_lines(in, "<input>");
}

void write_dataset(const std::filesystem::path& path, const std::vector<CaseRecord>& cases) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_jsonl(cases);
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<CaseRecord> read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return parse_lines(in, path.string());
}

}  // namespace vpg::synth
