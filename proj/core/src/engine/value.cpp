#include "vpg/engine/value.hpp"

#include <charconv>

#include "vpg/util/error.hpp"

namespace vpg {

Value Value::from_label(std::string_view text) {
  if (!text.empty() && text.size() < 19) {
    std::int64_t n = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec == std::errc() && ptr == last) return Value(n);
  }
  return Value::token(std::string(text));
}

std::string to_string(const Value& v) {
  struct Visitor {
    std::string operator()(const Token& t) const { return t.text; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(const Detection& d) const {
      std::string s = "{";
      for (std::size_t i = 0; i < d.boxes.size(); ++i) {
        if (i) s += ",";
        s += "(" + std::to_string(d.boxes[i].row) + "," + std::to_string(d.boxes[i].col) + ")";
      }
      return s + "}@" + std::to_string(d.image);
    }
    std::string operator()(const Region& r) const {
      return "[" + std::to_string(r.row0) + ":" + std::to_string(r.row1) + "," + std::to_string(r.col0) + ":" +
             std::to_string(r.col1) + "]@" + std::to_string(r.image);
    }
  };
  return std::visit(Visitor{}, v.storage());
}

nlohmann::ordered_json to_json(const Value& v) {
  struct Visitor {
    nlohmann::ordered_json operator()(const Token& t) const { return t.text; }
    nlohmann::ordered_json operator()(std::int64_t i) const { return i; }
    nlohmann::ordered_json operator()(const Detection& d) const {
      nlohmann::ordered_json j;
      j["image"] = d.image;
      auto& boxes = j["boxes"] = nlohmann::ordered_json::array();
      for (const auto& c : d.boxes) boxes.push_back({c.row, c.col});
      return j;
    }
    nlohmann::ordered_json operator()(const Region& r) const {
      nlohmann::ordered_json j;
      j["image"] = r.image;
      j["rect"] = {r.row0, r.col0, r.row1, r.col1};
      return j;
    }
  };
  return std::visit(Visitor{}, v.storage());
}

Value value_from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.is_string()) return Value::token(j.get<std::string>());
    if (j.is_number_integer()) return Value(j.get<std::int64_t>());
    if (j.is_object() && j.contains("boxes")) {
      Detection d;
      d.image = j.at("image").get<int>();
      for (const auto& b : j.at("boxes")) d.boxes.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
      return Value(std::move(d));
    }
    if (j.is_object() && j.contains("rect")) {
      const auto& r = j.at("rect");
      return Value(Region{j.at("image").get<int>(), r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(),
                          r.at(3).get<int>()});
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidData, std::string("bad value: ") + ex.what());
  }
  throw Error(ErrorCode::InvalidData, "bad value: " + j.dump());
}

}  // namespace vpg
