#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace vpg {

/// A grid cell; scenes are small grids and every box is one cell.
struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Answer token such as "yes", "red" or "True".
struct Token {
  std::string text;
  auto operator<=>(const Token&) const = default;
};

/// Outcome of a LOC call: detected boxes, highest score first. Empty means
/// nothing was found.
struct Detection {
  int image = 0;
  std::vector<Cell> boxes;
  auto operator<=>(const Detection&) const = default;
};

/// Half-open rectangle [row0, row1) x [col0, col1) of one input image.
struct Region {
  int image = 0;
  int row0 = 0;
  int col0 = 0;
  int row1 = 0;
  int col1 = 0;

  int rows() const { return row1 - row0; }
  int cols() const { return col1 - col0; }
  bool contains(Cell c) const { return c.row >= row0 && c.row < row1 && c.col >= col0 && c.col < col1; }
  auto operator<=>(const Region&) const = default;
};

/// Runtime value of a program variable.
class Value {
 public:
  using Storage = std::variant<Token, std::int64_t, Detection, Region>;

  Value() : data_(Token{}) {}
  Value(Token t) : data_(std::move(t)) {}           // NOLINT
  Value(std::int64_t i) : data_(i) {}               // NOLINT
  Value(int i) : data_(static_cast<std::int64_t>(i)) {}  // NOLINT
  Value(Detection d) : data_(std::move(d)) {}       // NOLINT
  Value(Region r) : data_(r) {}                     // NOLINT

  static Value token(std::string text) { return Value(Token{std::move(text)}); }
  /// "3" becomes Int(3); anything else a Token. Labels and answer
  /// vocabularies go through this so numeric answers compare as integers.
  static Value from_label(std::string_view text);

  bool is_token() const { return std::holds_alternative<Token>(data_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_detection() const { return std::holds_alternative<Detection>(data_); }
  bool is_region() const { return std::holds_alternative<Region>(data_); }

  const std::string& as_token() const { return std::get<Token>(data_).text; }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  const Detection& as_detection() const { return std::get<Detection>(data_); }
  const Region& as_region() const { return std::get<Region>(data_); }
  const Storage& storage() const { return data_; }

  auto operator<=>(const Value&) const = default;
  bool operator==(const Value&) const = default;

 private:
  Storage data_;
};

inline const Value kTrue = Value::token("True");
inline const Value kFalse = Value::token("False");

std::string to_string(const Value& v);
nlohmann::ordered_json to_json(const Value& v);
Value value_from_json(const nlohmann::ordered_json& j);

}  // namespace vpg
