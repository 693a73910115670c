#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vpg/diff/tape.hpp"

namespace vpg::diff {

/// A named, row-major block of trainable reals.
struct Tensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor&) const = default;
};

/// Registry of parameter tensors (the θ_loc and θ_vqa families live here under
/// "loc." and "vqa." prefixes). Shapes are fixed at registration.
class ParamStore {
 public:
  static constexpr int kFormatVersion = 1;

  /// Registers a tensor filled with `fill`; returns its index. Re-registering
  /// an existing name with the same shape returns the existing index.
  std::size_t add(std::string name, std::vector<std::size_t> shape, double fill = 0.0);

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  const Tensor& tensor(std::size_t i) const { return tensors_[i]; }
  Tensor& tensor(std::size_t i) { return tensors_[i]; }
  std::span<const Tensor> tensors() const { return tensors_; }
  std::size_t size() const { return tensors_.size(); }
  std::size_t parameter_count() const;

  /// Fills every entry with uniform noise in [-scale, scale].
  void randomize(std::uint64_t seed, double scale);

  nlohmann::ordered_json to_json() const;
  static ParamStore from_json(const nlohmann::ordered_json& j);
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

  bool operator==(const ParamStore&) const = default;

 private:
  std::vector<Tensor> tensors_;
};

/// Dense gradient aligned with a ParamStore's tensors.
struct Gradients {
  std::vector<std::vector<double>> per_tensor;

  static Gradients zeros_like(const ParamStore& store);
  void add(const Gradients& other, double scale = 1.0);
  void scale(double factor);
  double squared_norm() const;
  bool operator==(const Gradients&) const = default;
};

/// Gradient over the coordinates a single forward pass actually touched.
struct SparseGradient {
  struct Entry {
    std::size_t tensor;
    std::size_t index;
    double value;
  };
  std::vector<Entry> entries;

  void accumulate_into(Gradients& dense, double scale = 1.0) const;
};

/// Exposes a ParamStore to one forward pass. With a tape, each parameter
/// coordinate becomes a leaf the first time it is read; without one, reads
/// return constants and nothing is recorded.
class ParamBinding {
 public:
  struct Term {
    std::size_t tensor;
    std::size_t index;
    double coeff;
  };

  explicit ParamBinding(const ParamStore& store, Tape* tape = nullptr);

  const ParamStore& store() const { return *store_; }
  Tape* tape() const { return tape_; }

  Scalar get(std::size_t tensor, std::size_t index);
  /// Sum of coeff * parameter as a single fused node.
  Scalar linear(std::span<const Term> terms);

  /// Coordinates read so far, in first-read order.
  const std::vector<std::pair<std::size_t, std::size_t>>& touched() const { return touched_; }

  /// Reverse sweep from `loss`; unreached parameters are simply absent.
  SparseGradient gradient(const Scalar& loss) const;
  Gradients dense_gradient(const Scalar& loss) const;

 private:
  std::int64_t leaf_id(std::size_t tensor, std::size_t index);

  const ParamStore* store_;
  Tape* tape_;
  std::vector<std::vector<std::int64_t>> leaf_ids_;
  std::vector<std::pair<std::size_t, std::size_t>> touched_;
};

}  // namespace vpg::diff
