#include "vpg/diff/params.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>

#include "vpg/util/error.hpp"
#include "vpg/util/rng.hpp"

namespace vpg::diff {

std::size_t ParamStore::add(std::string name, std::vector<std::size_t> shape, double fill) {
  const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  if (auto existing = find(name)) {
    if (tensors_[*existing].shape != shape) {
      throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' re-registered with a different shape");
    }
    return *existing;
  }
  tensors_.push_back(Tensor{std::move(name), std::move(shape), std::vector<double>(n, fill)});
  return tensors_.size() - 1;
}

std::optional<std::size_t> ParamStore::find(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamStore::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::ShapeMismatch, "no parameter tensor named '" + std::string(name) + "'");
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

void ParamStore::randomize(std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (auto& t : tensors_) {
    for (auto& v : t.values) v = rng.uniform(-scale, scale);
  }
}

nlohmann::ordered_json ParamStore::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = "vpg-params";
  j["version"] = kFormatVersion;
  auto& arr = j["tensors"] = nlohmann::ordered_json::array();
  for (const auto& t : tensors_) {
    nlohmann::ordered_json e;
    e["name"] = t.name;
    e["shape"] = t.shape;
    e["values"] = t.values;
    arr.push_back(std::move(e));
  }
  return j;
}

ParamStore ParamStore::from_json(const nlohmann::ordered_json& j) {
  try {
    if (j.at("format").get<std::string>() != "vpg-params") {
      throw Error(ErrorCode::InvalidData, "not a parameter checkpoint");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::InvalidData, "unsupported checkpoint version " + j.at("version").dump());
    }
    ParamStore store;
    for (const auto& e : j.at("tensors")) {
      auto shape = e.at("shape").get<std::vector<std::size_t>>();
      const auto idx = store.add(e.at("name").get<std::string>(), shape);
      auto values = e.at("values").get<std::vector<double>>();
      if (values.size() != store.tensors_[idx].size()) {
        throw Error(ErrorCode::ShapeMismatch, "tensor '" + store.tensors_[idx].name + "' has wrong value count");
      }
      for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "non-finite parameter in checkpoint");
      }
      store.tensors_[idx].values = std::move(values);
    }
    return store;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidData, std::string("malformed checkpoint: ") + ex.what());
  }
}

void ParamStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  nlohmann::ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::InvalidData, path.string() + ": " + ex.what());
  }
  return from_json(j);
}

Gradients Gradients::zeros_like(const ParamStore& store) {
  Gradients g;
  g.per_tensor.reserve(store.size());
  for (const auto& t : store.tensors()) g.per_tensor.emplace_back(t.size(), 0.0);
  return g;
}

void Gradients::add(const Gradients& other, double scale) {
  if (other.per_tensor.size() != per_tensor.size()) throw Error(ErrorCode::ShapeMismatch, "gradient tensor count");
  for (std::size_t t = 0; t < per_tensor.size(); ++t) {
    if (other.per_tensor[t].size() != per_tensor[t].size()) throw Error(ErrorCode::ShapeMismatch, "gradient size");
    for (std::size_t i = 0; i < per_tensor[t].size(); ++i) per_tensor[t][i] += scale * other.per_tensor[t][i];
  }
}

void Gradients::scale(double factor) {
  for (auto& v : per_tensor) {
    for (auto& x : v) x *= factor;
  }
}

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto& v : per_tensor) {
    for (double x : v) s += x * x;
  }
  return s;
}

void SparseGradient::accumulate_into(Gradients& dense, double scale) const {
  for (const auto& e : entries) {
    if (e.tensor >= dense.per_tensor.size() || e.index >= dense.per_tensor[e.tensor].size()) {
      throw Error(ErrorCode::ShapeMismatch, "sparse gradient entry out of range");
    }
    dense.per_tensor[e.tensor][e.index] += scale * e.value;
  }
}

ParamBinding::ParamBinding(const ParamStore& store, Tape* tape)
    : store_(&store), tape_(tape), leaf_ids_(store.size()) {}

std::int64_t ParamBinding::leaf_id(std::size_t tensor, std::size_t index) {
  auto& ids = leaf_ids_[tensor];
  if (ids.empty()) ids.assign(store_->tensor(tensor).size(), -1);
  if (ids[index] < 0) {
    ids[index] = tape_->variable(store_->tensor(tensor).values[index]).id();
    touched_.emplace_back(tensor, index);
  }
  return ids[index];
}

Scalar ParamBinding::get(std::size_t tensor, std::size_t index) {
  const double v = store_->tensor(tensor).values.at(index);
  if (!tape_) return Scalar(v);
  return tape_->at(static_cast<std::uint32_t>(leaf_id(tensor, index)));
}

Scalar ParamBinding::linear(std::span<const Term> terms) {
  double v = 0.0;
  for (const auto& t : terms) v += t.coeff * store_->tensor(t.tensor).values.at(t.index);
  if (!tape_) return Scalar(v);
  std::vector<Scalar> leaves;
  std::vector<double> partials;
  leaves.reserve(terms.size());
  partials.reserve(terms.size());
  for (const auto& t : terms) {
    leaves.push_back(tape_->at(static_cast<std::uint32_t>(leaf_id(t.tensor, t.index))));
    partials.push_back(t.coeff);
  }
  return tape_->record(OpKind::Linear, v, leaves, partials);
}

SparseGradient ParamBinding::gradient(const Scalar& loss) const {
  SparseGradient g;
  if (!tape_) return g;
  const auto adj = tape_->adjoints(loss);
  g.entries.reserve(touched_.size());
  for (const auto& [t, i] : touched_) {
    const double v = adj[static_cast<std::size_t>(leaf_ids_[t][i])];
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient for " + store_->tensor(t).name);
    g.entries.push_back({t, i, v});
  }
  return g;
}

Gradients ParamBinding::dense_gradient(const Scalar& loss) const {
  auto dense = Gradients::zeros_like(*store_);
  gradient(loss).accumulate_into(dense);
  return dense;
}

}  // namespace vpg::diff
