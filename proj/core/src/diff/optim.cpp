#include "vpg/diff/optim.hpp"

#include <cmath>

#include "vpg/util/error.hpp"

namespace vpg::diff {
namespace {

void check_shapes(const ParamStore& params, const Gradients& grads) {
  if (grads.per_tensor.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient has " + std::to_string(grads.per_tensor.size()) +
                                              " tensors, parameters have " + std::to_string(params.size()));
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (grads.per_tensor[t].size() != params.tensor(t).size()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient shape mismatch for " + params.tensor(t).name);
    }
    for (double g : grads.per_tensor[t]) {
      if (!std::isfinite(g)) throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient for " + params.tensor(t).name);
    }
  }
}

void ensure_state(std::vector<std::vector<double>>& state, const ParamStore& params) {
  if (state.size() == params.size()) return;
  state.clear();
  for (const auto& t : params.tensors()) state.emplace_back(t.size(), 0.0);
}

}  // namespace

nlohmann::ordered_json to_json(const OptimizerConfig& c) {
  nlohmann::ordered_json j;
  j["kind"] = c.kind == OptimizerKind::Sgd ? "sgd" : "adamw";
  j["lr"] = c.lr;
  j["momentum"] = c.momentum;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["eps"] = c.eps;
  j["weight_decay"] = c.weight_decay;
  return j;
}

OptimizerConfig optimizer_config_from_json(const nlohmann::ordered_json& j) {
  OptimizerConfig c;
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "optimizer must be an object");
  std::string unknown;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "kind") {
        const auto kind = value.get<std::string>();
        if (kind == "sgd") c.kind = OptimizerKind::Sgd;
        else if (kind == "adamw") c.kind = OptimizerKind::AdamW;
        else throw Error(ErrorCode::ConfigError, "optimizer.kind must be 'sgd' or 'adamw'");
      } else if (key == "lr") c.lr = value.get<double>();
      else if (key == "momentum") c.momentum = value.get<double>();
      else if (key == "beta1") c.beta1 = value.get<double>();
      else if (key == "beta2") c.beta2 = value.get<double>();
      else if (key == "eps") c.eps = value.get<double>();
      else if (key == "weight_decay") c.weight_decay = value.get<double>();
      else unknown += (unknown.empty() ? "" : ", ") + ("optimizer." + key);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::ConfigError, "optimizer." + key + " has the wrong type");
    }
  }
  if (!unknown.empty()) throw Error(ErrorCode::ConfigError, "unknown keys: " + unknown);
  if (!(c.lr >= 0.0)) throw Error(ErrorCode::ConfigError, "optimizer.lr must be non-negative");
  return c;
}

void Sgd::step(ParamStore& params, const Gradients& grads) {
  check_shapes(params, grads);
  ensure_state(velocity_, params);
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& w = params.tensor(t).values;
    auto& v = velocity_[t];
    const auto& g = grads.per_tensor[t];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + config_.weight_decay * w[i];
      v[i] = config_.momentum * v[i] + gi;
      w[i] -= config_.lr * v[i];
    }
  }
}

void AdamW::step(ParamStore& params, const Gradients& grads) {
  check_shapes(params, grads);
  ensure_state(m_, params);
  ensure_state(v_, params);
  ++step_count_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& w = params.tensor(t).values;
    const auto& g = grads.per_tensor[t];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m_[t][i] = config_.beta1 * m_[t][i] + (1.0 - config_.beta1) * g[i];
      v_[t][i] = config_.beta2 * v_[t][i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double mhat = m_[t][i] / bc1;
      const double vhat = v_[t][i] / bc2;
      w[i] -= config_.lr * (mhat / (std::sqrt(vhat) + config_.eps) + config_.weight_decay * w[i]);
    }
  }
}

Optimizer::Optimizer(const OptimizerConfig& config) : config_(config), sgd_(config), adamw_(config) {}

void Optimizer::step(ParamStore& params, const Gradients& grads) {
  if (config_.kind == OptimizerKind::Sgd) sgd_.step(params, grads);
  else adamw_.step(params, grads);
}

ParamStore sgd_step(ParamStore params, const Gradients& grads, const OptimizerConfig& config) {
  Sgd(config).step(params, grads);
  return params;
}

ParamStore adamw_step(ParamStore params, const Gradients& grads, const OptimizerConfig& config) {
  AdamW(config).step(params, grads);
  return params;
}

}  // namespace vpg::diff
