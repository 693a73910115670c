#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vpg/diff/params.hpp"

namespace vpg::diff {

enum class OptimizerKind { Sgd, AdamW };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double lr = 0.05;
  double momentum = 0.9;      // SGD
  double beta1 = 0.9;         // AdamW
  double beta2 = 0.999;       // AdamW
  double eps = 1e-8;          // AdamW
  double weight_decay = 0.0;  // decoupled for AdamW, L2-style for SGD

  bool operator==(const OptimizerConfig&) const = default;
};

nlohmann::ordered_json to_json(const OptimizerConfig& c);
/// Rejects unknown keys.
OptimizerConfig optimizer_config_from_json(const nlohmann::ordered_json& j);

/// SGD with heavy-ball momentum: v = momentum * v + g; θ -= lr * v.
class Sgd {
 public:
  explicit Sgd(OptimizerConfig config) : config_(config) {}
  void step(ParamStore& params, const Gradients& grads);

 private:
  OptimizerConfig config_;
  std::vector<std::vector<double>> velocity_;
};

/// Adam with decoupled weight decay.
class AdamW {
 public:
  explicit AdamW(OptimizerConfig config) : config_(config) {}
  void step(ParamStore& params, const Gradients& grads);

 private:
  OptimizerConfig config_;
  long step_count_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Type-erased holder so the trainer can switch optimizers from config.
class Optimizer {
 public:
  explicit Optimizer(const OptimizerConfig& config);
  void step(ParamStore& params, const Gradients& grads);
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  Sgd sgd_;
  AdamW adamw_;
};

/// Stateless single steps (fresh optimizer state), returning updated copies.
ParamStore sgd_step(ParamStore params, const Gradients& grads, const OptimizerConfig& config);
ParamStore adamw_step(ParamStore params, const Gradients& grads, const OptimizerConfig& config);

}  // namespace vpg::diff
