#include "vpg/train/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "vpg/train/disrupt.hpp"
#include "vpg/train/loss.hpp"
#include "vpg/util/error.hpp"
#include "vpg/util/rng.hpp"

namespace vpg::train {

namespace {

constexpr std::size_t kSkipLogLimit = 20;

struct ExampleResult {
  double loss = 0.0;
  diff::SparseGradient grad;
  bool ok = false;
  std::string error;
};

ExampleResult run_example(const PreparedCase& pc, const toy::ModuleSet& modules, const diff::ParamStore& params,
                          engine::InferenceMode mode, const engine::InferenceOptions& options) {
  ExampleResult r;
  try {
    diff::Tape tape;
    diff::ParamBinding binding(params, &tape);
    const Categorical pred = engine::infer(mode, pc.program, pc.record->world, modules, binding, options);
    const diff::Scalar loss = case_nll(pred, pc.label);
    r.loss = loss.value();
    if (!loss.is_constant()) r.grad = binding.gradient(loss);
    r.ok = true;
  } catch (const Error& e) {
    r.error = pc.record->id + ": " + e.what();
  }
  return r;
}

std::vector<std::size_t> stage_pool(const std::vector<PreparedCase>& cases, const StageConfig& stage) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    if (static_cast<int>(dsl::count_visual_steps(cases[i].program)) > stage.max_visual_steps) continue;
    pool.push_back(i);
    if (stage.max_cases != 0 && pool.size() == stage.max_cases) break;
  }
  return pool;
}

void fill_eval(MetricsRow& row, const EvalResult& e) {
  row.acc_final = e.acc_final;
  row.acc_loc = e.acc_loc;
  row.acc_vqa = e.acc_vqa;
  row.err_program = e.err_program;
  row.err_module = e.err_module;
  row.err_other = e.err_other;
}

}  // namespace

void TrainConfig::validate() const {
  if (mode != engine::InferenceMode::Exact && mode != engine::InferenceMode::Factorized) {
    throw Error(ErrorCode::ConfigError, "training needs mode 'exact' or 'factorized', got '" +
                                            std::string(engine::to_string(mode)) + "'");
  }
  if (batch_size == 0) throw Error(ErrorCode::ConfigError, "batch_size must be positive");
  if (epochs_per_stage < 0) throw Error(ErrorCode::ConfigError, "epochs_per_stage must be non-negative");
  if (eval_every < 1) throw Error(ErrorCode::ConfigError, "eval_every must be at least 1");
  if (jobs < 1) throw Error(ErrorCode::ConfigError, "jobs must be at least 1");
  if (curriculum.empty()) throw Error(ErrorCode::ConfigError, "curriculum needs at least one stage");
  for (std::size_t i = 1; i < curriculum.size(); ++i) {
    if (curriculum[i].max_visual_steps < curriculum[i - 1].max_visual_steps) {
      throw Error(ErrorCode::ConfigError, "curriculum thresholds must be non-decreasing");
    }
  }
  if (!(disruption_fraction >= 0.0 && disruption_fraction <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "disruption.fraction must be in [0, 1]");
  }
  if (!(init_scale >= 0.0)) throw Error(ErrorCode::ConfigError, "init_scale must be non-negative");
}

diff::ParamStore init_params(const TrainConfig& config, const toy::ModuleSet& modules) {
  diff::ParamStore store;
  modules.register_params(store);
  if (config.init_scale > 0) store.randomize(derive_seed(config.seed, "init"), config.init_scale);
  return store;
}

BatchGradient batch_gradient(const std::vector<const PreparedCase*>& cases, const toy::ModuleSet& modules,
                             const diff::ParamStore& params, engine::InferenceMode mode,
                             const engine::InferenceOptions& options, int jobs, bool deterministic,
                             std::vector<std::string>* skip_log) {
  BatchGradient out;
  out.grads = diff::Gradients::zeros_like(params);
  const std::size_t n = cases.size();
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
  std::vector<ExampleResult> results(n);

  if (workers <= 1 || deterministic) {
    if (workers <= 1) {
      for (std::size_t i = 0; i < n; ++i) results[i] = run_example(*cases[i], modules, params, mode, options);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            results[i] = run_example(*cases[i], modules, params, mode, options);
          }
        });
      }
      for (auto& t : pool) t.join();
    }
    for (auto& r : results) {
      if (!r.ok) continue;
      r.grad.accumulate_into(out.grads);
    }
  } else {
    // unordered: each worker sums into its own buffer
    std::vector<diff::Gradients> partial(workers, diff::Gradients::zeros_like(params));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
          results[i] = run_example(*cases[i], modules, params, mode, options);
          if (results[i].ok) results[i].grad.accumulate_into(partial[w]);
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& p : partial) out.grads.add(p);
  }

  for (const auto& r : results) {
    if (r.ok) {
      out.loss += r.loss;
      ++out.used;
    } else {
      ++out.skipped;
      if (skip_log && skip_log->size() < kSkipLogLimit) skip_log->push_back(r.error);
    }
  }
  if (out.used > 0) {
    out.loss /= static_cast<double>(out.used);
    out.grads.scale(1.0 / static_cast<double>(out.used));
  }
  return out;
}

TrainResult train(const TrainConfig& config, const std::vector<synth::CaseRecord>& dataset,
                  const toy::ModuleSet& modules, diff::ParamStore params, const EvalSet* eval) {
  config.validate();
  synth::OutcomeOnlyScope outcome_only;
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    if (config.deterministic) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const std::vector<synth::CaseRecord> data =
      config.disruption_fraction > 0 ? disrupt_programs(dataset, config.disruption_fraction, config.disruption_seed)
                                     : dataset;
  const std::vector<PreparedCase> cases = prepare(data);

  std::vector<std::vector<std::size_t>> pools;
  for (const auto& s : config.curriculum) pools.push_back(stage_pool(cases, s));
  const std::vector<std::size_t> everything = pools.back();

  TrainResult result;
  diff::Optimizer optimizer(config.optimizer);
  Rng shuffle(derive_seed(config.seed, "shuffle"));

  auto as_batch = [&](std::span<const std::size_t> idx) {
    std::vector<const PreparedCase*> batch;
    batch.reserve(idx.size());
    for (std::size_t i : idx) batch.push_back(&cases[i]);
    return batch;
  };

  {
    MetricsRow row;
    const auto first = as_batch(pools.front());
    if (!first.empty()) {
      const auto g = batch_gradient(first, modules, params, config.mode, config.inference, config.jobs,
                                    config.deterministic, &result.skip_log);
      row.loss = g.loss;
      row.skipped = g.skipped;
    }
    if (eval) fill_eval(row, evaluate(*eval, modules, params));
    row.seconds = elapsed();
    result.history.push_back(row);
  }

  // no-curriculum runs read from one long shuffled stream over every case
  std::vector<std::size_t> stream;
  std::size_t stream_pos = 0;
  auto draw = [&](std::size_t count) {
    std::vector<std::size_t> out;
    while (out.size() < count && !everything.empty()) {
      if (stream_pos == stream.size()) {
        stream = everything;
        shuffle.shuffle(std::span<std::size_t>(stream));
        stream_pos = 0;
      }
      out.push_back(stream[stream_pos++]);
    }
    return out;
  };

  int epoch = 0;
  for (std::size_t s = 0; s < config.curriculum.size(); ++s) {
    const auto& pool = pools[s];
    for (int e = 0; e < config.epochs_per_stage; ++e) {
      ++epoch;
      std::vector<std::size_t> order;
      if (config.curriculum_enabled) {
        order = pool;
        shuffle.shuffle(std::span<std::size_t>(order));
      } else {
        order = draw(pool.size());
      }
      MetricsRow row;
      row.epoch = epoch;
      row.stage = static_cast<int>(s) + 1;
      double loss_sum = 0.0;
      std::size_t used = 0;
      for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
        const std::size_t end = std::min(order.size(), b + config.batch_size);
        const auto batch = as_batch(std::span<const std::size_t>(order).subspan(b, end - b));
        const auto g = batch_gradient(batch, modules, params, config.mode, config.inference, config.jobs,
                                      config.deterministic, &result.skip_log);
        row.skipped += g.skipped;
        if (g.used == 0) continue;
        loss_sum += g.loss * static_cast<double>(g.used);
        used += g.used;
        optimizer.step(params, g.grads);
      }
      row.loss = used ? loss_sum / static_cast<double>(used) : 0.0;
      const bool stage_end = e + 1 == config.epochs_per_stage;
      if (eval && (stage_end || epoch % config.eval_every == 0)) {
        fill_eval(row, evaluate(*eval, modules, params));
      } else {
        const MetricsRow& prev = result.history.back();
        row.acc_final = prev.acc_final;
        row.acc_loc = prev.acc_loc;
        row.acc_vqa = prev.acc_vqa;
        row.err_program = prev.err_program;
        row.err_module = prev.err_module;
        row.err_other = prev.err_other;
      }
      row.seconds = elapsed();
      result.history.push_back(row);
    }
    if (config.epochs_per_stage > 0) {
      result.stage_checkpoints.push_back(params);
      if (!config.checkpoint_dir.empty()) {
        std::filesystem::create_directories(config.checkpoint_dir);
        params.save(config.checkpoint_dir / ("stage-" + std::to_string(s + 1) + ".json"));
      }
    }
  }
  result.params = std::move(params);
  return result;
}

// ---- config -------------------------------------------------------------

nlohmann::ordered_json to_json(const TrainConfig& c) {
  nlohmann::ordered_json stages = nlohmann::ordered_json::array();
  for (const auto& s : c.curriculum) stages.push_back({{"max_visual_steps", s.max_visual_steps}, {"max_cases", s.max_cases}});
  const bool finite_threshold = std::isfinite(c.loc.pool_threshold);
  nlohmann::ordered_json loc = {{"pool_size", c.loc.pool_size}};
  if (finite_threshold) loc["pool_threshold"] = c.loc.pool_threshold;
  return {{"mode", engine::to_string(c.mode)},
          {"modules", c.modules},
          {"seed", c.seed},
          {"optimizer", diff::to_json(c.optimizer)},
          {"batch_size", c.batch_size},
          {"epochs_per_stage", c.epochs_per_stage},
          {"curriculum", stages},
          {"curriculum_enabled", c.curriculum_enabled},
          {"disruption", {{"fraction", c.disruption_fraction}, {"seed", c.disruption_seed}}},
          {"deterministic", c.deterministic},
          {"eval_every", c.eval_every},
          {"init_scale", c.init_scale},
          {"jobs", c.jobs},
          {"loc", loc},
          {"inference",
           {{"max_factor_entries", c.inference.max_factor_entries},
            {"max_assignments", c.inference.max_assignments}}},
          {"checkpoint_dir", c.checkpoint_dir.string()}};
}

namespace {

template <typename F>
void each_key(const nlohmann::ordered_json& j, const std::string& prefix, std::vector<std::string>& unknown, F&& f) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, (prefix.empty() ? "config" : prefix) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    try {
      if (!f(key, value)) unknown.push_back(full);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::ConfigError, full + " has the wrong type");
    }
  }
}

}  // namespace

TrainConfig train_config_from_json(const nlohmann::ordered_json& j) {
  TrainConfig c;
  std::vector<std::string> unknown;
  each_key(j, "", unknown, [&](const std::string& key, const nlohmann::ordered_json& v) {
    if (key == "mode") c.mode = engine::mode_from_string(v.get<std::string>());
    else if (key == "modules") c.modules = v.get<std::string>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "optimizer") c.optimizer = diff::optimizer_config_from_json(v);
    else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
    else if (key == "epochs_per_stage") c.epochs_per_stage = v.get<int>();
    else if (key == "curriculum") {
      if (!v.is_array()) throw Error(ErrorCode::ConfigError, "curriculum must be an array");
      c.curriculum.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        StageConfig s;
        each_key(v[i], "curriculum[" + std::to_string(i) + "]", unknown,
                 [&](const std::string& k, const nlohmann::ordered_json& x) {
                   if (k == "max_visual_steps") s.max_visual_steps = x.get<int>();
                   else if (k == "max_cases") s.max_cases = x.get<std::size_t>();
                   else return false;
                   return true;
                 });
        c.curriculum.push_back(s);
      }
    } else if (key == "curriculum_enabled") c.curriculum_enabled = v.get<bool>();
    else if (key == "disruption") {
      each_key(v, "disruption", unknown, [&](const std::string& k, const nlohmann::ordered_json& x) {
        if (k == "fraction") c.disruption_fraction = x.get<double>();
        else if (k == "seed") c.disruption_seed = x.get<std::uint64_t>();
        else return false;
        return true;
      });
    } else if (key == "deterministic") c.deterministic = v.get<bool>();
    else if (key == "eval_every") c.eval_every = v.get<int>();
    else if (key == "init_scale") c.init_scale = v.get<double>();
    else if (key == "jobs") c.jobs = v.get<int>();
    else if (key == "loc") {
      each_key(v, "loc", unknown, [&](const std::string& k, const nlohmann::ordered_json& x) {
        if (k == "pool_size") c.loc.pool_size = x.get<int>();
        else if (k == "pool_threshold") c.loc.pool_threshold = x.get<double>();
        else return false;
        return true;
      });
    } else if (key == "inference") {
      each_key(v, "inference", unknown, [&](const std::string& k, const nlohmann::ordered_json& x) {
        if (k == "max_factor_entries") c.inference.max_factor_entries = x.get<std::size_t>();
        else if (k == "max_assignments") c.inference.max_assignments = x.get<std::size_t>();
        else return false;
        return true;
      });
    } else if (key == "checkpoint_dir") c.checkpoint_dir = v.get<std::string>();
    else return false;
    return true;
  });
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw Error(ErrorCode::ConfigError, "unknown keys: " + list);
  }
  if (c.loc.pool_size < 1) throw Error(ErrorCode::ConfigError, "loc.pool_size must be at least 1");
  c.validate();
  return c;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  try {
    return train_config_from_json(nlohmann::ordered_json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.detail());
  }
}

}  // namespace vpg::train
