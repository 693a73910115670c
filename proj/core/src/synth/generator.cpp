#include "vpg/synth/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "vpg/engine/inference.hpp"
#include "vpg/util/error.hpp"
#include "vpg/util/rng.hpp"

namespace vpg::synth {

namespace {

std::atomic<int> g_outcome_only{0};
std::atomic<std::uint64_t> g_truth_calls{0};

const toy::ModuleSet& oracle() {
  static const toy::ModuleSet set = toy::ModuleRegistry::global().create("oracle");
  return set;
}

engine::ExecutionTrace oracle_trace(const dsl::Program& program, const World& world) {
  const diff::ParamStore none;
  diff::ParamBinding binding(none);
  return engine::execute_argmax(program, world, oracle(), binding);
}

bool fits(const CaseTemplate& t, const GenConstraints& c) {
  return t.visual_steps >= c.min_visual_steps && t.visual_steps <= c.max_visual_steps;
}

std::vector<const CaseTemplate*> eligible(const std::vector<std::string>& pool, const GenConstraints& c) {
  std::vector<const CaseTemplate*> out;
  if (pool.empty()) {
    for (const auto& t : case_templates()) {
      if (fits(t, c)) out.push_back(&t);
    }
  } else {
    for (const auto& id : pool) {
      const CaseTemplate& t = case_template(id);
      if (fits(t, c)) out.push_back(&t);
    }
  }
  return out;
}

// Largest-remainder split of n into parts proportional to w.
std::vector<std::size_t> apportion(std::size_t n, const std::vector<double>& w) {
  double total = 0;
  for (double x : w) total += x;
  std::vector<std::size_t> counts(w.size(), 0);
  if (total <= 0) return counts;
  std::vector<std::pair<double, std::size_t>> rest;
  std::size_t used = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double exact = static_cast<double>(n) * w[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    rest.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(rest.begin(), rest.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[rest[k % rest.size()].second];
  return counts;
}

std::string case_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "case-%06zu", index);
  return buf;
}

}  // namespace

int stage_of(int visual_steps) { return visual_steps <= 4 ? visual_steps : 0; }

std::string ground_truth_label(const dsl::Program& program, const World& world) {
  return to_string(oracle_trace(program, world).result);
}

CaseRecord gen_case_from(std::uint64_t seed, const CaseTemplate& tmpl, bool want, const GenConstraints& constraints) {
  Rng rng(seed);
  for (int attempt = 0; attempt < constraints.max_attempts; ++attempt) {
    Instance inst = tmpl.make(rng, want, constraints.scene);
    const dsl::Program program = dsl::parse_program(inst.program_text);
    std::string label = ground_truth_label(program, inst.world);
    if (tmpl.binary && is_positive_label(label) != want) continue;
    CaseRecord r;
    r.id = tmpl.id + "-" + std::to_string(seed);
    r.world = std::move(inst.world);
    r.program_text = dsl::print_program(program);
    r.question = std::move(inst.question);
    r.label = std::move(label);
    const int steps = static_cast<int>(dsl::count_visual_steps(program));
    r.meta = {steps, stage_of(steps), tmpl.id, seed};
    return r;
  }
  throw Error(ErrorCode::ExhaustedResampling, "template '" + tmpl.id + "' did not produce a " +
                                                  (want ? "positive" : "negative") + " label in " +
                                                  std::to_string(constraints.max_attempts) + " attempts");
}

CaseRecord gen_case(std::uint64_t seed, const std::vector<std::string>& pool, const GenConstraints& constraints) {
  const auto candidates = eligible(pool, constraints);
  if (candidates.empty()) {
    throw Error(ErrorCode::ExhaustedResampling, "no template has between " +
                                                    std::to_string(constraints.min_visual_steps) + " and " +
                                                    std::to_string(constraints.max_visual_steps) + " visual steps");
  }
  Rng rng(derive_seed(seed, "template"));
  const CaseTemplate& t = *rng.pick(candidates);
  return gen_case_from(seed, t, rng.chance(0.5), constraints);
}

std::vector<CaseRecord> gen_dataset(const DatasetConfig& config) {
  const auto candidates = eligible(config.templates, config.constraints);
  if (candidates.empty() && config.cases > 0) {
    throw Error(ErrorCode::ExhaustedResampling, "no template fits the dataset constraints");
  }
  // bucket b holds the b+1-step templates; the last bucket everything longer
  std::vector<std::vector<const CaseTemplate*>> buckets(config.stage_weights.size());
  for (const CaseTemplate* t : candidates) {
    const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(t->visual_steps - 1), buckets.size() - 1);
    buckets[b].push_back(t);
  }
  std::vector<double> weights = config.stage_weights;
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    if (buckets[b].empty()) weights[b] = 0;
  }
  const auto counts = apportion(config.cases, weights);
  std::vector<std::size_t> order;
  for (std::size_t b = 0; b < counts.size(); ++b) order.insert(order.end(), counts[b], b);
  Rng shuffle(derive_seed(config.seed, "buckets"));
  shuffle.shuffle(std::span<std::size_t>(order));

  struct Plan {
    std::uint64_t seed;
    const CaseTemplate* tmpl;
    bool want;
  };
  std::vector<Plan> plans(config.cases);
  std::map<std::string, bool> next_want;
  for (std::size_t i = 0; i < config.cases; ++i) {
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    Rng pick(derive_seed(seed, "template"));
    const CaseTemplate* t = pick.pick(buckets[order[i]]);
    auto [it, fresh] = next_want.try_emplace(t->id, pick.chance(0.5));
    plans[i] = {seed, t, it->second};
    it->second = !it->second;
    (void)fresh;
  }

  std::vector<CaseRecord> out(config.cases);
  std::vector<std::exception_ptr> errors(config.cases);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < config.cases;) {
      try {
        out[i] = gen_case_from(plans[i].seed, *plans[i].tmpl, plans[i].want, config.constraints);
        out[i].id = case_id(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(config.cases)));
  if (jobs == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

Truth intermediate_truth(const CaseRecord& record) {
  ++g_truth_calls;
  if (OutcomeOnlyScope::active()) {
    throw Error(ErrorCode::InternalError, "intermediate truth requested during outcome-only training");
  }
  const auto trace = oracle_trace(dsl::parse_program(record.program_text), record.world);
  Truth truth;
  for (const auto& [var, value] : trace.values) truth.emplace(var, value);
  return truth;
}

std::uint64_t intermediate_truth_calls() { return g_truth_calls.load(); }

OutcomeOnlyScope::OutcomeOnlyScope() { ++g_outcome_only; }
OutcomeOnlyScope::~OutcomeOnlyScope() { --g_outcome_only; }
bool OutcomeOnlyScope::active() { return g_outcome_only.load() > 0; }

}  // namespace vpg::synth
