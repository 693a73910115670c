// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vpg/diff/gradcheck.hpp"
#include "vpg/dsl/ast.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/evalexpr/semantics.hpp"
#include "vpg/synth/generator.hpp"
#include "vpg/toy/module.hpp"
#include "vpg/train/evaluate.hpp"
#include "vpg/train/loss.hpp"
#include "vpg/train/metrics.hpp"
#include "vpg/train/trainer.hpp"
#include "vpg/util/error.hpp"
#include "vpg/util/rng.hpp"

#include <json.hpp>

using namespace vpg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<synth::CaseRecord> corpus(std::size_t n, std::uint64_t seed) {
  synth::DatasetConfig c;
  c.cases = n;
  c.seed = seed;
  return synth::gen_dataset(c);
}

toy::ModuleSet modules_named(const std::string& name, int pool, const nlohmann::ordered_json& fixture = {}) {
  toy::ModuleOptions o;
  o.loc.pool_size = pool;
  o.fixture = fixture;
  return toy::ModuleRegistry::global().create(name, o);
}

diff::ParamStore random_params(const toy::ModuleSet& modules, std::uint64_t seed, double scale) {
  diff::ParamStore store;
  modules.register_params(store);
  store.randomize(seed, scale);
  return store;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shared by the first two criteria.
const std::vector<synth::CaseRecord>& oracle_corpus() {
  static const auto cases = corpus(200, 2024);
  return cases;
}

Outcome oracle_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto modules = modules_named("toy", 2);
  const auto params = random_params(modules, 17, 1.0);
  double worst = 0.0;
  std::size_t widest = 0;
  for (const auto& r : oracle_corpus()) {
    const auto p = dsl::parse_program(r.program_text);
    diff::ParamBinding b(params);
    const auto exact = engine::infer_exact(p, r.world, modules, b);
    worst = std::max(worst, max_abs_difference(exact, engine::brute_force(p, r.world, modules, params)));
    for (const auto& st : p.statements) {
      if (st.module != dsl::ModuleKind::Loc && st.module != dsl::ModuleKind::Vqa) continue;
      widest = std::max(widest, engine::call_module(st, r.world, modules, b, r.world.whole(0)).size());
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && secs < 60.0 && widest <= 6,
          fmt("%zu cases, max |exact - brute| = %.2e, widest module support %zu, %.1f s", oracle_corpus().size(), worst,
              widest, secs)};
}

Outcome factorized_fidelity() {
  const auto modules = modules_named("toy", 2);
  const auto params = random_params(modules, 17, 1.0);
  double worst = 0.0;
  std::size_t used = 0;
  for (const auto& r : oracle_corpus()) {
    const auto p = dsl::parse_program(r.program_text);
    if (!dsl::detect_shared_latents(p).empty()) continue;
    ++used;
    diff::ParamBinding b(params);
    worst = std::max(worst, max_abs_difference(engine::infer_exact(p, r.world, modules, b),
                                               engine::infer_factorized(p, r.world, modules, b)));
  }
  const auto j = nlohmann::ordered_json::parse(read_file(fs::path(VPG_FIXTURE_DIR) / "shared_latent_case.json"));
  const auto p = dsl::parse_program(j.at("program").get<std::string>());
  const auto world = synth::world_from_json(j.at("images"));
  const auto fixture = modules_named("fixture", 4, j.at("fixture"));
  const diff::ParamStore none;
  diff::ParamBinding b(none);
  const double exact = engine::infer_exact(p, world, fixture, b).prob_of(Value::token("True"));
  const double fact = engine::infer_factorized(p, world, fixture, b).prob_of(Value::token("True"));
  const bool ok = worst < 1e-9 && used > 0 && exact == 0.5 && std::abs(fact - 0.25) < 1e-15;
  return {ok, fmt("%zu shared-latent-free cases, max |factorized - exact| = %.2e; fixture exact %.17g, factorized %.17g",
                  used, worst, exact, fact)};
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cases = corpus(100, 3003);
  const auto modules = modules_named("toy", 2);
  const auto params = random_params(modules, 29, 1.0);
  double worst = 0.0;
  std::size_t failed = 0, coords = 0, min_coords = SIZE_MAX;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto p = dsl::parse_program(cases[i].program_text);
    const Value label = Value::from_label(cases[i].label);
    const auto& world = cases[i].world;
    diff::GradCheckOptions opt;
    opt.epsilon = 1e-5;
    opt.tolerance = 1e-4;
    opt.max_coordinates = 64;
    opt.seed = derive_seed(3003, static_cast<std::uint64_t>(i));
    const auto report = diff::grad_check(
        [&](diff::ParamBinding& b) { return train::case_nll(engine::infer_exact(p, world, modules, b), label); },
        params, opt);
    worst = std::max(worst, report.max_relative_error);
    coords += report.checked;
    min_coords = std::min(min_coords, report.checked);
    failed += report.passed() ? 0 : 1;
  }
  const double secs = seconds_since(t0);
  return {failed == 0 && min_coords >= 64 && worst < 1e-4 && secs < 120.0,
          fmt("%zu cases, %zu coordinates (min %zu per case), max relative error %.2e, %zu failing, %.1f s",
              cases.size(), coords, min_coords, worst, failed, secs)};
}

Outcome normalization_and_calculus() {
  // every distribution the engine hands out on the oracle corpus
  const auto modules = modules_named("toy", 2);
  const auto params = random_params(modules, 17, 1.0);
  double worst_total = 0.0;
  std::size_t checked = 0;
  auto note = [&](const Categorical& c) {
    worst_total = std::max(worst_total, std::abs(c.total() - 1.0));
    ++checked;
  };
  for (const auto& r : oracle_corpus()) {
    const auto p = dsl::parse_program(r.program_text);
    diff::ParamBinding b(params);
    note(engine::infer_exact(p, r.world, modules, b));
    note(engine::infer_factorized(p, r.world, modules, b));
    note(engine::brute_force(p, r.world, modules, params));
    for (const auto& st : p.statements) {
      if (st.module == dsl::ModuleKind::Loc || st.module == dsl::ModuleKind::Vqa) {
        note(engine::call_module(st, r.world, modules, b, r.world.whole(0)));
      }
    }
  }

  using evalexpr::Bernoulli;
  Rng rng(4242);
  double worst_identity = 0.0;
  auto gap = [&](const Bernoulli& x, const Bernoulli& y) {
    worst_identity = std::max(worst_identity, std::abs(x.p_true.value() - y.p_true.value()));
  };
  for (int i = 0; i < 10000; ++i) {
    const Bernoulli a{rng.uniform()};
    const Bernoulli b{rng.uniform()};
    gap(evalexpr::not_prob(evalexpr::not_prob(a)), a);
    gap(evalexpr::not_prob(evalexpr::and_prob(a, b)),
        evalexpr::or_prob(evalexpr::not_prob(a), evalexpr::not_prob(b)));
    gap(evalexpr::not_prob(evalexpr::or_prob(a, b)),
        evalexpr::and_prob(evalexpr::not_prob(a), evalexpr::not_prob(b)));
    gap(evalexpr::and_prob(a, b), evalexpr::and_prob(b, a));
    gap(evalexpr::or_prob(a, b), evalexpr::or_prob(b, a));
    gap(evalexpr::xor_prob(a, b), evalexpr::xor_prob(b, a));
  }
  return {worst_total < 1e-9 && worst_identity < 1e-12,
          fmt("%zu distributions, max |sum - 1| = %.2e; 10000 pairs, max identity gap %.2e", checked, worst_total,
              worst_identity)};
}

Outcome argmax_consistency() {
  const auto oracle = modules_named("oracle", 4);
  const diff::ParamStore none;
  std::size_t agree = 0, total = 0;
  auto compare = [&](const dsl::Program& p, const synth::World& w, const toy::ModuleSet& m) {
    diff::ParamBinding b1(none);
    diff::ParamBinding b2(none);
    const auto exact = engine::infer_exact(p, w, m, b1);
    const auto greedy = engine::execute_argmax(p, w, m, b2).result;
    agree += exact.support()[exact.argmax()] == greedy ? 1 : 0;
    ++total;
  };
  for (const auto& r : corpus(500, 5005)) compare(dsl::parse_program(r.program_text), r.world, oracle);
  const auto j = nlohmann::ordered_json::parse(read_file(fs::path(VPG_FIXTURE_DIR) / "onehot_case.json"));
  compare(dsl::parse_program(j.at("program").get<std::string>()), synth::world_from_json(j.at("images")),
          modules_named("fixture", 4, j.at("fixture")));
  return {agree == total, fmt("%zu of %zu cases agree", agree, total)};
}

// Training runs for the last criteria share one corpus and one held-out set.
struct Experiment {
  std::vector<synth::CaseRecord> data = corpus(2000, 7);
  train::EvalSet eval = train::EvalSet::build(corpus(500, 1007));
  toy::ModuleSet modules = modules_named("toy", train::TrainConfig{}.loc.pool_size);

  train::TrainResult run(const train::TrainConfig& c) const {
    return train::train(c, data, modules, train::init_params(c, modules), &eval);
  }
};

const Experiment& experiment() {
  static const Experiment e;
  return e;
}

Outcome end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  train::TrainConfig c;
  c.seed = 7;
  const auto r = experiment().run(c);
  const auto& a = r.history.front();
  const auto& z = r.history.back();
  const double secs = seconds_since(t0);
  const bool ok = z.acc_final - a.acc_final >= 0.15 && z.acc_vqa - a.acc_vqa >= 0.10 &&
                  z.acc_loc - a.acc_loc >= 0.10 && secs < 900.0;
  return {ok, fmt("final %.3f -> %.3f, vqa %.3f -> %.3f, loc %.3f -> %.3f, %.1f s", a.acc_final, z.acc_final, a.acc_vqa,
                  z.acc_vqa, a.acc_loc, z.acc_loc, secs)};
}

Outcome curriculum_direction() {
  int wins = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    train::TrainConfig c;
    c.seed = seed;
    const double with = experiment().run(c).history.back().acc_final;
    c.curriculum_enabled = false;
    const double without = experiment().run(c).history.back().acc_final;
    wins += with >= without ? 1 : 0;
    per_seed += fmt(" %llu:%.3f/%.3f", static_cast<unsigned long long>(seed), with, without);
  }
  return {wins >= 3, fmt("CL >= no-CL in %d of 5 seeds;", wins) + per_seed};
}

Outcome disruption_direction() {
  int holds = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    double acc[3];
    const double fractions[3] = {0.0, 0.2, 0.5};
    for (int k = 0; k < 3; ++k) {
      train::TrainConfig c;
      c.seed = seed;
      c.disruption_fraction = fractions[k];
      c.disruption_seed = seed;
      acc[k] = experiment().run(c).history.back().acc_final;
    }
    holds += acc[0] >= acc[1] && acc[1] >= acc[2] - 0.01 ? 1 : 0;
    per_seed += fmt(" %llu:%.3f/%.3f/%.3f", static_cast<unsigned long long>(seed), acc[0], acc[1], acc[2]);
  }
  return {holds >= 2, fmt("ordering holds in %d of 3 seeds;", holds) + per_seed};
}

Outcome outcome_only_guard() {
  std::vector<std::string> problems;
  // static: only the generator and the evaluation set builder may name it
  const fs::path src = fs::path(VPG_SOURCE_DIR) / "core" / "src";
  const std::vector<std::string> allowed{"synth/generator.cpp", "train/evaluate.cpp"};
  for (const auto& entry : fs::recursive_directory_iterator(src)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), src).generic_string();
    if (read_file(entry.path()).find("intermediate_truth") == std::string::npos) continue;
    if (std::find(allowed.begin(), allowed.end(), rel) == allowed.end()) problems.push_back("static: " + rel);
  }
  // dynamic: a full training run with evaluation makes no call
  const auto& e = experiment();
  train::TrainConfig c;
  c.epochs_per_stage = 1;
  c.disruption_fraction = 0.2;
  const auto before = synth::intermediate_truth_calls();
  e.run(c);
  if (synth::intermediate_truth_calls() != before) problems.push_back("dynamic: train() reached intermediate_truth");
  {
    synth::OutcomeOnlyScope scope;
    try {
      synth::intermediate_truth(e.data.front());
      problems.push_back("dynamic: guard did not fire");
    } catch (const Error& err) {
      if (err.code() != ErrorCode::InternalError) problems.push_back("dynamic: wrong error from guard");
    }
  }
  std::string detail = "static scan of core/src and a guarded training run";
  for (const auto& p : problems) detail += "; " + p;
  return {problems.empty(), detail};
}

Outcome determinism() {
  train::TrainConfig c;
  c.seed = 11;
  c.deterministic = true;
  c.disruption_fraction = 0.2;
  const auto dir = fs::temp_directory_path() / "vpg-acceptance";
  fs::remove_all(dir);
  train::write_text(dir / "a.csv", train::metrics_csv(experiment().run(c).history));
  c.jobs = 2;
  train::write_text(dir / "b.csv", train::metrics_csv(experiment().run(c).history));
  const std::string a = read_file(dir / "a.csv");
  const std::string b = read_file(dir / "b.csv");
  fs::remove_all(dir);
  return {!a.empty() && a == b, fmt("two runs (1 and 2 jobs), %zu bytes each, identical: %s", a.size(),
                                    a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle exactness", oracle_exactness},
      {"factorized fidelity", factorized_fidelity},
      {"gradient correctness", gradient_correctness},
      {"normalization and boolean calculus", normalization_and_calculus},
      {"argmax consistency", argmax_consistency},
      {"end-to-end learning", end_to_end},
      {"curriculum direction", curriculum_direction},
      {"disruption robustness direction", disruption_direction},
      {"outcome-only supervision guard", outcome_only_guard},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
