#include <benchmark/benchmark.h>

#include "vpg/dsl/ast.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/synth/generator.hpp"
#include "vpg/toy/module.hpp"
#include "vpg/train/evaluate.hpp"
#include "vpg/train/trainer.hpp"

using namespace vpg;

namespace {

struct Fixture {
  std::vector<synth::CaseRecord> cases;
  std::vector<dsl::Program> programs;
  toy::ModuleSet modules;
  diff::ParamStore params;

  explicit Fixture(int max_steps) {
    synth::DatasetConfig c;
    c.cases = 200;
    c.seed = 42;
    c.constraints.max_visual_steps = max_steps;
    c.constraints.min_visual_steps = max_steps;
    cases = synth::gen_dataset(c);
    for (const auto& r : cases) programs.push_back(dsl::parse_program(r.program_text));
    toy::ModuleOptions o;
    o.loc.pool_size = 2;
    modules = toy::ModuleRegistry::global().create("toy", o);
    modules.register_params(params);
    params.randomize(1, 1.0);
  }
};

const Fixture& fixture(int steps) {
  static const Fixture f[4] = {Fixture(1), Fixture(2), Fixture(3), Fixture(4)};
  return f[steps - 1];
}

void BM_Parse(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dsl::parse_program(f.cases[i++ % f.cases.size()].program_text));
  }
}

template <typename Run>
void run_cases(benchmark::State& state, Run run) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    const std::size_t k = i++ % f.cases.size();
    run(f, k);
  }
}

void BM_Exact(benchmark::State& state) {
  run_cases(state, [](const Fixture& f, std::size_t k) {
    diff::ParamBinding b(f.params);
    benchmark::DoNotOptimize(engine::infer_exact(f.programs[k], f.cases[k].world, f.modules, b));
  });
}

void BM_Factorized(benchmark::State& state) {
  run_cases(state, [](const Fixture& f, std::size_t k) {
    diff::ParamBinding b(f.params);
    benchmark::DoNotOptimize(engine::infer_factorized(f.programs[k], f.cases[k].world, f.modules, b));
  });
}

void BM_BruteForce(benchmark::State& state) {
  run_cases(state, [](const Fixture& f, std::size_t k) {
    benchmark::DoNotOptimize(engine::brute_force(f.programs[k], f.cases[k].world, f.modules, f.params));
  });
}

void BM_Argmax(benchmark::State& state) {
  run_cases(state, [](const Fixture& f, std::size_t k) {
    diff::ParamBinding b(f.params);
    benchmark::DoNotOptimize(engine::execute_argmax(f.programs[k], f.cases[k].world, f.modules, b));
  });
}

void BM_BatchGradient(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const auto prepared = train::prepare(f.cases);
  std::vector<const train::PreparedCase*> batch;
  for (std::size_t i = 0; i < 32; ++i) batch.push_back(&prepared[i]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        train::batch_gradient(batch, f.modules, f.params, engine::InferenceMode::Exact, {}).loss);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}

}  // namespace

BENCHMARK(BM_Parse)->DenseRange(1, 4);
BENCHMARK(BM_Exact)->DenseRange(1, 4);
BENCHMARK(BM_Factorized)->DenseRange(1, 4);
BENCHMARK(BM_BruteForce)->DenseRange(1, 4);
BENCHMARK(BM_Argmax)->DenseRange(1, 4);
BENCHMARK(BM_BatchGradient)->DenseRange(1, 4);

BENCHMARK_MAIN();
