#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "vpg/engine/factor.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/util/error.hpp"

using namespace vpg;
using engine::InferenceMode;

namespace {

const std::vector<InferenceMode> kProbModes = {InferenceMode::Factorized, InferenceMode::Exact,
                                               InferenceMode::BruteForce};

Categorical run(InferenceMode mode, const test::FixtureCase& c, const diff::ParamStore& params = test::no_params(),
                const engine::InferenceOptions& options = {}) {
  diff::ParamBinding binding(params);
  if (mode == InferenceMode::BruteForce) return engine::brute_force(c.program, c.world, c.modules, params, options);
  return engine::infer(mode, c.program, c.world, c.modules, binding, options);
}

Value tok(const char* s) { return Value::token(s); }

struct ToyCase {
  toy::ModuleSet modules;
  diff::ParamStore params;
};

ToyCase toy_modules(std::uint64_t seed, int pool, double scale) {
  toy::ModuleOptions opts;
  opts.loc.pool_size = pool;
  ToyCase t{toy::ModuleRegistry::global().create("toy", opts), {}};
  t.modules.register_params(t.params);
  t.params.randomize(seed, scale);
  return t;
}

engine::Factor random_factor(Rng& rng, std::vector<std::string> scope, const std::map<std::string, std::size_t>& cards) {
  engine::Factor f;
  f.scope = std::move(scope);
  std::size_t n = 1;
  for (const auto& v : f.scope) {
    f.cards.push_back(cards.at(v));
    n *= cards.at(v);
  }
  for (std::size_t i = 0; i < n; ++i) f.table.emplace_back(rng.uniform(0.05, 1.0));
  return f;
}

std::vector<double> values(const engine::Factor& f) {
  std::vector<double> out;
  for (const auto& s : f.table) out.push_back(s.value());
  return out;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("two-detection marginal") {
  const auto c = test::load_fixture_case("marginal_case.json");
  for (auto mode : kProbModes) {
    const auto d = run(mode, c);
    CHECK(d.prob_of(tok("yes")) == doctest::Approx(0.62).epsilon(1e-12));
    CHECK(d.prob_of(tok("no")) == doctest::Approx(0.38).epsilon(1e-12));
    CHECK(d.total() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("one-hot LOC gives the VQA distribution of its crop") {
  auto j = nlohmann::ordered_json::parse(test::fixture_text("marginal_case.json"));
  j["fixture"]["loc"][0]["outcomes"] = nlohmann::ordered_json::parse(R"([{"boxes": [[1, 1]], "p": 1.0}])");
  toy::ModuleOptions opts;
  opts.fixture = j["fixture"];
  const test::FixtureCase c{dsl::parse_program(j["program"].get<std::string>()), synth::world_from_json(j["images"]),
                            toy::ModuleRegistry::global().create("fixture", opts)};
  for (auto mode : kProbModes) {
    const auto d = run(mode, c);
    CHECK(d.prob_of(tok("yes")) == 0.2);
    CHECK(d.prob_of(tok("no")) == 0.8);
  }
}

TEST_CASE("shared latent: exact and factorized disagree") {
  const auto c = test::load_fixture_case("shared_latent_case.json");
  CHECK(run(InferenceMode::Exact, c).prob_of(kTrue) == 0.5);
  CHECK(run(InferenceMode::BruteForce, c).prob_of(kTrue) == 0.5);
  CHECK(run(InferenceMode::Factorized, c).prob_of(kTrue) == 0.25);
  CHECK(run(InferenceMode::Factorized, c).prob_of(kFalse) == 0.75);
}

TEST_CASE("one-hot modules: every mode is the argmax executor") {
  const auto c = test::load_fixture_case("onehot_case.json");
  diff::ParamBinding binding(test::no_params());
  const auto trace = engine::execute_argmax(c.program, c.world, c.modules, binding);
  CHECK(trace.result == tok("no"));
  REQUIRE(trace.find("ANSWER0"));
  CHECK(*trace.find("ANSWER0") == tok("red"));
  CHECK(trace.find("IMAGE1")->as_region() == Region{0, 1, 2, 2, 3});
  for (auto mode : {InferenceMode::Argmax, InferenceMode::Factorized, InferenceMode::Exact, InferenceMode::BruteForce}) {
    const auto d = run(mode, c);
    REQUIRE(d.size() == 1);
    CHECK(d.support()[0] == trace.result);
    CHECK(d.probs()[0].value() == 1.0);
  }
}

TEST_CASE("low-ranked correct answer loses under argmax") {
  const auto c = test::load_fixture_case("laptop_case.json");
  diff::ParamBinding binding(test::no_params());
  const auto trace = engine::execute_argmax(c.program, c.world, c.modules, binding);
  CHECK(*trace.find("ANSWER0") == tok("no"));
  CHECK(trace.result == tok("no"));
  CHECK(run(InferenceMode::Exact, c).prob_of(tok("yes")) == doctest::Approx(0.30));

  auto j = nlohmann::ordered_json::parse(test::fixture_text("laptop_case.json"));
  j["fixture"]["vqa"][0]["dist"] = {{"yes", 0.99}, {"no", 0.005}, {"maybe", 0.005}};
  toy::ModuleOptions opts;
  opts.fixture = j["fixture"];
  const auto trained = toy::ModuleRegistry::global().create("fixture", opts);
  const auto after = engine::execute_argmax(c.program, c.world, trained, binding);
  CHECK(after.result == tok("yes"));
}

TEST_CASE("color comparison matches the sum over unequal pairs") {
  const auto program = dsl::parse_program(test::fixture_text("post_sign.vp"));
  synth::World world{{"IMAGE"}, {synth::Scene{4, 4, {}}}};
  world.scenes[0].objects = {{{0, 1}, "post", "red", "wood", "standing"},
                             {{2, 3}, "sign", "blue", "metal", "standing"},
                             {{3, 0}, "post", "green", "metal", "standing"},
                             {{1, 2}, "cup", "red", "plastic", "sitting"}};
  world.scenes[0].validate();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto t = toy_modules(seed, 2, 1.0);
    diff::ParamBinding binding(t.params);
    // each answer's marginal through a one-answer program
    const std::string head =
        "BOX0=LOC(image=IMAGE,object='post')\nIMAGE0=CROP(image=IMAGE,box=BOX0)\n"
        "BOX1=LOC(image=IMAGE,object='sign')\nIMAGE1=CROP(image=IMAGE,box=BOX1)\n"
        "ANSWER0=VQA(image=IMAGE0,question='What color is the post?')\n"
        "ANSWER1=VQA(image=IMAGE1,question='What color is the sign?')\n";
    const auto p0 = engine::infer_exact(dsl::parse_program(head + "FINAL_RESULT=RESULT(var=ANSWER0)"), world,
                                        t.modules, binding);
    const auto p1 = engine::infer_exact(dsl::parse_program(head + "FINAL_RESULT=RESULT(var=ANSWER1)"), world,
                                        t.modules, binding);
    double expected = 0;
    for (std::size_t a = 0; a < p0.size(); ++a) {
      for (std::size_t b = 0; b < p1.size(); ++b) {
        if (p0.support()[a] != p1.support()[b]) expected += p0.probs()[a].value() * p1.probs()[b].value();
      }
    }
    const auto fact = engine::infer_factorized(program, world, t.modules, binding);
    const auto exact = engine::infer_exact(program, world, t.modules, binding);
    const auto brute = engine::brute_force(program, world, t.modules, t.params);
    CHECK(fact.prob_of(tok("yes")) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(exact.prob_of(tok("yes")) - expected) < 1e-12);
    CHECK(std::abs(brute.prob_of(tok("yes")) - expected) < 1e-12);
  }
}

TEST_CASE("exact, brute force and factorized on a generated corpus") {
  const auto t = toy_modules(17, 2, 1.0);
  std::size_t shared_free = 0;
  for (const auto& rec : test::small_corpus()) {
    if (rec.meta.num_visual_steps > 4) continue;
    const auto program = dsl::parse_program(rec.program_text);
    diff::ParamBinding binding(t.params);
    const auto exact = engine::infer_exact(program, rec.world, t.modules, binding);
    const auto brute = engine::brute_force(program, rec.world, t.modules, t.params);
    CHECK_NOTHROW(exact.validate(1e-9));
    CHECK_NOTHROW(brute.validate(1e-9));
    CHECK_MESSAGE(max_abs_difference(exact, brute) < 1e-9, rec.id);
    const auto fact = engine::infer_factorized(program, rec.world, t.modules, binding);
    CHECK_NOTHROW(fact.validate(1e-9));
    if (dsl::detect_shared_latents(program).empty()) {
      ++shared_free;
      CHECK_MESSAGE(max_abs_difference(exact, fact) < 1e-9, rec.id);
    }
  }
  CHECK(shared_free > 50);
}

TEST_CASE("one-hot modules on a generated corpus") {
  const auto oracle = toy::ModuleRegistry::global().create("oracle");
  for (const auto& rec : test::small_corpus()) {
    const auto program = dsl::parse_program(rec.program_text);
    diff::ParamBinding binding(test::no_params());
    const auto trace = engine::execute_argmax(program, rec.world, oracle, binding);
    const auto exact = engine::infer_exact(program, rec.world, oracle, binding);
    CHECK(exact.support()[exact.argmax()] == trace.result);
    CHECK(exact.probs()[exact.argmax()].value() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(to_string(trace.result) == rec.label);
  }
}

TEST_CASE("conditioning a detection agrees with substitution") {
  const auto c = test::load_fixture_case("marginal_case.json");
  engine::InferenceOptions opts;
  opts.interventions["BOX0"] = Detection{0, {{1, 1}}};
  for (auto mode : kProbModes) {
    const auto d = run(mode, c, test::no_params(), opts);
    CHECK(d.prob_of(tok("yes")) == doctest::Approx(0.2).epsilon(1e-12));
  }
  const auto shared = test::load_fixture_case("shared_latent_case.json");
  opts.interventions["BOX0"] = Detection{0, {{0, 0}}};
  for (auto mode : kProbModes) CHECK(run(mode, shared, test::no_params(), opts).prob_of(kTrue) == 1.0);

  // the same on a toy-module corpus: every mode equals brute force with the
  // LOC fixed at its argmax
  const auto t = toy_modules(8, 2, 1.0);
  for (const auto& rec : test::small_corpus()) {
    const auto program = dsl::parse_program(rec.program_text);
    if (rec.meta.num_visual_steps > 4 || !program.producer("BOX0")) continue;
    diff::ParamBinding binding(t.params);
    const auto trace = engine::execute_argmax(program, rec.world, t.modules, binding);
    engine::InferenceOptions o;
    o.interventions["BOX0"] = *trace.find("BOX0");
    const auto brute = engine::brute_force(program, rec.world, t.modules, t.params, o);
    CHECK(max_abs_difference(engine::infer_exact(program, rec.world, t.modules, binding, o), brute) < 1e-9);
    if (dsl::detect_shared_latents(program).empty()) {
      CHECK(max_abs_difference(engine::infer_factorized(program, rec.world, t.modules, binding, o), brute) < 1e-9);
    }
  }
}

TEST_CASE("support caps") {
  const auto c = test::load_fixture_case("marginal_case.json");
  engine::InferenceOptions tiny;
  tiny.max_factor_entries = 1;
  tiny.max_assignments = 1;
  auto code = [&](InferenceMode mode) {
    try {
      run(mode, c, test::no_params(), tiny);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InternalError;
  };
  CHECK(code(InferenceMode::Exact) == ErrorCode::SupportExplosion);
  CHECK(code(InferenceMode::BruteForce) == ErrorCode::SupportExplosion);
}

TEST_CASE("missing input image is a module failure") {
  const auto c = test::load_fixture_case("marginal_case.json");
  const auto p = dsl::parse_program("ANSWER0=VQA(image=LEFT,question='Is the dog standing?')\nR=RESULT(var=ANSWER0)");
  diff::ParamBinding binding(test::no_params());
  try {
    engine::infer_exact(p, c.world, c.modules, binding);
    FAIL("no error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ModuleFailure);
  }
}

TEST_CASE("elimination order does not change the result") {
  Rng rng(2718);
  const std::vector<std::string> vars = {"A", "B", "C", "D"};
  for (int trial = 0; trial < 40; ++trial) {
    std::map<std::string, std::size_t> cards;
    for (const auto& v : vars) cards[v] = static_cast<std::size_t>(rng.between(1, 3));
    std::vector<engine::Factor> factors;
    const int n = static_cast<int>(rng.between(2, 5));
    for (int k = 0; k < n; ++k) {
      std::vector<std::string> scope;
      for (const auto& v : vars) {
        if (rng.chance(0.5)) scope.push_back(v);
      }
      if (scope.empty()) scope.push_back(rng.pick(vars));
      factors.push_back(random_factor(rng, scope, cards));
    }
    std::vector<std::string> keep = {"A"};
    factors.push_back(random_factor(rng, {"A"}, cards));
    std::vector<std::string> order = {"B", "C", "D"};
    std::optional<std::vector<double>> reference;
    do {
      const auto out = engine::eliminate(factors, order, keep, 1'000'000);
      CHECK(out.scope == keep);
      if (!reference) {
        reference = values(out);
        continue;
      }
      const auto got = values(out);
      REQUIRE(got.size() == reference->size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(std::abs(got[i] - (*reference)[i]) <= 1e-12 * std::max(1.0, std::abs(got[i])));
      }
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST_CASE("elimination order heuristics") {
  Rng rng(3);
  std::map<std::string, std::size_t> cards{{"A", 2}, {"B", 2}, {"C", 2}, {"D", 2}};
  // chain A -> B -> C, keeping the root
  std::vector<engine::Factor> chain = {random_factor(rng, {"A"}, cards), random_factor(rng, {"A", "B"}, cards),
                                       random_factor(rng, {"B", "C"}, cards)};
  CHECK(engine::elimination_order(chain, {"A"}) == std::vector<std::string>{"C", "B"});
  // two disconnected groups
  std::vector<engine::Factor> groups = {random_factor(rng, {"A", "B"}, cards), random_factor(rng, {"C", "D"}, cards)};
  const auto order = engine::elimination_order(groups, {"A", "C"});
  CHECK(order == std::vector<std::string>{"B", "D"});
  const auto joint = engine::eliminate(groups, order, {"A", "C"}, 1'000'000);
  for (std::size_t a = 0; a < 2; ++a) {
    const double left = groups[0].table[a * 2].value() + groups[0].table[a * 2 + 1].value();
    for (std::size_t c = 0; c < 2; ++c) {
      const double right = groups[1].table[c * 2].value() + groups[1].table[c * 2 + 1].value();
      CHECK(joint.table[a * 2 + c].value() == doctest::Approx(left * right).epsilon(1e-14));
    }
  }
}

TEST_CASE("factor product cap") {
  Rng rng(4);
  std::map<std::string, std::size_t> cards{{"A", 3}, {"B", 3}};
  const auto f = random_factor(rng, {"A"}, cards);
  const auto g = random_factor(rng, {"B"}, cards);
  const engine::Factor* both[] = {&f, &g};
  CHECK_THROWS_AS(engine::product(both, {"A", "B"}, std::nullopt, 4), Error);
  const auto p = engine::product(both, {"A", "B"}, std::nullopt, 100);
  CHECK(p.table[1 * 3 + 2].value() == doctest::Approx(f.table[1].value() * g.table[2].value()));
}

TEST_CASE("inference json") {
  const auto c = test::load_fixture_case("marginal_case.json");
  const auto j = engine::inference_json(run(InferenceMode::Exact, c), InferenceMode::Exact, "marginal");
  CHECK(j.at("mode") == "exact");
  CHECK(j.at("program_id") == "marginal");
  CHECK(j.at("support") == nlohmann::ordered_json::parse(R"(["yes","no"])"));
  CHECK(engine::mode_from_string("brute") == InferenceMode::BruteForce);
  CHECK_THROWS_AS(engine::mode_from_string("sampling"), Error);
}

TEST_CASE("gradient of the total probability vanishes") {
  const auto t = toy_modules(23, 2, 0.5);
  int checked = 0;
  for (const auto& rec : test::small_corpus()) {
    if (rec.meta.num_visual_steps > 3 || checked >= 20) continue;
    ++checked;
    const auto program = dsl::parse_program(rec.program_text);
    for (auto mode : {InferenceMode::Exact, InferenceMode::Factorized}) {
      diff::Tape tape;
      diff::ParamBinding binding(t.params, &tape);
      const auto d = engine::infer(mode, program, rec.world, t.modules, binding);
      const auto total = diff::sum(d.probs());
      if (total.is_constant()) continue;
      const auto g = binding.gradient(total);
      for (const auto& e : g.entries) CHECK(std::abs(e.value) < 1e-10);
    }
  }
  CHECK(checked == 20);
}

}
