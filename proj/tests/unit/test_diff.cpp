#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "support.hpp"
#include "vpg/diff/gradcheck.hpp"
#include "vpg/diff/optim.hpp"
#include "vpg/diff/params.hpp"
#include "vpg/diff/tape.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/train/loss.hpp"
#include "vpg/util/error.hpp"

using namespace vpg;
using namespace vpg::diff;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InternalError;
}

std::vector<double> plain_softmax(std::vector<double> x) {
  double m = *std::max_element(x.begin(), x.end()), total = 0;
  for (auto& v : x) total += (v = std::exp(v - m));
  for (auto& v : x) v /= total;
  return x;
}

ParamStore one_tensor(std::vector<double> values) {
  ParamStore s;
  s.add("w", {values.size()});
  s.tensor(0).values = std::move(values);
  return s;
}

// Negative log-likelihood of a case's label under exact inference.
LossFunction case_loss(const dsl::Program& program, const synth::World& world, const toy::ModuleSet& modules,
                       const Value& label) {
  return [&program, &world, &modules, label](ParamBinding& b) {
    return train::case_nll(engine::infer_exact(program, world, modules, b), label);
  };
}

}  // namespace

TEST_SUITE("diff") {

TEST_CASE("log undoes exp") {
  Tape tape;
  for (int i = -100; i <= 100; ++i) {
    const double x = i / 10.0;
    const auto v = tape.variable(x);
    CHECK(std::abs(log(exp(v)).value() - x) <= 1e-12);
  }
}

TEST_CASE("forward values") {
  Tape tape;
  const auto a = tape.variable(3.0), b = tape.variable(-2.0);
  CHECK((a + b).value() == 1.0);
  CHECK((a - b).value() == 5.0);
  CHECK((a * b).value() == -6.0);
  CHECK((a / b).value() == -1.5);
  CHECK((-a).value() == -3.0);
  CHECK(sigmoid(tape.variable(0.0)).value() == 0.5);
  const Scalar terms[] = {a, b, Scalar(10.0)};
  CHECK(sum(terms).value() == 11.0);
  CHECK(is_constant_value(Scalar(2.0) * Scalar(3.0), 6.0));
  CHECK((Scalar(2.0) * Scalar(3.0)).is_constant());
  // a constant zero factor folds away
  CHECK((a * Scalar(0.0)).is_constant());
  CHECK_FALSE((a * Scalar(2.0)).is_constant());
}

TEST_CASE("softmax of equal logits is uniform") {
  const Scalar z[] = {0.0, 0.0, 0.0};
  for (const auto& p : softmax(z)) CHECK(p.value() == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  Tape tape;
  const Scalar big[] = {tape.variable(1000.0), tape.variable(1000.0)};
  for (const auto& p : softmax(big)) CHECK(p.value() == 0.5);
}

TEST_CASE("softmax derivatives match central differences") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(5);
    std::vector<double> x(n);
    for (auto& v : x) v = rng.uniform(-3, 3);
    Tape tape;
    std::vector<Scalar> leaves;
    for (double v : x) leaves.push_back(tape.variable(v));
    const auto p = softmax(leaves);
    for (std::size_t i = 0; i < n; ++i) {
      const auto adj = tape.adjoints(p[i]);
      for (std::size_t j = 0; j < n; ++j) {
        const double h = 1e-6;
        auto up = x, down = x;
        up[j] += h;
        down[j] -= h;
        const double numeric = (plain_softmax(up)[i] - plain_softmax(down)[i]) / (2 * h);
        const double analytic = adj[leaves[j].id()];
        const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        CHECK(rel < 1e-6);
      }
    }
  }
}

TEST_CASE("sum of a softmax has zero gradient") {
  auto store = one_tensor({0.3, -1.2, 2.0, 0.0});
  Tape tape;
  ParamBinding b(store, &tape);
  std::vector<Scalar> logits;
  for (std::size_t i = 0; i < 4; ++i) logits.push_back(b.get(0, i));
  const auto total = sum(softmax(logits));
  const auto g = b.dense_gradient(total);
  for (double v : g.per_tensor[0]) CHECK(std::abs(v) < 1e-15);
}

TEST_CASE("logistic gradient") {
  for (double theta : {-4.0, -0.5, 0.0, 0.7, 3.0}) {
    auto store = one_tensor({theta});
    Tape tape;
    ParamBinding b(store, &tape);
    const auto g = b.dense_gradient(sigmoid(b.get(0, 0)));
    const double s = 1 / (1 + std::exp(-theta));
    CHECK(std::abs(g.per_tensor[0][0] - s * (1 - s)) < 1e-15);
    const double h = 1e-5;
    const double numeric = (1 / (1 + std::exp(-(theta + h))) - 1 / (1 + std::exp(-(theta - h)))) / (2 * h);
    CHECK(std::abs(g.per_tensor[0][0] - numeric) < 1e-8);
  }
}

TEST_CASE("non-finite values and gradients") {
  Tape tape;
  const auto z = tape.variable(0.0);
  CHECK(code_of([&] { (void)log(z); }) == ErrorCode::NonFiniteValue);
  CHECK(code_of([&] { (void)(tape.variable(1.0) / z); }) == ErrorCode::NonFiniteValue);
  CHECK(code_of([&] { (void)exp(tape.variable(1e6)); }) == ErrorCode::NonFiniteValue);
  const auto x = tape.variable(1.0);
  const Scalar ops[] = {x};
  const double partials[] = {std::numeric_limits<double>::infinity()};
  const auto bad = tape.record(OpKind::Custom, 2.0, ops, partials);
  CHECK(code_of([&] { (void)tape.adjoints(bad); }) == ErrorCode::NonFiniteGradient);
}

TEST_CASE("unreached parameters get zero gradient") {
  ParamStore store;
  store.add("a", {2}, 1.0);
  store.add("b", {3}, 2.0);
  Tape tape;
  ParamBinding binding(store, &tape);
  const auto loss = binding.get(0, 1) * binding.get(0, 1);
  const auto g = binding.dense_gradient(loss);
  CHECK(g.per_tensor[0] == std::vector<double>{0.0, 2.0});
  CHECK(g.per_tensor[1] == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(binding.touched().size() == 1);
}

TEST_CASE("fused linear node") {
  auto store = one_tensor({1.5, -2.0, 4.0});
  Tape tape;
  ParamBinding b(store, &tape);
  const ParamBinding::Term terms[] = {{0, 0, 2.0}, {0, 2, -0.5}};
  const auto y = b.linear(terms);
  CHECK(y.value() == 1.0);
  const auto g = b.dense_gradient(y * y);
  CHECK(g.per_tensor[0] == std::vector<double>{4.0, 0.0, -1.0});
}

TEST_CASE("sgd and adamw") {
  OptimizerConfig sgd;
  sgd.lr = 0.0;
  auto store = one_tensor({1.0, -2.0});
  Gradients g{{{0.5, 0.25}}};
  CHECK(sgd_step(store, g, sgd) == store);
  OptimizerConfig adam;
  adam.kind = OptimizerKind::AdamW;
  adam.lr = 0.0;
  adam.weight_decay = 0.1;
  CHECK(adamw_step(store, g, adam) == store);

  // f(θ) = θ², θ <- θ - 0.1·2θ = 0.8θ
  OptimizerConfig plain;
  plain.lr = 0.1;
  plain.momentum = 0.0;
  Sgd opt(plain);
  auto bowl = one_tensor({1.0});
  for (int i = 0; i < 50; ++i) opt.step(bowl, Gradients{{{2 * bowl.tensor(0).values[0]}}});
  CHECK(std::abs(bowl.tensor(0).values[0]) < 1e-3);
  CHECK(bowl.tensor(0).values[0] == doctest::Approx(std::pow(0.8, 50)).epsilon(1e-12));

  adam.lr = 0.05;
  AdamW a1(adam), a2(adam);
  auto s1 = one_tensor({1.0, -2.0}), s2 = s1;
  for (int i = 0; i < 20; ++i) {
    a1.step(s1, g);
    a2.step(s2, g);
  }
  CHECK(s1 == s2);
  CHECK(s1.tensor(0).values[0] < 1.0);

  CHECK(code_of([&] { sgd_step(store, Gradients{{{1.0}}}, plain); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { sgd_step(store, Gradients{}, plain); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("optimizer config") {
  const auto c = optimizer_config_from_json(nlohmann::ordered_json::parse(R"({"kind": "adamw", "lr": 1e-5})"));
  CHECK(c.kind == OptimizerKind::AdamW);
  CHECK(c.lr == 1e-5);
  CHECK(optimizer_config_from_json(to_json(c)) == c);
  CHECK(code_of([] { optimizer_config_from_json(nlohmann::ordered_json::parse(R"({"rate": 1})")); }) ==
        ErrorCode::ConfigError);
}

TEST_CASE("gradient checker") {
  auto store = one_tensor({0.5, -1.0, 2.0});
  const LossFunction linear = [](ParamBinding& b) {
    return b.get(0, 0) * Scalar(3.0) - b.get(0, 1) * Scalar(2.0) + b.get(0, 2);
  };
  GradCheckOptions opts;
  const auto ok = grad_check(linear, store, opts);
  CHECK(ok.passed());
  CHECK(ok.checked == 3);
  CHECK(ok.max_relative_error < 1e-10);

  // wrong pullback: records d/dx x² as x instead of 2x
  const LossFunction corrupted = [](ParamBinding& b) {
    const auto x = b.get(0, 0);
    if (!b.tape()) return x * x;
    const Scalar ops[] = {x};
    const double partials[] = {x.value()};
    return b.tape()->record(OpKind::Custom, x.value() * x.value(), ops, partials);
  };
  const auto bad = grad_check(corrupted, store, opts);
  CHECK_FALSE(bad.passed());
  REQUIRE(bad.failures.size() == 1);
  CHECK(bad.failures[0].tensor == "w");
  CHECK(bad.failures[0].index == 0);
  CHECK(bad.failures[0].numeric == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("gradient check of the case loss on the post/sign program") {
  const auto program = dsl::parse_program(test::fixture_text("post_sign.vp"));
  synth::World world{{"IMAGE"}, {synth::Scene{4, 4, {}}}};
  world.scenes[0].objects = {{{0, 1}, "post", "red", "wood", "standing"},
                             {{2, 3}, "sign", "red", "metal", "standing"},
                             {{3, 0}, "post", "green", "metal", "standing"}};
  toy::ModuleOptions mo;
  mo.loc.pool_size = 2;
  const auto modules = toy::ModuleRegistry::global().create("toy", mo);
  ParamStore params;
  modules.register_params(params);
  params.randomize(5, 0.5);
  GradCheckOptions opts;
  opts.max_coordinates = 128;
  const auto r = grad_check(case_loss(program, world, modules, Value::token("no")), params, opts);
  CHECK(r.passed());
  CHECK(r.checked == 128);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("backward is linear") {
  toy::ModuleOptions mo;
  mo.loc.pool_size = 2;
  const auto modules = toy::ModuleRegistry::global().create("toy", mo);
  ParamStore params;
  modules.register_params(params);
  params.randomize(9, 0.5);
  Rng rng(10);
  const auto& corpus = test::small_corpus();
  for (int trial = 0; trial < 10; ++trial) {
    const auto& c1 = corpus[rng.below(corpus.size())];
    const auto& c2 = corpus[rng.below(corpus.size())];
    const auto p1 = dsl::parse_program(c1.program_text), p2 = dsl::parse_program(c2.program_text);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    auto grad = [&](double wa, double wb) {
      Tape tape;
      ParamBinding binding(params, &tape);
      const auto l1 = train::case_nll(engine::infer_exact(p1, c1.world, modules, binding), Value::from_label(c1.label));
      const auto l2 = train::case_nll(engine::infer_exact(p2, c2.world, modules, binding), Value::from_label(c2.label));
      return binding.dense_gradient(Scalar(wa) * l1 + Scalar(wb) * l2);
    };
    const auto combined = grad(a, b);
    auto separate = grad(a, 0.0);
    separate.add(grad(0.0, b));
    for (std::size_t t = 0; t < combined.per_tensor.size(); ++t) {
      for (std::size_t i = 0; i < combined.per_tensor[t].size(); ++i) {
        CHECK(std::abs(combined.per_tensor[t][i] - separate.per_tensor[t][i]) < 1e-12);
      }
    }
  }
}

TEST_CASE("identical inputs give identical tapes") {
  const auto& rec = test::small_corpus()[3];
  const auto program = dsl::parse_program(rec.program_text);
  const auto modules = toy::ModuleRegistry::global().create("toy");
  ParamStore params;
  modules.register_params(params);
  params.randomize(12, 0.3);
  auto once = [&](std::vector<double>& values) {
    Tape tape;
    ParamBinding binding(params, &tape);
    const auto loss = train::case_nll(engine::infer_exact(program, rec.world, modules, binding),
                                      Value::from_label(rec.label));
    for (std::uint32_t i = 0; i < tape.size(); ++i) values.push_back(tape.value(i));
    return binding.dense_gradient(loss);
  };
  std::vector<double> v1, v2;
  const auto g1 = once(v1), g2 = once(v2);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("parameter store") {
  ParamStore s;
  CHECK(s.add("loc.bias", {1}) == 0);
  CHECK(s.add("vqa.x", {2, 3}, 0.5) == 1);
  CHECK(s.add("loc.bias", {1}) == 0);
  CHECK(code_of([&] { s.add("loc.bias", {2}); }) == ErrorCode::ShapeMismatch);
  CHECK(s.parameter_count() == 7);
  CHECK(s.index_of("vqa.x") == 1);
  CHECK_FALSE(s.find("nope"));
  s.randomize(3, 0.1);
  for (const auto& t : s.tensors()) {
    for (double v : t.values) CHECK(std::abs(v) <= 0.1);
  }
  auto r = s;
  r.randomize(3, 0.1);
  CHECK(r == s);

  CHECK(ParamStore::from_json(s.to_json()) == s);
  const auto path = std::filesystem::temp_directory_path() / "vpg-test-params.json";
  s.save(path);
  CHECK(ParamStore::load(path) == s);
  std::filesystem::remove(path);

  auto j = s.to_json();
  j["version"] = 99;
  CHECK(code_of([&] { ParamStore::from_json(j); }) == ErrorCode::InvalidData);
  j = s.to_json();
  j["tensors"][1]["values"].erase(0);
  CHECK(code_of([&] { ParamStore::from_json(j); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([] { ParamStore::load("/nonexistent/params.json"); }) == ErrorCode::IoError);
}

}
