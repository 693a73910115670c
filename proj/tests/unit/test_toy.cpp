#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "support.hpp"
#include "vpg/diff/gradcheck.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/toy/toy_modules.hpp"
#include "vpg/train/loss.hpp"
#include "vpg/train/trainer.hpp"
#include "vpg/util/error.hpp"

using namespace vpg;
using dsl::ModuleKind;

namespace {

synth::World street() {
  synth::World w{{"IMAGE"}, {synth::Scene{4, 5, {}}}};
  w.scenes[0].objects = {{{0, 1}, "post", "red", "wood", "standing"},
                         {{2, 3}, "sign", "blue", "metal", "standing"},
                         {{3, 0}, "post", "green", "metal", "sitting"},
                         {{1, 4}, "dog", "black", "wood", "walking"}};
  w.scenes[0].validate();
  return w;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InternalError;
}

diff::ParamStore params_for(const toy::LocModule& loc) {
  diff::ParamStore s;
  loc.register_params(s);
  return s;
}

diff::ParamStore params_for(const toy::VqaModule& vqa) {
  diff::ParamStore s;
  vqa.register_params(s);
  return s;
}

Value tok(const char* s) { return Value::token(s); }

}  // namespace

TEST_SUITE("toymodules") {

TEST_CASE("nothing above the pool threshold") {
  toy::ToyLoc loc({4, std::numeric_limits<double>::infinity()});
  const auto w = street();
  auto store = params_for(loc);
  diff::ParamBinding b(store);
  const auto d = loc.locate(w, w.whole(0), "post", b);
  REQUIRE(d.size() == 1);
  CHECK(d.support()[0] == Value(Detection{0, {}}));
  CHECK(d.probs()[0].value() == 1.0);
}

TEST_CASE("pool of one cell") {
  toy::ToyLoc loc({1});
  const auto w = street();
  auto store = params_for(loc);
  store.tensor(store.index_of(toy::ToyLoc::kBias)).values[0] = std::log(4.0);  // sigmoid = 0.8
  diff::ParamBinding b(store);
  const auto d = loc.locate(w, w.whole(0), "post", b);
  REQUIRE(d.size() == 2);
  CHECK(d.support()[0] == Value(Detection{0, {}}));
  CHECK(d.probs()[0].value() == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(d.support()[1] == Value(Detection{0, {{0, 0}}}));
  CHECK(d.probs()[1].value() == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("pool of two even cells and its count") {
  toy::ModuleOptions mo;
  mo.loc.pool_size = 2;
  const auto modules = toy::ModuleRegistry::global().create("toy", mo);
  diff::ParamStore store;
  modules.register_params(store);
  const auto w = street();
  diff::ParamBinding b(store);
  const auto d = modules.loc->locate(w, w.whole(0), "post", b);
  REQUIRE(d.size() == 4);
  for (const auto& p : d.probs()) CHECK(p.value() == 0.25);
  const auto program = dsl::parse_program("BOX0=LOC(image=IMAGE,object='post')\nANSWER0=COUNT(box=BOX0)\n"
                                          "FINAL_RESULT=RESULT(var=ANSWER0)");
  for (auto mode : {engine::InferenceMode::Exact, engine::InferenceMode::Factorized}) {
    const auto c = engine::infer(mode, program, w, modules, b);
    CHECK(c.prob_of(Value(0)) == 0.25);
    CHECK(c.prob_of(Value(1)) == 0.5);
    CHECK(c.prob_of(Value(2)) == 0.25);
  }
  CHECK(engine::brute_force(program, w, modules, store).prob_of(Value(1)) == 0.5);
}

TEST_CASE("unknown object name") {
  toy::ToyLoc loc;
  const auto w = street();
  auto store = params_for(loc);
  diff::ParamBinding b(store);
  CHECK(code_of([&] { loc.locate(w, w.whole(0), "unicorn", b); }) == ErrorCode::OutOfVocabulary);
}

TEST_CASE("pool selection ignores a common score shift") {
  toy::ToyLoc loc({3});
  const auto w = street();
  auto store = params_for(loc);
  store.randomize(4, 1.0);
  diff::ParamBinding before(store);
  const auto pool = loc.pool(w, w.whole(0), "post", before);
  const auto d = loc.locate(w, w.whole(0), "post", before);
  auto shifted = store;
  shifted.tensor(shifted.index_of(toy::ToyLoc::kBias)).values[0] += 2.5;
  diff::ParamBinding after(shifted);
  CHECK(loc.pool(w, w.whole(0), "post", after) == pool);
  const auto e = loc.locate(w, w.whole(0), "post", after);
  CHECK(std::equal(d.support().begin(), d.support().end(), e.support().begin(), e.support().end()));
  CHECK(max_abs_difference(d, e) > 1e-3);
}

TEST_CASE("loc distributions are normalized") {
  const auto modules = toy::ModuleRegistry::global().create("toy");
  diff::ParamStore store;
  modules.register_params(store);
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    store.randomize(rng.next(), 2.0);
    synth::World w{{"IMAGE"}, {synth::gen_scene(rng.next(), {static_cast<int>(rng.between(1, 8)),
                                                             static_cast<int>(rng.between(1, 8))})}};
    diff::ParamBinding b(store);
    const auto d = modules.loc->locate(w, w.whole(0), rng.pick(synth::Vocabulary::categories()), b);
    CHECK_NOTHROW(d.validate(1e-9));
    CHECK(d.size() <= 16);
  }
}

TEST_CASE("zero weights answer uniformly") {
  toy::ToyVqa vqa;
  const auto w = street();
  auto store = params_for(vqa);
  diff::ParamBinding b(store);
  const auto colors = vqa.answer(w, w.whole(0), "What color is the post?", b);
  CHECK(colors.size() == synth::Vocabulary::colors().size());
  for (const auto& p : colors.probs()) CHECK(p.value() == doctest::Approx(1.0 / 6).epsilon(1e-15));
  const auto yn = vqa.answer(w, w.whole(0), "Is there a dog?", b);
  CHECK(yn.prob_of(tok("yes")) == 0.5);
  const auto counts = vqa.answer(w, w.whole(0), "How many posts are in the image?", b);
  CHECK(counts.index_of(Value(0)));
  CHECK(counts.index_of(Value(4)));
  CHECK(code_of([&] { vqa.answer(w, w.whole(0), "Why is the sky blue?", b); }) == ErrorCode::UnknownTemplate);
  CHECK(code_of([&] { vqa.answer(w, w.whole(0), "What color is the unicorn?", b); }) ==
        ErrorCode::OutOfVocabulary);
}

TEST_CASE("answer order permutes probabilities") {
  const auto& base = toy::question_template("color_query");
  auto reversed = base;
  std::reverse(reversed.answers.begin(), reversed.answers.end());
  toy::ToyVqa a({base}), b({reversed});
  auto pa = params_for(a);
  pa.randomize(21, 1.0);
  auto pb = pa;
  auto& wa = pa.tensor(0);
  auto& wb = pb.tensor(0);
  const std::size_t rows = base.answers.size(), cols = toy::ToyVqa::kInputSize;
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(wa.values.begin() + static_cast<std::ptrdiff_t>(r * cols), cols,
                wb.values.begin() + static_cast<std::ptrdiff_t>((rows - 1 - r) * cols));
  }
  const auto w = street();
  diff::ParamBinding ba(pa), bb(pb);
  const auto da = a.answer(w, Region{0, 0, 0, 2, 3}, "What color is the post?", ba);
  const auto db = b.answer(w, Region{0, 0, 0, 2, 3}, "What color is the post?", bb);
  for (const auto& v : da.support()) CHECK(da.prob_of(v) == doctest::Approx(db.prob_of(v)).epsilon(1e-14));
  CHECK(db.support()[0] == da.support()[rows - 1]);
}

TEST_CASE("logits reproducing a wrong ranking") {
  toy::QuestionTemplate t{"material_verify", "Is the {obj} made of {attr}?", toy::SlotKind::Material,
                          {tok("no"), tok("yes"), tok("other")}};
  toy::ToyVqa vqa({t});
  auto store = params_for(vqa);
  const double p[] = {0.69, 0.30, 0.01};
  for (std::size_t r = 0; r < 3; ++r) {
    store.tensor(0).values[r * toy::ToyVqa::kInputSize + toy::ToyVqa::kInputSize - 1] = std::log(p[r]);
  }
  synth::World w{{"IMAGE"}, {synth::Scene{2, 2, {{{0, 0}, "laptop", "white", "plastic", "standing"}}}}};
  diff::ParamBinding b(store);
  const auto d = vqa.answer(w, Region{0, 0, 0, 1, 1}, "Is the laptop made of plastic?", b);
  CHECK(d.prob_of(tok("no")) == doctest::Approx(0.69).epsilon(1e-12));
  CHECK(d.prob_of(tok("yes")) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(d.support()[d.argmax()] == tok("no"));
  CHECK(toy::true_answer(w, Region{0, 0, 0, 1, 1}, "Is the laptop made of plastic?") == tok("yes"));
}

TEST_CASE("color query learned from final answers alone") {
  synth::DatasetConfig dc;
  dc.cases = 300;
  dc.seed = 3;
  dc.templates = {"color_query"};
  const auto data = synth::gen_dataset(dc);
  train::TrainConfig tc;
  tc.curriculum = {{2, 0}};
  tc.epochs_per_stage = 15;
  tc.seed = 1;
  const auto modules = toy::ModuleRegistry::global().create("toy");
  const auto result = train::train(tc, data, modules, train::init_params(tc, modules));
  auto w = street();
  diff::ParamBinding b(result.params);
  // red post in its own crop
  const auto d = modules.vqa->answer(w, Region{0, 0, 1, 1, 2}, "What color is the post?", b);
  CHECK(d.support()[d.argmax()] == tok("red"));
  CHECK(d.support()[d.argmax()] == toy::true_answer(w, Region{0, 0, 1, 1, 2}, "What color is the post?"));
}

TEST_CASE("module gradients") {
  const auto w = street();
  toy::ModuleOptions mo;
  mo.loc.pool_size = 3;
  const auto modules = toy::ModuleRegistry::global().create("toy", mo);
  diff::ParamStore store;
  modules.register_params(store);
  store.randomize(13, 0.7);
  const Detection target{0, {{0, 1}}};
  const diff::LossFunction loc_loss = [&](diff::ParamBinding& b) {
    const auto d = modules.loc->locate(w, w.whole(0), "post", b);
    diff::Scalar total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) total += d.probs()[i] * diff::Scalar(static_cast<double>(i + 1));
    return total;
  };
  diff::GradCheckOptions opts;
  opts.max_coordinates = 200;
  const auto r1 = diff::grad_check(loc_loss, store, opts);
  CHECK(r1.passed());
  CHECK(r1.max_relative_error < 1e-4);

  for (const char* q : {"What color is the sign?", "Is the dog walking?", "How many posts are in the image?",
                        "Does the post have red color?"}) {
    const diff::LossFunction vqa_loss = [&](diff::ParamBinding& b) {
      const auto d = modules.vqa->answer(w, Region{0, 0, 1, 3, 5}, q, b);
      return train::case_nll(d, d.support()[0]);
    };
    const auto r2 = diff::grad_check(vqa_loss, store, opts);
    CHECK_MESSAGE(r2.passed(), q);
  }
}

TEST_CASE("crop geometry") {
  const Region grid{0, 0, 0, 4, 5};
  const Detection box{0, {{1, 2}}};
  CHECK(toy::crop(grid, Detection{0, {}}, ModuleKind::Crop) == grid);
  CHECK(toy::crop(grid, Detection{0, {}}, ModuleKind::CropRightOf) == grid);
  CHECK(toy::crop(grid, box, ModuleKind::Crop) == Region{0, 1, 2, 2, 3});
  CHECK(toy::crop(grid, box, ModuleKind::CropRightOf) == Region{0, 0, 3, 4, 5});
  CHECK(toy::crop(grid, box, ModuleKind::CropLeftOf) == Region{0, 0, 0, 4, 2});
  CHECK(toy::crop(grid, box, ModuleKind::CropBelow) == Region{0, 2, 0, 4, 5});
  CHECK(toy::crop(grid, box, ModuleKind::CropAbove) == Region{0, 0, 0, 1, 5});
  CHECK(toy::crop(grid, box, ModuleKind::CropInFrontOf) == toy::crop(grid, box, ModuleKind::CropBelow));
  CHECK(toy::crop(grid, box, ModuleKind::CropBehind) == toy::crop(grid, box, ModuleKind::CropAbove));
  // half-planes past the border keep one cell
  CHECK(toy::crop(grid, Detection{0, {{0, 4}}}, ModuleKind::CropRightOf) == Region{0, 0, 4, 4, 5});
  CHECK(toy::crop(grid, Detection{0, {{0, 4}}}, ModuleKind::CropAbove) == Region{0, 0, 0, 1, 5});
  // the first box wins
  CHECK(toy::crop(grid, Detection{0, {{3, 3}, {0, 0}}}, ModuleKind::Crop) == Region{0, 3, 3, 4, 4});
  const auto once = toy::crop(grid, box, ModuleKind::Crop);
  CHECK(toy::crop(once, box, ModuleKind::Crop) == once);
  // detections from the other image leave the region alone
  CHECK(toy::crop(grid, Detection{1, {{1, 2}}}, ModuleKind::Crop) == grid);
}

TEST_CASE("count") {
  CHECK(toy::count(Detection{0, {}}) == 0);
  CHECK(toy::count(Detection{0, {{0, 0}, {1, 1}}}) == 2);
}

TEST_CASE("ground truth helpers") {
  const auto w = street();
  CHECK(toy::true_detection(w, w.whole(0), "post") == Detection{0, {{0, 1}, {3, 0}}});
  CHECK(toy::true_detection(w, Region{0, 0, 0, 2, 5}, "post") == Detection{0, {{0, 1}}});
  CHECK(toy::true_detection(w, w.whole(0), "cup").boxes.empty());
  CHECK(toy::true_answer(w, w.whole(0), "How many posts are in the image?") == Value(2));
  CHECK(toy::true_answer(w, w.whole(0), "Is there a cup?") == tok("no"));
  CHECK(toy::true_answer(w, Region{0, 0, 1, 1, 2}, "What color is the post?") == tok("red"));
  CHECK(toy::true_answer(w, Region{0, 0, 1, 1, 2}, "Does the post have red color?") == tok("yes"));
}

TEST_CASE("question templates") {
  CHECK(toy::question_templates().size() == 8);
  const auto q = toy::parse_question("Is the dog walking?");
  CHECK(q.tmpl->id == "activity_verify");
  CHECK(q.object == "dog");
  CHECK(q.attribute == "walking");
  for (const auto& t : toy::question_templates()) {
    const auto& vocab = toy::slot_vocabulary(t.attribute);
    const std::string attr = vocab.empty() ? "" : vocab.front();
    const auto text = toy::render_question(t, "cup", attr);
    const auto back = toy::parse_question(text);
    CHECK(back.tmpl->id == t.id);
    CHECK(back.object == "cup");
    CHECK(back.attribute == attr);
  }
}

TEST_CASE("registry and fixtures") {
  auto names = toy::ModuleRegistry::global().names();
  for (const char* n : {"toy", "oracle", "fixture"}) CHECK(std::find(names.begin(), names.end(), n) != names.end());
  CHECK(code_of([] { toy::ModuleRegistry::global().create("owlvit"); }) == ErrorCode::ConfigError);

  toy::ModuleRegistry local;
  local.add("constant", [](const toy::ModuleOptions&) {
    return toy::ModuleRegistry::global().create("oracle");
  });
  CHECK(local.create("constant").loc);

  toy::ModuleOptions mo;
  mo.fixture = nlohmann::ordered_json::parse(R"({
    "loc": [{"object": "post", "outcomes": [{"boxes": [[0, 1]], "p": 1.0}]}],
    "vqa": [{"question": "Is there a post?", "dist": {"yes": 0.5, "no": 0.5}},
            {"question": "Is there a post?", "region": [0, 1, 1, 2], "dist": {"yes": 0.9, "no": 0.1}}]})");
  const auto f = toy::ModuleRegistry::global().create("fixture", mo);
  const auto w = street();
  diff::ParamBinding b(test::no_params());
  CHECK(f.vqa->answer(w, Region{0, 0, 1, 1, 2}, "Is there a post?", b).prob_of(tok("yes")) == 0.9);
  CHECK(f.vqa->answer(w, w.whole(0), "Is there a post?", b).prob_of(tok("yes")) == 0.5);
  CHECK(code_of([&] { f.vqa->answer(w, w.whole(0), "Is there a dog?", b); }) == ErrorCode::ModuleFailure);
  CHECK(code_of([&] { f.loc->locate(w, w.whole(0), "sign", b); }) == ErrorCode::ModuleFailure);

  const auto oracle = toy::ModuleRegistry::global().create("oracle");
  const auto d = oracle.loc->locate(w, w.whole(0), "post", b);
  CHECK(d.size() == 1);
  CHECK(d.support()[0] == Value(toy::true_detection(w, w.whole(0), "post")));
}

}
