#include <doctest.h>

#include <algorithm>

#include "support.hpp"
#include "vpg/dsl/ast.hpp"
#include "vpg/util/error.hpp"

using namespace vpg;

namespace {

ErrorCode parse_error_code(std::string_view text) {
  try {
    dsl::parse_program(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("program parsed");
  return ErrorCode::InternalError;
}

std::size_t count_kind(const dsl::Program& p, dsl::ModuleKind k) {
  return static_cast<std::size_t>(
      std::count_if(p.statements.begin(), p.statements.end(), [&](const auto& s) { return s.module == k; }));
}

}  // namespace

TEST_SUITE("dsl") {

TEST_CASE("post/sign program parses into eight statements") {
  const auto p = dsl::parse_program(test::fixture_text("post_sign.vp"));
  REQUIRE(p.statements.size() == 8);
  CHECK(count_kind(p, dsl::ModuleKind::Loc) == 2);
  CHECK(count_kind(p, dsl::ModuleKind::Crop) == 2);
  CHECK(count_kind(p, dsl::ModuleKind::Vqa) == 2);
  CHECK(count_kind(p, dsl::ModuleKind::Eval) == 1);
  CHECK(count_kind(p, dsl::ModuleKind::Result) == 1);
  CHECK(p.result().target == "FINAL_RESULT");
  CHECK(p.statements[0].arg("object") == dsl::Arg::literal("post"));
  CHECK(p.statements[1].arg("box") == dsl::Arg::var("BOX0"));
  CHECK(p.statements[6].arg("expr").text == "'yes' if {ANSWER0} != {ANSWER1} else 'no'");
  REQUIRE(p.statements[6].eval);
}

TEST_CASE("reference to an undefined variable") {
  CHECK(parse_error_code("FINAL_RESULT=RESULT(var=ANSWER0)") == ErrorCode::UseBeforeDefine);
  try {
    dsl::parse_program("FINAL_RESULT=RESULT(var=ANSWER0)");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.message().find("ANSWER0") != std::string::npos);
  }
}

TEST_CASE("second assignment to the same variable") {
  const char* text =
      "BOX0=LOC(image=IMAGE,object='post')\n"
      "BOX0=LOC(image=IMAGE,object='sign')\n"
      "ANSWER0=COUNT(box=BOX0)\n"
      "FINAL_RESULT=RESULT(var=ANSWER0)\n";
  CHECK(parse_error_code(text) == ErrorCode::DuplicateAssignment);
  try {
    dsl::parse_program(text);
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 1);
  }
}

TEST_CASE("diagnostics") {
  CHECK(parse_error_code("") == ErrorCode::MissingResult);
  CHECK(parse_error_code("BOX0=LOC(image=IMAGE,object='post')\n") == ErrorCode::MissingResult);
  CHECK(parse_error_code("BOX0=SEG(image=IMAGE)\nFINAL_RESULT=RESULT(var=BOX0)") == ErrorCode::UnknownModule);
  CHECK(parse_error_code("BOX0=LOC(image=IMAGE)\nA=COUNT(box=BOX0)\nR=RESULT(var=A)") == ErrorCode::BadArgument);
  CHECK(parse_error_code("BOX0=LOC(image=IMAGE,object='post'\nA=COUNT(box=BOX0)\nR=RESULT(var=A)") ==
        ErrorCode::SyntaxError);
  CHECK(parse_error_code("BOX0=LOC(image=IMAGE,object='post)\nR=RESULT(var=BOX0)") == ErrorCode::SyntaxError);
  CHECK(parse_error_code("A=VQA(image=IMAGE,question='Is there a dog?')\nR=RESULT(var=A)\n"
                         "B=VQA(image=IMAGE,question='Is there a cup?')") == ErrorCode::SyntaxError);
  CHECK(parse_error_code("A=VQA(image=IMAGE,question='Is there a dog?')\n"
                         "B=EVAL(expr='{A} and {C}')\nR=RESULT(var=B)") == ErrorCode::UseBeforeDefine);
}

TEST_CASE("quotes and whitespace are normalized") {
  const auto a = dsl::parse_program(
      "BOX0 = LOC( image = IMAGE , object = \"post\" )\n"
      "ANSWER0 = COUNT( box = BOX0 )\n"
      "FINAL_RESULT = RESULT( var = ANSWER0 )\n");
  const auto b = dsl::parse_program(
      "BOX0=LOC(image=IMAGE,object='post')\nANSWER0=COUNT(box=BOX0)\nFINAL_RESULT=RESULT(var=ANSWER0)\n");
  CHECK(a == b);
  CHECK(dsl::print_program(a) == dsl::print_program(b));
  CHECK(dsl::print_program(a).find('"') == std::string::npos);
}

TEST_CASE("literals containing commas, parentheses and single quotes") {
  const auto p = dsl::parse_program(
      "ANSWER0=VQA(image=IMAGE,question=\"What's left of the cup, if anything (besides me)?\")\n"
      "FINAL_RESULT=RESULT(var=ANSWER0)\n");
  CHECK(p.statements[0].arg("question").text == "What's left of the cup, if anything (besides me)?");
  CHECK(dsl::parse_program(dsl::print_program(p)) == p);
}

TEST_CASE("visual step counts") {
  CHECK(dsl::count_visual_steps(dsl::parse_program(test::fixture_text("post_sign.vp"))) == 4);
  CHECK(dsl::count_visual_steps(dsl::parse_program(
            "ANSWER0=VQA(image=IMAGE,question='Is there a dog?')\nFINAL_RESULT=RESULT(var=ANSWER0)")) == 1);
  CHECK(dsl::count_visual_steps(dsl::parse_program(test::fixture_text("seals.vp"))) == 6);
}

TEST_CASE("shared latents") {
  CHECK(dsl::detect_shared_latents(dsl::parse_program(test::fixture_text("post_sign.vp"))).empty());
  const auto guitar = dsl::detect_shared_latents(dsl::parse_program(test::fixture_text("guitar.vp")));
  REQUIRE(guitar.size() >= 1);
  CHECK(guitar[0] == dsl::SharedLatent{"IMAGE0", {"ANSWER0", "ANSWER1"}});
  CHECK(dsl::detect_shared_latents(dsl::parse_program(
                                       "ANSWER0=VQA(image=IMAGE,question='Is there a dog?')\n"
                                       "FINAL_RESULT=RESULT(var=ANSWER0)"))
            .empty());
  // answers that never meet in one EVAL do not count
  CHECK(dsl::detect_shared_latents(dsl::parse_program(
                                       "BOX0=LOC(image=IMAGE,object='dog')\n"
                                       "IMAGE0=CROP(image=IMAGE,box=BOX0)\n"
                                       "ANSWER0=VQA(image=IMAGE0,question='Is the dog black?')\n"
                                       "ANSWER1=VQA(image=IMAGE0,question='Is the dog standing?')\n"
                                       "FINAL_RESULT=RESULT(var=ANSWER0)"))
            .empty());
}

TEST_CASE("print/parse round trip on generated programs") {
  Rng rng(20240611);
  for (int i = 0; i < 500; ++i) {
    const std::string text = test::random_program(rng);
    dsl::Program p;
    REQUIRE_NOTHROW(p = dsl::parse_program(text));
    const auto again = dsl::parse_program(dsl::print_program(p));
    CHECK(again == p);
    CHECK(dsl::print_program(again) == dsl::print_program(p));
    const auto steps = static_cast<std::size_t>(std::count_if(
        p.statements.begin(), p.statements.end(), [](const auto& s) { return dsl::is_visual(s.module); }));
    CHECK(dsl::count_visual_steps(p) == steps);
  }
}

TEST_CASE("generated corpus programs round trip") {
  for (const auto& c : test::small_corpus()) {
    const auto p = dsl::parse_program(c.program_text);
    CHECK(dsl::print_program(p) == c.program_text);
  }
}

TEST_CASE("parser never fails with anything but a diagnostic") {
  Rng rng(99);
  static const std::string alphabet = "ABIMGEOXNSWR0123_=(),'\"{}<>!+ \nLOCVQAUNTabcdefxyz-";
  std::size_t accepted = 0, rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string text = test::random_program(rng);
    const int edits = static_cast<int>(rng.between(1, 4));
    for (int e = 0; e < edits && !text.empty(); ++e) {
      const auto pos = rng.below(text.size());
      switch (rng.below(4)) {
        case 0: text[pos] = alphabet[rng.below(alphabet.size())]; break;
        case 1: text.erase(pos, 1 + rng.below(6)); break;
        case 2: text.insert(pos, 1, alphabet[rng.below(alphabet.size())]); break;
        default: text.resize(pos); break;
      }
    }
    try {
      const auto p = dsl::parse_program(text);
      CHECK(dsl::parse_program(dsl::print_program(p)) == p);
      ++accepted;
    } catch (const ParseError& e) {
      CHECK(e.line() >= 1);
      CHECK(!is_internal(e.code()));
      ++rejected;
    } catch (const Error& e) {
      CHECK(!is_internal(e.code()));
      ++rejected;
    }
  }
  CHECK(rejected > 0);
  CHECK(accepted + rejected == 3000);
}

TEST_CASE("ast json") {
  const auto j = dsl::to_json(dsl::parse_program(test::fixture_text("post_sign.vp")));
  CHECK(j.dump().find("\"LOC\"") != std::string::npos);
  CHECK(j.dump().find("ANSWER2") != std::string::npos);
}

}
