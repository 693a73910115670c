#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vpg/diff/gradcheck.hpp"
#include "vpg/dsl/ast.hpp"
#include "vpg/engine/inference.hpp"
#include "vpg/graph/graph.hpp"
#include "vpg/synth/dataset.hpp"
#include "vpg/train/disrupt.hpp"
#include "vpg/train/evaluate.hpp"
#include "vpg/train/loss.hpp"
#include "vpg/train/metrics.hpp"
#include "vpg/train/trainer.hpp"
#include "vpg/util/error.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vpg;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int jobs = 1;
  bool deterministic = false;
};

std::string read_file(const fs::path& path) { return train::read_text(path); }

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    train::write_text(out, text);
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

toy::ModuleSet make_modules(const std::string& name, int pool_size, const json& fixture = json::object()) {
  toy::ModuleOptions options;
  options.loc.pool_size = pool_size;
  options.fixture = fixture;
  return toy::ModuleRegistry::global().create(name, options);
}

diff::ParamStore load_or_init(const std::string& path, const toy::ModuleSet& modules, std::uint64_t seed,
                              double init_scale) {
  if (!path.empty()) return diff::ParamStore::load(path);
  diff::ParamStore store;
  modules.register_params(store);
  if (init_scale > 0) store.randomize(seed, init_scale);
  return store;
}

// A case file holds one JSON object, either a dataset record or a bare
// {"program", "images", "fixture"?, "label"?}; anything else is read as a
// dataset and `index` picks the case.
struct CaseInput {
  std::string id;
  synth::World world;
  dsl::Program program;
  json fixture;
  std::string label;
};

CaseInput load_case(const fs::path& path, std::size_t index) {
  const std::string text = read_file(path);
  json j;
  bool single = false;
  try {
    j = json::parse(text);
    single = j.is_object();
  } catch (const json::parse_error&) {
    single = false;
  }
  CaseInput c;
  if (single && !j.contains("schema")) {
    try {
      c.id = j.value("id", path.stem().string());
      c.world = synth::world_from_json(j.at("images"));
      c.program = dsl::parse_program(j.at("program").get<std::string>());
      c.fixture = j.value("fixture", json::object());
      c.label = j.value("label", "");
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidData, path.string() + ": " + e.what());
    }
    return c;
  }
  std::vector<synth::CaseRecord> cases =
      single ? std::vector<synth::CaseRecord>{synth::case_from_json(j)} : synth::read_dataset(path);
  if (index >= cases.size()) {
    throw Error(ErrorCode::ConfigError, path.string() + " has " + std::to_string(cases.size()) + " cases, no index " +
                                            std::to_string(index));
  }
  const auto& r = cases[index];
  c.id = r.id;
  c.world = r.world;
  c.program = dsl::parse_program(r.program_text);
  c.fixture = json::object();
  c.label = r.label;
  return c;
}

std::vector<synth::CaseRecord> dataset_or_generate(const std::string& path, std::size_t cases, std::uint64_t seed,
                                                   int max_steps, int jobs) {
  if (!path.empty()) return synth::read_dataset(path);
  synth::DatasetConfig dc;
  dc.cases = cases;
  dc.seed = seed;
  dc.constraints.max_visual_steps = max_steps;
  dc.jobs = jobs;
  return synth::gen_dataset(dc);
}

// ---- subcommands --------------------------------------------------------

int cmd_parse(const std::string& file) {
  const dsl::Program p = dsl::parse_program(read_file(file));
  std::cout << dsl::to_json(p).dump(2) << "\n";
  return 0;
}

int cmd_graph(const std::string& file, bool as_json, bool hide) {
  const graph::ProbGraph g = graph::build_graph(dsl::parse_program(read_file(file)));
  if (as_json) {
    std::cout << graph::to_json(g).dump(2) << "\n";
  } else {
    std::cout << graph::export_dot(g, hide);
  }
  return 0;
}

struct InferArgs {
  std::string file;
  std::vector<std::string> modes{"exact"};
  std::string params;
  std::string modules;
  int pool_size = 4;
  std::size_t index = 0;
};

int cmd_infer(const InferArgs& a) {
  const CaseInput c = load_case(a.file, a.index);
  const std::string module_name = !a.modules.empty() ? a.modules : (c.fixture.empty() ? "toy" : "fixture");
  const toy::ModuleSet modules = make_modules(module_name, a.pool_size, c.fixture);
  const diff::ParamStore params = load_or_init(a.params, modules, 0, 0.0);

  std::vector<engine::InferenceMode> modes;
  for (const auto& m : a.modes) {
    if (m == "all") {
      modes = {engine::InferenceMode::Argmax, engine::InferenceMode::Factorized, engine::InferenceMode::Exact,
               engine::InferenceMode::BruteForce};
      break;
    }
    modes.push_back(engine::mode_from_string(m));
  }
  const auto shared = dsl::detect_shared_latents(c.program);
  const auto has = [&](engine::InferenceMode m) {
    return std::find(modes.begin(), modes.end(), m) != modes.end();
  };
  if (!shared.empty() && has(engine::InferenceMode::Factorized) && !has(engine::InferenceMode::Exact)) {
    modes.push_back(engine::InferenceMode::Exact);
  }

  json out = json::array();
  std::optional<Categorical> exact;
  std::optional<Categorical> factorized;
  for (auto m : modes) {
    Categorical d;
    if (m == engine::InferenceMode::BruteForce) {
      d = engine::brute_force(c.program, c.world, modules, params);
    } else {
      diff::ParamBinding binding(params);
      d = engine::infer(m, c.program, c.world, modules, binding);
    }
    if (m == engine::InferenceMode::Exact) exact = d;
    if (m == engine::InferenceMode::Factorized) factorized = d;
    out.push_back(engine::inference_json(d, m, c.id));
  }
  if (!shared.empty() && exact && factorized) {
    const double gap = max_abs_difference(*exact, *factorized);
    std::string names;
    for (const auto& s : shared) names += (names.empty() ? "" : ", ") + s.latent;
    std::cerr << "warning: shared latent " << names << "; factorized assumes independent answers";
    if (gap > 1e-9) std::cerr << " and differs from exact by " << gap;
    std::cerr << "\n";
  }
  std::cout << (out.size() == 1 ? out[0] : out).dump() << "\n";
  return 0;
}

struct GenArgs {
  std::size_t cases = 100;
  std::string out;
  int min_steps = 1;
  int max_steps = 4;
  std::string templates;
  std::string stages;
};

int cmd_gen(const GenArgs& a, const Globals& g) {
  synth::DatasetConfig dc;
  dc.cases = a.cases;
  dc.seed = g.seed;
  dc.jobs = g.jobs;
  dc.constraints.min_visual_steps = a.min_steps;
  dc.constraints.max_visual_steps = a.max_steps;
  dc.templates = split_csv(a.templates);
  if (!a.stages.empty()) {
    dc.stage_weights.clear();
    for (const auto& w : split_csv(a.stages)) dc.stage_weights.push_back(std::stod(w));
  }
  const auto cases = synth::gen_dataset(dc);
  emit(synth::to_jsonl(cases), a.out);
  if (!a.out.empty() && a.out != "-") std::cerr << "wrote " << cases.size() << " cases to " << a.out << "\n";
  return 0;
}

int cmd_disrupt(const std::string& data, const std::string& out, double fraction, const Globals& g) {
  std::vector<std::size_t> touched;
  const auto cases = train::disrupt_programs(synth::read_dataset(data), fraction, g.seed, &touched);
  emit(synth::to_jsonl(cases), out);
  std::cerr << "disrupted " << touched.size() << " of " << cases.size() << " cases\n";
  return 0;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string eval_data;
  std::string out = "runs/train";
  std::string fractions;
  bool no_curriculum = false;
};

// Keys the train command reads itself; the rest is a TrainConfig.
struct RunSection {
  std::size_t cases = 2000;
  std::uint64_t seed = 7;
  int max_visual_steps = 4;
  std::size_t eval_cases = 500;
  std::uint64_t eval_seed = 1007;
  std::string data;
  std::string eval_data;
};

int cmd_train(const TrainArgs& a, const Globals& g, bool seed_given) {
  json j = a.config.empty() ? json::object() : json::parse(read_file(a.config));
  RunSection run;
  if (j.contains("dataset")) {
    const json d = j["dataset"];
    j.erase("dataset");
    std::vector<std::string> unknown;
    for (const auto& [k, v] : d.items()) {
      if (k == "cases") run.cases = v.get<std::size_t>();
      else if (k == "seed") run.seed = v.get<std::uint64_t>();
      else if (k == "max_visual_steps") run.max_visual_steps = v.get<int>();
      else if (k == "eval_cases") run.eval_cases = v.get<std::size_t>();
      else if (k == "eval_seed") run.eval_seed = v.get<std::uint64_t>();
      else if (k == "path") run.data = v.get<std::string>();
      else if (k == "eval_path") run.eval_data = v.get<std::string>();
      else unknown.push_back("dataset." + k);
    }
    if (!unknown.empty()) {
      std::string list;
      for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
      throw Error(ErrorCode::ConfigError, "unknown keys: " + list);
    }
  }
  train::TrainConfig config = train::train_config_from_json(j);
  if (seed_given) config.seed = g.seed;
  if (g.deterministic) config.deterministic = true;
  if (g.jobs > 1) config.jobs = g.jobs;
  if (a.no_curriculum) config.curriculum_enabled = false;

  const std::string data_path = !a.data.empty() ? a.data : run.data;
  const std::string eval_path = !a.eval_data.empty() ? a.eval_data : run.eval_data;
  const auto data = dataset_or_generate(data_path, run.cases, run.seed, run.max_visual_steps, config.jobs);
  const auto eval_cases = dataset_or_generate(eval_path, run.eval_cases, run.eval_seed, run.max_visual_steps, config.jobs);
  const train::EvalSet eval = train::EvalSet::build(eval_cases);

  std::vector<double> fractions;
  for (const auto& f : split_csv(a.fractions)) fractions.push_back(std::stod(f));
  const bool sweep = !fractions.empty();
  if (!sweep) fractions.push_back(config.disruption_fraction);

  const toy::ModuleSet modules = make_modules(config.modules, config.loc.pool_size);
  for (double f : fractions) {
    train::TrainConfig c = config;
    c.disruption_fraction = f;
    fs::path dir = a.out;
    if (sweep) {
      char name[32];
      std::snprintf(name, sizeof name, "fraction-%.2f", f);
      dir /= name;
    }
    c.checkpoint_dir = dir / "checkpoints";
    const auto result = train::train(c, data, modules, train::init_params(c, modules), &eval);
    train::write_text(dir / "metrics.csv", train::metrics_csv(result.history));
    train::write_text(dir / "metrics.json", train::metrics_json(result.history).dump(2) + "\n");
    train::write_text(dir / "config.json", train::to_json(c).dump(2) + "\n");
    result.params.save(dir / "params.json");
    for (const auto& s : result.skip_log) std::cerr << "skipped " << s << "\n";
    const auto& first = result.history.front();
    const auto& last = result.history.back();
    std::printf("%s: acc_final %.4f -> %.4f, acc_loc %.4f -> %.4f, acc_vqa %.4f -> %.4f\n", dir.string().c_str(),
                first.acc_final, last.acc_final, first.acc_loc, last.acc_loc, first.acc_vqa, last.acc_vqa);
  }
  return 0;
}

int cmd_eval(const std::string& data, const std::string& params_path, const std::string& mode,
             const std::string& module_name, int pool_size) {
  const auto cases = synth::read_dataset(data);
  const train::EvalSet set = train::EvalSet::build(cases);
  const toy::ModuleSet modules = make_modules(module_name, pool_size);
  const diff::ParamStore params = load_or_init(params_path, modules, 0, 0.0);
  const auto r = train::evaluate(set, modules, params, engine::mode_from_string(mode));
  const json out = {{"cases", r.cases},         {"acc_final", r.acc_final},     {"acc_loc", r.acc_loc},
                    {"acc_vqa", r.acc_vqa},     {"err_program", r.err_program}, {"err_module", r.err_module},
                    {"err_other", r.err_other}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct CheckArgs {
  std::string data;
  std::size_t cases = 200;
  int pool_size = 2;
  double init_scale = 1.0;
  double tolerance = 1e-9;
  std::string out;
};

int cmd_oracle_check(const CheckArgs& a, const Globals& g) {
  const auto cases = dataset_or_generate(a.data, a.cases, g.seed, 4, g.jobs);
  const toy::ModuleSet modules = make_modules("toy", a.pool_size);
  const diff::ParamStore params = load_or_init("", modules, derive_seed(g.seed, "oracle-params"), a.init_scale);
  double worst_brute = 0.0;
  double worst_factorized = 0.0;
  std::size_t independent = 0;
  for (const auto& r : cases) {
    const dsl::Program p = dsl::parse_program(r.program_text);
    diff::ParamBinding binding(params);
    const Categorical exact = engine::infer_exact(p, r.world, modules, binding);
    worst_brute = std::max(worst_brute, max_abs_difference(exact, engine::brute_force(p, r.world, modules, params)));
    if (dsl::detect_shared_latents(p).empty()) {
      ++independent;
      worst_factorized =
          std::max(worst_factorized, max_abs_difference(exact, engine::infer_factorized(p, r.world, modules, binding)));
    }
  }
  const bool ok = worst_brute < a.tolerance && worst_factorized < a.tolerance;
  char line[256];
  std::snprintf(line, sizeof line,
                "cases %zu\nmax |exact - brute| = %.3e\nmax |exact - factorized| = %.3e over %zu shared-latent-free "
                "cases\n%s\n",
                cases.size(), worst_brute, worst_factorized, independent, ok ? "PASS" : "FAIL");
  emit(line, a.out);
  if (!a.out.empty()) std::cout << line;
  return ok ? 0 : 1;
}

int cmd_gradcheck(const CheckArgs& a, const Globals& g, double tolerance) {
  const auto cases = dataset_or_generate(a.data, a.cases, g.seed, 4, g.jobs);
  const toy::ModuleSet modules = make_modules("toy", a.pool_size);
  const diff::ParamStore params = load_or_init("", modules, derive_seed(g.seed, "gradcheck-params"), a.init_scale);
  double worst = 0.0;
  std::size_t failed = 0;
  std::size_t coords = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const dsl::Program p = dsl::parse_program(cases[i].program_text);
    const Value label = Value::from_label(cases[i].label);
    const synth::World& world = cases[i].world;
    diff::GradCheckOptions opt;
    opt.tolerance = tolerance;
    opt.seed = derive_seed(g.seed, static_cast<std::uint64_t>(i));
    const auto report = diff::grad_check(
        [&](diff::ParamBinding& b) {
          return train::case_nll(engine::infer_exact(p, world, modules, b), label);
        },
        params, opt);
    worst = std::max(worst, report.max_relative_error);
    coords += report.checked;
    if (!report.passed()) ++failed;
  }
  char line[256];
  std::snprintf(line, sizeof line, "cases %zu, coordinates %zu\nmax relative error = %.3e\n%s\n", cases.size(), coords,
                worst, failed == 0 ? "PASS" : "FAIL");
  emit(line, a.out);
  if (!a.out.empty()) std::cout << line;
  return failed == 0 ? 0 : 1;
}

int exit_code(const Error& e) {
  return e.code() == ErrorCode::InternalError || e.code() == ErrorCode::CycleDetected ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentiable visual-program engine"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Root seed for every random stream");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic, "Ordered reductions and a zero seconds column");

  std::string program_file;
  auto* parse = app.add_subcommand("parse", "Parse a program and print its AST as JSON");
  parse->add_option("program", program_file, "Program file")->required();

  bool dot = false;
  bool graph_json = false;
  bool hide = false;
  auto* graph_cmd = app.add_subcommand("graph", "Print the probabilistic graph of a program");
  graph_cmd->add_option("program", program_file, "Program file")->required();
  auto* dot_flag = graph_cmd->add_flag("--dot", dot, "DOT output (default)");
  graph_cmd->add_flag("--json", graph_json, "JSON output")->excludes(dot_flag);
  graph_cmd->add_flag("--hide-deterministic", hide, "Contract CROP and RESULT nodes");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "Answer distribution for one case");
  infer->add_option("case", infer_args.file, "Case JSON or dataset JSONL")->required();
  infer->add_option("--mode", infer_args.modes, "argmax, factorized, exact, brute or all; repeatable")
      ->check(CLI::IsMember({"argmax", "factorized", "exact", "brute", "all"}));
  infer->add_option("--params", infer_args.params, "Parameter checkpoint (zeros when absent)");
  infer->add_option("--modules", infer_args.modules, "toy, oracle or fixture");
  infer->add_option("--pool-size", infer_args.pool_size, "LOC candidate pool")->check(CLI::PositiveNumber);
  infer->add_option("--index", infer_args.index, "Case index within a dataset");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--cases", gen_args.cases, "Number of cases");
  gen->add_option("--out", gen_args.out, "Output JSONL (stdout when absent)");
  gen->add_option("--min-steps", gen_args.min_steps, "Fewest visual steps");
  gen->add_option("--max-steps", gen_args.max_steps, "Most visual steps");
  gen->add_option("--templates", gen_args.templates, "Comma-separated template ids");
  gen->add_option("--stages", gen_args.stages, "Comma-separated weights for 1..4-step and longer programs");

  std::string data;
  std::string out;
  double fraction = 0.0;
  auto* disrupt = app.add_subcommand("disrupt", "Disrupt a fraction of a dataset's programs");
  disrupt->add_option("--data", data, "Input JSONL")->required();
  disrupt->add_option("--out", out, "Output JSONL (stdout when absent)");
  disrupt->add_option("--fraction", fraction, "Fraction of cases to disrupt")->required()->check(CLI::Range(0.0, 1.0));

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train the toy modules from final labels");
  train_cmd->add_option("--config", train_args.config, "Training config JSON");
  train_cmd->add_option("--data", train_args.data, "Training JSONL (generated when absent)");
  train_cmd->add_option("--eval-data", train_args.eval_data, "Held-out JSONL (generated when absent)");
  train_cmd->add_option("--out", train_args.out, "Output directory");
  train_cmd->add_option("--fractions", train_args.fractions, "Comma-separated disruption fractions, one run each");
  train_cmd->add_flag("--no-curriculum", train_args.no_curriculum, "Train on every stage's cases from the start");

  std::string params_path;
  std::string eval_mode = "argmax";
  std::string module_name = "toy";
  int pool_size = 4;
  auto* eval = app.add_subcommand("eval", "Accuracy and error sources on a dataset");
  eval->add_option("--data", data, "Dataset JSONL")->required();
  eval->add_option("--params", params_path, "Parameter checkpoint (zeros when absent)");
  eval->add_option("--mode", eval_mode, "argmax, factorized or exact")
      ->check(CLI::IsMember({"argmax", "factorized", "exact"}));
  eval->add_option("--modules", module_name, "toy or oracle");
  eval->add_option("--pool-size", pool_size, "LOC candidate pool")->check(CLI::PositiveNumber);

  CheckArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle-check", "Compare exact inference with enumeration and factorization");
  oracle->add_option("--data", oracle_args.data, "Dataset JSONL (generated when absent)");
  oracle->add_option("--cases", oracle_args.cases, "Generated cases when --data is absent");
  oracle->add_option("--pool-size", oracle_args.pool_size, "LOC candidate pool")->check(CLI::PositiveNumber);
  oracle->add_option("--init-scale", oracle_args.init_scale, "Random parameter scale");
  oracle->add_option("--tolerance", oracle_args.tolerance, "Largest accepted deviation");
  oracle->add_option("--out", oracle_args.out, "Report file");

  CheckArgs grad_args;
  grad_args.cases = 100;
  grad_args.init_scale = 0.5;
  double grad_tol = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of training gradients");
  gradcheck->add_option("--data", grad_args.data, "Dataset JSONL (generated when absent)");
  gradcheck->add_option("--cases", grad_args.cases, "Generated cases when --data is absent");
  gradcheck->add_option("--pool-size", grad_args.pool_size, "LOC candidate pool")->check(CLI::PositiveNumber);
  gradcheck->add_option("--init-scale", grad_args.init_scale, "Random parameter scale");
  gradcheck->add_option("--tolerance", grad_tol, "Largest accepted relative error");
  gradcheck->add_option("--out", grad_args.out, "Report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (parse->parsed()) return cmd_parse(program_file);
    if (graph_cmd->parsed()) return cmd_graph(program_file, graph_json, hide);
    if (infer->parsed()) return cmd_infer(infer_args);
    if (gen->parsed()) return cmd_gen(gen_args, g);
    if (disrupt->parsed()) return cmd_disrupt(data, out, fraction, g);
    if (train_cmd->parsed()) return cmd_train(train_args, g, seed_opt->count() > 0);
    if (eval->parsed()) return cmd_eval(data, params_path, eval_mode, module_name, pool_size);
    if (oracle->parsed()) return cmd_oracle_check(oracle_args, g);
    if (gradcheck->parsed()) return cmd_gradcheck(grad_args, g, grad_tol);
  } catch (const ParseError& e) {
    std::cerr << (program_file.empty() ? "" : program_file + ":") << e.line() << ":" << e.column() << ": "
              << to_string(e.code()) << ": " << e.message() << "\n";
    return exit_code(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const json::exception& e) {
    std::cerr << "error: InvalidData: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: ConfigError: bad number: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
