#include "rcca/cli.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string_view>

#include "CLI11.hpp"
#include "rcca/error.hpp"
#include "rcca/horst.hpp"
#include "rcca/model_file.hpp"
#include "rcca/oracle.hpp"
#include "rcca/randomized_cca.hpp"
#include "rcca/synthetic.hpp"
#include "rcca/twoview.hpp"

namespace rcca::cli {

using nlohmann::json;

json to_json(const Report& r) {
  json j;
  j["config"] = r.config;
  j["objective_train"] = r.objective_train;
  if (r.objective_test) j["objective_test"] = *r.objective_test;
  j["correlations"] = r.correlations;
  j["feasibility_residual_a"] = r.feasibility_residual_a;
  j["feasibility_residual_b"] = r.feasibility_residual_b;
  j["cross_offdiag_residual"] = r.cross_offdiag_residual;
  j["passes_used"] = r.passes_used;
  j["wall_time_seconds"] = r.wall_time_seconds;
  j["seed"] = r.seed;
  j["solver"] = r.solver;
  j["format_version"] = r.format_version;
  return j;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string ka;
  std::string kb;
  std::string format = "text";
  std::string synthetic_spec = "power-law";
  unsigned hash_bits = 19;
  std::uint64_t hash_seed = 0;
  std::size_t d_a = 0;
  std::size_t d_b = 0;
  std::string center = "auto";

  std::size_t k = 10;
  std::size_t p = 0;
  std::size_t q = 1;
  double nu = 0.01;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double split = 0.9;
  std::uint64_t split_seed = 0;
  std::uint64_t seed = 0;

  std::size_t inner_steps = 3;
  std::size_t max_sweeps = 300;
  double tol = 1e-6;
  std::string init = "random";

  std::size_t ell = 20;
  std::string part = "all";

  std::string out;
  std::string model_out;
  std::string model_in;

  // Set when the corresponding flag was given.
  CLI::Option* p_flag = nullptr;
  std::vector<CLI::Option*> lambda_a_flags;
  std::vector<CLI::Option*> lambda_b_flags;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Option wiring

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--ka", o.ka, "View A input file");
  cmd->add_option("--kb", o.kb, "View B input file");
  cmd->add_option("--format", o.format, "Input format")
      ->check(CLI::IsMember({"text", "sparse", "dense", "synthetic"}))
      ->capture_default_str();
  cmd->add_option("--spec", o.synthetic_spec, "Synthetic generator spec (power-law:n=..,da=..,...)");
  cmd->add_option("--hash-bits", o.hash_bits, "log2 of hash slots for text input")
      ->check(CLI::Range(1u, 30u))
      ->capture_default_str();
  cmd->add_option("--hash-seed", o.hash_seed, "Hash seed for text input")->capture_default_str();
  cmd->add_option("--da", o.d_a, "View A dimension (sparse input)");
  cmd->add_option("--db", o.d_b, "View B dimension (sparse input)");
  cmd->add_option("--center", o.center, "Mean centering (auto: on for text, off otherwise)")
      ->check(CLI::IsMember({"on", "off", "auto"}))
      ->capture_default_str();
  cmd->add_option("--split", o.split, "Training fraction")->capture_default_str();
  cmd->add_option("--split-seed", o.split_seed, "Seed of the train/test permutation")->capture_default_str();
  cmd->add_option("--seed", o.seed, "Solver seed")->capture_default_str();
  cmd->add_option("--out", o.out, "Report path (stdout if omitted)");
}

void add_reg_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--nu", o.nu, "Scale-free regularization")->capture_default_str();
  o.lambda_a_flags.push_back(cmd->add_option("--lambda-a", o.lambda_a, "Explicit view A ridge (overrides --nu)"));
  o.lambda_b_flags.push_back(cmd->add_option("--lambda-b", o.lambda_b, "Explicit view B ridge (overrides --nu)"));
}

// ---------------------------------------------------------------------------
// Shared steps

bool resolve_center(const Options& o) {
  if (o.center == "on") return true;
  if (o.center == "off") return false;
  return o.format == "text";
}

Regularization regularization(const Options& o) {
  auto given = [](const std::vector<CLI::Option*>& flags) {
    return std::any_of(flags.begin(), flags.end(), [](const CLI::Option* f) { return f->count() > 0; });
  };
  const bool has_a = given(o.lambda_a_flags);
  const bool has_b = given(o.lambda_b_flags);
  if (has_a != has_b) throw UsageError("--lambda-a and --lambda-b must be given together");
  if (has_a) return Regularization::explicit_values(o.lambda_a, o.lambda_b);
  return Regularization::scale_free(o.nu);
}

twoview::TwoViewDataset load_dataset(const Options& o) {
  if (o.format == "synthetic") return twoview::generate_power_law(twoview::parse_power_law_spec(o.synthetic_spec));
  if (o.ka.empty() || o.kb.empty()) throw UsageError("--ka and --kb are required for --format " + o.format);
  if (o.format == "text") return twoview::ingest_parallel_text(o.ka, o.kb, o.hash_bits, o.hash_seed);
  if (o.format == "sparse") {
    if (o.d_a == 0 || o.d_b == 0) throw UsageError("--da and --db are required for --format sparse");
    return twoview::ingest_sparse(o.ka, o.kb, o.d_a, o.d_b);
  }
  return twoview::ingest_dense_csv(o.ka, o.kb);
}

struct Splits {
  twoview::TwoViewDataset train;
  std::optional<twoview::TwoViewDataset> test;
};

Splits load_and_split(const Options& o) {
  const twoview::TwoViewDataset full = load_dataset(o);
  auto [train, test] = twoview::split(full, o.split, o.split_seed);
  if (test.n() == 0) return {std::move(train), std::nullopt};
  return {std::move(train), std::move(test)};
}

json data_config(const std::string& command, const Options& o) {
  json c;
  c["command"] = command;
  c["format"] = o.format;
  if (o.format == "synthetic") {
    c["spec"] = twoview::to_string(twoview::parse_power_law_spec(o.synthetic_spec));
  } else {
    c["ka"] = o.ka;
    c["kb"] = o.kb;
  }
  if (o.format == "text") {
    c["hash_bits"] = o.hash_bits;
    c["hash_seed"] = o.hash_seed;
  }
  if (o.format == "sparse") {
    c["da"] = o.d_a;
    c["db"] = o.d_b;
  }
  c["center"] = resolve_center(o);
  c["split"] = o.split;
  c["split_seed"] = o.split_seed;
  c["seed"] = o.seed;
  return c;
}

void reg_config(json& c, const Regularization& reg, Lambdas lambdas) {
  if (reg.kind == Regularization::Kind::scale_free) c["nu"] = reg.nu;
  c["lambda_a"] = lambdas.a;
  c["lambda_b"] = lambdas.b;
}

void emit(const json& j, const Options& o, std::ostream& out) {
  const std::string text = j.dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw IoError("I/O error: cannot write " + o.out);
  f << text;
  if (!f) throw IoError("I/O error: failed writing " + o.out);
}

// Fills objectives and residuals (train objective pass, train residual pass,
// test objective pass).
void evaluate_into(Report& report, const CcaModel& model, const Splits& data, Lambdas lambdas, bool centered) {
  report.objective_train = twoview::objective(data.train, model.x_a, model.x_b, centered);
  if (data.test) report.objective_test = twoview::objective(*data.test, model.x_a, model.x_b, centered);
  const FeasibilityResiduals res = feasibility_residuals(data.train, model.x_a, model.x_b, lambdas, centered);
  report.feasibility_residual_a = res.whitening_a;
  report.feasibility_residual_b = res.whitening_b;
  report.cross_offdiag_residual = res.cross_offdiag;
  report.correlations = model.correlations;
  report.passes_used = model.passes_used;
  report.solver = model.solver;
}

void save_model(const Options& o, const CcaModel& model, const twoview::TwoViewDataset& ds) {
  if (!o.model_out.empty()) write_model_file(o.model_out, to_model_file(model, ds.hash_config()));
}

void check_hash(const ModelFile& mf, const twoview::TwoViewDataset& ds) {
  if (mf.hash && ds.hash_config() && !(*mf.hash == *ds.hash_config()))
    throw std::runtime_error("model was trained with hash bits " + std::to_string(mf.hash->bits) + ", seed " +
                             std::to_string(mf.hash->seed) + " but the data uses bits " +
                             std::to_string(ds.hash_config()->bits) + ", seed " +
                             std::to_string(ds.hash_config()->seed));
}

void check_dims(const ModelFile& mf, const twoview::TwoViewDataset& ds) {
  if (mf.x_a.rows() != ds.d_a() || mf.x_b.rows() != ds.d_b())
    throw DimensionError("model shapes X_a " + linalg::shape_string(mf.x_a) + ", X_b " + linalg::shape_string(mf.x_b) +
                         " do not match dataset dimensions d_a=" + std::to_string(ds.d_a()) +
                         ", d_b=" + std::to_string(ds.d_b()));
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_ingest(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const twoview::TwoViewDataset ds = load_dataset(o);
  if (o.format == "synthetic" && !o.ka.empty() && !o.kb.empty()) {
    twoview::write_dense_csv(o.ka, ds.view_a(), ds.d_a());
    twoview::write_dense_csv(o.kb, ds.view_b(), ds.d_b());
  }
  json j;
  j["config"] = data_config("ingest", o);
  j["n"] = ds.n();
  j["d_a"] = ds.d_a();
  j["d_b"] = ds.d_b();
  j["nonzeros_a"] = ds.view_a().nonzeros();
  j["nonzeros_b"] = ds.view_b().nonzeros();
  j["active_a"] = ds.stats().active_a.size();
  j["active_b"] = ds.stats().active_b.size();
  j["trace_a"] = ds.stats().trace_a;
  j["trace_b"] = ds.stats().trace_b;
  j["passes_used"] = ds.pass_count();
  j["wall_time_seconds"] = seconds_since(start);
  j["format_version"] = kReportFormatVersion;
  emit(j, o, out);
  return 0;
}

int cmd_rcca(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Splits data = load_and_split(o);
  CcaConfig cfg;
  cfg.k = o.k;
  if (o.p_flag->count() > 0) cfg.p = o.p;
  cfg.q = o.q;
  cfg.reg = regularization(o);
  cfg.seed = o.seed;
  cfg.centered = resolve_center(o);
  const CcaModel model = randomized_cca(data.train, cfg);
  const Lambdas lambdas{model.lambda_a, model.lambda_b};

  Report report;
  report.config = data_config("rcca", o);
  report.config["k"] = cfg.k;
  report.config["p"] = cfg.oversampling();
  report.config["q"] = cfg.q;
  reg_config(report.config, cfg.reg, lambdas);
  report.config["rng"] = "mt19937_64+box-muller";
  evaluate_into(report, model, data, lambdas, cfg.centered);
  report.seed = o.seed;
  save_model(o, model, data.train);
  report.wall_time_seconds = seconds_since(start);
  emit(to_json(report), o, out);
  return 0;
}

int cmd_horst(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Splits data = load_and_split(o);
  horst::HorstConfig cfg;
  cfg.k = o.k;
  cfg.reg = regularization(o);
  cfg.max_sweeps = o.max_sweeps;
  cfg.inner_steps = o.inner_steps;
  cfg.tol = o.tol;
  cfg.seed = o.seed;
  cfg.centered = resolve_center(o);
  constexpr std::string_view kModelPrefix = "model:";
  if (o.init.rfind(kModelPrefix, 0) == 0) {
    const ModelFile mf = read_model_file(o.init.substr(kModelPrefix.size()));
    check_dims(mf, data.train);
    check_hash(mf, data.train);
    CcaModel warm;
    warm.x_a = mf.x_a;
    warm.x_b = mf.x_b;
    warm.correlations = mf.correlations;
    cfg.warm_start = std::move(warm);
  } else if (o.init != "random") {
    throw UsageError("--init must be 'random' or 'model:<path>'");
  }
  const horst::HorstResult result = horst::horst_iterate(data.train, cfg);
  const Lambdas lambdas{result.model.lambda_a, result.model.lambda_b};

  Report report;
  report.config = data_config("horst", o);
  report.config["k"] = cfg.k;
  reg_config(report.config, cfg.reg, lambdas);
  report.config["max_sweeps"] = cfg.max_sweeps;
  report.config["inner_steps"] = cfg.inner_steps;
  report.config["tol"] = cfg.tol;
  report.config["init"] = o.init;
  report.config["sweeps"] = result.trace.objectives.size();
  report.config["rng"] = "mt19937_64+box-muller";
  evaluate_into(report, result.model, data, lambdas, cfg.centered);
  report.seed = o.seed;
  save_model(o, result.model, data.train);
  report.wall_time_seconds = seconds_since(start);
  emit(to_json(report), o, out);
  return 0;
}

int cmd_oracle(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Splits data = load_and_split(o);
  const Regularization reg = regularization(o);
  const Lambdas lambdas = resolve_lambdas(reg, data.train);
  const bool centered = resolve_center(o);
  const CcaModel model = oracle::exact_cca(oracle::to_dense(data.train), lambdas.a, lambdas.b, o.k, centered);

  Report report;
  report.config = data_config("oracle", o);
  report.config["k"] = o.k;
  reg_config(report.config, reg, lambdas);
  evaluate_into(report, model, data, lambdas, centered);
  report.seed = o.seed;
  save_model(o, model, data.train);
  report.wall_time_seconds = seconds_since(start);
  emit(to_json(report), o, out);
  return 0;
}

int cmd_spectrum(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  const Splits data = load_and_split(o);
  const bool centered = resolve_center(o);
  const SpectrumEstimate est = estimate_spectrum(data.train, o.ell, o.seed, centered);
  json j;
  j["config"] = data_config("spectrum", o);
  j["config"]["ell"] = o.ell;
  j["config"]["rng"] = "mt19937_64+box-muller";
  j["spectrum"] = est.values;
  j["rank"] = est.rank;
  j["rank_deficient"] = est.rank_deficient;
  j["passes_used"] = est.passes;
  j["seed"] = o.seed;
  j["solver"] = "spectrum";
  j["wall_time_seconds"] = seconds_since(start);
  j["format_version"] = kReportFormatVersion;
  emit(j, o, out);
  return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto start = Clock::now();
  if (o.model_in.empty()) throw UsageError("eval requires --model-in");
  const ModelFile mf = read_model_file(o.model_in);
  const Splits data = load_and_split(o);
  const twoview::TwoViewDataset* target = &data.train;
  std::optional<twoview::TwoViewDataset> whole;
  if (o.part == "test") {
    if (!data.test) throw std::runtime_error("--part test requested but the split leaves no test rows");
    target = &*data.test;
  } else if (o.part == "all") {
    if (data.test) {
      whole = load_dataset(o);
      target = &*whole;
    }
  }
  check_dims(mf, *target);
  check_hash(mf, *target);
  const Regularization reg = regularization(o);
  const Lambdas lambdas = resolve_lambdas(reg, *target);
  const bool centered = resolve_center(o);

  const std::uint64_t before = target->pass_count();
  const double obj = twoview::objective(*target, mf.x_a, mf.x_b, centered);
  const FeasibilityResiduals res = feasibility_residuals(*target, mf.x_a, mf.x_b, lambdas, centered);

  json j;
  j["config"] = data_config("eval", o);
  j["config"]["model_in"] = o.model_in;
  j["config"]["part"] = o.part;
  reg_config(j["config"], reg, lambdas);
  j["n"] = target->n();
  j["objective"] = obj;
  j["correlations"] = mf.correlations;
  j["feasibility_residual_a"] = res.whitening_a;
  j["feasibility_residual_b"] = res.whitening_b;
  j["cross_offdiag_residual"] = res.cross_offdiag;
  j["passes_used"] = target->pass_count() - before;
  j["seed"] = o.seed;
  j["solver"] = "eval";
  j["wall_time_seconds"] = seconds_since(start);
  j["format_version"] = kReportFormatVersion;
  emit(j, o, out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Randomized canonical correlation analysis: solvers, oracle and experiment runner", "rcca"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "Load or generate a dataset and print its statistics");
  add_data_options(ingest, o);

  auto* rcca_cmd = app.add_subcommand("rcca", "Randomized CCA (range finder + one final pass)");
  add_data_options(rcca_cmd, o);
  add_reg_options(rcca_cmd, o);
  rcca_cmd->add_option("--k", o.k, "Embedding dimension")->capture_default_str();
  o.p_flag = rcca_cmd->add_option("--p", o.p, "Oversampling (default max(10k, 100))");
  rcca_cmd->add_option("--q", o.q, "Power iterations")->capture_default_str();
  rcca_cmd->add_option("--model-out", o.model_out, "Write the model file here");

  auto* horst_cmd = app.add_subcommand("horst", "Horst iteration with approximate least squares");
  add_data_options(horst_cmd, o);
  add_reg_options(horst_cmd, o);
  horst_cmd->add_option("--k", o.k, "Embedding dimension")->capture_default_str();
  horst_cmd->add_option("--inner-steps", o.inner_steps, "CG steps per least-squares solve")->capture_default_str();
  horst_cmd->add_option("--max-sweeps", o.max_sweeps, "Sweep budget")->capture_default_str();
  horst_cmd->add_option("--tol", o.tol, "Relative objective change for convergence")->capture_default_str();
  horst_cmd->add_option("--init", o.init, "random | model:<path>")->capture_default_str();
  horst_cmd->add_option("--model-out", o.model_out, "Write the model file here");

  auto* oracle_cmd = app.add_subcommand("oracle", "Exact dense regularized CCA (small inputs only)");
  add_data_options(oracle_cmd, o);
  add_reg_options(oracle_cmd, o);
  oracle_cmd->add_option("--k", o.k, "Embedding dimension")->capture_default_str();
  oracle_cmd->add_option("--model-out", o.model_out, "Write the model file here");

  auto* spectrum_cmd = app.add_subcommand("spectrum", "Two-pass estimate of the spectrum of (1/n) A^T B");
  add_data_options(spectrum_cmd, o);
  spectrum_cmd->add_option("--ell", o.ell, "Number of singular values")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Objective and feasibility residuals of a stored model");
  add_data_options(eval_cmd, o);
  add_reg_options(eval_cmd, o);
  eval_cmd->add_option("--model-in", o.model_in, "Model file to evaluate");
  eval_cmd->add_option("--part", o.part, "Rows to evaluate on")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return 2;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (rcca_cmd->parsed()) return cmd_rcca(o, out);
    if (horst_cmd->parsed()) return cmd_horst(o, out);
    if (oracle_cmd->parsed()) return cmd_oracle(o, out);
    if (spectrum_cmd->parsed()) return cmd_spectrum(o, out);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace rcca::cli
