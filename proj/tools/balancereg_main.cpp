// balancereg: command-line driver for treatment-effect experiments.
//
//   balancereg compare  --data ihdp.csv | --synth cfg.json  --seed N --out DIR
//   balancereg sweep    ... --gamma 0,1,10 --lambda 0,0.1 --prg-variant soft_ks|smd
//   balancereg scatter  ... --out DIR
//   balancereg gen-data --config cfg.json --out data.csv
//
// Exit status is 0 on success. Failures print one line
// "balancereg: <category> error: <message>" and exit with
//   2 usage, 3 format, 4 io, 5 contract, 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "balancereg/csv_format.hpp"
#include "balancereg/errors.hpp"
#include "balancereg/harness.hpp"

namespace fs = std::filesystem;
using namespace balancereg;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string data_path;
  std::string synth;
  bool has_header = false;
  std::size_t dim = 25;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-4;
  double rho = 1.0;
  std::string truth = "noiseless";
  std::size_t workers = 0;
  std::string bandwidth = "median";
  std::string temperature = "auto";
  std::string mmd_estimator = "biased";
  std::string prg_variant = "soft_ks";
  std::string models = "two_head,separate_heads";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  auto* data = cmd->add_option("--data", o.data_path, "IHDP-layout CSV (t, y, y_cf, mu0, mu1, x1..xd)");
  auto* synth = cmd->add_option("--synth", o.synth, "synthetic generator config: JSON file path or inline JSON");
  data->excludes(synth);
  cmd->add_flag("--has-header", o.has_header, "skip one header line in --data");
  cmd->add_option("--dim", o.dim, "covariate count in --data")->capture_default_str();
  cmd->add_option("--seed", o.seed, "master seed")->capture_default_str();
  cmd->add_option("--out", o.out_dir, "output directory")->required();
  cmd->add_option("--epochs", o.epochs)->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size)->capture_default_str();
  cmd->add_option("--lr", o.lr)->capture_default_str();
  cmd->add_option("--rho", o.rho, "treated fit weight")->capture_default_str();
  cmd->add_option("--truth", o.truth, "noiseless (mu1-mu0) or realized (Y1-Y0)")->capture_default_str();
  cmd->add_option("--workers", o.workers, "parallel runs (default: BALANCEREG_WORKERS or all cores)");
  cmd->add_option("--bandwidth", o.bandwidth, "MMD kernel bandwidth: 'median' or a positive number")
      ->capture_default_str();
  cmd->add_option("--softks-temperature", o.temperature, "'auto' or a positive number")->capture_default_str();
  cmd->add_option("--mmd-estimator", o.mmd_estimator, "biased or unbiased")->capture_default_str();
  cmd->add_option("--prg-variant", o.prg_variant, "soft_ks or smd")->capture_default_str();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  for (std::string_view f : split_fields(text)) {
    f = trim(f);
    if (!f.empty()) out.emplace_back(f);
  }
  if (out.empty()) throw UsageError("empty list '" + text + "'");
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  for (const std::string& f : split_list(text)) {
    try {
      out.push_back(parse_double(f));
    } catch (const FormatError&) {
      throw UsageError("grid value '" + f + "' is not a number");
    }
  }
  return out;
}

std::optional<double> parse_auto_number(const std::string& text, const std::string& auto_word, const char* flag) {
  if (text == auto_word) return std::nullopt;
  try {
    return parse_double(text);
  } catch (const FormatError&) {
    throw UsageError(std::string(flag) + " expects '" + auto_word + "' or a number, got '" + text + "'");
  }
}

SynthConfig synth_from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.n = j.value("n", c.n);
  c.dim = j.value("dim", c.dim);
  c.binary_columns = j.value("binary_columns", c.binary_columns);
  c.treated_fraction = j.value("treated_fraction", c.treated_fraction);
  c.assignment_strength = j.value("assignment_strength", c.assignment_strength);
  c.coefficient_sparsity = j.value("coefficient_sparsity", c.coefficient_sparsity);
  c.coefficient_values = j.value("coefficient_values", c.coefficient_values);
  c.covariate_offset = j.value("covariate_offset", c.covariate_offset);
  c.noise = j.value("noise", c.noise);
  c.target_effect = j.value("target_effect", c.target_effect);
  if (j.contains("omega") && !j["omega"].is_null()) c.omega = j["omega"].get<double>();
  const std::string surface = j.value("surface", std::string("exponential"));
  if (surface == "exponential") {
    c.surface = ResponseSurface::exponential;
  } else if (surface == "linear") {
    c.surface = ResponseSurface::linear;
  } else {
    throw FormatError("synth config: surface must be 'exponential' or 'linear', got '" + surface + "'");
  }
  c.seed = j.value("seed", c.seed);
  return c;
}

SynthConfig load_synth_config(const std::string& source) {
  try {
    if (!source.empty() && source.front() == '{') return synth_from_json(nlohmann::json::parse(source));
    std::ifstream in(source);
    if (!in) throw IoError("cannot open " + source);
    return synth_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("synth config " + source + ": " + e.what());
  }
}

CausalDataset load_dataset(const CommonOptions& o) {
  if (!o.data_path.empty()) return load_ihdp_csv(o.data_path, o.has_header, o.dim);
  return synth_generate(o.synth.empty() ? SynthConfig{} : load_synth_config(o.synth));
}

ExperimentSpec make_spec(const CommonOptions& o) {
  ExperimentSpec spec;
  spec.master_seed = o.seed;
  spec.train.epochs = o.epochs;
  spec.train.batch_size = o.batch_size;
  spec.train.lr = o.lr;
  spec.train.weights.rho = o.rho;
  spec.train.weights.kernel_bandwidth = parse_auto_number(o.bandwidth, "median", "--bandwidth");
  spec.train.weights.softks_temperature = parse_auto_number(o.temperature, "auto", "--softks-temperature");
  if (o.mmd_estimator == "biased") {
    spec.train.weights.mmd_estimator = MmdEstimator::biased_v;
  } else if (o.mmd_estimator == "unbiased") {
    spec.train.weights.mmd_estimator = MmdEstimator::unbiased_u;
  } else {
    throw UsageError("--mmd-estimator expects biased or unbiased");
  }
  spec.train.weights.prg_variant = parse_prg_variant(o.prg_variant);
  spec.truth = parse_truth_source(o.truth);
  spec.workers = o.workers;
  spec.models.clear();
  for (const std::string& m : split_list(o.models)) spec.models.push_back(parse_model_kind(m));
  return spec;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

int run_compare(const CommonOptions& o, const std::string& modes) {
  ExperimentSpec spec = make_spec(o);
  spec.modes.clear();
  for (const std::string& m : split_list(modes)) spec.modes.push_back(parse_inference_mode(m));
  const Experiment exp = prepare_experiment(load_dataset(o), spec);
  const fs::path out = ensure_dir(o.out_dir);
  const auto rows = run_comparison(exp, spec);
  write_comparison_csv(out / "comparison.csv", rows);
  for (const ComparisonRow& row : rows) {
    write_estimates_csv(out / ("estimates_" + to_string(row.model) + "_" + to_string(row.mode) + ".csv"), row,
                        exp.plan.test, exp.truth, spec.split.inits);
  }
  for (const ComparisonRow& row : rows) {
    std::cout << to_string(row.model) << ' ' << to_string(row.mode) << "  bias_sq=" << row.metrics.bias_sq
              << " variance=" << row.metrics.variance << " mse=" << row.metrics.mse_mean << " +- "
              << row.metrics.mse_std << '\n';
  }
  return 0;
}

int run_sweep_cmd(const CommonOptions& o, const std::string& gammas, const std::string& lambdas,
                  const std::string& mode) {
  ExperimentSpec spec = make_spec(o);
  spec.gamma_grid = parse_grid(gammas);
  spec.lambda_grid = parse_grid(lambdas);
  spec.sweep_mode = parse_inference_mode(mode);
  const Experiment exp = prepare_experiment(load_dataset(o), spec);
  const fs::path out = ensure_dir(o.out_dir);
  const auto rows = run_sweep(exp, spec);
  write_sweep_csv(out / "sweep.csv", rows);
  for (const SweepRow& row : rows) {
    std::cout << "gamma=" << row.gamma << " lambda=" << row.lambda << "  bias_sq=" << row.metrics.bias_sq
              << " variance=" << row.metrics.variance << " mse=" << row.metrics.mse_mean << '\n';
  }
  return 0;
}

int run_scatter_cmd(const CommonOptions& o, double gamma, double lambda) {
  ExperimentSpec spec = make_spec(o);
  spec.train.weights.gamma = gamma;
  spec.train.weights.lambda = lambda;
  const Experiment exp = prepare_experiment(load_dataset(o), spec);
  const fs::path out = ensure_dir(o.out_dir);
  const auto series = export_scatter(exp, spec);
  write_scatter_csv(out / "scatter.csv", series);
  write_scatter_summary_csv(out / "scatter_summary.csv", series);
  for (const ScatterSeries& s : series) {
    std::cout << to_string(s.model) << " r=" << (s.residuals.r ? format_double(*s.residuals.r) : "undefined") << '\n';
  }
  return 0;
}

int run_gen_data(const std::string& config, const std::string& out) {
  write_ihdp_csv(out, synth_generate(load_synth_config(config)));
  return 0;
}

int fail(const char* category, const std::string& message, int code) {
  std::string line = message;
  for (char& c : line) {
    if (c == '\n') c = ' ';
  }
  std::cerr << "balancereg: " << category << " error: " << line << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Balance-regularized treatment effect experiments"};
  app.require_subcommand(1);

  CommonOptions compare_opts;
  std::string modes = "inductive,transductive";
  auto* compare = app.add_subcommand("compare", "model x inference-mode comparison over the repeated-run protocol");
  add_common(compare, compare_opts);
  compare->add_option("--models", compare_opts.models, "comma list of two_head, separate_heads")
      ->capture_default_str();
  compare->add_option("--modes", modes, "comma list of inductive, transductive")->capture_default_str();

  CommonOptions sweep_opts;
  std::string gammas = "0,0.1,1,10,100", lambdas = "0,0.01,0.1,1,10", sweep_mode = "inductive";
  auto* sweep = app.add_subcommand("sweep", "two-head (gamma, lambda) regularization grid");
  add_common(sweep, sweep_opts);
  sweep->add_option("--gamma", gammas, "comma list of MMD weights")->capture_default_str();
  sweep->add_option("--lambda", lambdas, "comma list of prognostic weights")->capture_default_str();
  sweep->add_option("--mode", sweep_mode, "inference mode scored")->capture_default_str();

  CommonOptions scatter_opts;
  double scatter_gamma = 0.0, scatter_lambda = 0.0;
  auto* scatter = app.add_subcommand("scatter", "treated vs control residual pairs on the test set");
  add_common(scatter, scatter_opts);
  scatter->add_option("--models", scatter_opts.models, "comma list of two_head, separate_heads")
      ->capture_default_str();
  scatter->add_option("--gamma", scatter_gamma, "MMD weight for the two-head model")->capture_default_str();
  scatter->add_option("--lambda", scatter_lambda, "prognostic weight for the two-head model")->capture_default_str();

  std::string gen_config, gen_out;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset in the IHDP CSV layout");
  gen->add_option("--config", gen_config, "JSON file path or inline JSON")->required();
  gen->add_option("--out", gen_out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (compare->parsed()) return run_compare(compare_opts, modes);
    if (sweep->parsed()) return run_sweep_cmd(sweep_opts, gammas, lambdas, sweep_mode);
    if (scatter->parsed()) return run_scatter_cmd(scatter_opts, scatter_gamma, scatter_lambda);
    if (gen->parsed()) return run_gen_data(gen_config, gen_out);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), 2);
  } catch (const FormatError& e) {
    return fail("format", e.what(), 3);
  } catch (const IoError& e) {
    return fail("io", e.what(), 4);
  } catch (const ContractError& e) {
    return fail("contract", e.what(), 5);
  } catch (const DimensionError& e) {
    return fail("contract", e.what(), 5);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
