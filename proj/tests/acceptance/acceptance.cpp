// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Criteria 4-7 drive the command-line tool end to end.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "balancereg/csv_format.hpp"
#include "balancereg/estimation.hpp"
#include "balancereg/losses.hpp"
#include "balancereg/model.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace balancereg;
using testing::random_tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------- csv input

using CsvRows = std::vector<std::map<std::string, std::string>>;

CsvRows read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing output " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(f);
  CsvRows rows;
  while (std::getline(in, line)) {
    auto fields = split_fields(line);
    if (fields.size() != header.size()) throw std::runtime_error("ragged row in " + path.string());
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = std::string(fields[i]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return status;
}

std::string data_args(const std::optional<std::string>& ihdp) {
  return ihdp ? "--data \"" + *ihdp + "\"" : std::string();
}

// ---------------------------------------------------------------- criterion 1

Outcome gradient_oracles() {
  const auto t0 = Clock::now();
  Rng rng(2024);
  constexpr int instances = 20;
  std::size_t failures = 0;
  std::size_t checked = 0;
  std::string first;
  auto record = [&](const std::string& what, const testing::GradCheck& g) {
    checked += g.checked;
    if (g.failed > 0 || g.kinks > 0) {
      ++failures;
      if (first.empty()) first = what + ": " + g.first_failure;
    }
  };

  using Unary = std::function<ad::Var(ad::Var)>;
  using Binary = std::function<ad::Var(ad::Var, ad::Var)>;
  auto weighted = [](ad::Tape& t, ad::Var v, const Tensor& w) { return ad::sum(ad::mul(v, t.constant(w))); };

  const std::vector<std::pair<std::string, Binary>> binary = {
      {"add", [](ad::Var a, ad::Var b) { return ad::add(a, b); }},
      {"sub", [](ad::Var a, ad::Var b) { return ad::sub(a, b); }},
      {"mul", [](ad::Var a, ad::Var b) { return ad::mul(a, b); }},
      {"div", [](ad::Var a, ad::Var b) { return ad::div(a, b); }},
      {"matmul", [](ad::Var a, ad::Var b) { return ad::matmul(a, b); }},
      {"pairwise_sq_dist", [](ad::Var a, ad::Var b) { return ad::pairwise_sq_dist(a, b); }},
  };
  const std::vector<std::pair<std::string, Unary>> unary = {
      {"relu", [](ad::Var a) { return ad::relu(a); }},
      {"abs", [](ad::Var a) { return ad::abs(a); }},
      {"exp", [](ad::Var a) { return ad::exp(a); }},
      {"square", [](ad::Var a) { return ad::square(a); }},
      {"sigmoid", [](ad::Var a) { return ad::sigmoid(a); }},
      {"sqrt", [](ad::Var a) { return ad::sqrt(a); }},
      {"scale", [](ad::Var a) { return ad::scale(a, 1.7); }},
      {"shift", [](ad::Var a) { return ad::shift(a, -0.4); }},
      {"transpose", [](ad::Var a) { return ad::transpose(a); }},
      {"gather_rows", [](ad::Var a) {
         const std::vector<std::size_t> idx = {2, 0, 2, 1};
         return ad::gather_rows(a, idx);
       }},
  };
  const std::vector<std::pair<std::string, Unary>> reductions = {
      {"sum", [](ad::Var a) { return ad::sum(a); }},
      {"mean", [](ad::Var a) { return ad::mean(a); }},
      {"max", [](ad::Var a) { return ad::max(a); }},
  };

  for (int k = 0; k < instances; ++k) {
    for (const auto& [name, op] : binary) {
      const bool mm = name == "matmul" || name == "pairwise_sq_dist";
      Tensor a = random_tensor(rng, 3, 3);
      Tensor b = name == "div" ? random_tensor(rng, 3, 3, 0.5, 2.0) : random_tensor(rng, 3, mm ? 3 : 3);
      const Tensor w = random_tensor(rng, 3, 3, 0.5, 1.5);
      record(name, testing::finite_difference_check(
                       [&](ad::Tape& t, const std::vector<ad::Var>& v) { return weighted(t, op(v[0], v[1]), w); },
                       {a, b}, 1e-4));
    }
    for (const auto& [name, op] : unary) {
      Tensor a = name == "sqrt"                      ? random_tensor(rng, 3, 3, 0.2, 2.0)
                 : name == "relu" || name == "abs" ? testing::random_away_from_zero(rng, 3, 3)
                                                     : random_tensor(rng, 3, 3);
      ad::Tape probe;
      const Tensor shape = op(probe.constant(a)).value();
      const Tensor w = random_tensor(rng, shape.rows, shape.cols, 0.5, 1.5);
      record(name, testing::finite_difference_check(
                       [&](ad::Tape& t, const std::vector<ad::Var>& v) { return weighted(t, op(v[0]), w); }, {a},
                       1e-4));
    }
    for (const auto& [name, op] : reductions) {
      record(name, testing::finite_difference_check(
                       [&](ad::Tape&, const std::vector<ad::Var>& v) { return ad::square(op(v[0])); },
                       {random_tensor(rng, 3, 4)}, 1e-4));
    }
    std::vector<Tensor> parts = {random_tensor(rng, 2, 3), random_tensor(rng, 1, 3)};
    const Tensor w = random_tensor(rng, 3, 3, 0.5, 1.5);
    record("concat_rows", testing::finite_difference_check(
                              [&](ad::Tape& t, const std::vector<ad::Var>& v) {
                                return weighted(t, ad::concat_rows(std::span<const ad::Var>(v)), w);
                              },
                              parts, 1e-4));
  }

  // full objective, gamma = lambda = 1, both prognostic variants
  std::size_t objective_instances = 0;
  for (PrgVariant variant : {PrgVariant::soft_ks, PrgVariant::smd}) {
    int accepted = 0;
    for (int k = 0; k < 60 && accepted < instances; ++k) {
      Model model = init_model(ModelKind::two_head, 500 + static_cast<std::uint64_t>(k));
      for (ad::Parameter* p : parameters(model)) {
        if (p->name.ends_with(".bias")) {
          for (double& v : p->value.data) v = rng.uniform(-0.1, 0.1);
        }
      }
      TrainView batch;
      batch.x = random_tensor(rng, 10, 25);
      for (int i = 0; i < 10; ++i) {
        batch.t.push_back(i < 4 ? 1 : 0);
        batch.y.push_back(rng.normal() + 2.0);
      }
      LossWeights w;
      w.gamma = 1.0;
      w.lambda = 1.0;
      w.prg_variant = variant;
      w.kernel_bandwidth = 1.0;
      w.softks_temperature = 0.05;
      auto g = testing::parameter_gradient_check(
          model, [&](ad::Tape& t) { return total_objective(t, model, batch, w).total; },
          [](const ad::Parameter&) { return true; }, 1e-3);
      if (g.kinks > 0) continue;
      ++accepted;
      checked += g.checked;
      if (g.failed > 0) {
        ++failures;
        if (first.empty()) first = "objective/" + to_string(variant) + ": " + g.first_failure;
      }
    }
    objective_instances += static_cast<std::size_t>(accepted);
    if (accepted < instances) {
      ++failures;
      if (first.empty()) first = "too few kink-free objective instances";
    }
  }

  const double elapsed = seconds_since(t0);
  Outcome o;
  o.pass = failures == 0 && elapsed < 60.0;
  o.detail = std::to_string(binary.size() + unary.size() + reductions.size() + 1) + " ops x " +
             std::to_string(instances) + " instances, " + std::to_string(objective_instances) +
             " objective instances, " + std::to_string(checked) + " coordinates, " + std::to_string(failures) +
             " failures, " + fmt(std::round(elapsed * 10) / 10) + " s";
  if (!first.empty()) o.detail += "; first: " + first;
  return o;
}

// ---------------------------------------------------------------- criterion 2

Outcome statistic_oracles() {
  Rng rng(77);
  std::size_t ks_bad = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> a(1 + rng.below(15)), b(1 + rng.below(15));
    for (double& v : a) v = static_cast<double>(rng.below(8));
    for (double& v : b) v = static_cast<double>(rng.below(8)) + (k % 3 == 0 ? 0.5 : 0.0);
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    double brute = 0.0;
    for (double z : pooled) {
      double ca = 0.0, cb = 0.0;
      for (double v : a) ca += v <= z;
      for (double v : b) cb += v <= z;
      brute = std::max(brute, std::abs(ca / static_cast<double>(a.size()) - cb / static_cast<double>(b.size())));
    }
    if (*ks_exact(a, b) != brute) ++ks_bad;
  }

  double mmd_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t na = 1 + rng.below(9), nb = 1 + rng.below(9), d = 1 + rng.below(6);
    const Tensor a = random_tensor(rng, na, d, -2.0, 2.0);
    const Tensor b = random_tensor(rng, nb, d, -1.0, 3.0);
    const double sigma = rng.uniform(0.3, 3.0);
    auto kern = [&](const Tensor& p, std::size_t i, const Tensor& q, std::size_t j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (p(i, c) - q(j, c)) * (p(i, c) - q(j, c));
      return std::exp(-s / (2.0 * sigma * sigma));
    };
    double kaa = 0.0, kbb = 0.0, kab = 0.0;
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < na; ++j) kaa += kern(a, i, a, j);
    for (std::size_t i = 0; i < nb; ++i)
      for (std::size_t j = 0; j < nb; ++j) kbb += kern(b, i, b, j);
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = 0; j < nb; ++j) kab += kern(a, i, b, j);
    const double oracle = kaa / double(na * na) + kbb / double(nb * nb) - 2.0 * kab / double(na * nb);
    ad::Tape tape;
    mmd_err = std::max(mmd_err, std::abs(mmd_sq(tape, tape.constant(a), tape.constant(b), sigma)->item() - oracle));
  }

  ad::Tape tape;
  auto col = [&](std::vector<double> v) { return tape.constant(Tensor::column(v)); };
  const double closed = std::abs(mmd_sq(tape, col({0.0}), col({1.0}), 1.0)->item() - (2.0 - 2.0 * std::exp(-0.5)));
  const double smd1 = std::abs(smd(tape, col({0.0, 2.0}), col({3.0, 5.0}))->item() - 3.0 / std::sqrt(2.0 + 1e-8));
  const double smd2 = std::abs(smd(tape, col({1.0, 4.0, 2.0}), col({1.0, 4.0, 2.0}))->item());
  const double smd3 =
      std::abs(smd(tape, col({0.0, 1.0, 2.0}), col({0.0, 2.0, 4.0}))->item() - 1.0 / std::sqrt(2.5 + 1e-8));
  const double smd_err = std::max({smd1, smd2, smd3});

  Outcome o;
  o.pass = ks_bad == 0 && mmd_err <= 1e-10 && closed <= 1e-10 && smd_err <= 1e-10;
  o.detail = "ks mismatches " + std::to_string(ks_bad) + "/100, mmd max err " + fmt(mmd_err) + ", closed form err " +
             fmt(closed) + ", smd max err " + fmt(smd_err);
  return o;
}

// ---------------------------------------------------------------- criterion 3

Outcome metric_identities() {
  Rng rng(314);
  double worst_decomp = 0.0, worst_pehe = 0.0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t units = 1 + rng.below(60), runs = 2 + rng.below(30);
    std::vector<double> truth(units);
    for (double& v : truth) v = rng.uniform(-5.0, 10.0);
    std::vector<RunMetrics> table;
    const double drift = rng.uniform(-1.0, 1.0);
    for (std::size_t r = 0; r < runs; ++r) {
      RunMetrics m{{r, 0}, InferenceMode::inductive, {}};
      for (std::size_t i = 0; i < units; ++i) m.im_hat.push_back(truth[i] + drift + 2.0 * rng.normal());
      table.push_back(std::move(m));
    }
    const AggregateMetrics a = aggregate_metrics(truth, table);
    double pehe_sq = 0.0;
    for (double p : a.pehe_per_run) pehe_sq += p * p / static_cast<double>(runs);
    worst_decomp = std::max(worst_decomp, std::abs(a.mse_mean - (a.bias_sq + a.variance)));
    worst_pehe = std::max(worst_pehe, std::abs(pehe_sq - a.mse_mean));
  }
  Outcome o;
  o.pass = worst_decomp <= 1e-10 && worst_pehe <= 1e-10;
  o.detail = "200 tables, max |mse - bias^2 - var| " + fmt(worst_decomp) + ", max |mean pehe^2 - mse| " +
             fmt(worst_pehe);
  return o;
}

// ---------------------------------------------------------------- criteria 4, 7

struct CompareResult {
  bool ran = false;
  std::string error;
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> rows;
  double seconds = 0.0;
};

CompareResult run_compare(const std::string& cli, const fs::path& out, const std::optional<std::string>& ihdp,
                          const std::string& workers) {
  CompareResult r;
  fs::remove_all(out);
  const auto t0 = Clock::now();
  const int status = run_cli(cli, "compare " + data_args(ihdp) + " --out \"" + out.string() + "\"" + workers,
                             out.string() + ".log");
  r.seconds = seconds_since(t0);
  if (status != 0) {
    r.error = "compare exited with status " + std::to_string(status) + ": " + slurp(out.string() + ".log");
    return r;
  }
  for (const auto& row : read_csv(out / "comparison.csv")) {
    auto& m = r.rows[{row.at("model"), row.at("mode")}];
    for (const char* key : {"bias_sq", "variance", "mse_mean", "mse_std"}) m[key] = parse_double(row.at(key));
  }
  r.ran = true;
  return r;
}

Outcome table_reproduction(const CompareResult& c, bool canonical) {
  Outcome o;
  if (!c.ran) {
    o.detail = c.error;
    return o;
  }
  auto get = [&](const char* model, const char* mode, const char* key) { return c.rows.at({model, mode}).at(key); };
  bool a = true, b = true;
  std::ostringstream d;
  for (const char* model : {"two_head", "separate_heads"}) {
    const double ind = get(model, "inductive", "mse_mean");
    const double tra = get(model, "transductive", "mse_mean");
    a = a && ind < tra;
    d << model << " mse ind " << fmt(ind) << " / trans " << fmt(tra) << "; ";
  }
  for (const char* mode : {"inductive", "transductive"}) {
    const double two = get("two_head", mode, "variance");
    const double sep = get("separate_heads", mode, "variance");
    b = b && two < sep;
    d << mode << " var two " << fmt(two) << " / sep " << fmt(sep) << "; ";
  }
  const double std_two = get("two_head", "inductive", "mse_std");
  const double std_sep = get("separate_heads", "inductive", "mse_std");
  const double std_two_t = get("two_head", "transductive", "mse_std");
  const double std_sep_t = get("separate_heads", "transductive", "mse_std");
  const bool cc = std_two < std_sep && std_two_t < std_sep_t;
  d << "mse std two " << fmt(std_two) << "/" << fmt(std_two_t) << " vs sep " << fmt(std_sep) << "/"
    << fmt(std_sep_t);
  bool scale = true;
  if (canonical) {
    const double m = get("two_head", "inductive", "mse_mean");
    scale = m > 3.66 / 2.0 && m < 3.66 * 2.0;
    d << "; two_head inductive mse " << fmt(m) << " vs 3.66 (factor 2)";
  }
  d << "; " << (canonical ? "canonical csv" : "synthetic n=747") << ", " << fmt(std::round(c.seconds * 10) / 10)
    << " s";
  o.pass = a && b && cc && scale && c.seconds < 15 * 60;
  o.detail = std::string("(a) ") + (a ? "ok" : "violated") + " (b) " + (b ? "ok" : "violated") + " (c) " +
             (cc ? "ok" : "violated") + ": " + d.str();
  return o;
}

Outcome determinism(const CompareResult& first, const CompareResult& second, const fs::path& a, const fs::path& b) {
  Outcome o;
  if (!first.ran || !second.ran) {
    o.detail = first.ran ? second.error : first.error;
    return o;
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    const fs::path other = b / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  std::size_t files_b = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(b)) ++files_b;
  o.pass = files > 0 && differing == 0 && files == files_b;
  o.detail = std::to_string(files) + " CSV files compared, " + std::to_string(differing) + " differ";
  return o;
}

// ---------------------------------------------------------------- criterion 5

Outcome scatter_reproduction(const std::string& cli, const fs::path& out, const std::optional<std::string>& ihdp,
                             const std::string& workers) {
  Outcome o;
  fs::remove_all(out);
  const int status =
      run_cli(cli, "scatter " + data_args(ihdp) + " --out \"" + out.string() + "\"" + workers, out.string() + ".log");
  if (status != 0) {
    o.detail = "scatter exited with status " + std::to_string(status) + ": " + slurp(out.string() + ".log");
    return o;
  }
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> pairs;
  for (const auto& row : read_csv(out / "scatter.csv")) {
    auto& p = pairs[row.at("model")];
    p.first.push_back(parse_double(row.at("treated_residual")));
    p.second.push_back(parse_double(row.at("control_residual")));
  }
  bool ok = true;
  std::ostringstream d;
  std::size_t models = 0;
  for (const auto& row : read_csv(out / "scatter_summary.csv")) {
    ++models;
    const std::string& model = row.at("model");
    if (row.at("pearson_r") == "undefined_correlation") {
      ok = false;
      d << model << " r undefined; ";
      continue;
    }
    const double r = parse_double(row.at("pearson_r"));
    const auto& p = pairs[model];
    const auto again = pearson(p.first, p.second);
    const double err = again ? std::abs(*again - r) : INFINITY;
    ok = ok && r > 0.0 && err <= 1e-12;
    d << model << " r " << fmt(r) << " (recomputed err " << fmt(err) << ", " << p.first.size() << " pairs); ";
  }
  o.pass = ok && models == 2;
  o.detail = d.str();
  return o;
}

// ---------------------------------------------------------------- criterion 6

Outcome sweep_trend(const std::string& cli, const fs::path& out, const std::optional<std::string>& ihdp,
                    const std::string& workers) {
  Outcome o;
  fs::remove_all(out);
  const auto t0 = Clock::now();
  const int status =
      run_cli(cli, "sweep " + data_args(ihdp) + " --out \"" + out.string() + "\"" + workers, out.string() + ".log");
  const double elapsed = seconds_since(t0);
  if (status != 0) {
    o.detail = "sweep exited with status " + std::to_string(status) + ": " + slurp(out.string() + ".log");
    return o;
  }
  const auto rows = read_csv(out / "sweep.csv");
  std::optional<std::map<std::string, std::string>> base, top;
  double top_gamma = -1.0;
  std::size_t cells = 0;
  for (const auto& row : rows) {
    ++cells;
    if (parse_double(row.at("lambda")) != 0.0) continue;
    const double g = parse_double(row.at("gamma"));
    if (g == 0.0) base = row;
    if (g > top_gamma) {
      top_gamma = g;
      top = row;
    }
  }
  if (!base || !top || top_gamma <= 0.0) {
    o.detail = "lambda = 0 slice lacks gamma = 0 or a positive gamma";
    return o;
  }
  const double b0 = parse_double(base->at("bias_sq")), b1 = parse_double(top->at("bias_sq"));
  const double v0 = parse_double(base->at("variance")), v1 = parse_double(top->at("variance"));
  const bool bias_down = b1 < b0;
  const bool var_up = v1 > v0;
  o.pass = bias_down && var_up && elapsed < 60 * 60;
  o.detail = std::to_string(cells) + " cells, lambda=0: gamma 0 -> " + fmt(top_gamma) + " bias^2 " + fmt(b0) +
             " -> " + fmt(b1) + (bias_down ? " (decreases)" : " (does not decrease)") + ", variance " + fmt(v0) +
             " -> " + fmt(v1) + (var_up ? " (increases)" : " (does not increase)") + ", " +
             fmt(std::round(elapsed * 10) / 10) + " s";
  return o;
}

// ---------------------------------------------------------------- criterion 8

Outcome parameter_counts() {
  auto dense = [](std::size_t in, std::size_t out) { return in * out + out; };
  const std::size_t two_expected = dense(25, 20) + dense(20, 20) + 2 * (dense(20, 20) + dense(20, 1));
  const std::size_t sep_expected = 2 * (dense(25, 20) + 2 * dense(20, 20) + dense(20, 1));
  const std::size_t two = parameter_count(init_model(ModelKind::two_head, 0));
  const std::size_t sep = parameter_count(init_model(ModelKind::separate_heads, 0));
  Outcome o;
  o.pass = two == two_expected && sep == sep_expected && sep == 2762;
  o.detail = "two_head " + std::to_string(two) + " (layer-width arithmetic " + std::to_string(two_expected) +
             "), separate_heads " + std::to_string(sep) + " (expected 2762)";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"balancereg acceptance suite"};
  std::string cli;
  std::string workdir = (fs::temp_directory_path() / "balancereg_acceptance").string();
  std::optional<std::string> ihdp;
  std::size_t workers = 0;
  app.add_option("--cli", cli, "path to the balancereg executable")->required();
  app.add_option("--workdir", workdir, "scratch directory for command outputs");
  app.add_option("--ihdp", ihdp, "canonical IHDP realization CSV (default: synthetic generator)");
  app.add_option("--workers", workers, "parallel runs passed to the tool (default: tool default)");
  CLI11_PARSE(app, argc, argv);

  const fs::path work(workdir);
  fs::create_directories(work);
  const std::string worker_arg = workers > 0 ? " --workers " + std::to_string(workers) : std::string();

  int failed = 0;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  };
  auto guarded = [](const std::function<Outcome()>& f) {
    try {
      return f();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report(1, "gradient oracles", guarded(gradient_oracles));
  report(2, "statistic oracles", guarded(statistic_oracles));
  report(3, "metric identities", guarded(metric_identities));

  CompareResult first, second;
  try {
    first = run_compare(cli, work / "compare_a", ihdp, worker_arg);
    second = run_compare(cli, work / "compare_b", ihdp, worker_arg);
  } catch (const std::exception& e) {
    first.ran = false;
    first.error = e.what();
  }
  report(4, "comparison table", guarded([&] { return table_reproduction(first, ihdp.has_value()); }));
  report(5, "residual scatter",
         guarded([&] { return scatter_reproduction(cli, work / "scatter", ihdp, worker_arg); }));
  report(6, "regularization sweep trend", guarded([&] { return sweep_trend(cli, work / "sweep", ihdp, worker_arg); }));
  report(7, "determinism",
         guarded([&] { return determinism(first, second, work / "compare_a", work / "compare_b"); }));
  report(8, "parameter counts", guarded(parameter_counts));

  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criterion/criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
