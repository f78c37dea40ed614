#include "balancereg/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "balancereg/csv_format.hpp"
#include "balancereg/errors.hpp"
#include "balancereg/random.hpp"

namespace balancereg {

// ------------------------------------------------------------ TrainView

std::size_t TrainView::treated_count() const {
  return static_cast<std::size_t>(std::count(t.begin(), t.end(), 1));
}

TrainView TrainView::rows(std::span<const std::size_t> indices) const {
  TrainView out;
  out.x = take_rows(x, indices);
  out.t.reserve(indices.size());
  out.y.reserve(indices.size());
  for (std::size_t i : indices) {
    out.t.push_back(t[i]);
    out.y.push_back(y[i]);
  }
  return out;
}

// ------------------------------------------------------------ CausalDataset

CausalDataset::CausalDataset(Tensor x, std::vector<int> t, std::vector<double> y, std::vector<double> y_cf,
                             std::optional<std::vector<double>> mu0, std::optional<std::vector<double>> mu1)
    : x_(std::move(x)), t_(std::move(t)), y_(std::move(y)), y_cf_(std::move(y_cf)), mu0_(std::move(mu0)),
      mu1_(std::move(mu1)) {
  const std::size_t n = t_.size();
  if (x_.rows != n || y_.size() != n || y_cf_.size() != n) {
    throw DimensionError("dataset columns disagree on unit count");
  }
  if ((mu0_ && mu0_->size() != n) || (mu1_ && mu1_->size() != n)) {
    throw DimensionError("dataset mu columns disagree on unit count");
  }
  if (mu0_.has_value() != mu1_.has_value()) throw ContractError("mu0 and mu1 must be given together");
  for (int ti : t_) {
    if (ti != 0 && ti != 1) throw ContractError("treatment flags must be 0 or 1");
  }
}

std::size_t CausalDataset::treated_count() const {
  return static_cast<std::size_t>(std::count(t_.begin(), t_.end(), 1));
}

TrainView CausalDataset::train_view() const {
  return TrainView{x_, t_, y_};
}

TrainView CausalDataset::train_view(std::span<const std::size_t> indices) const {
  return train_view().rows(indices);
}

CausalDataset CausalDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<int> t;
  std::vector<double> y, y_cf, mu0, mu1;
  for (std::size_t i : indices) {
    t.push_back(t_[i]);
    y.push_back(y_[i]);
    y_cf.push_back(y_cf_[i]);
    if (mu0_) {
      mu0.push_back((*mu0_)[i]);
      mu1.push_back((*mu1_)[i]);
    }
  }
  std::optional<std::vector<double>> m0, m1;
  if (mu0_) {
    m0 = std::move(mu0);
    m1 = std::move(mu1);
  }
  return CausalDataset(take_rows(x_, indices), std::move(t), std::move(y), std::move(y_cf), std::move(m0),
                       std::move(m1));
}

// ------------------------------------------------------------ CSV

CausalDataset parse_ihdp_csv(std::istream& in, const std::string& source, bool has_header, std::size_t expected_dim) {
  const std::size_t expected_cols = 5 + expected_dim;
  std::vector<int> t;
  std::vector<double> y, y_cf, mu0, mu1, xs;
  std::string line;
  std::size_t line_no = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    const std::string where = source + ": row " + std::to_string(row);
    if (fields.size() != expected_cols) {
      throw FormatError(where + ": expected " + std::to_string(expected_cols) + " columns, found " +
                        std::to_string(fields.size()));
    }
    double values[5];
    for (std::size_t c = 0; c < 5; ++c) {
      try {
        values[c] = parse_double(fields[c]);
      } catch (const FormatError& e) {
        throw FormatError(where + ", column " + std::to_string(c + 1) + ": " + e.what());
      }
    }
    if (values[0] != 0.0 && values[0] != 1.0) {
      throw FormatError(where + ": treatment flag must be 0 or 1, found '" + std::string(trim(fields[0])) + "'");
    }
    t.push_back(static_cast<int>(values[0]));
    y.push_back(values[1]);
    y_cf.push_back(values[2]);
    mu0.push_back(values[3]);
    mu1.push_back(values[4]);
    for (std::size_t c = 5; c < expected_cols; ++c) {
      try {
        xs.push_back(parse_double(fields[c]));
      } catch (const FormatError& e) {
        throw FormatError(where + ", column " + std::to_string(c + 1) + ": " + e.what());
      }
    }
  }
  if (t.empty()) throw FormatError(source + ": no data rows");
  const std::size_t n = t.size();
  CausalDataset data(Tensor(n, expected_dim, std::move(xs)), std::move(t), std::move(y), std::move(y_cf),
                     std::move(mu0), std::move(mu1));
  const std::size_t treated = data.treated_count();
  if (treated == 0 || treated == n) throw FormatError(source + ": both treatment groups must be present");
  return data;
}

CausalDataset load_ihdp_csv(const std::filesystem::path& path, bool has_header, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_ihdp_csv(in, path.string(), has_header, expected_dim);
}

void write_ihdp_csv(const std::filesystem::path& path, const CausalDataset& data) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double m0 = data.mu0() ? (*data.mu0())[i] : data.y0(i);
    const double m1 = data.mu1() ? (*data.mu1())[i] : data.y1(i);
    out << data.t()[i] << ',' << format_double(data.y()[i]) << ',' << format_double(data.y_cf()[i]) << ','
        << format_double(m0) << ',' << format_double(m1);
    for (double v : data.x().row(i)) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

// ------------------------------------------------------------ synthetic data

void SynthConfig::validate() const {
  if (n < 10) throw ContractError("synthetic dataset needs n >= 10, got " + std::to_string(n));
  if (dim == 0) throw ContractError("synthetic dataset needs at least one covariate");
  if (binary_columns > dim) throw ContractError("binary_columns exceeds dim");
  if (!(treated_fraction > 0.0 && treated_fraction < 1.0)) {
    throw ContractError("treated_fraction must lie in (0, 1)");
  }
  if (!(noise >= 0.0)) throw ContractError("noise scale must be >= 0");
  if (!(coefficient_sparsity >= 0.0 && coefficient_sparsity <= 1.0)) {
    throw ContractError("coefficient_sparsity must lie in [0, 1]");
  }
  if (coefficient_values.empty()) throw ContractError("coefficient_values must be nonempty");
}

namespace {

double logistic(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

std::vector<double> draw_coefficients(Rng& rng, const SynthConfig& c) {
  std::vector<double> beta(c.dim);
  for (double& b : beta) {
    if (rng.uniform() < c.coefficient_sparsity) {
      b = 0.0;
    } else {
      b = c.coefficient_values[rng.below(c.coefficient_values.size())];
    }
  }
  return beta;
}

double dot(std::span<const double> a, std::span<const double> b, double offset = 0.0) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] + offset) * b[i];
  return acc;
}

// Intercept a with mean_i logistic(a + k z_i) = target, by bisection.
double calibrate_intercept(std::span<const double> z, double strength, double target) {
  auto mean_p = [&](double a) {
    double acc = 0.0;
    for (double zi : z) acc += logistic(a + strength * zi);
    return acc / static_cast<double>(z.size());
  };
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mean_p(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

CausalDataset synth_generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const std::size_t n = config.n, d = config.dim;
  const std::size_t continuous = d - config.binary_columns;

  Tensor x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(i, j) = j < continuous ? rng.normal() : (rng.bernoulli(0.5) ? 1.0 : 0.0);
  }

  const std::vector<double> beta = draw_coefficients(rng, config);
  const std::vector<double> beta_treated =
      config.surface == ResponseSurface::linear ? draw_coefficients(rng, config) : beta;

  // Treatment assignment: logistic in a standardized random projection.
  std::vector<double> direction(d);
  for (double& v : direction) v = rng.normal();
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = dot(x.row(i), direction);
  const double mean = std::accumulate(score.begin(), score.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double s : score) var += (s - mean) * (s - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (double& s : score) s = sd > 0.0 ? (s - mean) / sd : 0.0;
  const double intercept = calibrate_intercept(score, config.assignment_strength, config.treated_fraction);

  std::vector<double> propensity(n);
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    propensity[i] = logistic(intercept + config.assignment_strength * score[i]);
    t[i] = rng.bernoulli(propensity[i]) ? 1 : 0;
  }
  const auto treated = std::count(t.begin(), t.end(), 1);
  if (treated == 0) {
    t[static_cast<std::size_t>(std::max_element(propensity.begin(), propensity.end()) - propensity.begin())] = 1;
  } else if (static_cast<std::size_t>(treated) == n) {
    t[static_cast<std::size_t>(std::min_element(propensity.begin(), propensity.end()) - propensity.begin())] = 0;
  }

  std::vector<double> mu0(n), mu1(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (config.surface == ResponseSurface::exponential) {
      mu0[i] = std::exp(dot(x.row(i), beta, config.covariate_offset));
      mu1[i] = dot(x.row(i), beta);
    } else {
      mu0[i] = dot(x.row(i), beta);
      mu1[i] = dot(x.row(i), beta_treated);
    }
  }
  double omega = 0.0;
  if (config.omega) {
    omega = *config.omega;
  } else {
    double gap = 0.0;
    for (std::size_t i = 0; i < n; ++i) gap += mu1[i] - mu0[i];
    omega = gap / static_cast<double>(n) - config.target_effect;
  }
  for (double& m : mu1) m -= omega;

  std::vector<double> y(n), y_cf(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double e_factual = config.noise * rng.normal();
    const double e_counter = config.noise * rng.normal();
    y[i] = (t[i] == 1 ? mu1[i] : mu0[i]) + e_factual;
    y_cf[i] = (t[i] == 1 ? mu0[i] : mu1[i]) + e_counter;
  }
  return CausalDataset(std::move(x), std::move(t), std::move(y), std::move(y_cf), std::move(mu0), std::move(mu1));
}

// ------------------------------------------------------------ splits

std::size_t SplitPlan::run_count() const {
  std::size_t total = 0;
  for (const auto& seeds : init_seeds) total += seeds.size();
  return total;
}

SplitPlan make_split_plan(std::size_t n, std::uint64_t master_seed, const SplitOptions& options) {
  if (n < 10) throw ContractError("split plan needs n >= 10, got " + std::to_string(n));
  const auto test_size = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(n)));
  const auto train_size = static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(n)));
  if (test_size > n || train_size > n - test_size) {
    throw ContractError("train subset of " + std::to_string(train_size) + " rows does not fit in the " +
                        std::to_string(n - test_size) + " non-test rows");
  }
  Rng rng(derive_seed(master_seed, 0x5b1175ULL));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));

  SplitPlan plan;
  plan.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  std::sort(plan.test.begin(), plan.test.end());
  std::vector<std::size_t> pool(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  std::sort(pool.begin(), pool.end());

  for (std::size_t s = 0; s < options.subsets; ++s) {
    std::vector<std::size_t> draw = pool;
    rng.shuffle(std::span<std::size_t>(draw));
    draw.resize(train_size);
    std::sort(draw.begin(), draw.end());
    plan.train_subsets.push_back(std::move(draw));
    std::vector<std::uint64_t> seeds;
    for (std::size_t k = 0; k < options.inits; ++k) seeds.push_back(derive_seed(master_seed, s + 1, k + 1));
    plan.init_seeds.push_back(std::move(seeds));
  }
  return plan;
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, std::uint64_t epoch_seed,
                                                  std::size_t epoch) {
  if (batch_size < 2) throw ContractError("batch size must be >= 2");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(epoch_seed, epoch));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace balancereg
