#include "balancereg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "balancereg/errors.hpp"

namespace balancereg {

std::string to_string(PrgVariant v) {
  return v == PrgVariant::soft_ks ? "soft_ks" : "smd";
}

PrgVariant parse_prg_variant(const std::string& text) {
  if (text == "soft_ks") return PrgVariant::soft_ks;
  if (text == "smd") return PrgVariant::smd;
  throw ContractError("unknown prognostic variant '" + text + "' (expected soft_ks or smd)");
}

void LossWeights::validate() const {
  if (!(rho >= 0.0) || !(gamma >= 0.0) || !(lambda >= 0.0)) {
    throw ContractError("loss weights must be nonnegative (rho=" + std::to_string(rho) +
                        ", gamma=" + std::to_string(gamma) + ", lambda=" + std::to_string(lambda) + ")");
  }
  if (kernel_bandwidth && !(*kernel_bandwidth > 0.0)) throw ContractError("kernel bandwidth must be > 0");
  if (softks_temperature && !(*softks_temperature > 0.0)) throw ContractError("soft-KS temperature must be > 0");
}

// ------------------------------------------------------------ fit

ad::Var fit_loss(ad::Tape& tape, std::optional<ad::Var> pred_control, std::span<const double> y_control,
                 std::optional<ad::Var> pred_treated, std::span<const double> y_treated, double rho) {
  auto half_sse = [&](const std::optional<ad::Var>& pred, std::span<const double> y) -> std::optional<ad::Var> {
    const std::size_t n = pred ? pred->value().size() : 0;
    if (n != y.size()) {
      throw ContractError("fit_loss: " + std::to_string(n) + " predictions for " + std::to_string(y.size()) +
                          " targets");
    }
    if (n == 0) return std::nullopt;
    ad::Var target = tape.constant(Tensor(pred->rows(), pred->cols(), std::vector<double>(y.begin(), y.end())));
    return 0.5 * ad::sum(ad::square(*pred - target));
  };
  std::optional<ad::Var> control = half_sse(pred_control, y_control);
  std::optional<ad::Var> treated = half_sse(pred_treated, y_treated);
  if (treated && rho != 1.0) treated = rho * *treated;
  if (control && treated) return *control + *treated;
  if (control) return *control;
  if (treated) return *treated;
  return tape.constant(Tensor::scalar(0.0));
}

// ------------------------------------------------------------ MMD

double median_pairwise_distance(const Tensor& a, const Tensor& b) {
  if (a.cols != b.cols) throw DimensionError("median_pairwise_distance: width mismatch");
  const std::size_t m = a.rows + b.rows;
  const std::size_t d = a.cols;
  auto row = [&](std::size_t i) { return i < a.rows ? a.row(i) : b.row(i - a.rows); };
  std::vector<double> dists;
  dists.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    const auto ri = row(i);
    for (std::size_t j = i + 1; j < m; ++j) {
      const auto rj = row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) acc += (ri[k] - rj[k]) * (ri[k] - rj[k]);
      dists.push_back(std::sqrt(acc));
    }
  }
  if (dists.empty()) return 1.0;
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (median + lower);
  }
  return median > 0.0 ? median : 1.0;
}

std::optional<ad::Var> mmd_sq(ad::Tape& tape, ad::Var a, ad::Var b, std::optional<double> bandwidth,
                              MmdEstimator estimator) {
  if (a.cols() != b.cols()) {
    throw DimensionError("mmd_sq: embedding widths differ, " + a.value().shape_string() + " vs " +
                         b.value().shape_string());
  }
  const std::size_t min_rows = estimator == MmdEstimator::unbiased_u ? 2 : 1;
  if (a.rows() < min_rows || b.rows() < min_rows) return std::nullopt;
  const double sigma = bandwidth ? *bandwidth : median_pairwise_distance(a.value(), b.value());
  if (!(sigma > 0.0)) throw ContractError("mmd_sq: bandwidth must be > 0");
  const double coeff = -1.0 / (2.0 * sigma * sigma);

  auto kernel = [&](ad::Var u, ad::Var v) { return ad::exp(ad::pairwise_sq_dist(u, v) * coeff); };
  ad::Var kaa = kernel(a, a);
  ad::Var kbb = kernel(b, b);
  ad::Var kab = kernel(a, b);

  if (estimator == MmdEstimator::biased_v) {
    return ad::mean(kaa) + ad::mean(kbb) - 2.0 * ad::mean(kab);
  }
  auto off_diagonal_mean = [&](ad::Var k) {
    const std::size_t n = k.rows();
    Tensor mask(n, n, 1.0);
    for (std::size_t i = 0; i < n; ++i) mask(i, i) = 0.0;
    return ad::sum(k * tape.constant(std::move(mask))) * (1.0 / static_cast<double>(n * (n - 1)));
  };
  return off_diagonal_mean(kaa) + off_diagonal_mean(kbb) - 2.0 * ad::mean(kab);
}

// ------------------------------------------------------------ KS

std::optional<double> ks_exact(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return std::nullopt;
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < sa.size() || j < sb.size()) {
    double z;
    if (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) {
      z = sa[i];
    } else {
      z = sb[j];
    }
    while (i < sa.size() && sa[i] <= z) ++i;
    while (j < sb.size() && sb[j] <= z) ++j;
    best = std::max(best, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return best;
}

double auto_temperature(const Tensor& a, const Tensor& b) {
  const double n = static_cast<double>(a.size() + b.size());
  double total = 0.0;
  for (double v : a.data) total += v;
  for (double v : b.data) total += v;
  const double mean = total / n;
  double ss = 0.0;
  for (double v : a.data) ss += (v - mean) * (v - mean);
  for (double v : b.data) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  return sd > 0.0 ? 0.1 * sd : 1.0;
}

std::optional<ad::Var> soft_ks(ad::Tape& tape, ad::Var a, ad::Var b, std::optional<double> temperature) {
  if (a.cols() != 1 || b.cols() != 1) {
    throw DimensionError("soft_ks expects column vectors, got " + a.value().shape_string() + " and " +
                         b.value().shape_string());
  }
  if (a.rows() == 0 || b.rows() == 0) return std::nullopt;
  const double tau = temperature ? *temperature : auto_temperature(a.value(), b.value());
  if (!(tau > 0.0)) throw ContractError("soft_ks: temperature must be > 0");

  const ad::Var parts[] = {a, b};
  ad::Var pooled = ad::concat_rows(parts);
  const std::vector<double>& pv = pooled.value().data;
  std::vector<std::size_t> order(pv.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return pv[l] < pv[r]; });
  std::vector<std::size_t> lo(order.begin(), order.end() - 1), hi(order.begin() + 1, order.end());
  ad::Var z = 0.5 * (ad::gather_rows(pooled, lo) + ad::gather_rows(pooled, hi));
  const std::size_t m = z.rows();

  auto smooth_ecdf = [&](ad::Var s) {
    const std::size_t n = s.rows();
    ad::Var diff = ad::matmul(z, tape.constant(Tensor(1, n, 1.0))) -
                   ad::matmul(tape.constant(Tensor(m, 1, 1.0)), ad::transpose(s));
    ad::Var weights = tape.constant(Tensor(n, 1, 1.0 / static_cast<double>(n)));
    return ad::matmul(ad::sigmoid(diff * (1.0 / tau)), weights);
  };
  return ad::max(ad::abs(smooth_ecdf(a) - smooth_ecdf(b)));
}

// ------------------------------------------------------------ SMD

std::optional<ad::Var> smd(ad::Tape&, ad::Var a, ad::Var b) {
  if (a.value().size() < 2 || b.value().size() < 2) return std::nullopt;
  auto moments = [](ad::Var s) {
    ad::Var mu = ad::mean(s);
    ad::Var var = ad::sum(ad::square(s - mu)) * (1.0 / static_cast<double>(s.value().size() - 1));
    return std::pair{mu, var};
  };
  auto [mean_a, var_a] = moments(a);
  auto [mean_b, var_b] = moments(b);
  return ad::abs(mean_a - mean_b) / ad::sqrt((var_a + var_b) * 0.5 + 1e-8);
}

// ------------------------------------------------------------ prognostic

namespace {

std::optional<ad::Var> prognostic_from_predictions(ad::Tape& tape, ad::Var control_pred, ad::Var treated_pred,
                                                   PrgVariant variant, std::optional<double> temperature) {
  if (variant == PrgVariant::soft_ks) return soft_ks(tape, control_pred, treated_pred, temperature);
  return smd(tape, control_pred, treated_pred);
}

}  // namespace

std::optional<ad::Var> prognostic_loss(ad::Tape& tape, const TwoHeadModel& model, ad::Var x_control,
                                       ad::Var x_treated, PrgVariant variant, std::optional<double> temperature) {
  if (x_control.rows() == 0 || x_treated.rows() == 0) return std::nullopt;
  ad::Var c = model.control_head(tape, model.embed(tape, x_control));
  ad::Var t = model.control_head(tape, model.embed(tape, x_treated));
  return prognostic_from_predictions(tape, c, t, variant, temperature);
}

// ------------------------------------------------------------ objective

namespace {

struct GroupSplit {
  std::vector<std::size_t> control;
  std::vector<std::size_t> treated;
  std::vector<double> y_control;
  std::vector<double> y_treated;
};

GroupSplit split_groups(const TrainView& batch) {
  if (batch.size() == 0) throw ContractError("objective on an empty batch");
  GroupSplit g;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.t[i] == 1) {
      g.treated.push_back(i);
      g.y_treated.push_back(batch.y[i]);
    } else {
      g.control.push_back(i);
      g.y_control.push_back(batch.y[i]);
    }
  }
  return g;
}

std::optional<ad::Var> group_input(ad::Tape& tape, const TrainView& batch, const std::vector<std::size_t>& rows) {
  if (rows.empty()) return std::nullopt;
  return tape.constant(take_rows(batch.x, rows));
}

}  // namespace

ObjectiveTerms total_objective(ad::Tape& tape, const TwoHeadModel& model, const TrainView& batch,
                               const LossWeights& weights) {
  weights.validate();
  const GroupSplit g = split_groups(batch);
  std::optional<ad::Var> xc = group_input(tape, batch, g.control);
  std::optional<ad::Var> xt = group_input(tape, batch, g.treated);

  std::optional<ad::Var> hc, ht, pred_c, pred_t;
  if (xc) {
    hc = model.embed(tape, *xc);
    pred_c = model.control_head(tape, *hc);
  }
  if (xt) {
    ht = model.embed(tape, *xt);
    pred_t = model.treated_head(tape, *ht);
  }

  ObjectiveTerms terms;
  terms.fit = fit_loss(tape, pred_c, g.y_control, pred_t, g.y_treated, weights.rho);
  terms.total = terms.fit;
  if (weights.gamma > 0.0 && hc && ht) {
    terms.mmd = mmd_sq(tape, *hc, *ht, weights.kernel_bandwidth, weights.mmd_estimator);
    if (terms.mmd) terms.total = terms.total + weights.gamma * *terms.mmd;
  }
  if (weights.lambda > 0.0 && hc && ht) {
    ad::Var control_on_treated = model.control_head(tape, *ht);
    terms.prg = prognostic_from_predictions(tape, *pred_c, control_on_treated, weights.prg_variant,
                                            weights.softks_temperature);
    if (terms.prg) terms.total = terms.total + weights.lambda * *terms.prg;
  }
  return terms;
}

ObjectiveTerms total_objective(ad::Tape& tape, const SeparateHeadsModel& model, const TrainView& batch,
                               const LossWeights& weights) {
  weights.validate();
  if (weights.regularized()) {
    throw ContractError("separate-heads model has no shared embedding; gamma and lambda must be 0");
  }
  const GroupSplit g = split_groups(batch);
  std::optional<ad::Var> xc = group_input(tape, batch, g.control);
  std::optional<ad::Var> xt = group_input(tape, batch, g.treated);
  std::optional<ad::Var> pred_c, pred_t;
  if (xc) pred_c = model.net0().forward(tape, *xc);
  if (xt) pred_t = model.net1().forward(tape, *xt);
  ObjectiveTerms terms;
  terms.fit = fit_loss(tape, pred_c, g.y_control, pred_t, g.y_treated, weights.rho);
  terms.total = terms.fit;
  return terms;
}

ObjectiveTerms total_objective(ad::Tape& tape, const Model& model, const TrainView& batch, const LossWeights& weights) {
  return std::visit([&](const auto& m) { return total_objective(tape, m, batch, weights); }, model);
}

}  // namespace balancereg
