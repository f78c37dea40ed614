#include "balancereg/estimation.hpp"

#include <cmath>
#include <limits>

#include "balancereg/errors.hpp"

namespace balancereg {

std::string to_string(InferenceMode mode) {
  return mode == InferenceMode::inductive ? "inductive" : "transductive";
}

InferenceMode parse_inference_mode(const std::string& text) {
  if (text == "inductive") return InferenceMode::inductive;
  if (text == "transductive") return InferenceMode::transductive;
  throw ContractError("unknown inference mode '" + text + "'");
}

std::string to_string(TruthSource source) {
  return source == TruthSource::noiseless ? "noiseless" : "realized";
}

TruthSource parse_truth_source(const std::string& text) {
  if (text == "noiseless") return TruthSource::noiseless;
  if (text == "realized") return TruthSource::realized;
  throw ContractError("unknown truth source '" + text + "'");
}

double impact_inductive(double treated_pred, double control_pred) {
  return treated_pred - control_pred;
}

double impact_transductive(int t, double y, double control_pred, double treated_pred) {
  if (t == 1) return y - control_pred;
  if (t == 0) return treated_pred - y;
  throw ContractError("treatment flag must be 0 or 1, got " + std::to_string(t));
}

std::vector<double> estimate_impacts(const Model& model, const CausalDataset& units, InferenceMode mode) {
  const Predictions pred = predict(model, units.x());
  std::vector<double> out(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    out[i] = mode == InferenceMode::inductive
                 ? impact_inductive(pred.treated[i], pred.control[i])
                 : impact_transductive(units.t()[i], units.y()[i], pred.control[i], pred.treated[i]);
  }
  return out;
}

std::vector<double> true_effects(const CausalDataset& units, TruthSource source) {
  std::vector<double> out(units.size());
  const bool use_mu = source == TruthSource::noiseless && units.mu0().has_value();
  for (std::size_t i = 0; i < units.size(); ++i) {
    out[i] = use_mu ? (*units.mu1())[i] - (*units.mu0())[i] : units.y1(i) - units.y0(i);
  }
  return out;
}

AggregateMetrics aggregate_metrics(std::span<const double> truth, std::span<const RunMetrics> runs) {
  if (runs.size() < 2) throw ContractError("aggregate_metrics needs at least 2 runs, got " + std::to_string(runs.size()));
  const std::size_t units = truth.size();
  if (units == 0) throw ContractError("aggregate_metrics needs at least one test unit");
  for (const RunMetrics& run : runs) {
    if (run.im_hat.size() != units) {
      throw ContractError("run (" + std::to_string(run.run_id.subset) + "," + std::to_string(run.run_id.init) +
                          ") has " + std::to_string(run.im_hat.size()) + " estimates for " + std::to_string(units) +
                          " test units");
    }
  }
  const double r_count = static_cast<double>(runs.size());
  const double u_count = static_cast<double>(units);

  AggregateMetrics out;
  for (std::size_t i = 0; i < units; ++i) {
    double mean = 0.0;
    for (const RunMetrics& run : runs) mean += run.im_hat[i];
    mean /= r_count;
    double var = 0.0;
    for (const RunMetrics& run : runs) var += (run.im_hat[i] - mean) * (run.im_hat[i] - mean);
    const double bias = mean - truth[i];
    out.bias_sq += bias * bias;
    out.variance += var / r_count;
  }
  out.bias_sq /= u_count;
  out.variance /= u_count;

  std::vector<double> mse(runs.size());
  for (std::size_t r = 0; r < runs.size(); ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < units; ++i) {
      const double e = runs[r].im_hat[i] - truth[i];
      acc += e * e;
    }
    mse[r] = acc / u_count;
    out.pehe_per_run.push_back(std::sqrt(mse[r]));
    out.mse_mean += mse[r];
  }
  out.mse_mean /= r_count;
  double spread = 0.0;
  for (double m : mse) spread += (m - out.mse_mean) * (m - out.mse_mean);
  out.mse_std = std::sqrt(spread / r_count);
  return out;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("pearson: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  // spread at the level of rounding noise counts as constant
  auto flat = [n](std::span<const double> v, double ss) {
    double scale = 0.0;
    for (double x : v) scale = std::max(scale, std::abs(x));
    return std::sqrt(ss / n) <= 64.0 * std::numeric_limits<double>::epsilon() * scale;
  };
  if (flat(a, saa) || flat(b, sbb)) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

ResidualCorrelation residual_correlation(const Model& model, const CausalDataset& units) {
  const Predictions pred = predict(model, units.x());
  ResidualCorrelation out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    out.treated_residual.push_back(units.y1(i) - pred.treated[i]);
    out.control_residual.push_back(units.y0(i) - pred.control[i]);
  }
  out.r = pearson(out.treated_residual, out.control_residual);
  return out;
}

}  // namespace balancereg
