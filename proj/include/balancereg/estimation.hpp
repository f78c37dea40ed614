#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "balancereg/data.hpp"
#include "balancereg/model.hpp"

namespace balancereg {

enum class InferenceMode { inductive, transductive };

std::string to_string(InferenceMode mode);
InferenceMode parse_inference_mode(const std::string& text);

// Which per-unit effect estimates are scored against.
enum class TruthSource {
  noiseless,  // mu1 - mu0 when the dataset carries them, else Y1 - Y0
  realized,   // Y1 - Y0 from the factual and counterfactual columns
};

std::string to_string(TruthSource source);
TruthSource parse_truth_source(const std::string& text);

struct RunId {
  std::size_t subset = 0;
  std::size_t init = 0;
};

struct RunMetrics {
  RunId run_id;
  InferenceMode mode = InferenceMode::inductive;
  std::vector<double> im_hat;  // one per test unit, test-set order
};

// Across-run error decomposition on a fixed test set with truth d_i:
//   b_i = mean_r im_ir - d_i,  v_i = (1/R) sum_r (im_ir - mean_r im_ir)^2
//   bias_sq = mean_i b_i^2, variance = mean_i v_i
//   MSE_r = mean_i (im_ir - d_i)^2, pehe_r = sqrt(MSE_r)
// mse_mean = mean_r MSE_r = bias_sq + variance; mse_std is the population
// standard deviation of MSE_r over runs.
struct AggregateMetrics {
  double bias_sq = 0.0;
  double variance = 0.0;
  double mse_mean = 0.0;
  double mse_std = 0.0;
  std::vector<double> pehe_per_run;
};

// f(x,1) - f(x,0)
double impact_inductive(double treated_pred, double control_pred);
// t = 1: y - f(x,0);  t = 0: f(x,1) - y
double impact_transductive(int t, double y, double control_pred, double treated_pred);

std::vector<double> estimate_impacts(const Model& model, const CausalDataset& units, InferenceMode mode);

std::vector<double> true_effects(const CausalDataset& units, TruthSource source);

AggregateMetrics aggregate_metrics(std::span<const double> truth, std::span<const RunMetrics> runs);

// nullopt when either input is constant (spread at rounding level included).
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

struct ResidualCorrelation {
  std::vector<double> treated_residual;  // Y1 - f(x,1)
  std::vector<double> control_residual;  // Y0 - f(x,0)
  std::optional<double> r;               // nullopt: undefined correlation
};

ResidualCorrelation residual_correlation(const Model& model, const CausalDataset& units);

}  // namespace balancereg
