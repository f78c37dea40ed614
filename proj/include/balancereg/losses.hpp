#pragma once

#include <optional>
#include <span>
#include <string>

#include "balancereg/data.hpp"
#include "balancereg/diffcore.hpp"
#include "balancereg/model.hpp"

namespace balancereg {

enum class PrgVariant { soft_ks, smd };
enum class MmdEstimator { biased_v, unbiased_u };

std::string to_string(PrgVariant v);
PrgVariant parse_prg_variant(const std::string& text);

struct LossWeights {
  double rho = 1.0;
  double gamma = 0.0;   // MMD weight
  double lambda = 0.0;  // prognostic weight
  PrgVariant prg_variant = PrgVariant::soft_ks;
  MmdEstimator mmd_estimator = MmdEstimator::biased_v;
  std::optional<double> kernel_bandwidth;     // nullopt: median heuristic per batch
  std::optional<double> softks_temperature;   // nullopt: 0.1 x pooled std

  bool regularized() const { return gamma > 0.0 || lambda > 0.0; }
  void validate() const;
};

// 1/2 sum_control (p - y)^2 + rho/2 sum_treated (p - y)^2. Either group may
// be absent (nullopt prediction with empty targets).
ad::Var fit_loss(ad::Tape& tape, std::optional<ad::Var> pred_control, std::span<const double> y_control,
                 std::optional<ad::Var> pred_treated, std::span<const double> y_treated, double rho);

// Median of the pairwise Euclidean distances over all distinct pairs of the
// pooled rows of a and b. Falls back to 1 when that median is 0.
double median_pairwise_distance(const Tensor& a, const Tensor& b);

// Squared MMD with Gaussian kernel exp(-|u - v|^2 / (2 sigma^2)).
// biased_v: mean K_aa + mean K_bb - 2 mean K_ab (diagonals included).
// unbiased_u: same-sample means exclude the diagonal and need >= 2 rows.
// nullopt means a group is absent. sigma is a constant: no gradient.
std::optional<ad::Var> mmd_sq(ad::Tape& tape, ad::Var a, ad::Var b, std::optional<double> bandwidth,
                              MmdEstimator estimator = MmdEstimator::biased_v);

// Two-sample Kolmogorov-Smirnov statistic with right-continuous ECDFs.
std::optional<double> ks_exact(std::span<const double> a, std::span<const double> b);

// Default soft-KS temperature: 0.1 x population std of the pooled samples
// (1.0 if they are all equal).
double auto_temperature(const Tensor& a, const Tensor& b);

// Sigmoid-smoothed KS. Each sample's ECDF becomes mean_i sigmoid((z - s_i)/tau)
// and the statistic is the largest |F_a(z) - F_b(z)| over the midpoints
// between consecutive sorted pooled values, where both exact ECDFs are flat.
// Inputs are column vectors.
std::optional<ad::Var> soft_ks(ad::Tape& tape, ad::Var a, ad::Var b, std::optional<double> temperature);

// |mean_a - mean_b| / sqrt((var_a + var_b)/2 + 1e-8) with n-1 variances.
std::optional<ad::Var> smd(ad::Tape& tape, ad::Var a, ad::Var b);

// Control-head predictions on both groups, compared with soft_ks or smd.
std::optional<ad::Var> prognostic_loss(ad::Tape& tape, const TwoHeadModel& model, ad::Var x_control,
                                       ad::Var x_treated, PrgVariant variant, std::optional<double> temperature);

struct ObjectiveTerms {
  ad::Var total;
  ad::Var fit;
  std::optional<ad::Var> mmd;  // unweighted; absent when skipped
  std::optional<ad::Var> prg;
};

// L_fit + gamma L_mmd + lambda L_prg on one batch. Regularizers are computed
// on the within-batch control/treated split and skipped (contribute 0) when
// a group is missing.
ObjectiveTerms total_objective(ad::Tape& tape, const TwoHeadModel& model, const TrainView& batch,
                               const LossWeights& weights);
// Sum of the two networks' factual fit losses. Rejects gamma or lambda > 0.
ObjectiveTerms total_objective(ad::Tape& tape, const SeparateHeadsModel& model, const TrainView& batch,
                               const LossWeights& weights);
ObjectiveTerms total_objective(ad::Tape& tape, const Model& model, const TrainView& batch, const LossWeights& weights);

}  // namespace balancereg
