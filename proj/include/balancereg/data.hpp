#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "balancereg/tensor.hpp"

namespace balancereg {

// What training code may see: covariates, treatment flags, factual outcomes.
struct TrainView {
  Tensor x;                 // n x d
  std::vector<int> t;       // 0 or 1
  std::vector<double> y;    // factual outcome

  std::size_t size() const { return t.size(); }
  std::size_t treated_count() const;
  std::size_t control_count() const { return size() - treated_count(); }

  TrainView rows(std::span<const std::size_t> indices) const;
};

// Units with both potential outcomes. y is the factual outcome
// (t*Y1 + (1-t)*Y0), y_cf the counterfactual. mu0/mu1 are noiseless
// outcome means when the source provides them.
class CausalDataset {
 public:
  CausalDataset() = default;
  CausalDataset(Tensor x, std::vector<int> t, std::vector<double> y, std::vector<double> y_cf,
                std::optional<std::vector<double>> mu0 = std::nullopt,
                std::optional<std::vector<double>> mu1 = std::nullopt);

  std::size_t size() const { return t_.size(); }
  std::size_t dim() const { return x_.cols; }
  std::size_t treated_count() const;

  const Tensor& x() const { return x_; }
  const std::vector<int>& t() const { return t_; }
  const std::vector<double>& y() const { return y_; }
  const std::vector<double>& y_cf() const { return y_cf_; }
  const std::optional<std::vector<double>>& mu0() const { return mu0_; }
  const std::optional<std::vector<double>>& mu1() const { return mu1_; }

  // Potential outcomes reconstructed from (t, y, y_cf).
  double y0(std::size_t i) const { return t_[i] == 1 ? y_cf_[i] : y_[i]; }
  double y1(std::size_t i) const { return t_[i] == 1 ? y_[i] : y_cf_[i]; }

  TrainView train_view() const;
  TrainView train_view(std::span<const std::size_t> indices) const;
  CausalDataset subset(std::span<const std::size_t> indices) const;

 private:
  Tensor x_;
  std::vector<int> t_;
  std::vector<double> y_;
  std::vector<double> y_cf_;
  std::optional<std::vector<double>> mu0_;
  std::optional<std::vector<double>> mu1_;
};

// Headerless CSV, columns: t, y_factual, y_cfactual, mu0, mu1, x1..xd.
// Covariate count is fixed by `expected_dim` (25 for IHDP).
CausalDataset load_ihdp_csv(const std::filesystem::path& path, bool has_header = false,
                            std::size_t expected_dim = 25);
CausalDataset parse_ihdp_csv(std::istream& in, const std::string& source, bool has_header = false,
                             std::size_t expected_dim = 25);
// Numbers are written in shortest round-trip form; reading the file back
// yields bit-identical values. Missing mu columns are written as y0/y1.
void write_ihdp_csv(const std::filesystem::path& path, const CausalDataset& data);

enum class ResponseSurface {
  exponential,  // mu0 = exp((x + offset) beta), mu1 = x beta - omega
  linear,       // mu0 = x beta, mu1 = x beta' - omega
};

struct SynthConfig {
  std::size_t n = 747;
  std::size_t dim = 25;
  std::size_t binary_columns = 19;        // remaining columns are standard normal
  double treated_fraction = 139.0 / 747.0;
  double assignment_strength = 1.0;       // slope of the logistic assignment rule
  double coefficient_sparsity = 0.6;      // probability a coefficient is zero
  std::vector<double> coefficient_values = {0.1, 0.2, 0.3, 0.4};
  double covariate_offset = 0.5;          // added to x inside the exponential surface
  double noise = 1.0;
  double target_effect = 4.0;             // mean mu1 - mu0 when omega is calibrated
  std::optional<double> omega;            // fixed offset; overrides calibration
  ResponseSurface surface = ResponseSurface::exponential;
  std::uint64_t seed = 1;

  void validate() const;
};

CausalDataset synth_generate(const SynthConfig& config);

struct SplitPlan {
  std::vector<std::size_t> test;                        // sorted
  std::vector<std::vector<std::size_t>> train_subsets;  // each sorted
  std::vector<std::vector<std::uint64_t>> init_seeds;   // [subset][init]

  std::size_t run_count() const;
};

struct SplitOptions {
  double test_fraction = 0.2;
  double train_fraction = 0.6;
  std::size_t subsets = 5;
  std::size_t inits = 4;
};

SplitPlan make_split_plan(std::size_t n, std::uint64_t master_seed, const SplitOptions& options = {});

// Row order for one epoch: a deterministic shuffle of 0..n-1 cut into
// consecutive batches; the final short batch is kept.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch_size, std::uint64_t epoch_seed,
                                                  std::size_t epoch);

}  // namespace balancereg
