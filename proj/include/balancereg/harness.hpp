#pragma once

// Repeated-run experiments over a fixed split plan: model comparison,
// (gamma, lambda) sweeps and residual scatter export, plus their CSV writers.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "balancereg/data.hpp"
#include "balancereg/estimation.hpp"
#include "balancereg/trainer.hpp"

namespace balancereg {

struct ExperimentSpec {
  std::uint64_t master_seed = 0;
  std::vector<ModelKind> models = {ModelKind::two_head, ModelKind::separate_heads};
  std::vector<InferenceMode> modes = {InferenceMode::inductive, InferenceMode::transductive};
  std::vector<double> gamma_grid = {0.0, 0.1, 1.0, 10.0, 100.0};
  std::vector<double> lambda_grid = {0.0, 0.01, 0.1, 1.0, 10.0};
  InferenceMode sweep_mode = InferenceMode::inductive;
  TrainConfig train;  // epochs, batch size, lr and base loss weights; seed unused
  SplitOptions split;
  TruthSource truth = TruthSource::noiseless;
  std::size_t workers = 0;  // 0: BALANCEREG_WORKERS, else hardware concurrency
};

// Worker count: explicit request, else BALANCEREG_WORKERS, else hardware
// concurrency; always >= 1.
std::size_t resolve_workers(std::size_t requested);

// Runs fn(0..count-1) on up to `workers` threads. The first exception thrown
// by any task is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

struct ProtocolRuns {
  std::vector<RunId> ids;                      // subset-major order
  std::vector<std::vector<RunMetrics>> by_mode;  // indexed like `modes`
};

// Trains one model per (subset, init) of the plan and scores every mode on
// the plan's test set. Run seeds come from the plan, so any two configs run
// on the same plan share initializations and batch orders.
ProtocolRuns run_protocol(const CausalDataset& data, const SplitPlan& plan, const TrainConfig& base,
                          const std::vector<InferenceMode>& modes, std::size_t workers);

struct ComparisonRow {
  ModelKind model = ModelKind::two_head;
  InferenceMode mode = InferenceMode::inductive;
  AggregateMetrics metrics;
  std::vector<RunMetrics> runs;
};

struct SweepRow {
  double gamma = 0.0;
  double lambda = 0.0;
  AggregateMetrics metrics;
};

struct ScatterSeries {
  ModelKind model = ModelKind::two_head;
  std::vector<std::size_t> unit_ids;  // dataset row indices of the test units
  ResidualCorrelation residuals;
};

struct Experiment {
  CausalDataset data;
  SplitPlan plan;
  std::vector<double> truth;  // per test unit
};

Experiment prepare_experiment(CausalDataset data, const ExperimentSpec& spec);

// One row per (model, mode); requires unregularized base weights.
std::vector<ComparisonRow> run_comparison(const Experiment& exp, const ExperimentSpec& spec);
// Two-head model over gamma_grid x lambda_grid, scored in spec.sweep_mode.
std::vector<SweepRow> run_sweep(const Experiment& exp, const ExperimentSpec& spec);
// Residual pairs on the test set from the first (subset 0, init 0) run of
// each model.
std::vector<ScatterSeries> export_scatter(const Experiment& exp, const ExperimentSpec& spec);

void write_comparison_csv(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows);
// run_id is subset * inits + init.
void write_estimates_csv(const std::filesystem::path& path, const ComparisonRow& row,
                         const std::vector<std::size_t>& test_units, const std::vector<double>& truth,
                         std::size_t inits);
void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
void write_scatter_csv(const std::filesystem::path& path, const std::vector<ScatterSeries>& series);
void write_scatter_summary_csv(const std::filesystem::path& path, const std::vector<ScatterSeries>& series);

}  // namespace balancereg
