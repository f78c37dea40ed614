#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "balancereg/data.hpp"
#include "balancereg/losses.hpp"
#include "balancereg/model.hpp"

namespace balancereg {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1e-4;
  LossWeights weights;
  ModelKind model_kind = ModelKind::two_head;
  Architecture architecture;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-epoch means over batches. Regularizer means cover only the batches in
// which the term was computed (0 if none).
struct EpochTrace {
  std::size_t epoch = 0;
  double mean_objective = 0.0;
  double mean_fit = 0.0;
  double mean_mmd = 0.0;
  double mean_prg = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<EpochTrace> trace;
};

// Deterministic in (train, config). Initialization and batch order are both
// derived from config.seed.
TrainResult train_run(const TrainView& train, const TrainConfig& config);

void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochTrace>& trace);

}  // namespace balancereg
