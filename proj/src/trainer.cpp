#include "balancereg/trainer.hpp"

#include <fstream>

#include "balancereg/csv_format.hpp"
#include "balancereg/errors.hpp"
#include "balancereg/optim.hpp"
#include "balancereg/random.hpp"

namespace balancereg {

void TrainConfig::validate() const {
  if (epochs == 0) throw ContractError("epochs must be positive");
  if (batch_size < 2) throw ContractError("batch size must be >= 2");
  if (!(lr > 0.0)) throw ContractError("learning rate must be > 0");
  weights.validate();
  if (model_kind == ModelKind::separate_heads && weights.regularized()) {
    throw ContractError("separate_heads training requires gamma = lambda = 0");
  }
}

namespace {

void zero_grads(std::span<ad::Parameter* const> params) {
  for (ad::Parameter* p : params) p->zero_grad();
}

}  // namespace

TrainResult train_run(const TrainView& train, const TrainConfig& config) {
  config.validate();
  const std::size_t treated = train.treated_count();
  if (treated == 0 || treated == train.size()) {
    throw ContractError("training data must contain both treated and control units");
  }

  TrainResult result{init_model(config.model_kind, derive_seed(config.seed, 1), config.architecture), {}};
  const std::uint64_t shuffle_seed = derive_seed(config.seed, 2);
  const AdamConfig adam{.lr = config.lr};

  std::vector<ad::Parameter*> all = parameters(result.model);
  std::vector<ad::Parameter*> net0, net1;
  if (auto* sep = std::get_if<SeparateHeadsModel>(&result.model)) {
    sep->net0().collect(net0);
    sep->net1().collect(net1);
  }
  const bool separate = config.model_kind == ModelKind::separate_heads;
  // Separate heads keep one optimizer per network so a network whose arm is
  // missing from a batch is not moved by momentum alone.
  AdamState joint(adam, all);
  AdamState opt0(adam, net0);
  AdamState opt1(adam, net1);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochTrace rec;
    rec.epoch = epoch + 1;
    std::size_t batches = 0, mmd_batches = 0, prg_batches = 0;
    for (const auto& rows : minibatches(train.size(), config.batch_size, shuffle_seed, epoch)) {
      const TrainView batch = train.rows(rows);
      zero_grads(all);
      ad::Tape tape;
      ObjectiveTerms terms = total_objective(tape, result.model, batch, config.weights);
      tape.backward(terms.total);

      if (separate) {
        const std::size_t bt = batch.treated_count();
        if (bt < batch.size()) opt0.step(net0);
        if (bt > 0) opt1.step(net1);
      } else {
        joint.step(all);
      }

      ++batches;
      rec.mean_objective += terms.total.item();
      rec.mean_fit += terms.fit.item();
      if (terms.mmd) {
        rec.mean_mmd += terms.mmd->item();
        ++mmd_batches;
      }
      if (terms.prg) {
        rec.mean_prg += terms.prg->item();
        ++prg_batches;
      }
    }
    rec.mean_objective /= static_cast<double>(batches);
    rec.mean_fit /= static_cast<double>(batches);
    if (mmd_batches > 0) rec.mean_mmd /= static_cast<double>(mmd_batches);
    if (prg_batches > 0) rec.mean_prg /= static_cast<double>(prg_batches);
    result.trace.push_back(rec);
  }
  return result;
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochTrace>& trace) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,mean_objective,mean_fit,mean_mmd,mean_prg\n";
  for (const EpochTrace& e : trace) {
    out << e.epoch << ',' << format_double(e.mean_objective) << ',' << format_double(e.mean_fit) << ','
        << format_double(e.mean_mmd) << ',' << format_double(e.mean_prg) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace balancereg
