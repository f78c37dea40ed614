#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "balancereg/diffcore.hpp"

namespace balancereg {

enum class Activation { relu, linear };

struct LayerSpec {
  std::size_t input_width = 1;
  std::size_t output_width = 1;
  Activation activation = Activation::relu;
};

// y = act(x W + 1 b), W is in x out, b is 1 x out.
struct DenseLayer {
  LayerSpec spec;
  ad::Parameter weight;
  ad::Parameter bias;

  ad::Var forward(ad::Tape& tape, ad::Var x) const;
};

class LayerStack {
 public:
  LayerStack() = default;
  LayerStack(const std::string& prefix, const std::vector<LayerSpec>& specs);

  ad::Var forward(ad::Tape& tape, ad::Var x) const;

  std::size_t input_width() const { return layers_.front().spec.input_width; }
  std::size_t output_width() const { return layers_.back().spec.output_width; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void collect(std::vector<ad::Parameter*>& out);
  void collect(std::vector<const ad::Parameter*>& out) const;

 private:
  std::vector<DenseLayer> layers_;
};

// Widths of the network. Defaults give 25 inputs and 20-unit hidden layers.
struct Architecture {
  std::size_t input_dim = 25;
  std::size_t hidden_width = 20;
};

enum class ModelKind { two_head, separate_heads };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

// Column vectors (b x 1) with both potential-outcome predictions per row.
struct HeadOutputs {
  ad::Var control;
  ad::Var treated;
};

// Shared bottom h (in -> w -> w, relu) feeding head0 and head1
// (w -> w relu -> 1 linear) for the control and treated outcomes.
class TwoHeadModel {
 public:
  explicit TwoHeadModel(const Architecture& arch = {});

  ad::Var embed(ad::Tape& tape, ad::Var x) const;
  ad::Var control_head(ad::Tape& tape, ad::Var embedding) const { return head0_.forward(tape, embedding); }
  ad::Var treated_head(ad::Tape& tape, ad::Var embedding) const { return head1_.forward(tape, embedding); }
  HeadOutputs predict_heads(ad::Tape& tape, ad::Var x) const;

  LayerStack& shared() { return shared_; }
  LayerStack& head0() { return head0_; }
  LayerStack& head1() { return head1_; }
  const LayerStack& shared() const { return shared_; }
  const LayerStack& head0() const { return head0_; }
  const LayerStack& head1() const { return head1_; }
  const Architecture& architecture() const { return arch_; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

 private:
  Architecture arch_;
  LayerStack shared_;
  LayerStack head0_;
  LayerStack head1_;
};

// Two unrelated MLPs (in -> w -> w -> w -> 1), one per treatment arm.
class SeparateHeadsModel {
 public:
  explicit SeparateHeadsModel(const Architecture& arch = {});

  HeadOutputs predict_heads(ad::Tape& tape, ad::Var x) const;

  LayerStack& net0() { return net0_; }
  LayerStack& net1() { return net1_; }
  const LayerStack& net0() const { return net0_; }
  const LayerStack& net1() const { return net1_; }
  const Architecture& architecture() const { return arch_; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

 private:
  Architecture arch_;
  LayerStack net0_;
  LayerStack net1_;
};

using Model = std::variant<TwoHeadModel, SeparateHeadsModel>;

// Glorot-uniform weights, zero biases. Same seed gives the same parameters.
Model init_model(ModelKind kind, std::uint64_t seed, const Architecture& arch = {});
void init_parameters(std::vector<ad::Parameter*> params, std::uint64_t seed);

std::vector<ad::Parameter*> parameters(Model& model);
std::vector<const ad::Parameter*> parameters(const Model& model);
std::size_t parameter_count(const Model& model);
ModelKind kind_of(const Model& model);

HeadOutputs predict_heads(ad::Tape& tape, const Model& model, ad::Var x);

// Tape-free evaluation for inference.
struct Predictions {
  std::vector<double> control;
  std::vector<double> treated;
};
Predictions predict(const Model& model, const Tensor& x);

// Checkpoint layout: text header
//   balancereg-checkpoint 1
//   <count>
//   <name> <rows> <cols>      (one line per parameter)
//   end
// followed by all parameter values as little-endian IEEE-754 doubles in
// header order, row-major.
void save_checkpoint(const std::filesystem::path& path, const Model& model);
void load_checkpoint(const std::filesystem::path& path, Model& model);

}  // namespace balancereg
