#include "balancereg/model.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "balancereg/errors.hpp"
#include "balancereg/random.hpp"

namespace balancereg {

namespace {

void check_input(const ad::Var& x, std::size_t width) {
  if (x.cols() != width) {
    throw DimensionError("model expects " + std::to_string(width) + " input columns, got " +
                         x.value().shape_string());
  }
}

}  // namespace

ad::Var DenseLayer::forward(ad::Tape& tape, ad::Var x) const {
  ad::Var ones = tape.constant(Tensor(x.rows(), 1, 1.0));
  ad::Var z = ad::matmul(x, tape.leaf(weight)) + ad::matmul(ones, tape.leaf(bias));
  return spec.activation == Activation::relu ? ad::relu(z) : z;
}

LayerStack::LayerStack(const std::string& prefix, const std::vector<LayerSpec>& specs) {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& s = specs[i];
    if (s.input_width == 0 || s.output_width == 0) throw ContractError("layer widths must be >= 1");
    if (i > 0 && specs[i - 1].output_width != s.input_width) {
      throw DimensionError("layer " + std::to_string(i) + " of " + prefix + " does not chain");
    }
    DenseLayer layer;
    layer.spec = s;
    const std::string base = prefix + "." + std::to_string(i);
    layer.weight = ad::Parameter(base + ".weight", Tensor(s.input_width, s.output_width));
    layer.bias = ad::Parameter(base + ".bias", Tensor(1, s.output_width));
    layers_.push_back(std::move(layer));
  }
}

ad::Var LayerStack::forward(ad::Tape& tape, ad::Var x) const {
  check_input(x, input_width());
  for (const DenseLayer& layer : layers_) x = layer.forward(tape, x);
  return x;
}

void LayerStack::collect(std::vector<ad::Parameter*>& out) {
  for (DenseLayer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
}

void LayerStack::collect(std::vector<const ad::Parameter*>& out) const {
  for (const DenseLayer& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
}

std::string to_string(ModelKind kind) {
  return kind == ModelKind::two_head ? "two_head" : "separate_heads";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "two_head") return ModelKind::two_head;
  if (text == "separate_heads") return ModelKind::separate_heads;
  throw ContractError("unknown model kind '" + text + "'");
}

// ------------------------------------------------------------ TwoHeadModel

TwoHeadModel::TwoHeadModel(const Architecture& arch) : arch_(arch) {
  const std::size_t w = arch.hidden_width;
  shared_ = LayerStack("shared", {{arch.input_dim, w, Activation::relu}, {w, w, Activation::relu}});
  head0_ = LayerStack("head0", {{w, w, Activation::relu}, {w, 1, Activation::linear}});
  head1_ = LayerStack("head1", {{w, w, Activation::relu}, {w, 1, Activation::linear}});
}

ad::Var TwoHeadModel::embed(ad::Tape& tape, ad::Var x) const {
  return shared_.forward(tape, x);
}

HeadOutputs TwoHeadModel::predict_heads(ad::Tape& tape, ad::Var x) const {
  ad::Var h = embed(tape, x);
  return {control_head(tape, h), treated_head(tape, h)};
}

std::vector<ad::Parameter*> TwoHeadModel::parameters() {
  std::vector<ad::Parameter*> out;
  shared_.collect(out);
  head0_.collect(out);
  head1_.collect(out);
  return out;
}

std::vector<const ad::Parameter*> TwoHeadModel::parameters() const {
  std::vector<const ad::Parameter*> out;
  shared_.collect(out);
  head0_.collect(out);
  head1_.collect(out);
  return out;
}

// ------------------------------------------------------ SeparateHeadsModel

SeparateHeadsModel::SeparateHeadsModel(const Architecture& arch) : arch_(arch) {
  const std::size_t w = arch.hidden_width;
  const std::vector<LayerSpec> net = {{arch.input_dim, w, Activation::relu},
                                      {w, w, Activation::relu},
                                      {w, w, Activation::relu},
                                      {w, 1, Activation::linear}};
  net0_ = LayerStack("net0", net);
  net1_ = LayerStack("net1", net);
}

HeadOutputs SeparateHeadsModel::predict_heads(ad::Tape& tape, ad::Var x) const {
  return {net0_.forward(tape, x), net1_.forward(tape, x)};
}

std::vector<ad::Parameter*> SeparateHeadsModel::parameters() {
  std::vector<ad::Parameter*> out;
  net0_.collect(out);
  net1_.collect(out);
  return out;
}

std::vector<const ad::Parameter*> SeparateHeadsModel::parameters() const {
  std::vector<const ad::Parameter*> out;
  net0_.collect(out);
  net1_.collect(out);
  return out;
}

// ------------------------------------------------------------ free helpers

void init_parameters(std::vector<ad::Parameter*> params, std::uint64_t seed) {
  Rng rng(seed);
  for (ad::Parameter* p : params) {
    // Biases are 1 x out; weights are in x out.
    const bool is_bias = p->value.rows == 1 && p->name.ends_with(".bias");
    if (is_bias) {
      p->value = Tensor(p->value.rows, p->value.cols);
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(p->value.rows + p->value.cols));
      for (double& v : p->value.data) v = rng.uniform(-limit, limit);
    }
    p->zero_grad();
  }
}

Model init_model(ModelKind kind, std::uint64_t seed, const Architecture& arch) {
  Model model = kind == ModelKind::two_head ? Model(TwoHeadModel(arch)) : Model(SeparateHeadsModel(arch));
  init_parameters(parameters(model), seed);
  return model;
}

std::vector<ad::Parameter*> parameters(Model& model) {
  return std::visit([](auto& m) { return m.parameters(); }, model);
}

std::vector<const ad::Parameter*> parameters(const Model& model) {
  return std::visit([](const auto& m) { return m.parameters(); }, model);
}

std::size_t parameter_count(const Model& model) {
  std::size_t total = 0;
  for (const ad::Parameter* p : parameters(model)) total += p->value.size();
  return total;
}

ModelKind kind_of(const Model& model) {
  return std::holds_alternative<TwoHeadModel>(model) ? ModelKind::two_head : ModelKind::separate_heads;
}

HeadOutputs predict_heads(ad::Tape& tape, const Model& model, ad::Var x) {
  return std::visit([&](const auto& m) { return m.predict_heads(tape, x); }, model);
}

Predictions predict(const Model& model, const Tensor& x) {
  ad::Tape tape;
  HeadOutputs out = predict_heads(tape, model, tape.constant(x));
  return {out.control.value().data, out.treated.value().data};
}

// ------------------------------------------------------------ checkpoints

namespace {

constexpr const char* kMagic = "balancereg-checkpoint 1";

void write_le_double(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  os.write(bytes, 8);
}

double read_le_double(std::istream& is) {
  unsigned char bytes[8];
  is.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const auto params = parameters(model);
  os << kMagic << '\n' << params.size() << '\n';
  for (const ad::Parameter* p : params) os << p->name << ' ' << p->value.rows << ' ' << p->value.cols << '\n';
  os << "end\n";
  for (const ad::Parameter* p : params) {
    for (double v : p->value.data) write_le_double(os, v);
  }
  if (!os) throw IoError("write failed for " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, Model& model) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  if (line != kMagic) throw FormatError(path.string() + ": not a checkpoint file");
  std::getline(is, line);
  const std::size_t count = std::stoul(line);
  auto params = parameters(model);
  if (count != params.size()) {
    throw FormatError(path.string() + ": checkpoint has " + std::to_string(count) + " arrays, model has " +
                      std::to_string(params.size()));
  }
  for (ad::Parameter* p : params) {
    std::getline(is, line);
    std::istringstream ls(line);
    std::string name;
    std::size_t rows = 0, cols = 0;
    ls >> name >> rows >> cols;
    if (name != p->name || rows != p->value.rows || cols != p->value.cols) {
      throw FormatError(path.string() + ": header entry '" + line + "' does not match parameter " + p->name +
                        " " + p->value.shape_string());
    }
  }
  std::getline(is, line);
  if (line != "end") throw FormatError(path.string() + ": missing header terminator");
  for (ad::Parameter* p : params) {
    for (double& v : p->value.data) v = read_le_double(is);
    p->zero_grad();
  }
  if (!is) throw FormatError(path.string() + ": truncated parameter data");
}

}  // namespace balancereg
