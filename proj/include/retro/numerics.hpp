#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace retro {

// Row-major dense matrix of doubles. Vectors are 1 x n, scalars 1 x 1.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(int r, int c, double fill = 0.0);
  static Tensor scalar(double v) { return Tensor(1, 1, v); }
  static Tensor from(int r, int c, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  double item() const;  // ShapeError unless 1 x 1
  bool all_finite() const;
  void fill(double v);
  bool operator==(const Tensor&) const = default;
};

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

using ParameterList = std::vector<Parameter*>;

void zero_grads(const ParameterList& params);

// Glorot-uniform initialisation, a = sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(int fan_in, int fan_out, std::uint64_t seed);

// ---- reverse-mode tape ----------------------------------------------------------------

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Tensor& value() const;
  int rows() const { return value().rows; }
  int cols() const { return value().cols; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t);
  // Gradients flow into p.grad (accumulated) on backward().
  Var param(Parameter& p);

  // Seeds d(root)/d(root) = 1; root must be 1 x 1. Throws NonFinite when a
  // gradient reaching a parameter is not finite.
  void backward(Var root);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  std::size_t size() const { return nodes_.size(); }

  // Op plumbing: record a node whose backward distributes `grad` into inputs.
  using Backward = std::function<void(Tape&, const Tensor& value, const Tensor& grad)>;
  // The node is differentiated only if some input is.
  Var record(Tensor value, const std::vector<int>& inputs, Backward backward);
  Tensor& grad_of(int id);
  bool needs_grad(int id) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };
  std::vector<Node> nodes_;
};

// Kernels. Each throws ShapeError on mismatched shapes.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var add_row(Var a, Var row);  // broadcast a 1 x c row over every row of a
Var sub(Var a, Var b);
Var mul(Var a, Var b);        // elementwise
Var scale(Var a, double s);
Var relu(Var a);
Var square(Var a);
Var softplus(Var a);
Var concat_cols(std::span<const Var> parts);
Var gather_rows(Var a, std::span<const int> index);
Var scatter_add_rows(Var a, std::span<const int> target, int out_rows);
Var segment_mean(Var a, std::span<const int> segment, int segments);  // empty segments give zero rows
Var mean_rows(Var a);   // 1 x c
Var sum_all(Var a);     // 1 x 1
Var mean_all(Var a);    // 1 x 1
Var logsumexp_all(Var a);
Var log_softmax_rows(Var a);
Var softmax_rows(Var a);
Var pick(Var a, std::span<const int> column_per_row);  // n x 1
Var dropout(Var a, double rate, std::uint64_t seed);     // inverted dropout

// ---- gradients ----------------------------------------------------------------------

struct LossAndGrad {
  double loss = 0.0;
  std::vector<Tensor> grads;  // one per parameter, same order
};

// Zeroes grads, runs `loss_fn` on a fresh tape and back-propagates. Throws
// NonFinite for a non-finite loss or gradient.
using LossFn = std::function<Var(Tape&)>;
LossAndGrad loss_and_grad(const LossFn& loss_fn, const ParameterList& params);

struct FiniteDiffReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  int coordinates = 0;
  std::string worst;  // "param[index]"
  bool passed = false;
};

// Central differences on up to `samples` coordinates per parameter (all if
// samples <= 0) against the analytic gradient. `analytic` overrides the
// tape's gradients when non-empty (used to test the checker itself).
FiniteDiffReport finite_diff_check(const LossFn& loss_fn, const ParameterList& params, double h = 1e-5,
                                   double tol = 1e-4, int samples = 0, std::uint64_t seed = 0,
                                   const std::vector<Tensor>* analytic = nullptr);

// ---- optimiser ----------------------------------------------------------------------

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
};

AdamState adam_init(const ParameterList& params, AdamConfig config = {});
// Applies one update from each parameter's grad. Throws NonFinite.
void adam_step(AdamState& state, const ParameterList& params);

// ---- layers -------------------------------------------------------------------------

struct MlpConfig {
  std::vector<int> widths;  // input, hidden..., output
  double dropout = 0.0;     // on hidden activations, training only
};

class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpConfig config, std::uint64_t seed, const std::string& prefix);

  // affine -> ReLU (-> dropout) per hidden layer, affine output.
  Var forward(Tape& tape, Var x, bool training = false, std::uint64_t rng_seed = 0);
  ParameterList parameters();
  const MlpConfig& config() const { return config_; }
  int output_width() const { return config_.widths.back(); }

 private:
  MlpConfig config_;
  std::vector<Parameter> weights_;
  std::vector<Parameter> biases_;
};

struct MpnnConfig {
  int atom_features = 98;
  int bond_features = 6;
  int hidden = 256;
  int depth = 10;
  double dropout = 0.0;
};

// A featurised graph batch; graph_of gives the graph index of each atom.
struct GraphBatch {
  Tensor atoms;              // n_atoms x atom_features
  Tensor bonds;              // (2 * n_bonds) x bond_features, one row per direction
  std::vector<int> source;   // per directed bond
  std::vector<int> target;
  std::vector<int> graph_of;
  int graphs = 0;
};

class Mpnn {
 public:
  Mpnn() = default;
  Mpnn(MpnnConfig config, std::uint64_t seed, const std::string& prefix);

  // h0 = relu(W_in x); each round h = relu(W_self h + W_msg sum_u [h_u ; e_uv] + b);
  // readout is the per-graph mean. graphs x hidden.
  Var encode(Tape& tape, const GraphBatch& batch, bool training = false, std::uint64_t rng_seed = 0);
  ParameterList parameters();
  const MpnnConfig& config() const { return config_; }

 private:
  MpnnConfig config_;
  Parameter w_in_, b_in_, w_self_, w_msg_, b_;
};

// ---- checkpoints --------------------------------------------------------------------

// Text format, one parameter per line with hex-float values: reloads bit-exactly.
std::string checkpoint_text(const ParameterList& params, const std::string& header = "");
void write_checkpoint(const std::filesystem::path& path, const ParameterList& params, const std::string& header = "");
// Loads values into params matched by name; throws FormatError on any
// missing name or shape mismatch. Returns the header line.
std::string read_checkpoint(const std::filesystem::path& path, const ParameterList& params);
std::string load_checkpoint_text(const std::string& text, const ParameterList& params);

}  // namespace retro
