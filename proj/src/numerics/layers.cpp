#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "retro/error.hpp"
#include "retro/numerics.hpp"

namespace retro {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Parameter make_param(std::string name, Tensor value) {
  Parameter p{std::move(name), std::move(value), Tensor()};
  p.grad = Tensor(p.value.rows, p.value.cols);
  return p;
}

double loss_value(const LossFn& loss_fn) {
  Tape tape;
  return loss_fn(tape).value().item();
}

}  // namespace

Tensor glorot_uniform(int fan_in, int fan_out, std::uint64_t seed) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::mt19937_64 rng(seed);
  Tensor t(fan_in, fan_out);
  for (double& v : t.values) v = -a + 2.0 * a * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  return t;
}

// ---- gradients ----------------------------------------------------------------------

LossAndGrad loss_and_grad(const LossFn& loss_fn, const ParameterList& params) {
  zero_grads(params);
  Tape tape;
  const Var loss = loss_fn(tape);
  LossAndGrad out;
  out.loss = loss.value().item();
  if (!std::isfinite(out.loss)) throw NonFinite("loss is not finite");
  tape.backward(loss);
  for (Parameter* p : params) out.grads.push_back(p->grad);
  return out;
}

FiniteDiffReport finite_diff_check(const LossFn& loss_fn, const ParameterList& params, double h, double tol,
                                   int samples, std::uint64_t seed, const std::vector<Tensor>* analytic) {
  const std::vector<Tensor> grads =
      analytic && !analytic->empty() ? *analytic : loss_and_grad(loss_fn, params).grads;
  std::mt19937_64 rng(seed);
  FiniteDiffReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (samples > 0 && coords.size() > static_cast<std::size_t>(samples)) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(samples));
    }
    for (std::size_t c : coords) {
      const double original = p.value.values[c];
      p.value.values[c] = original + h;
      const double up = loss_value(loss_fn);
      p.value.values[c] = original - h;
      const double down = loss_value(loss_fn);
      p.value.values[c] = original;
      const double numeric = (up - down) / (2.0 * h);
      const double exact = grads[k].values[c];
      const double abs_err = std::fabs(numeric - exact);
      // floor sits above the central-difference noise at h = 1e-5 (about 1e-9 on
      // O(1) losses), so vanishing gradients are compared absolutely
      const double rel_err = abs_err / std::max({std::fabs(numeric), std::fabs(exact), 1e-5});
      if (report.coordinates == 0 || rel_err > report.max_relative_error) {
        report.max_relative_error = rel_err;
        report.worst = p.name + "[" + std::to_string(c) + "]";
      }
      report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
      ++report.coordinates;
    }
  }
  report.passed = report.max_relative_error < tol;
  return report;
}

// ---- Adam ---------------------------------------------------------------------------

AdamState adam_init(const ParameterList& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (Parameter* p : params) {
    s.m.emplace_back(p->value.rows, p->value.cols);
    s.v.emplace_back(p->value.rows, p->value.cols);
  }
  return s;
}

void adam_step(AdamState& state, const ParameterList& params) {
  if (params.size() != state.m.size()) throw ShapeError("Adam state does not match the parameter list");
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter& p = *params[k];
    if (p.grad.size() != p.value.size() || state.m[k].size() != p.value.size()) {
      throw ShapeError("gradient shape mismatch for " + p.name);
    }
    if (!p.grad.all_finite()) throw NonFinite("non-finite gradient for " + p.name);
  }
  ++state.step;
  const AdamConfig& c = state.config;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    std::vector<double>& m = state.m[k].values;
    std::vector<double>& v = state.v[k].values;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad.values[i];
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      p.value.values[i] -= c.lr * (m[i] / correction1) / (std::sqrt(v[i] / correction2) + c.epsilon);
    }
    if (!p.value.all_finite()) throw NonFinite("parameter " + p.name + " left the finite range");
  }
}

// ---- MLP ----------------------------------------------------------------------------

Mlp::Mlp(MlpConfig config, std::uint64_t seed, const std::string& prefix) : config_(std::move(config)) {
  if (config_.widths.size() < 2) throw ShapeError("an MLP needs input and output widths");
  if (config_.dropout < 0.0 || config_.dropout >= 1.0) throw ShapeError("dropout must lie in [0, 1)");
  for (std::size_t l = 0; l + 1 < config_.widths.size(); ++l) {
    const int in = config_.widths[l], out = config_.widths[l + 1];
    weights_.push_back(make_param(prefix + ".w" + std::to_string(l), glorot_uniform(in, out, derive_seed(seed, l))));
    biases_.push_back(make_param(prefix + ".b" + std::to_string(l), Tensor(1, out)));
  }
}

Var Mlp::forward(Tape& tape, Var x, bool training, std::uint64_t rng_seed) {
  if (x.cols() != config_.widths.front()) {
    throw ShapeError("MLP input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(config_.widths.front()));
  }
  Var h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    h = add_row(matmul(h, tape.param(weights_[l])), tape.param(biases_[l]));
    if (l + 1 == weights_.size()) break;
    h = relu(h);
    if (training && config_.dropout > 0.0) h = dropout(h, config_.dropout, derive_seed(rng_seed, l));
  }
  return h;
}

ParameterList Mlp::parameters() {
  ParameterList out;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    out.push_back(&weights_[l]);
    out.push_back(&biases_[l]);
  }
  return out;
}

// ---- MPNN ---------------------------------------------------------------------------

Mpnn::Mpnn(MpnnConfig config, std::uint64_t seed, const std::string& prefix) : config_(config) {
  if (config_.depth < 0 || config_.hidden < 1) throw ShapeError("bad MPNN shape");
  const int h = config_.hidden;
  w_in_ = make_param(prefix + ".w_in", glorot_uniform(config_.atom_features, h, derive_seed(seed, 0)));
  b_in_ = make_param(prefix + ".b_in", Tensor(1, h));
  w_self_ = make_param(prefix + ".w_self", glorot_uniform(h, h, derive_seed(seed, 1)));
  w_msg_ = make_param(prefix + ".w_msg", glorot_uniform(h + config_.bond_features, h, derive_seed(seed, 2)));
  b_ = make_param(prefix + ".b", Tensor(1, h));
}

Var Mpnn::encode(Tape& tape, const GraphBatch& batch, bool training, std::uint64_t rng_seed) {
  const int n = batch.atoms.rows;
  if (batch.atoms.cols != config_.atom_features || batch.graph_of.size() != static_cast<std::size_t>(n) ||
      batch.source.size() != batch.target.size() || batch.bonds.rows != static_cast<int>(batch.source.size()) ||
      (batch.bonds.rows > 0 && batch.bonds.cols != config_.bond_features)) {
    throw ShapeError("inconsistent graph batch");
  }
  Var h = relu(add_row(matmul(tape.constant(batch.atoms), tape.param(w_in_)), tape.param(b_in_)));
  const Var bond_features = tape.constant(batch.bonds);
  const Var w_self = tape.param(w_self_), w_msg = tape.param(w_msg_), b = tape.param(b_);
  for (int round = 0; round < config_.depth; ++round) {
    Var next = matmul(h, w_self);
    if (!batch.source.empty()) {
      const Var parts[] = {gather_rows(h, batch.source), bond_features};
      const Var incoming = scatter_add_rows(concat_cols(parts), batch.target, n);
      next = add(next, matmul(incoming, w_msg));
    }
    h = relu(add_row(next, b));
    if (training && config_.dropout > 0.0) h = dropout(h, config_.dropout, derive_seed(rng_seed, round));
  }
  return segment_mean(h, batch.graph_of, batch.graphs);
}

ParameterList Mpnn::parameters() { return {&w_in_, &b_in_, &w_self_, &w_msg_, &b_}; }

// ---- checkpoints --------------------------------------------------------------------

std::string checkpoint_text(const ParameterList& params, const std::string& header) {
  std::ostringstream out;
  out << "retro-checkpoint 1";
  if (!header.empty()) out << ' ' << header;
  out << '\n';
  char buffer[40];
  for (const Parameter* p : params) {
    out << p->name << ' ' << p->value.rows << ' ' << p->value.cols;
    for (double v : p->value.values) {
      std::snprintf(buffer, sizeof buffer, " %a", v);
      out << buffer;
    }
    out << '\n';
  }
  return out.str();
}

void write_checkpoint(const std::filesystem::path& path, const ParameterList& params, const std::string& header) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_text(params, header);
  if (!out) throw IoError("write failed for " + path.string());
}

std::string load_checkpoint_text(const std::string& text, const ParameterList& params) {
  std::istringstream in(text);
  std::string header;
  std::getline(in, header);
  if (header.rfind("retro-checkpoint 1", 0) != 0) throw FormatError("not a version-1 checkpoint");
  std::map<std::string, Tensor> stored;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string name, token;
    int rows = -1, cols = -1;
    fields >> name >> rows >> cols;
    if (!fields || rows < 0 || cols < 0) throw FormatError("bad checkpoint line for '" + name + "'");
    Tensor t(rows, cols);
    for (double& v : t.values) {
      if (!(fields >> token)) throw FormatError("truncated values for " + name);
      char* end = nullptr;
      v = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') throw FormatError("bad value '" + token + "' in " + name);
    }
    stored[name] = std::move(t);
  }
  for (Parameter* p : params) {
    const auto it = stored.find(p->name);
    if (it == stored.end()) throw FormatError("checkpoint lacks parameter " + p->name);
    if (it->second.rows != p->value.rows || it->second.cols != p->value.cols) {
      throw FormatError("shape mismatch for " + p->name);
    }
    p->value = it->second;
  }
  return header.size() > 19 ? header.substr(19) : std::string();
}

std::string read_checkpoint(const std::filesystem::path& path, const ParameterList& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_checkpoint_text(buffer.str(), params);
}

}  // namespace retro
