#include <algorithm>
#include <cmath>
#include <random>

#include "retro/error.hpp"
#include "retro/numerics.hpp"

namespace retro {

namespace {

std::string shape(const Tensor& t) { return std::to_string(t.rows) + "x" + std::to_string(t.cols); }

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw ShapeError(std::string(op) + ": shapes " + shape(a) + " and " + shape(b) + " differ");
  }
}

void require_tape(const char* op, Var a, Var b) {
  if (a.tape != b.tape || !a.tape) throw ShapeError(std::string(op) + ": operands on different tapes");
}

double stable_softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor::Tensor(int r, int c, double fill) : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {
  if (r < 0 || c < 0) throw ShapeError("negative tensor dimension");
}

Tensor Tensor::from(int r, int c, std::vector<double> v) {
  if (v.size() != static_cast<std::size_t>(r) * c) throw ShapeError("value count does not match " + std::to_string(r) + "x" + std::to_string(c));
  Tensor t;
  t.rows = r;
  t.cols = c;
  t.values = std::move(v);
  return t;
}

double Tensor::item() const {
  if (rows != 1 || cols != 1) throw ShapeError("item() on a " + shape(*this) + " tensor");
  return values[0];
}

bool Tensor::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(values.begin(), values.end(), v); }

void zero_grads(const ParameterList& params) {
  for (Parameter* p : params) p->grad = Tensor(p->value.rows, p->value.cols);
}

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor t) { return record(std::move(t), {}, nullptr); }

Var Tape::param(Parameter& p) {
  Var v = record(p.value, {}, nullptr);
  nodes_[v.id].param = &p;
  nodes_[v.id].needs_grad = true;
  return v;
}

Var Tape::record(Tensor value, const std::vector<int>& inputs, Backward backward) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [&](int id) { return nodes_[id].needs_grad; });
  nodes_.push_back(Node{std::move(value), Tensor(), needs ? std::move(backward) : nullptr, nullptr, needs});
  return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Tensor& Tape::grad_of(int id) { return nodes_[id].grad; }

bool Tape::needs_grad(int id) const { return nodes_[id].needs_grad; }

void Tape::backward(Var root) {
  if (root.tape != this) throw ShapeError("backward on a foreign variable");
  if (value(root).rows != 1 || value(root).cols != 1) throw ShapeError("backward needs a scalar root");
  for (Node& n : nodes_) n.grad = Tensor(n.value.rows, n.value.cols);
  nodes_[root.id].grad.values[0] = 1.0;
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad) continue;
    if (n.backward) n.backward(*this, n.value, n.grad);
    if (n.param) {
      if (!n.grad.all_finite()) throw NonFinite("non-finite gradient for " + n.param->name);
      Tensor& g = n.param->grad;
      if (g.rows != n.value.rows || g.cols != n.value.cols) g = Tensor(n.value.rows, n.value.cols);
      for (std::size_t i = 0; i < g.size(); ++i) g.values[i] += n.grad.values[i];
    }
  }
}

Var matmul(Var a, Var b) {
  require_tape("matmul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols != B.rows) throw ShapeError("matmul: " + shape(A) + " by " + shape(B));
  Tensor out(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    double* row = &out.values[static_cast<std::size_t>(i) * B.cols];
    for (int p = 0; p < A.cols; ++p) {
      const double x = A.at(i, p);
      if (x == 0.0) continue;  // fingerprint inputs are mostly zero
      const double* brow = &B.values[static_cast<std::size_t>(p) * B.cols];
      for (int j = 0; j < B.cols; ++j) row[j] += x * brow[j];
    }
  }
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& A = t.value(Var{&t, ia});
    const Tensor& B = t.value(Var{&t, ib});
    Tensor& ga = t.grad_of(ia);
    Tensor& gb = t.grad_of(ib);
    const bool need_a = t.needs_grad(ia), need_b = t.needs_grad(ib);
    for (int i = 0; i < A.rows; ++i) {
      const double* grow = &g.values[static_cast<std::size_t>(i) * g.cols];
      for (int p = 0; p < A.cols; ++p) {
        if (need_a) {
          const double* brow = &B.values[static_cast<std::size_t>(p) * B.cols];
          double s = 0.0;
          for (int j = 0; j < B.cols; ++j) s += grow[j] * brow[j];
          ga.at(i, p) += s;
        }
        const double x = A.at(i, p);
        if (!need_b || x == 0.0) continue;
        double* gbrow = &gb.values[static_cast<std::size_t>(p) * gb.cols];
        for (int j = 0; j < B.cols; ++j) gbrow[j] += x * grow[j];
      }
    }
  });
}

Var add(Var a, Var b) {
  require_tape("add", a, b);
  require_same("add", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += b.value().values[i];
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
    for (int id : {ia, ib}) {
      Tensor& gi = t.grad_of(id);
      for (std::size_t i = 0; i < g.size(); ++i) gi.values[i] += g.values[i];
    }
  });
}

Var add_row(Var a, Var row) {
  require_tape("add_row", a, row);
  const Tensor& A = a.value();
  const Tensor& R = row.value();
  if (R.rows != 1 || R.cols != A.cols) throw ShapeError("add_row: " + shape(A) + " with row " + shape(R));
  Tensor out = A;
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) out.at(i, j) += R.values[j];
  }
  const int ia = a.id, ir = row.id;
  return a.tape->record(std::move(out), {ia, ir}, [ia, ir](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    Tensor& gr = t.grad_of(ir);
    for (int i = 0; i < g.rows; ++i) {
      for (int j = 0; j < g.cols; ++j) {
        ga.at(i, j) += g.at(i, j);
        gr.values[j] += g.at(i, j);
      }
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  require_tape("mul", a, b);
  require_same("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.values[i] *= b.value().values[i];
  const int ia = a.id, ib = b.id;
  return a.tape->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& A = t.value(Var{&t, ia});
    const Tensor& B = t.value(Var{&t, ib});
    Tensor& ga = t.grad_of(ia);
    Tensor& gb = t.grad_of(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.values[i] += g.values[i] * B.values[i];
      gb.values[i] += g.values[i] * A.values[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (double& v : out.values) v *= s;
  const int ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia, s](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += s * g.values[i];
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  for (double& v : out.values) v = std::max(v, 0.0);
  const int ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y.values[i] > 0.0) ga.values[i] += g.values[i];
    }
  });
}

Var square(Var a) { return mul(a, a); }

Var softplus(Var a) {
  Tensor out = a.value();
  for (double& v : out.values) v = stable_softplus(v);
  const int ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& x = t.value(Var{&t, ia});
    Tensor& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.values[i] += g.values[i] * sigmoid(x.values[i]);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const int rows = parts[0].rows();
  int cols = 0;
  for (Var p : parts) {
    if (p.rows() != rows || p.tape != parts[0].tape) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<int> ids, offsets;
  int offset = 0;
  for (Var p : parts) {
    const Tensor& v = p.value();
    for (int i = 0; i < rows; ++i) {
      std::copy_n(&v.values[static_cast<std::size_t>(i) * v.cols], v.cols, &out.at(i, offset));
    }
    ids.push_back(p.id);
    offsets.push_back(offset);
    offset += v.cols;
  }
  return parts[0].tape->record(std::move(out), ids, [ids, offsets](Tape& t, const Tensor&, const Tensor& g) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      Tensor& gp = t.grad_of(ids[k]);
      for (int i = 0; i < gp.rows; ++i) {
        for (int j = 0; j < gp.cols; ++j) gp.at(i, j) += g.at(i, offsets[k] + j);
      }
    }
  });
}

Var gather_rows(Var a, std::span<const int> index) {
  const Tensor& A = a.value();
  Tensor out(static_cast<int>(index.size()), A.cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= A.rows) throw ShapeError("gather_rows: index out of range");
    std::copy_n(&A.values[static_cast<std::size_t>(index[r]) * A.cols], A.cols, &out.values[r * A.cols]);
  }
  const int ia = a.id;
  std::vector<int> idx(index.begin(), index.end());
  return a.tape->record(std::move(out), {ia}, [ia, idx](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (int j = 0; j < g.cols; ++j) ga.at(idx[r], j) += g.at(static_cast<int>(r), j);
    }
  });
}

Var scatter_add_rows(Var a, std::span<const int> target, int out_rows) {
  const Tensor& A = a.value();
  if (target.size() != static_cast<std::size_t>(A.rows)) throw ShapeError("scatter_add_rows: one target per row");
  Tensor out(out_rows, A.cols);
  for (int r = 0; r < A.rows; ++r) {
    if (target[r] < 0 || target[r] >= out_rows) throw ShapeError("scatter_add_rows: target out of range");
    for (int j = 0; j < A.cols; ++j) out.at(target[r], j) += A.at(r, j);
  }
  const int ia = a.id;
  std::vector<int> tgt(target.begin(), target.end());
  return a.tape->record(std::move(out), {ia}, [ia, tgt](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (std::size_t r = 0; r < tgt.size(); ++r) {
      for (int j = 0; j < g.cols; ++j) ga.at(static_cast<int>(r), j) += g.at(tgt[r], j);
    }
  });
}

Var segment_mean(Var a, std::span<const int> segment, int segments) {
  const Tensor& A = a.value();
  if (segment.size() != static_cast<std::size_t>(A.rows)) throw ShapeError("segment_mean: one segment per row");
  std::vector<int> count(segments, 0);
  for (int s : segment) {
    if (s < 0 || s >= segments) throw ShapeError("segment_mean: segment out of range");
    ++count[s];
  }
  Tensor out(segments, A.cols);
  for (int r = 0; r < A.rows; ++r) {
    for (int j = 0; j < A.cols; ++j) out.at(segment[r], j) += A.at(r, j) / count[segment[r]];
  }
  const int ia = a.id;
  std::vector<int> seg(segment.begin(), segment.end());
  return a.tape->record(std::move(out), {ia}, [ia, seg, count](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (std::size_t r = 0; r < seg.size(); ++r) {
      for (int j = 0; j < g.cols; ++j) ga.at(static_cast<int>(r), j) += g.at(seg[r], j) / count[seg[r]];
    }
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw ShapeError("mean_rows of an empty tensor");
  const std::vector<int> seg(static_cast<std::size_t>(a.rows()), 0);
  return segment_mean(a, seg, 1);
}

Var sum_all(Var a) {
  double s = 0.0;
  for (double v : a.value().values) s += v;
  const int ia = a.id;
  return a.tape->record(Tensor::scalar(s), {ia}, [ia](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (double& v : ga.values) v += g.values[0];
  });
}

Var mean_all(Var a) {
  if (a.value().size() == 0) throw ShapeError("mean_all of an empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var logsumexp_all(Var a) {
  const Tensor& A = a.value();
  if (A.size() == 0) throw ShapeError("logsumexp of an empty tensor");
  const double top = *std::max_element(A.values.begin(), A.values.end());
  double s = 0.0;
  for (double v : A.values) s += std::exp(v - top);
  const double lse = top + std::log(s);
  const int ia = a.id;
  return a.tape->record(Tensor::scalar(lse), {ia}, [ia, lse](Tape& t, const Tensor&, const Tensor& g) {
    const Tensor& x = t.value(Var{&t, ia});
    Tensor& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < x.size(); ++i) ga.values[i] += g.values[0] * std::exp(x.values[i] - lse);
  });
}

Var log_softmax_rows(Var a) {
  const Tensor& A = a.value();
  Tensor out = A;
  for (int i = 0; i < A.rows; ++i) {
    double top = -INFINITY;
    for (int j = 0; j < A.cols; ++j) top = std::max(top, A.at(i, j));
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += std::exp(A.at(i, j) - top);
    const double lse = top + std::log(s);
    for (int j = 0; j < A.cols; ++j) out.at(i, j) -= lse;
  }
  const int ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (int i = 0; i < y.rows; ++i) {
      double gs = 0.0;
      for (int j = 0; j < y.cols; ++j) gs += g.at(i, j);
      for (int j = 0; j < y.cols; ++j) ga.at(i, j) += g.at(i, j) - std::exp(y.at(i, j)) * gs;
    }
  });
}

Var softmax_rows(Var a) {
  const Tensor& A = a.value();
  Tensor out = A;
  for (int i = 0; i < A.rows; ++i) {
    double top = -INFINITY;
    for (int j = 0; j < A.cols; ++j) top = std::max(top, A.at(i, j));
    double s = 0.0;
    for (int j = 0; j < A.cols; ++j) s += (out.at(i, j) = std::exp(A.at(i, j) - top));
    for (int j = 0; j < A.cols; ++j) out.at(i, j) /= s;
  }
  const int ia = a.id;
  return a.tape->record(std::move(out), {ia}, [ia](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (int i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += g.at(i, j) * y.at(i, j);
      for (int j = 0; j < y.cols; ++j) ga.at(i, j) += y.at(i, j) * (g.at(i, j) - dot);
    }
  });
}

Var pick(Var a, std::span<const int> column_per_row) {
  const Tensor& A = a.value();
  if (column_per_row.size() != static_cast<std::size_t>(A.rows)) throw ShapeError("pick: one column per row");
  Tensor out(A.rows, 1);
  for (int i = 0; i < A.rows; ++i) {
    if (column_per_row[i] < 0 || column_per_row[i] >= A.cols) throw ShapeError("pick: column out of range");
    out.values[i] = A.at(i, column_per_row[i]);
  }
  const int ia = a.id;
  std::vector<int> cols(column_per_row.begin(), column_per_row.end());
  return a.tape->record(std::move(out), {ia}, [ia, cols](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& ga = t.grad_of(ia);
    for (std::size_t i = 0; i < cols.size(); ++i) ga.at(static_cast<int>(i), cols[i]) += g.values[i];
  });
}

Var dropout(Var a, double rate, std::uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0) throw ShapeError("dropout rate must lie in [0, 1)");
  if (rate == 0.0) return a;
  std::mt19937_64 rng(seed);
  Tensor mask(a.rows(), a.cols());
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask.values) m = static_cast<double>(rng() >> 11) * 0x1.0p-53 < rate ? 0.0 : keep;
  return mul(a, a.tape->constant(std::move(mask)));
}

}  // namespace retro
