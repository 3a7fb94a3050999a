// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "isax/error.hpp"

namespace isax {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using ECMap = Eigen::Map<const EMat>;

ECMap as_mat(const ValueGrid& g) { return ECMap(g.data().data(), g.rows(), g.cols()); }
EMap as_mat(ValueGrid& g) { return EMap(g.data().data(), g.rows(), g.cols()); }

void require_2d(const ValueGrid& g, const char* op) {
  if (g.rank() != 2) throw DimError(std::string(op) + ": expected a rank-2 grid, got " + g.shape_str());
}

}  // namespace

Var Tape::push(ValueGrid value, std::function<void(Tape&, int)> back, const char* opname) {
  value.require_finite(opname);
  nodes_.push_back(Node{std::move(value), ValueGrid(), false, std::move(back)});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var x) {
  if (!x.valid() || x.id >= static_cast<int>(nodes_.size())) throw Error("invalid tape handle");
  return nodes_[static_cast<std::size_t>(x.id)];
}

const Tape::Node& Tape::node(Var x) const {
  if (!x.valid() || x.id >= static_cast<int>(nodes_.size())) throw Error("invalid tape handle");
  return nodes_[static_cast<std::size_t>(x.id)];
}

ValueGrid& Tape::ensure_grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.grad_live) {
    n.grad = ValueGrid(n.value.shape());
    n.grad_live = true;
  }
  return n.grad;
}

Var Tape::input(ValueGrid v) {
  return push(std::move(v), nullptr, "input");
}

const ValueGrid& Tape::value(Var x) const { return node(x).value; }

const ValueGrid& Tape::grad(Var x) {
  node(x);  // bounds check
  return ensure_grad(x.id);
}

double Tape::scalar_value(Var x) const {
  const ValueGrid& v = node(x).value;
  if (v.size() != 1) throw DimError("scalar_value: node holds " + v.shape_str());
  return v.at(0);
}

Var Tape::matmul(Var a, Var b) {
  const ValueGrid& A = value(a);
  const ValueGrid& B = value(b);
  require_2d(A, "matmul");
  require_2d(B, "matmul");
  if (A.cols() != B.rows())
    throw DimError("matmul: " + A.shape_str() + " @ " + B.shape_str());
  ValueGrid out = ValueGrid::matrix(A.rows(), B.cols());
  as_mat(out) = as_mat(A) * as_mat(B);
  int pa = a.id, pb = b.id;
  return push(std::move(out), [pa, pb](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& A = t.nodes_[pa].value;
    const ValueGrid& B = t.nodes_[pb].value;
    as_mat(t.ensure_grad(pa)) += as_mat(g) * as_mat(B).transpose();
    as_mat(t.ensure_grad(pb)) += as_mat(A).transpose() * as_mat(g);
  }, "matmul");
}

Var Tape::transpose(Var a) {
  const ValueGrid& A = value(a);
  require_2d(A, "transpose");
  ValueGrid out = ValueGrid::matrix(A.cols(), A.rows());
  as_mat(out) = as_mat(A).transpose();
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    as_mat(t.ensure_grad(pa)) += as_mat(t.nodes_[self].grad).transpose();
  }, "transpose");
}

Var Tape::add(Var a, Var b) {
  const ValueGrid& A = value(a);
  const ValueGrid& B = value(b);
  if (!A.same_shape(B)) throw DimError("add: " + A.shape_str() + " vs " + B.shape_str());
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = A.at(i) + B.at(i);
  int pa = a.id, pb = b.id;
  return push(std::move(out), [pa, pb](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    ValueGrid& gb = t.ensure_grad(pb);
    for (long i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i);
      gb.at(i) += g.at(i);
    }
  }, "add");
}

Var Tape::sub(Var a, Var b) {
  const ValueGrid& A = value(a);
  const ValueGrid& B = value(b);
  if (!A.same_shape(B)) throw DimError("sub: " + A.shape_str() + " vs " + B.shape_str());
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = A.at(i) - B.at(i);
  int pa = a.id, pb = b.id;
  return push(std::move(out), [pa, pb](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    ValueGrid& gb = t.ensure_grad(pb);
    for (long i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i);
      gb.at(i) -= g.at(i);
    }
  }, "sub");
}

Var Tape::mul(Var a, Var b) {
  const ValueGrid& A = value(a);
  const ValueGrid& B = value(b);
  if (!A.same_shape(B)) throw DimError("mul: " + A.shape_str() + " vs " + B.shape_str());
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = A.at(i) * B.at(i);
  int pa = a.id, pb = b.id;
  return push(std::move(out), [pa, pb](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& A = t.nodes_[pa].value;
    const ValueGrid& B = t.nodes_[pb].value;
    ValueGrid& ga = t.ensure_grad(pa);
    ValueGrid& gb = t.ensure_grad(pb);
    for (long i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i) * B.at(i);
      gb.at(i) += g.at(i) * A.at(i);
    }
  }, "mul");
}

Var Tape::add_rowvec(Var a, Var v) {
  const ValueGrid& A = value(a);
  const ValueGrid& V = value(v);
  require_2d(A, "add_rowvec");
  if (V.rows() != 1 || V.cols() != A.cols())
    throw DimError("add_rowvec: " + A.shape_str() + " + " + V.shape_str());
  ValueGrid out(A.shape());
  for (long r = 0; r < A.rows(); ++r)
    for (long c = 0; c < A.cols(); ++c) out.at(r, c) = A.at(r, c) + V.at(0, c);
  int pa = a.id, pv = v.id;
  return push(std::move(out), [pa, pv](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    ValueGrid& gv = t.ensure_grad(pv);
    for (long r = 0; r < g.rows(); ++r)
      for (long c = 0; c < g.cols(); ++c) {
        ga.at(r, c) += g.at(r, c);
        gv.at(0, c) += g.at(r, c);
      }
  }, "add_rowvec");
}

Var Tape::sub_rowvec(Var a, Var v) {
  return add_rowvec(a, scale(v, -1.0));
}

Var Tape::sub_colvec(Var a, Var v) {
  const ValueGrid& A = value(a);
  const ValueGrid& V = value(v);
  require_2d(A, "sub_colvec");
  if (V.cols() != 1 || V.rows() != A.rows())
    throw DimError("sub_colvec: " + A.shape_str() + " - " + V.shape_str());
  ValueGrid out(A.shape());
  for (long r = 0; r < A.rows(); ++r)
    for (long c = 0; c < A.cols(); ++c) out.at(r, c) = A.at(r, c) - V.at(r, 0);
  int pa = a.id, pv = v.id;
  return push(std::move(out), [pa, pv](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    ValueGrid& gv = t.ensure_grad(pv);
    for (long r = 0; r < g.rows(); ++r)
      for (long c = 0; c < g.cols(); ++c) {
        ga.at(r, c) += g.at(r, c);
        gv.at(r, 0) -= g.at(r, c);
      }
  }, "sub_colvec");
}

Var Tape::add_scalar_var(Var a, Var s) {
  const ValueGrid& A = value(a);
  const ValueGrid& S = value(s);
  if (S.size() != 1) throw DimError("add_scalar_var: scalar operand is " + S.shape_str());
  ValueGrid out(A.shape());
  const double sv = S.at(0);
  for (long i = 0; i < A.size(); ++i) out.at(i) = A.at(i) + sv;
  int pa = a.id, ps = s.id;
  return push(std::move(out), [pa, ps](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    ValueGrid& gs = t.ensure_grad(ps);
    for (long i = 0; i < g.size(); ++i) {
      ga.at(i) += g.at(i);
      gs.at(0) += g.at(i);
    }
  }, "add_scalar_var");
}

Var Tape::scale(Var a, double c) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = A.at(i) * c;
  int pa = a.id;
  return push(std::move(out), [pa, c](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i) ga.at(i) += c * g.at(i);
  }, "scale");
}

Var Tape::add_scalar(Var a, double c) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = A.at(i) + c;
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i) ga.at(i) += g.at(i);
  }, "add_scalar");
}

Var Tape::exp(Var a) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = std::exp(A.at(i));
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& y = t.nodes_[self].value;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i) ga.at(i) += g.at(i) * y.at(i);
  }, "exp");
}

Var Tape::abs(Var a) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = std::fabs(A.at(i));
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& x = t.nodes_[pa].value;
    ValueGrid& ga = t.ensure_grad(pa);
    // Subgradient 0 at the kink.
    for (long i = 0; i < g.size(); ++i)
      ga.at(i) += g.at(i) * (x.at(i) > 0.0 ? 1.0 : (x.at(i) < 0.0 ? -1.0 : 0.0));
  }, "abs");
}

Var Tape::softplus(Var a) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) {
    const double x = A.at(i);
    out.at(i) = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  }
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& x = t.nodes_[pa].value;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i) ga.at(i) += g.at(i) / (1.0 + std::exp(-x.at(i)));
  }, "softplus");
}

Var Tape::sigmoid(Var a) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) {
    const double x = A.at(i);
    out.at(i) = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                         : std::exp(x) / (1.0 + std::exp(x));
  }
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& y = t.nodes_[self].value;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i) ga.at(i) += g.at(i) * y.at(i) * (1.0 - y.at(i));
  }, "sigmoid");
}

Var Tape::tanh(Var a) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) out.at(i) = std::tanh(A.at(i));
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& y = t.nodes_[self].value;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i) ga.at(i) += g.at(i) * (1.0 - y.at(i) * y.at(i));
  }, "tanh");
}

Var Tape::leaky_relu(Var a, double slope) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) {
    const double x = A.at(i);
    out.at(i) = x > 0.0 ? x : slope * x;
  }
  int pa = a.id;
  return push(std::move(out), [pa, slope](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& x = t.nodes_[pa].value;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i) ga.at(i) += g.at(i) * (x.at(i) > 0.0 ? 1.0 : slope);
  }, "leaky_relu");
}

Var Tape::clamp(Var a, double lo, double hi) {
  const ValueGrid& A = value(a);
  ValueGrid out(A.shape());
  for (long i = 0; i < A.size(); ++i) {
    const double x = A.at(i);
    out.at(i) = x < lo ? lo : (x > hi ? hi : x);
  }
  int pa = a.id;
  return push(std::move(out), [pa, lo, hi](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    const ValueGrid& x = t.nodes_[pa].value;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < g.size(); ++i)
      ga.at(i) += (x.at(i) >= lo && x.at(i) <= hi) ? g.at(i) : 0.0;
  }, "clamp");
}

Var Tape::sum(Var a) {
  const ValueGrid& A = value(a);
  double s = 0.0;
  for (long i = 0; i < A.size(); ++i) s += A.at(i);
  int pa = a.id;
  return push(ValueGrid::scalar(s), [pa](Tape& t, int self) {
    const double g = t.nodes_[self].grad.at(0);
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < ga.size(); ++i) ga.at(i) += g;
  }, "sum");
}

Var Tape::mean(Var a) {
  const ValueGrid& A = value(a);
  const double inv = 1.0 / static_cast<double>(A.size());
  double s = 0.0;
  for (long i = 0; i < A.size(); ++i) s += A.at(i);
  int pa = a.id;
  return push(ValueGrid::scalar(s * inv), [pa, inv](Tape& t, int self) {
    const double g = t.nodes_[self].grad.at(0) * inv;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long i = 0; i < ga.size(); ++i) ga.at(i) += g;
  }, "mean");
}

Var Tape::row_sum(Var a) {
  const ValueGrid& A = value(a);
  require_2d(A, "row_sum");
  ValueGrid out = ValueGrid::matrix(A.rows(), 1);
  for (long r = 0; r < A.rows(); ++r) {
    double s = 0.0;
    for (long c = 0; c < A.cols(); ++c) s += A.at(r, c);
    out.at(r, 0) = s;
  }
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long r = 0; r < ga.rows(); ++r)
      for (long c = 0; c < ga.cols(); ++c) ga.at(r, c) += g.at(r, 0);
  }, "row_sum");
}

Var Tape::col_sum(Var a) {
  const ValueGrid& A = value(a);
  require_2d(A, "col_sum");
  ValueGrid out = ValueGrid::matrix(1, A.cols());
  for (long r = 0; r < A.rows(); ++r)
    for (long c = 0; c < A.cols(); ++c) out.at(0, c) += A.at(r, c);
  int pa = a.id;
  return push(std::move(out), [pa](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long r = 0; r < ga.rows(); ++r)
      for (long c = 0; c < ga.cols(); ++c) ga.at(r, c) += g.at(0, c);
  }, "col_sum");
}

Var Tape::row_mean(Var a) {
  return scale(row_sum(a), 1.0 / static_cast<double>(value(a).cols()));
}

Var Tape::col_mean(Var a) {
  return scale(col_sum(a), 1.0 / static_cast<double>(value(a).rows()));
}

Var Tape::slice_cols(Var a, long c0, long c1) {
  const ValueGrid& A = value(a);
  require_2d(A, "slice_cols");
  if (c0 < 0 || c1 > A.cols() || c0 >= c1)
    throw DimError("slice_cols: [" + std::to_string(c0) + "," + std::to_string(c1) +
                   ") of " + A.shape_str());
  ValueGrid out = ValueGrid::matrix(A.rows(), c1 - c0);
  for (long r = 0; r < A.rows(); ++r)
    for (long c = c0; c < c1; ++c) out.at(r, c - c0) = A.at(r, c);
  int pa = a.id;
  return push(std::move(out), [pa, c0](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long r = 0; r < g.rows(); ++r)
      for (long c = 0; c < g.cols(); ++c) ga.at(r, c + c0) += g.at(r, c);
  }, "slice_cols");
}

Var Tape::slice_rows(Var a, long r0, long r1) {
  const ValueGrid& A = value(a);
  require_2d(A, "slice_rows");
  if (r0 < 0 || r1 > A.rows() || r0 >= r1)
    throw DimError("slice_rows: [" + std::to_string(r0) + "," + std::to_string(r1) +
                   ") of " + A.shape_str());
  ValueGrid out = ValueGrid::matrix(r1 - r0, A.cols());
  for (long r = r0; r < r1; ++r)
    for (long c = 0; c < A.cols(); ++c) out.at(r - r0, c) = A.at(r, c);
  int pa = a.id;
  return push(std::move(out), [pa, r0](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    for (long r = 0; r < g.rows(); ++r)
      for (long c = 0; c < g.cols(); ++c) ga.at(r + r0, c) += g.at(r, c);
  }, "slice_rows");
}

Var Tape::concat_cols(Var a, Var b) {
  const ValueGrid& A = value(a);
  const ValueGrid& B = value(b);
  require_2d(A, "concat_cols");
  require_2d(B, "concat_cols");
  if (A.rows() != B.rows())
    throw DimError("concat_cols: " + A.shape_str() + " | " + B.shape_str());
  ValueGrid out = ValueGrid::matrix(A.rows(), A.cols() + B.cols());
  for (long r = 0; r < A.rows(); ++r) {
    for (long c = 0; c < A.cols(); ++c) out.at(r, c) = A.at(r, c);
    for (long c = 0; c < B.cols(); ++c) out.at(r, A.cols() + c) = B.at(r, c);
  }
  int pa = a.id, pb = b.id;
  const long ac = A.cols();
  return push(std::move(out), [pa, pb, ac](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    ValueGrid& ga = t.ensure_grad(pa);
    ValueGrid& gb = t.ensure_grad(pb);
    for (long r = 0; r < g.rows(); ++r) {
      for (long c = 0; c < ga.cols(); ++c) ga.at(r, c) += g.at(r, c);
      for (long c = 0; c < gb.cols(); ++c) gb.at(r, c) += g.at(r, ac + c);
    }
  }, "concat_cols");
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw DimError("concat_rows: no parts");
  long cols = value(parts[0]).cols();
  long rows = 0;
  for (Var p : parts) {
    const ValueGrid& P = value(p);
    require_2d(P, "concat_rows");
    if (P.cols() != cols) throw DimError("concat_rows: column mismatch");
    rows += P.rows();
  }
  ValueGrid out = ValueGrid::matrix(rows, cols);
  std::vector<int> ids;
  std::vector<long> offsets;
  long r0 = 0;
  for (Var p : parts) {
    const ValueGrid& P = value(p);
    for (long r = 0; r < P.rows(); ++r)
      for (long c = 0; c < cols; ++c) out.at(r0 + r, c) = P.at(r, c);
    ids.push_back(p.id);
    offsets.push_back(r0);
    r0 += P.rows();
  }
  return push(std::move(out), [ids, offsets](Tape& t, int self) {
    const ValueGrid& g = t.nodes_[self].grad;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      ValueGrid& gp = t.ensure_grad(ids[k]);
      const long r0 = offsets[k];
      for (long r = 0; r < gp.rows(); ++r)
        for (long c = 0; c < gp.cols(); ++c) gp.at(r, c) += g.at(r0 + r, c);
    }
  }, "concat_rows");
}

void Tape::backward(Var loss) {
  Node& ln = node(loss);
  if (ln.value.size() != 1)
    throw Error("backward: loss must be a scalar, got " + ln.value.shape_str());
  ensure_grad(loss.id).at(0) = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.back && n.grad_live) n.back(*this, id);
  }
}

void Tape::clear() { nodes_.clear(); }

}  // namespace isax
