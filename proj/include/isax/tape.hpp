// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "isax/grid.hpp"

namespace isax {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid until the tape is cleared.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Wengert-list reverse-mode tape over ValueGrid nodes. Nodes are appended in
// forward order, so ids are already topologically sorted and backward() is a
// single reverse sweep. Every op checks its output for NaN/Inf and throws
// NumericError instead of propagating silent non-finite values.
class Tape {
 public:
  Var input(ValueGrid v);

  const ValueGrid& value(Var x) const;
  // Zero grid until backward() has run and the node was reached.
  const ValueGrid& grad(Var x);
  double scalar_value(Var x) const;  // requires a 1x1 (or single-entry) node

  // --- linear algebra ---
  Var matmul(Var a, Var b);    // (R x K) @ (K x C)
  Var transpose(Var a);

  // --- elementwise binary (same shape) ---
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);

  // --- broadcasting against row / column vectors and scalars ---
  Var add_rowvec(Var a, Var v);   // a: R x C, v: 1 x C
  Var sub_rowvec(Var a, Var v);
  Var sub_colvec(Var a, Var v);   // v: R x 1
  Var add_scalar_var(Var a, Var s);  // s: 1 x 1
  Var scale(Var a, double c);
  Var add_scalar(Var a, double c);

  // --- elementwise unary ---
  Var exp(Var a);
  Var abs(Var a);
  Var softplus(Var a);            // log(1 + e^x), overflow-safe
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var leaky_relu(Var a, double slope);
  Var clamp(Var a, double lo, double hi);

  // --- reductions ---
  Var sum(Var a);        // 1 x 1
  Var mean(Var a);       // 1 x 1
  Var row_sum(Var a);    // R x 1
  Var col_sum(Var a);    // 1 x C
  Var row_mean(Var a);   // R x 1
  Var col_mean(Var a);   // 1 x C

  // --- structural ---
  Var slice_cols(Var a, long c0, long c1);  // [c0, c1)
  Var slice_rows(Var a, long r0, long r1);
  Var concat_cols(Var a, Var b);
  Var concat_rows(std::span<const Var> parts);

  // Accumulates d loss / d node into every node's grad buffer.
  // `loss` must hold exactly one entry.
  void backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    ValueGrid value;
    ValueGrid grad;
    bool grad_live = false;
    std::function<void(Tape&, int)> back;  // pulls this node's grad into parents
  };

  std::vector<Node> nodes_;

  Var push(ValueGrid value, std::function<void(Tape&, int)> back, const char* opname);
  Node& node(Var x);
  const Node& node(Var x) const;
  ValueGrid& ensure_grad(int id);
  friend struct TapeDetail;
};

}  // namespace isax
