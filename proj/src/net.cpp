// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/net.hpp"

#include <cmath>

#include "isax/error.hpp"

namespace isax {

ValueGrid glorot_uniform(long fan_in, long fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  ValueGrid w = ValueGrid::matrix(fan_in, fan_out);
  for (long i = 0; i < w.size(); ++i) w.at(i) = rng.uniform(-a, a);
  return w;
}

namespace {

std::string layer_name(const std::string& prefix, long layer, const char* piece) {
  return prefix + ".L" + std::to_string(layer) + "." + piece;
}

}  // namespace

void init_mlp(ParamStore& store, const std::string& prefix, const MlpSpec& spec, Rng& rng) {
  long in = spec.input_width;
  for (std::size_t l = 0; l < spec.widths.size(); ++l) {
    const long out = spec.widths[l];
    store.create(layer_name(prefix, static_cast<long>(l), "W"), glorot_uniform(in, out, rng));
    store.create(layer_name(prefix, static_cast<long>(l), "b"), ValueGrid::matrix(1, out));
    in = out;
  }
}

Var mlp_forward(Tape& tape, ParamBinding& params, const std::string& prefix,
                const MlpSpec& spec, Var input) {
  if (tape.value(input).cols() != spec.input_width)
    throw DimError("mlp_forward: input width " + std::to_string(tape.value(input).cols()) +
                   " != spec width " + std::to_string(spec.input_width));
  Var h = input;
  for (std::size_t l = 0; l < spec.widths.size(); ++l) {
    Var w = params[layer_name(prefix, static_cast<long>(l), "W")];
    Var b = params[layer_name(prefix, static_cast<long>(l), "b")];
    h = tape.add_rowvec(tape.matmul(h, w), b);
    if (l + 1 < spec.widths.size()) h = tape.leaky_relu(h, kLeakySlope);
  }
  return h;
}

void init_gru(ParamStore& store, const std::string& prefix, const GruSpec& spec, Rng& rng) {
  if (spec.layers < 1) throw DimError("init_gru: needs at least one layer");
  long in = spec.input_width;
  const long H = spec.hidden_width;
  for (long l = 0; l < spec.layers; ++l) {
    // Fused update/reset gates, then the candidate state.
    store.create(layer_name(prefix, l, "Wzr"), glorot_uniform(in, 2 * H, rng));
    store.create(layer_name(prefix, l, "Uzr"), glorot_uniform(H, 2 * H, rng));
    store.create(layer_name(prefix, l, "bzr"), ValueGrid::matrix(1, 2 * H));
    store.create(layer_name(prefix, l, "Wh"), glorot_uniform(in, H, rng));
    store.create(layer_name(prefix, l, "Uh"), glorot_uniform(H, H, rng));
    store.create(layer_name(prefix, l, "bh"), ValueGrid::matrix(1, H));
    in = H;
  }
}

Var recurrent_forward(Tape& tape, ParamBinding& params, const std::string& prefix,
                      const GruSpec& spec, Var sequence) {
  const ValueGrid& seq = tape.value(sequence);
  if (seq.rank() != 2 || seq.rows() < 1)
    throw DimError("recurrent_forward: empty or malformed sequence " + seq.shape_str());
  if (seq.cols() != spec.input_width)
    throw DimError("recurrent_forward: frame width " + std::to_string(seq.cols()) +
                   " != spec width " + std::to_string(spec.input_width));
  const long T = seq.rows();
  const long H = spec.hidden_width;

  Var layer_in = sequence;
  for (long l = 0; l < spec.layers; ++l) {
    Var wzr = params[layer_name(prefix, l, "Wzr")];
    Var uzr = params[layer_name(prefix, l, "Uzr")];
    Var bzr = params[layer_name(prefix, l, "bzr")];
    Var wh = params[layer_name(prefix, l, "Wh")];
    Var uh = params[layer_name(prefix, l, "Uh")];
    Var bh = params[layer_name(prefix, l, "bh")];

    Var h = tape.input(ValueGrid::matrix(1, H));  // zero initial state
    std::vector<Var> states;
    states.reserve(static_cast<std::size_t>(T));
    for (long t = 0; t < T; ++t) {
      Var xt = tape.slice_rows(layer_in, t, t + 1);
      Var zr = tape.sigmoid(tape.add_rowvec(
          tape.add(tape.matmul(xt, wzr), tape.matmul(h, uzr)), bzr));
      Var z = tape.slice_cols(zr, 0, H);
      Var r = tape.slice_cols(zr, H, 2 * H);
      Var cand = tape.tanh(tape.add_rowvec(
          tape.add(tape.matmul(xt, wh), tape.matmul(tape.mul(r, h), uh)), bh));
      // h <- (1 - z) * h + z * cand
      Var keep = tape.add_scalar(tape.scale(z, -1.0), 1.0);
      h = tape.add(tape.mul(keep, h), tape.mul(z, cand));
      states.push_back(h);
    }
    layer_in = tape.concat_rows(states);
  }
  return layer_in;
}

}  // namespace isax
