// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/encoder.hpp"

#include "isax/error.hpp"

namespace isax {

MlpSpec SubspaceEncoder::mlp_spec() const {
  MlpSpec spec;
  spec.input_width = input_width;
  spec.widths = hidden_widths;
  spec.widths.push_back(output_width());
  return spec;
}

GruSpec SubspaceEncoder::gru_spec() const {
  GruSpec spec;
  spec.input_width = input_width;
  spec.hidden_width = output_width();
  spec.layers = recurrent_layers;
  return spec;
}

void SubspaceEncoder::init(ParamStore& store, Rng& rng) const {
  if (n < 1 || d < 1) throw DimError("encoder: n and d must be positive");
  if (kind == BackboneKind::feed_forward) {
    init_mlp(store, prefix, mlp_spec(), rng);
  } else {
    init_gru(store, prefix, gru_spec(), rng);
  }
}

Var SubspaceEncoder::encode(Tape& tape, ParamBinding& params, Var x) const {
  if (tape.value(x).cols() != input_width)
    throw DimError("encode: input width " + std::to_string(tape.value(x).cols()) +
                   " != encoder width " + std::to_string(input_width));
  if (kind == BackboneKind::feed_forward)
    return mlp_forward(tape, params, prefix, mlp_spec(), x);
  return recurrent_forward(tape, params, prefix, gru_spec(), x);
}

Var SubspaceEncoder::subspace(Tape& tape, Var y, long i) const {
  if (i < 0 || i >= n) throw DimError("subspace index out of range");
  return tape.slice_cols(y, i * d, (i + 1) * d);
}

MlpSpec DiscriminatorBank::mlp_spec() const {
  MlpSpec spec;
  spec.input_width = d + p;
  spec.widths = widths;
  spec.widths.push_back(1);
  return spec;
}

void DiscriminatorBank::init(ParamStore& store, Rng& rng) const {
  if (n < 1) throw DimError("discriminator bank: n must be positive");
  for (long i = 0; i < n; ++i)
    init_mlp(store, prefix + std::to_string(i), mlp_spec(), rng);
}

Var DiscriminatorBank::score(Tape& tape, ParamBinding& params, long i, Var y_i,
                             Var u_onehot) const {
  if (i < 0 || i >= n) throw DimError("discriminator index out of range");
  if (tape.value(y_i).cols() != d || tape.value(u_onehot).cols() != p)
    throw DimError("discriminator: input widths (" + tape.value(y_i).shape_str() + ", " +
                   tape.value(u_onehot).shape_str() + ") do not match (d=" +
                   std::to_string(d) + ", p=" + std::to_string(p) + ")");
  Var joint = tape.concat_cols(y_i, u_onehot);
  return mlp_forward(tape, params, prefix + std::to_string(i), mlp_spec(), joint);
}

Var regression_score_from_y(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                            const DiscriminatorBank& bank, Var y, Var u_onehot) {
  Var r{};
  for (long i = 0; i < enc.n; ++i) {
    Var y_i = enc.subspace(tape, y, i);
    Var term = bank.score(tape, params, i, y_i, u_onehot);
    r = r.valid() ? tape.add(r, term) : term;
  }
  return r;
}

Var regression_score(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                     const DiscriminatorBank& bank, Var x, Var u_onehot) {
  Var y = enc.encode(tape, params, x);
  return regression_score_from_y(tape, params, enc, bank, y, u_onehot);
}

void PredictorHead::init(ParamStore& store, Rng& rng) const {
  store.create(prefix + ".W", glorot_uniform(hidden_width, feature_width, rng));
  store.create(prefix + ".b", ValueGrid::matrix(1, feature_width));
}

Var PredictorHead::apply(Tape& tape, ParamBinding& params, Var hidden) const {
  if (tape.value(hidden).cols() != hidden_width)
    throw DimError("predictor head: hidden width mismatch");
  return tape.add_rowvec(tape.matmul(hidden, params[prefix + ".W"]), params[prefix + ".b"]);
}

Var predict_ahead(Tape& tape, ParamBinding& params, const SubspaceEncoder& enc,
                  const PredictorHead& head, Var sequence, long tau) {
  if (enc.kind != BackboneKind::recurrent)
    throw SpecError("predict_ahead: requires a recurrent backbone");
  const long T = tape.value(sequence).rows();
  if (tau < 1) throw SpecError("predict_ahead: lookahead must be >= 1");
  if (T <= tau)
    throw SpecError("predict_ahead: sequence length " + std::to_string(T) +
                    " too short for lookahead " + std::to_string(tau));
  Var hidden = enc.encode(tape, params, sequence);
  Var prefix_states = tape.slice_rows(hidden, 0, T - tau);
  return head.apply(tape, params, prefix_states);
}

ValueGrid one_hot(const std::vector<long>& labels, long num_classes) {
  const long N = static_cast<long>(labels.size());
  ValueGrid out = ValueGrid::matrix(N, num_classes);
  for (long i = 0; i < N; ++i) {
    const long u = labels[static_cast<std::size_t>(i)];
    if (u < 1 || u > num_classes)
      throw SpecError("one_hot: label " + std::to_string(u) + " outside [1, " +
                      std::to_string(num_classes) + "]");
    out.at(i, u - 1) = 1.0;
  }
  return out;
}

}  // namespace isax
