#include <doctest.h>

#include <cmath>

#include "isax/error.hpp"
#include "isax/net.hpp"
#include "isax/optim.hpp"
#include "isax/params.hpp"
#include "isax/tape.hpp"

using namespace isax;

TEST_CASE("mlp_forward: zero depth is the identity") {
  ParamStore store;
  MlpSpec spec;
  spec.input_width = 3;
  Tape tape;
  ParamBinding binding(tape, store);
  Var x = tape.input(ValueGrid::matrix(1, 3, {1.5, -2.0, 0.25}));
  Var y = mlp_forward(tape, binding, "m", spec, x);
  CHECK(tape.value(y).at(0, 0) == 1.5);
  CHECK(tape.value(y).at(0, 1) == -2.0);
  CHECK(tape.value(y).at(0, 2) == 0.25);
}

TEST_CASE("mlp_forward: identity weights reproduce the input") {
  ParamStore store;
  store.create("m.L0.W", ValueGrid::matrix(2, 2, {1, 0, 0, 1}));
  store.create("m.L0.b", ValueGrid::matrix(1, 2, {0, 0}));
  MlpSpec spec;
  spec.input_width = 2;
  spec.widths = {2};
  Tape tape;
  ParamBinding binding(tape, store);
  Var x = tape.input(ValueGrid::matrix(1, 2, {-3.0, 7.0}));
  Var y = mlp_forward(tape, binding, "m", spec, x);
  CHECK(tape.value(y).at(0, 0) == -3.0);
  CHECK(tape.value(y).at(0, 1) == 7.0);
}

TEST_CASE("mlp_forward: hand-computed single linear layer") {
  // W = [[2,0],[0,3]], b = [1,1], x = [1,1]  ->  [3,4]
  ParamStore store;
  store.create("m.L0.W", ValueGrid::matrix(2, 2, {2, 0, 0, 3}));
  store.create("m.L0.b", ValueGrid::matrix(1, 2, {1, 1}));
  MlpSpec spec;
  spec.input_width = 2;
  spec.widths = {2};
  Tape tape;
  ParamBinding binding(tape, store);
  Var x = tape.input(ValueGrid::matrix(1, 2, {1, 1}));
  Var y = mlp_forward(tape, binding, "m", spec, x);
  CHECK(tape.value(y).at(0, 0) == doctest::Approx(3.0));
  CHECK(tape.value(y).at(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("mlp_forward: width mismatch raises") {
  ParamStore store;
  Rng rng(1);
  MlpSpec spec;
  spec.input_width = 4;
  spec.widths = {3};
  init_mlp(store, "m", spec, rng);
  Tape tape;
  ParamBinding binding(tape, store);
  Var x = tape.input(ValueGrid::matrix(1, 5));
  CHECK_THROWS_AS(mlp_forward(tape, binding, "m", spec, x), DimError);
}

TEST_CASE("recurrent_forward: zero weights give a constant map over identical frames") {
  ParamStore store;
  GruSpec spec;
  spec.input_width = 2;
  spec.hidden_width = 3;
  for (const char* piece : {"Wzr", "Uzr", "bzr", "Wh", "Uh", "bh"}) {
    long in = std::string(piece)[0] == 'W' ? 2 : 3;
    long out = std::string(piece).find("zr") != std::string::npos ? 6 : 3;
    if (piece[0] == 'b')
      store.create(std::string("g.L0.") + piece, ValueGrid::matrix(1, out));
    else
      store.create(std::string("g.L0.") + piece, ValueGrid::matrix(in, out));
  }
  Tape tape;
  ParamBinding binding(tape, store);
  ValueGrid seq = ValueGrid::matrix(4, 2);
  for (long t = 0; t < 4; ++t) {
    seq.at(t, 0) = 0.7;
    seq.at(t, 1) = -0.2;
  }
  Var h = recurrent_forward(tape, binding, "g", spec, tape.input(seq));
  const ValueGrid& states = tape.value(h);
  CHECK(states.rows() == 4);
  CHECK(states.cols() == 3);
  for (long t = 1; t < 4; ++t)
    for (long c = 0; c < 3; ++c) CHECK(states.at(t, c) == states.at(0, c));
}

TEST_CASE("recurrent_forward: T=1 equals one cell application") {
  ParamStore store;
  Rng rng(3);
  GruSpec spec;
  spec.input_width = 3;
  spec.hidden_width = 4;
  init_gru(store, "g", spec, rng);
  ValueGrid frame = ValueGrid::matrix(1, 3, {0.3, -1.2, 0.9});

  Tape tape;
  ParamBinding binding(tape, store);
  Var h1 = recurrent_forward(tape, binding, "g", spec, tape.input(frame));
  CHECK(tape.value(h1).rows() == 1);

  // Re-run on a 2-frame sequence whose first frame matches: state 1 is equal.
  ValueGrid seq = ValueGrid::matrix(2, 3, {0.3, -1.2, 0.9, 5.0, 5.0, 5.0});
  Tape tape2;
  ParamBinding binding2(tape2, store);
  Var h2 = recurrent_forward(tape2, binding2, "g", spec, tape2.input(seq));
  for (long c = 0; c < 4; ++c)
    CHECK(tape.value(h1).at(0, c) == tape2.value(h2).at(0, c));
}

TEST_CASE("recurrent_forward: causality, perturbing the tail leaves prefixes bit-identical") {
  ParamStore store;
  Rng rng(11);
  GruSpec spec;
  spec.input_width = 2;
  spec.hidden_width = 5;
  spec.layers = 2;
  init_gru(store, "g", spec, rng);

  ValueGrid seq = ValueGrid::matrix(6, 2);
  for (long i = 0; i < seq.size(); ++i) seq.at(i) = rng.normal();
  ValueGrid perturbed = seq;
  perturbed.at(5, 0) += 10.0;
  perturbed.at(5, 1) -= 3.0;

  Tape ta, tb;
  ParamBinding ba(ta, store), bb(tb, store);
  const ValueGrid& sa = ta.value(recurrent_forward(ta, ba, "g", spec, ta.input(seq)));
  const ValueGrid& sb = tb.value(recurrent_forward(tb, bb, "g", spec, tb.input(perturbed)));
  for (long t = 0; t < 5; ++t)
    for (long c = 0; c < 5; ++c) CHECK(sa.at(t, c) == sb.at(t, c));
  bool tail_differs = false;
  for (long c = 0; c < 5; ++c) tail_differs |= (sa.at(5, c) != sb.at(5, c));
  CHECK(tail_differs);
}

TEST_CASE("recurrent_forward: empty sequence raises") {
  ParamStore store;
  Rng rng(5);
  GruSpec spec;
  spec.input_width = 2;
  spec.hidden_width = 2;
  init_gru(store, "g", spec, rng);
  Tape tape;
  ParamBinding binding(tape, store);
  Var bad = tape.input(ValueGrid::vec({1.0, 2.0}));  // rank-1, not T x F
  CHECK_THROWS_AS(recurrent_forward(tape, binding, "g", spec,
                                    tape.input(ValueGrid::matrix(1, 3))),
                  DimError);
  (void)bad;
}

TEST_CASE("backward: constant loss leaves all gradients zero") {
  ParamStore store;
  store.create("w", ValueGrid::matrix(1, 1, {2.0}));
  Tape tape;
  ParamBinding binding(tape, store);
  (void)binding["w"];
  Var c = tape.input(ValueGrid::scalar(5.0));
  tape.backward(c);
  binding.accumulate_grads();
  CHECK(store.grad("w").at(0) == 0.0);
}

TEST_CASE("backward: d(w*x)/dw = x") {
  ParamStore store;
  store.create("w", ValueGrid::matrix(1, 1, {2.0}));
  Tape tape;
  ParamBinding binding(tape, store);
  Var x = tape.input(ValueGrid::matrix(1, 1, {3.0}));
  Var loss = tape.mul(binding["w"], x);
  tape.backward(loss);
  binding.accumulate_grads();
  CHECK(store.grad("w").at(0) == 3.0);
}

TEST_CASE("backward: non-scalar loss raises") {
  Tape tape;
  Var v = tape.input(ValueGrid::matrix(2, 2));
  CHECK_THROWS(tape.backward(v));
}

TEST_CASE("tape: non-finite output raises instead of propagating") {
  Tape tape;
  Var big = tape.input(ValueGrid::scalar(1000.0));
  CHECK_THROWS_AS(tape.exp(big), NumericError);
}

TEST_CASE("adam_step: zero gradient leaves parameters unchanged, counter advances") {
  ParamStore store;
  store.create("p", ValueGrid::matrix(1, 2, {1.0, -4.0}));
  AdamConfig cfg;
  adam_step(store, cfg);
  CHECK(store.value("p").at(0) == 1.0);
  CHECK(store.value("p").at(1) == -4.0);
  CHECK(store.step_count() == 1);
}

TEST_CASE("adam_step: first step moves by about lr * sign(g)") {
  ParamStore store;
  store.create("p", ValueGrid::matrix(1, 2, {0.0, 0.0}));
  store.grad("p").at(0) = 0.37;
  store.grad("p").at(1) = -42.0;
  AdamConfig cfg;
  cfg.lr = 1e-3;
  adam_step(store, cfg);
  CHECK(store.value("p").at(0) == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(store.value("p").at(1) == doctest::Approx(1e-3).epsilon(1e-4));
}

TEST_CASE("adam_step: two identical gradients move monotonically against sign(g)") {
  ParamStore store;
  store.create("p", ValueGrid::matrix(1, 1, {1.0}));
  AdamConfig cfg;
  const double g = 0.8;
  store.grad("p").at(0) = g;
  adam_step(store, cfg);
  const double after_one = store.value("p").at(0);
  store.zero_grads();
  store.grad("p").at(0) = g;
  adam_step(store, cfg);
  const double after_two = store.value("p").at(0);
  CHECK(after_one < 1.0);
  CHECK(after_two < after_one);
}

TEST_CASE("adam_step: non-finite gradient names the parameter") {
  ParamStore store;
  store.create("enc.L0.W", ValueGrid::matrix(1, 1, {1.0}));
  store.grad("enc.L0.W").at(0) = std::numeric_limits<double>::quiet_NaN();
  AdamConfig cfg;
  try {
    adam_step(store, cfg);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("enc.L0.W") != std::string::npos);
  }
}

TEST_CASE("finite_diff_check: sum of squares at p = 1") {
  ParamStore store;
  store.create("p", ValueGrid::matrix(1, 1, {1.0}));
  auto loss_fn = [&]() {
    Tape tape;
    ParamBinding binding(tape, store);
    Var p = binding["p"];
    Var loss = tape.sum(tape.mul(p, p));
    tape.backward(loss);
    binding.accumulate_grads();
    return tape.scalar_value(loss);
  };
  Rng rng(1);
  FiniteDiffReport report = finite_diff_check(loss_fn, store, 1e-5, 4, rng);
  CHECK(report.max_rel_error < 1e-9);
}

TEST_CASE("finite_diff_check: constant loss has zero relative error") {
  ParamStore store;
  store.create("p", ValueGrid::matrix(1, 3, {1.0, 2.0, 3.0}));
  auto loss_fn = [&]() {
    Tape tape;
    ParamBinding binding(tape, store);
    (void)binding["p"];
    Var c = tape.input(ValueGrid::scalar(7.0));
    tape.backward(c);
    binding.accumulate_grads();
    return tape.scalar_value(c);
  };
  Rng rng(2);
  FiniteDiffReport report = finite_diff_check(loss_fn, store, 1e-5, 6, rng);
  CHECK(report.max_rel_error == 0.0);
}

TEST_CASE("finite_diff_check: nondeterministic loss is rejected") {
  ParamStore store;
  store.create("p", ValueGrid::matrix(1, 1, {1.0}));
  long calls = 0;
  auto loss_fn = [&]() {
    Tape tape;
    ParamBinding binding(tape, store);
    (void)binding["p"];
    Var c = tape.input(ValueGrid::scalar(static_cast<double>(++calls)));
    tape.backward(c);
    binding.accumulate_grads();
    return tape.scalar_value(c);
  };
  Rng rng(3);
  CHECK_THROWS_AS(finite_diff_check(loss_fn, store, 1e-5, 2, rng), CheckError);
}

TEST_CASE("finite_diff_check: h outside [1e-7, 1e-3] is a contract error") {
  ParamStore store;
  store.create("p", ValueGrid::matrix(1, 1, {1.0}));
  auto loss_fn = [&]() { return 0.0; };
  Rng rng(4);
  CHECK_THROWS(finite_diff_check(loss_fn, store, 1e-2, 1, rng));
  CHECK_THROWS(finite_diff_check(loss_fn, store, 1e-8, 1, rng));
}

TEST_CASE("matmul gradients match finite differences") {
  ParamStore store;
  Rng rng(8);
  store.create("A", glorot_uniform(3, 4, rng));
  store.create("B", glorot_uniform(4, 2, rng));
  auto loss_fn = [&]() {
    Tape tape;
    ParamBinding binding(tape, store);
    Var prod = tape.matmul(binding["A"], binding["B"]);
    Var loss = tape.sum(tape.mul(prod, prod));
    tape.backward(loss);
    binding.accumulate_grads();
    return tape.scalar_value(loss);
  };
  Rng coord(9);
  FiniteDiffReport report = finite_diff_check(loss_fn, store, 1e-5, 20, coord);
  CHECK(report.max_rel_error < 1e-7);
}

TEST_CASE("ParamStore: JSON round trip is bit exact") {
  ParamStore store;
  Rng rng(21);
  ValueGrid w = ValueGrid::matrix(3, 5);
  for (long i = 0; i < w.size(); ++i) w.at(i) = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
  store.create("layer.W", w);
  store.create("layer.b", ValueGrid::matrix(1, 5, {0.1, -0.2, 1e-300, 3e200, 0.0}));

  ParamStore loaded = ParamStore::from_json(store.to_json());
  for (const std::string& name : store.names()) {
    const ValueGrid& a = store.value(name);
    const ValueGrid& b = loaded.value(name);
    REQUIRE(a.same_shape(b));
    for (long i = 0; i < a.size(); ++i) CHECK(a.at(i) == b.at(i));
  }
  CHECK(store.to_json() == loaded.to_json());
}

TEST_CASE("determinism: same seed gives bit-identical init and forward") {
  auto run = [](std::uint64_t seed) {
    ParamStore store;
    Rng rng(seed);
    MlpSpec spec;
    spec.input_width = 4;
    spec.widths = {8, 3};
    init_mlp(store, "m", spec, rng);
    Tape tape;
    ParamBinding binding(tape, store);
    ValueGrid x = ValueGrid::matrix(2, 4);
    Rng data_rng(seed + 1);
    for (long i = 0; i < x.size(); ++i) x.at(i) = data_rng.normal();
    Var y = mlp_forward(tape, binding, "m", spec, tape.input(x));
    Var loss = tape.sum(tape.mul(y, y));
    tape.backward(loss);
    binding.accumulate_grads();
    return store.to_json() + "|" + std::to_string(tape.scalar_value(loss));
  };
  CHECK(run(77) == run(77));
  CHECK(run(77) != run(78));
}
