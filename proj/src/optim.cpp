// Copyright 2026 isax authors. Apache 2.0 License.
#include "isax/optim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "isax/error.hpp"

namespace isax {

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  if (cfg.lr <= 0.0) throw Error("adam_step: learning rate must be positive");
  store.increment_step();
  const double t = static_cast<double>(store.step_count());
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (const std::string& name : store.names()) {
    ValueGrid& p = store.value(name);
    ValueGrid& g = store.grad(name);
    ValueGrid& m = store.moment1(name);
    ValueGrid& v = store.moment2(name);
    if (!g.all_finite())
      throw NumericError("adam_step: non-finite gradient for parameter '" + name + "'");
    for (long i = 0; i < p.size(); ++i) {
      const double gi = g.at(i);
      m.at(i) = cfg.beta1 * m.at(i) + (1.0 - cfg.beta1) * gi;
      v.at(i) = cfg.beta2 * v.at(i) + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = m.at(i) / bc1;
      const double vhat = v.at(i) / bc2;
      p.at(i) -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

FiniteDiffReport finite_diff_check(const std::function<double()>& loss_fn,
                                   ParamStore& store, double h, long samples,
                                   Rng& rng) {
  if (h < 1e-7 || h > 1e-3)
    throw Error("finite_diff_check: h must lie in [1e-7, 1e-3]");
  if (samples < 1) throw Error("finite_diff_check: needs at least one sample");

  store.zero_grads();
  const double base_a = loss_fn();
  // Snapshot analytic gradients before the probe re-evaluations overwrite them.
  std::vector<std::string> names = store.names();
  std::vector<ValueGrid> grads;
  grads.reserve(names.size());
  for (const auto& name : names) grads.push_back(store.grad(name));

  store.zero_grads();
  const double base_b = loss_fn();
  if (base_a != base_b)
    throw CheckError("finite_diff_check: loss function is nondeterministic "
                     "across probe calls");

  const long total = store.total_coords();
  FiniteDiffReport report;
  for (long s = 0; s < samples; ++s) {
    long flat = static_cast<long>(rng.index(static_cast<std::uint64_t>(total)));
    std::size_t pi = 0;
    while (flat >= store.value(names[pi]).size()) {
      flat -= store.value(names[pi]).size();
      ++pi;
    }
    ValueGrid& p = store.value(names[pi]);
    const double orig = p.at(flat);

    p.at(flat) = orig + h;
    store.zero_grads();
    const double up = loss_fn();
    p.at(flat) = orig - h;
    store.zero_grads();
    const double down = loss_fn();
    p.at(flat) = orig;

    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grads[pi].at(flat);
    const double rel = std::fabs(analytic - numeric) /
                       std::max(1e-12, std::fabs(analytic) + std::fabs(numeric));
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_param = names[pi];
      report.worst_index = flat;
    }
    ++report.coords_checked;
  }

  // Leave the store in its original gradient state.
  store.zero_grads();
  loss_fn();
  return report;
}

}  // namespace isax
