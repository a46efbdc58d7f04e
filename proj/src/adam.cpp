#include "wavae/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace wavae {

AdamState make_adam_state(const AdamConfig& cfg, const std::vector<ParamRef>& params) {
  AdamState s;
  s.cfg = cfg;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor->shape);
    s.v.emplace_back(p.tensor->shape);
  }
  return s;
}

void adam_step(const std::vector<ParamRef>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw std::runtime_error("adam_step: parameter/gradient/state count mismatch");
  }
  state.step += 1;
  const double b1 = state.cfg.beta1;
  const double b2 = state.cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].tensor;
    const Tensor& g = *grads[i];
    require_same_shape(w, g, "adam_step");
    if (!g.all_finite()) {
      throw std::runtime_error("adam_step: non-finite gradient for parameter '" + params[i].name +
                               "'");
    }
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < w.numel(); ++j) {
      m.values[j] = b1 * m.values[j] + (1.0 - b1) * g.values[j];
      v.values[j] = b2 * v.values[j] + (1.0 - b2) * g.values[j] * g.values[j];
      const double mhat = m.values[j] / c1;
      const double vhat = v.values[j] / c2;
      w.values[j] -= state.cfg.lr * mhat / (std::sqrt(vhat) + state.cfg.eps);
    }
    if (!w.all_finite()) {
      throw std::runtime_error("adam_step: non-finite weight after update for parameter '" +
                               params[i].name + "'");
    }
  }
}

}  // namespace wavae
