#pragma once

#include <string>
#include <vector>

#include "wavae/tensor.hpp"

namespace wavae {

/// Named handle to a trainable tensor; the name is carried into error messages.
struct ParamRef {
  std::string name;
  Tensor* tensor = nullptr;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam accumulators, one slot per parameter in registration order.
struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

AdamState make_adam_state(const AdamConfig& cfg, const std::vector<ParamRef>& params);

/// One update. grads[i] pairs with params[i]. Throws (naming the parameter)
/// on a non-finite gradient or a non-finite post-update weight.
void adam_step(const std::vector<ParamRef>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace wavae
