#include <cmath>

#include "emorec/error.hpp"
#include "emorec/nn/parameter.hpp"

namespace emorec::nn {

void init_uniform(Matrix& m, double limit, Rng& rng) {
  for (double& x : m.data()) x = rng.uniform(-limit, limit);
}

void init_glorot(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  init_uniform(m, std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

void adam_update(Parameter& param, const AdamConfig& config) {
  if (!(config.learning_rate > 0.0) || !(config.beta1 > 0.0) || !(config.beta2 > 0.0) ||
      !(config.epsilon > 0.0) || config.beta1 >= 1.0 || config.beta2 >= 1.0) {
    throw ConfigError("adam hyperparameters must be positive with betas below 1");
  }
  require_same_shape(param.value, param.grad, "adam gradient");
  require_same_shape(param.value, param.m, "adam first moment");
  require_same_shape(param.value, param.v, "adam second moment");

  param.step_count += 1;
  const double t = static_cast<double>(param.step_count);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);

  auto value = param.value.data();
  auto grad = param.grad.data();
  auto m = param.m.data();
  auto v = param.v.data();
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double g = grad[i];
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    value[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
  param.zero_grad();
}

}  // namespace emorec::nn
