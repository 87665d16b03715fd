#include "raincast/optim.hpp"

#include <cmath>

#include "raincast/errors.hpp"

namespace raincast {

void adam_step(const std::vector<NodePtr>& params, AdamState& state) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Tensor::zeros(p->value.shape));
      state.v.push_back(Tensor::zeros(p->value.shape));
    }
  }
  if (state.m.size() != params.size())
    throw ValidationError("adam: parameter list changed size across steps");

  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t i = 0; i < params.size(); ++i) {
    Node& p = *params[i];
    p.ensure_grad();
    if (p.value.shape != state.m[i].shape)
      throw ValidationError("adam: parameter " + std::to_string(i) + " changed shape");
    for (std::size_t j = 0; j < p.value.values.size(); ++j) {
      const double g = p.grad.values[j] + state.weight_decay * p.value.values[j];
      double& m = state.m[i].values[j];
      double& v = state.v[i].values[j];
      m = state.beta1 * m + (1.0 - state.beta1) * g;
      v = state.beta2 * v + (1.0 - state.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      p.value.values[j] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

double PlateauScheduler::step(double epoch_loss) {
  if (epoch_loss < best_) {
    best_ = epoch_loss;
    bad_epochs_ = 0;
    return lr_;
  }
  if (++bad_epochs_ >= patience_) {
    lr_ *= factor_;
    ++reductions_;
    bad_epochs_ = 0;
  }
  return lr_;
}

}  // namespace raincast
