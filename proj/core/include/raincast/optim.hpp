#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "raincast/autodiff.hpp"

namespace raincast {

// Classical Adam with bias correction. Weight decay is coupled: lambda*w is
// added to the raw gradient before the moment updates.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  long long step = 0;
  std::vector<Tensor> m;  // first moments, sized on the first step
  std::vector<Tensor> v;  // second moments, elementwise >= 0
};

// Applies one Adam update in place using each parameter's accumulated
// gradient. Parameter order must stay fixed across steps.
void adam_step(const std::vector<NodePtr>& params, AdamState& state);

// Reduce-on-plateau: multiplies the learning rate by `factor` once
// `patience` consecutive epochs fail to improve (strictly lower) the best
// monitored loss. The non-improvement counter resets both on improvement
// and on every reduction, so back-to-back reductions are `patience` apart.
class PlateauScheduler {
 public:
  explicit PlateauScheduler(double lr, int patience = 100, double factor = 0.1)
      : lr_(lr), patience_(patience), factor_(factor) {}

  // Feed one epoch's monitored loss; returns the (possibly reduced) lr.
  double step(double epoch_loss);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int bad_epochs() const { return bad_epochs_; }
  int reductions() const { return reductions_; }

 private:
  double lr_;
  int patience_;
  double factor_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_epochs_ = 0;
  int reductions_ = 0;
};

}  // namespace raincast
