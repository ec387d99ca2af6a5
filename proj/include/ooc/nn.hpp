#pragma once

// Minimal dense-network substrate: parameter tensors, a tape autograd for
// reverse-mode gradients, batch normalization, Adam, a triangular cyclical
// learning-rate schedule, and finite-difference gradient verification.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ooc/rng.hpp"

namespace ooc::nn {

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;

  static ParamTensor zeros(std::string name, std::vector<std::size_t> shape);
  std::size_t count() const;
  void zero_grad();
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_init(ParamTensor& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

enum class RunMode { kTrain, kInfer };

struct BatchNormLayer {
  ParamTensor gamma;  // per-feature scale
  ParamTensor beta;   // per-feature shift
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;

  BatchNormLayer() = default;
  BatchNormLayer(std::string name, std::size_t features);
  std::size_t features() const { return gamma.count(); }
};

// Pure kernels. The tape ops below share these semantics.
std::vector<double> linear_forward(const ParamTensor& weight, const ParamTensor& bias,
                                   const std::vector<double>& x);
std::vector<double> relu(std::vector<double> x);
std::vector<double> softmax(const std::vector<double>& scores);
double cross_entropy(const std::vector<double>& logits, std::size_t label);

// Standardizes per feature. Train mode uses batch statistics (batch size >= 2
// required) and, when update_running is set, folds them into the running
// estimates; infer mode uses the running statistics only.
std::vector<std::vector<double>> batchnorm_forward(const std::vector<std::vector<double>>& batch,
                                                   BatchNormLayer& layer, RunMode mode,
                                                   bool update_running = true);

// Records a forward computation and plays it back in reverse for exact
// gradients. Nodes are vectors of doubles; creation order is a topological
// order, so backward() is a single reverse sweep. One backward per tape.
class Tape {
 public:
  using Ref = std::size_t;

  Ref param(ParamTensor& p);
  Ref input(std::vector<double> v);

  Ref affine(Ref weight, Ref bias, Ref x);  // weight is row-major (|bias| x |x|)
  Ref relu(Ref x);
  Ref add(Ref a, Ref b);
  Ref sub(Ref a, Ref b);
  Ref mul(Ref a, Ref b);  // elementwise
  Ref max(Ref a, Ref b);  // elementwise; ties route gradient to `a`
  Ref scale(Ref x, double s);
  Ref dot(Ref a, Ref b);                       // scalar node
  Ref stack(const std::vector<Ref>& scalars);  // scalar nodes -> one vector
  Ref softmax(Ref scores);
  Ref weighted_sum(Ref weights, const std::vector<Ref>& vectors);
  Ref concat(const std::vector<Ref>& parts);
  Ref cross_entropy(Ref logits, std::size_t label);  // scalar node
  Ref mean(const std::vector<Ref>& scalars);         // scalar node

  // One output row per input row. Train mode couples the rows through the
  // batch statistics; the joint backward hangs off the last output node.
  std::vector<Ref> batch_norm(const std::vector<Ref>& rows, BatchNormLayer& layer,
                              RunMode mode, bool update_running = true);

  const std::vector<double>& value(Ref r) const { return nodes_[r].val; }
  double scalar(Ref r) const { return nodes_[r].val.at(0); }

  // Seeds d(loss)=1 and accumulates gradients into every bound ParamTensor.
  void backward(Ref loss);

 private:
  struct Node {
    std::vector<double> val;
    std::vector<double> grad;
    std::function<void(Tape&)> back;
    ParamTensor* bound = nullptr;
  };

  Ref push(std::vector<double> val, std::function<void(Tape&)> back,
           ParamTensor* bound = nullptr);

  std::vector<Node> nodes_;
};

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  void initialize(const std::vector<ParamTensor*>& params);
};

// Bias-corrected Adam update from the gradients currently held in `params`.
void adam_step(const std::vector<ParamTensor*>& params, AdamState& state, double lr);

struct LrSchedule {
  double lr_min = 9e-6;
  double lr_max = 6e-5;
  std::size_t cycle_steps = 100;  // full triangular period, >= 2
};

// Triangular wave: lr_min at step 0, lr_max at mid-cycle, lr_min again at a
// full cycle.
double cyclical_lr(std::size_t step, const LrSchedule& schedule);

// Central finite differences against the analytic gradients. `forward(true)`
// must run a fresh forward + backward (gradients are zeroed here first) and
// return the loss; `forward(false)` must return the loss only. Returns the
// maximum relative error |g - g_fd| / max(1e-8, |g| + |g_fd|).
double check_gradients(const std::function<double(bool)>& forward,
                       const std::vector<ParamTensor*>& params, double eps = 1e-5);

}  // namespace ooc::nn
