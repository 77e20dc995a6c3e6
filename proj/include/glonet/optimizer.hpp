#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glonet/rng.hpp"
#include "glonet/tape.hpp"

namespace glonet {

struct TrainConfig {
  double lr = 0.01;
  std::size_t batch_size = 1024;
  std::size_t epochs = 200;
  double l2_coeff = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
};

/// A named trainable tensor. L2 regularization is applied only where
/// apply_l2 is set (weights; never biases or BN parameters).
struct Param {
  std::string name;
  TensorPtr tensor;
  bool apply_l2 = false;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;
};

/// Bias-corrected Adam with coupled L2 (2*l2_coeff*theta added to the
/// gradient before the moment updates).
class Adam {
 public:
  Adam(std::vector<Param> params, const TrainConfig& cfg);

  void step();
  void zero_grad();

  const AdamState& state() const { return state_; }
  const std::vector<Param>& params() const { return params_; }

 private:
  std::vector<Param> params_;
  AdamState state_;
  TrainConfig cfg_;
};

/// Mean squared error over the batch.
TensorPtr mse_loss(Tape& tape, const TensorPtr& pred, const TensorPtr& target);

/// Mean negative log-likelihood of the labels under softmax(logits),
/// computed fused in log space.
TensorPtr cross_entropy_loss(Tape& tape, const TensorPtr& logits, const std::vector<int>& labels);

/// i.i.d. normal(0, 2/fan_in) entries.
TensorPtr he_normal_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng);

}  // namespace glonet
