#include "glonet/optimizer.hpp"

#include <cmath>

namespace glonet {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train.lr must be positive, got " + std::to_string(lr));
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (l2_coeff < 0.0) throw ConfigError("train.l2_coeff must be non-negative");
  if (!(beta1 > 0.0 && beta1 < 1.0)) {
    throw ConfigError("train.beta1 must lie in (0,1), got " + std::to_string(beta1));
  }
  if (!(beta2 > 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta2 must lie in (0,1), got " + std::to_string(beta2));
  }
  if (adam_eps <= 0.0) throw ConfigError("train.adam_eps must be positive");
}

Adam::Adam(std::vector<Param> params, const TrainConfig& cfg) : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  state_.m.reserve(params_.size());
  state_.v.reserve(params_.size());
  for (const auto& p : params_) {
    state_.m.emplace_back(p.tensor->size(), 0.0);
    state_.v.emplace_back(p.tensor->size(), 0.0);
  }
}

void Adam::step() {
  ++state_.t;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(state_.t));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(state_.t));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    auto& p = params_[pi];
    auto& theta = p.tensor->data();
    auto& g = p.tensor->grad();  // zeros when the loss never reached this parameter
    auto& m = state_.m[pi];
    auto& v = state_.v[pi];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double gi = g[i];
      if (!std::isfinite(gi)) {
        throw NumericError("non-finite gradient in parameter " + p.name);
      }
      if (p.apply_l2) gi += 2.0 * cfg_.l2_coeff * theta[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      theta[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.tensor->zero_grad();
}

TensorPtr mse_loss(Tape& tape, const TensorPtr& pred, const TensorPtr& target) {
  if (pred->shape() != target->shape()) {
    throw ShapeError("mse_loss shapes disagree: " + pred->shape_str() + " vs " +
                     target->shape_str());
  }
  auto diff = tape.sub(pred, target);
  auto sq = tape.mul(diff, diff);
  return tape.scale(tape.sum(sq), 1.0 / static_cast<double>(pred->size()));
}

TensorPtr cross_entropy_loss(Tape& tape, const TensorPtr& logits, const std::vector<int>& labels) {
  return tape.softmax_cross_entropy(logits, labels);
}

TensorPtr he_normal_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  if (fan_in < 1) throw ConfigError("he_normal_init fan_in must be >= 1");
  auto t = Tensor::zeros(std::move(shape));
  const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t->data()) v = sigma * rng.next_normal();
  return t;
}

}  // namespace glonet
