#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "glonet/rng.hpp"
#include "glonet/tape.hpp"

namespace glonet {

/// Trainable batch normalization layer plus its running statistics.
struct BatchNormLayer {
  TensorPtr gamma;  // [d]
  TensorPtr beta;   // [d]
  RunningStats stats;
  double eps = 1e-5;
  double momentum = 0.99;

  static BatchNormLayer init(std::size_t dim);
  TensorPtr apply(Tape& tape, const TensorPtr& x, Mode mode) {
    return tape.batchnorm(x, gamma, beta, stats, eps, momentum, mode);
  }
  std::size_t param_count() const { return gamma->size() + beta->size(); }
};

/// Simple block: optional BN, optional leading ReLU, then an affine map.
/// With preactivation the affine map comes last, so a block whose weight and
/// bias are zero outputs exactly zero regardless of its input. The first
/// layer of every model is the preactivation=false case (a plain affine map).
struct DenseBlock {
  TensorPtr weight;  // [d_in x d_out]
  TensorPtr bias;    // [d_out]
  bool preactivation = true;
  std::optional<BatchNormLayer> bn;

  static DenseBlock make(std::size_t d_in, std::size_t d_out, bool preactivation, bool with_bn,
                         Rng& rng);

  std::size_t in_dim() const { return weight->shape()[0]; }
  std::size_t out_dim() const { return weight->shape()[1]; }
  std::size_t param_count() const;
  TensorPtr apply(Tape& tape, const TensorPtr& x, Mode mode);
};

/// Identity skip around two simple sub-units of equal width.
struct ResidualBlock {
  DenseBlock unit1;
  DenseBlock unit2;

  static ResidualBlock make(std::size_t width, bool with_bn, Rng& rng);

  std::size_t width() const { return unit1.in_dim(); }
  std::size_t param_count() const { return unit1.param_count() + unit2.param_count(); }
  TensorPtr residual(Tape& tape, const TensorPtr& x, Mode mode) {
    return unit2.apply(tape, unit1.apply(tape, x, mode), mode);
  }
  TensorPtr apply(Tape& tape, const TensorPtr& x, Mode mode) {
    return tape.add(x, residual(tape, x, mode));
  }
};

/// Maps one block output to the aggregation width.
struct Adapter {
  enum class Kind { Identity, ZeroPad, Project };

  Kind kind = Kind::Identity;
  std::size_t target = 0;  // ZeroPad/Project output width
  TensorPtr weight;        // Project only, [d_in x target], trainable

  static Adapter identity() { return {}; }
  static Adapter zero_pad(std::size_t target) { return {Kind::ZeroPad, target, nullptr}; }
  static Adapter project(std::size_t d_in, std::size_t target, Rng& rng);
  /// Projection with caller-supplied weight (e.g. identity-initialized).
  static Adapter project_with(TensorPtr weight);

  std::size_t param_count() const { return kind == Kind::Project ? weight->size() : 0; }
};

TensorPtr adapt_dimension(Tape& tape, const TensorPtr& x, const Adapter& adapter);

/// The aggregation layer: one adapter per block output, summed into the head
/// input. All-identity adapters contribute zero trainable parameters.
struct GloNetLayer {
  std::vector<Adapter> adapters;

  static GloNetLayer identity(std::size_t n_blocks);
  std::size_t param_count() const;
};

/// Exact elementwise sum of adapted block outputs. Backward hands the head
/// gradient to every summand directly.
TensorPtr glonet_aggregate(Tape& tape, const std::vector<TensorPtr>& outputs,
                           const GloNetLayer& layer);

/// Task head: a dense map to 1 unit (regression) or to n_classes followed by
/// a row-wise softmax (classification).
struct Head {
  enum class Kind { Regression, Classification };

  Kind kind = Kind::Regression;
  TensorPtr weight;  // [d x out]
  TensorPtr bias;    // [out]

  static Head make(Kind kind, std::size_t d_in, std::size_t out, Rng& rng);

  std::size_t in_dim() const { return weight->shape()[0]; }
  std::size_t out_dim() const { return weight->shape()[1]; }
  std::size_t param_count() const { return weight->size() + bias->size(); }

  TensorPtr logits(Tape& tape, const TensorPtr& x) const;
  /// Regression: the affine output. Classification: softmax of the logits.
  TensorPtr apply(Tape& tape, const TensorPtr& x) const;
};

}  // namespace glonet
