#include "glonet/blocks.hpp"

#include "glonet/optimizer.hpp"

namespace glonet {

BatchNormLayer BatchNormLayer::init(std::size_t dim) {
  BatchNormLayer bn;
  bn.gamma = Tensor::full({dim}, 1.0);
  bn.beta = Tensor::zeros({dim});
  bn.gamma->set_requires_grad(true);
  bn.beta->set_requires_grad(true);
  bn.stats = RunningStats::init(dim);
  return bn;
}

DenseBlock DenseBlock::make(std::size_t d_in, std::size_t d_out, bool preactivation, bool with_bn,
                            Rng& rng) {
  DenseBlock b;
  b.weight = he_normal_init({d_in, d_out}, d_in, rng);
  b.weight->set_requires_grad(true);
  b.bias = Tensor::zeros({d_out});
  b.bias->set_requires_grad(true);
  b.preactivation = preactivation;
  if (with_bn) b.bn = BatchNormLayer::init(d_in);
  return b;
}

std::size_t DenseBlock::param_count() const {
  return weight->size() + bias->size() + (bn ? bn->param_count() : 0);
}

TensorPtr DenseBlock::apply(Tape& tape, const TensorPtr& x, Mode mode) {
  if (x->rank() != 2 || x->shape()[1] != in_dim()) {
    throw ShapeError("block expects width " + std::to_string(in_dim()) + ", got " + x->shape_str());
  }
  TensorPtr h = x;
  if (bn) h = bn->apply(tape, h, mode);
  if (preactivation) h = tape.relu(h);
  return tape.add(tape.matmul(h, weight), bias);
}

ResidualBlock ResidualBlock::make(std::size_t width, bool with_bn, Rng& rng) {
  return {DenseBlock::make(width, width, true, with_bn, rng),
          DenseBlock::make(width, width, true, with_bn, rng)};
}

Adapter Adapter::project(std::size_t d_in, std::size_t target, Rng& rng) {
  Adapter a;
  a.kind = Kind::Project;
  a.target = target;
  a.weight = he_normal_init({d_in, target}, d_in, rng);
  a.weight->set_requires_grad(true);
  return a;
}

Adapter Adapter::project_with(TensorPtr weight) {
  Adapter a;
  a.kind = Kind::Project;
  a.target = weight->shape()[1];
  a.weight = std::move(weight);
  a.weight->set_requires_grad(true);
  return a;
}

TensorPtr adapt_dimension(Tape& tape, const TensorPtr& x, const Adapter& adapter) {
  switch (adapter.kind) {
    case Adapter::Kind::Identity:
      return x;
    case Adapter::Kind::ZeroPad:
      if (x->rank() != 2 || x->shape()[1] > adapter.target) {
        throw ShapeError("zero-pad adapter cannot map " + x->shape_str() + " to width " +
                         std::to_string(adapter.target));
      }
      if (x->shape()[1] == adapter.target) return x;  // no-op
      return tape.pad_cols(x, adapter.target);
    case Adapter::Kind::Project:
      return tape.matmul(x, adapter.weight);
  }
  throw UsageError("unknown adapter kind");
}

GloNetLayer GloNetLayer::identity(std::size_t n_blocks) {
  GloNetLayer layer;
  layer.adapters.assign(n_blocks, Adapter::identity());
  return layer;
}

std::size_t GloNetLayer::param_count() const {
  std::size_t n = 0;
  for (const auto& a : adapters) n += a.param_count();
  return n;
}

TensorPtr glonet_aggregate(Tape& tape, const std::vector<TensorPtr>& outputs,
                           const GloNetLayer& layer) {
  if (outputs.empty()) throw UsageError("glonet_aggregate needs at least one block output");
  if (layer.adapters.size() != outputs.size()) {
    throw ShapeError("glonet_aggregate: " + std::to_string(layer.adapters.size()) +
                     " adapters for " + std::to_string(outputs.size()) + " block outputs");
  }
  TensorPtr acc = adapt_dimension(tape, outputs[0], layer.adapters[0]);
  for (std::size_t i = 1; i < outputs.size(); ++i) {
    TensorPtr term = adapt_dimension(tape, outputs[i], layer.adapters[i]);
    if (term->shape() != acc->shape()) {
      throw ShapeError("glonet_aggregate: adapted output " + std::to_string(i) + " has shape " +
                       term->shape_str() + ", expected " + acc->shape_str());
    }
    acc = tape.add(acc, term);
  }
  return acc;
}

Head Head::make(Kind kind, std::size_t d_in, std::size_t out, Rng& rng) {
  Head h;
  h.kind = kind;
  h.weight = he_normal_init({d_in, out}, d_in, rng);
  h.weight->set_requires_grad(true);
  h.bias = Tensor::zeros({out});
  h.bias->set_requires_grad(true);
  return h;
}

TensorPtr Head::logits(Tape& tape, const TensorPtr& x) const {
  if (x->rank() != 2 || x->shape()[1] != in_dim()) {
    throw ShapeError("head expects width " + std::to_string(in_dim()) + ", got " + x->shape_str());
  }
  return tape.add(tape.matmul(x, weight), bias);
}

TensorPtr Head::apply(Tape& tape, const TensorPtr& x) const {
  auto z = logits(tape, x);
  return kind == Kind::Classification ? tape.softmax(z) : z;
}

}  // namespace glonet
