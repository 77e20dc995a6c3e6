#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "glonet/tensor.hpp"

namespace glonet {

enum class Mode { Train, Eval };

/// Per-feature running statistics kept by a batch normalization layer.
struct RunningStats {
  std::vector<double> mean;
  std::vector<double> var;

  static RunningStats init(std::size_t dim) { return {std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)}; }
};

/// Records a forward pass as a flat node list (topological by construction)
/// and replays it in reverse for backpropagation. Rebuilt per forward pass.
///
/// Gradient contract: each backward() sweep propagates a fresh adjoint of 1
/// from the loss and *adds* the result into the persistent grad buffer of
/// every requires_grad tensor it reaches, so two sweeps without zero_grad
/// accumulate. Tensors not reachable from the loss are left untouched.
class Tape {
 public:
  explicit Tape(bool recording = true, bool check_numerics = true)
      : recording_(recording), check_numerics_(check_numerics) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// C[m x n] = A[m x k] * B[k x n]
  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  /// Elementwise sum; the one permitted broadcast is a rank-1 bias row added
  /// to every row of a rank-2 batch.
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr scale(const TensorPtr& a, double c);
  TensorPtr relu(const TensorPtr& x);
  /// Sum of all elements, as a scalar.
  TensorPtr sum(const TensorPtr& x);
  /// Appends zero columns up to `target` width.
  TensorPtr pad_cols(const TensorPtr& x, std::size_t target);
  /// Row-wise softmax, numerically stabilized by max subtraction.
  TensorPtr softmax(const TensorPtr& logits);
  /// Mean negative log-likelihood over the batch, fused with log-softmax.
  TensorPtr softmax_cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);
  /// Batch normalization. Train mode normalizes by batch statistics and
  /// updates `stats` with momentum; eval mode normalizes by `stats`.
  TensorPtr batchnorm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                      RunningStats& stats, double eps, double momentum, Mode mode);

  /// Reverse sweep from a scalar loss recorded on this tape.
  void backward(const TensorPtr& loss);

  std::size_t num_nodes() const { return nodes_.size(); }
  bool recording() const { return recording_; }
  void clear();

 private:
  struct Node {
    const char* kind;
    TensorPtr output;
    std::function<void(Tape&, const std::vector<double>&)> pull;
  };

  TensorPtr make_output(const char* kind, std::vector<std::size_t> shape);
  void record(const char* kind, const TensorPtr& output,
              std::function<void(Tape&, const std::vector<double>&)> pull);
  void finish(const char* kind, const TensorPtr& output);

  /// Buffer the pull functions accumulate into: a per-pass adjoint for
  /// tensors produced by this tape, the persistent grad for requires_grad
  /// leaves, nullptr for anything else (plain data inputs).
  std::vector<double>* sink(const TensorPtr& t);

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> adjoints_;
  bool recording_;
  bool check_numerics_;
};

}  // namespace glonet
