#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "glonet/errors.hpp"

namespace glonet {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major f64 tensor with an optional gradient buffer.
/// Rank 1 and 2 cover everything a fully connected net needs; higher ranks
/// are allowed but nothing produces them.
class Tensor {
 public:
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static TensorPtr zeros(std::vector<std::size_t> shape);
  static TensorPtr full(std::vector<std::size_t> shape, double value);
  static TensorPtr scalar(double value);
  static TensorPtr matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  static TensorPtr row(std::vector<double> data);  // shape [d]

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rank() const { return shape_.size(); }
  bool is_scalar() const { return data_.size() == 1; }

  /// Rows/cols of a rank-2 tensor; a rank-1 tensor is treated as a single row.
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : shape_.empty() ? 1 : shape_[0]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double value() const;  // scalar contents

  double& at(std::size_t i) { return data_[i]; }
  double at(std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool v) { requires_grad_ = v; }

  /// Set by the tape that produced this tensor; backward propagates through
  /// such tensors even when requires_grad is false.
  bool op_output() const { return tape_tag_ != nullptr; }
  void set_node(const void* tape, int id) {
    tape_tag_ = tape;
    node_id_ = id;
  }
  const void* tape_tag() const { return tape_tag_; }
  int node_id() const { return node_id_; }

  bool has_grad() const { return !grad_.empty(); }
  std::vector<double>& grad();              // allocates zeros on first use
  const std::vector<double>& grad() const;  // throws if absent
  void zero_grad() { grad_.assign(grad_.size(), 0.0); }
  void drop_grad() { grad_.clear(); }

  /// Throws NumericError naming `what` if any element is NaN/Inf.
  void check_finite(const std::string& what) const;

  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
  const void* tape_tag_ = nullptr;
  int node_id_ = -1;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace glonet
