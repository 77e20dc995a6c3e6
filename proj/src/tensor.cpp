#include "glonet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace glonet {

namespace {
std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
    n *= d;
  }
  return n;
}
}  // namespace

std::string shape_to_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_to_string(shape_));
  }
}

TensorPtr Tensor::zeros(std::vector<std::size_t> shape) {
  return std::make_shared<Tensor>(std::move(shape));
}

TensorPtr Tensor::full(std::vector<std::size_t> shape, double value) {
  auto t = std::make_shared<Tensor>(std::move(shape));
  t->data_.assign(t->data_.size(), value);
  return t;
}

TensorPtr Tensor::scalar(double value) {
  return std::make_shared<Tensor>(std::vector<std::size_t>{1}, std::vector<double>{value});
}

TensorPtr Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data) {
  return std::make_shared<Tensor>(std::vector<std::size_t>{rows, cols}, std::move(data));
}

TensorPtr Tensor::row(std::vector<double> data) {
  return std::make_shared<Tensor>(std::vector<std::size_t>{data.size()}, std::move(data));
}

double Tensor::value() const {
  if (!is_scalar()) throw UsageError("value() requires a scalar tensor, shape is " + shape_str());
  return data_[0];
}

std::vector<double>& Tensor::grad() {
  if (grad_.empty()) grad_.assign(data_.size(), 0.0);
  return grad_;
}

const std::vector<double>& Tensor::grad() const {
  if (grad_.empty()) throw UsageError("tensor has no gradient; run backward first");
  return grad_;
}

void Tensor::check_finite(const std::string& what) const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in " + what + " (shape " + shape_str() + ")");
    }
  }
}

std::string Tensor::shape_str() const { return shape_to_string(shape_); }

}  // namespace glonet
