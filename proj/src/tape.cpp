#include "glonet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace glonet {

namespace {

void require_rank2(const TensorPtr& t, const char* op) {
  if (t->rank() != 2) {
    throw ShapeError(std::string(op) + " requires a rank-2 tensor, got " + t->shape_str());
  }
}

/// dC[m x n], B[k x n] -> dA[m x k] += dC * B^T
void accumulate_matmul_da(const std::vector<double>& dc, const std::vector<double>& b,
                          std::size_t m, std::size_t k, std::size_t n, std::vector<double>& da) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* dci = dc.data() + i * n;
    double* dai = da.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b.data() + p * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += dci[j] * bp[j];
      dai[p] += s;
    }
  }
}

/// A[m x k], dC[m x n] -> dB[k x n] += A^T * dC
void accumulate_matmul_db(const std::vector<double>& a, const std::vector<double>& dc,
                          std::size_t m, std::size_t k, std::size_t n, std::vector<double>& db) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a.data() + i * k;
    const double* dci = dc.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      double* dbp = db.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) dbp[j] += aip * dci[j];
    }
  }
}

}  // namespace

TensorPtr Tape::make_output(const char*, std::vector<std::size_t> shape) {
  return std::make_shared<Tensor>(std::move(shape));
}

void Tape::finish(const char* kind, const TensorPtr& output) {
  if (check_numerics_) output->check_finite(kind);
}

void Tape::record(const char* kind, const TensorPtr& output,
                  std::function<void(Tape&, const std::vector<double>&)> pull) {
  if (!recording_) return;
  output->set_node(this, static_cast<int>(nodes_.size()));
  nodes_.push_back({kind, output, std::move(pull)});
}

std::vector<double>* Tape::sink(const TensorPtr& t) {
  if (t->tape_tag() == this) {
    auto& adj = adjoints_[static_cast<std::size_t>(t->node_id())];
    if (adj.empty()) adj.assign(t->size(), 0.0);
    return &adj;
  }
  if (t->requires_grad()) {
    auto& g = t->grad();
    return &g;
  }
  return nullptr;
}

void Tape::clear() {
  nodes_.clear();
  adjoints_.clear();
}

void Tape::backward(const TensorPtr& loss) {
  if (!recording_) throw UsageError("backward on a non-recording tape");
  if (!loss->is_scalar()) {
    throw UsageError("backward requires a scalar loss, got shape " + loss->shape_str());
  }
  if (loss->tape_tag() != this) {
    throw UsageError("loss was not recorded on this tape");
  }
  adjoints_.assign(nodes_.size(), {});
  adjoints_[static_cast<std::size_t>(loss->node_id())] = {1.0};
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    const auto& adj = adjoints_[i];
    if (adj.empty()) continue;  // not on a path from the loss
    nodes_[i].pull(*this, adj);
  }
  adjoints_.clear();
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a->shape()[1] != b->shape()[0]) {
    throw ShapeError("matmul inner dimensions disagree: " + a->shape_str() + " vs " + b->shape_str());
  }
  const std::size_t m = a->shape()[0], k = a->shape()[1], n = b->shape()[1];
  auto out = make_output("matmul", {m, n});
  {
    const double* pa = a->data().data();
    const double* pb = b->data().data();
    double* pc = out->data().data();
    for (std::size_t i = 0; i < m; ++i) {
      const double* ai = pa + i * k;
      double* ci = pc + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = ai[p];
        const double* bp = pb + p * n;
        for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
      }
    }
  }
  finish("matmul", out);
  record("matmul", out, [a, b, m, k, n](Tape& tape, const std::vector<double>& dout) {
    if (auto* da = tape.sink(a)) accumulate_matmul_da(dout, b->data(), m, k, n, *da);
    if (auto* db = tape.sink(b)) accumulate_matmul_db(a->data(), dout, m, k, n, *db);
  });
  return out;
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
  const bool same = a->shape() == b->shape();
  const bool bias_row = !same && a->rank() == 2 && b->rank() == 1 && b->size() == a->shape()[1];
  if (!same && !bias_row) {
    throw ShapeError("add shapes disagree: " + a->shape_str() + " vs " + b->shape_str() +
                     " (only a rank-1 bias row may broadcast over the batch)");
  }
  auto out = make_output("add", a->shape());
  const std::size_t n = a->size();
  if (same) {
    for (std::size_t i = 0; i < n; ++i) out->at(i) = a->at(i) + b->at(i);
  } else {
    const std::size_t cols = b->size();
    for (std::size_t i = 0; i < n; ++i) out->at(i) = a->at(i) + b->at(i % cols);
  }
  finish("add", out);
  record("add", out, [a, b, same](Tape& tape, const std::vector<double>& dout) {
    if (auto* da = tape.sink(a)) {
      for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i];
    }
    if (auto* db = tape.sink(b)) {
      if (same) {
        for (std::size_t i = 0; i < dout.size(); ++i) (*db)[i] += dout[i];
      } else {
        const std::size_t cols = b->size();
        for (std::size_t i = 0; i < dout.size(); ++i) (*db)[i % cols] += dout[i];
      }
    }
  });
  return out;
}

TensorPtr Tape::sub(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape() != b->shape()) {
    throw ShapeError("sub shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
  }
  auto out = make_output("sub", a->shape());
  for (std::size_t i = 0; i < a->size(); ++i) out->at(i) = a->at(i) - b->at(i);
  finish("sub", out);
  record("sub", out, [a, b](Tape& tape, const std::vector<double>& dout) {
    if (auto* da = tape.sink(a)) {
      for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i];
    }
    if (auto* db = tape.sink(b)) {
      for (std::size_t i = 0; i < dout.size(); ++i) (*db)[i] -= dout[i];
    }
  });
  return out;
}

TensorPtr Tape::mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape() != b->shape()) {
    throw ShapeError("mul shapes disagree: " + a->shape_str() + " vs " + b->shape_str());
  }
  auto out = make_output("mul", a->shape());
  for (std::size_t i = 0; i < a->size(); ++i) out->at(i) = a->at(i) * b->at(i);
  finish("mul", out);
  record("mul", out, [a, b](Tape& tape, const std::vector<double>& dout) {
    if (auto* da = tape.sink(a)) {
      for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i] * b->at(i);
    }
    if (auto* db = tape.sink(b)) {
      for (std::size_t i = 0; i < dout.size(); ++i) (*db)[i] += dout[i] * a->at(i);
    }
  });
  return out;
}

TensorPtr Tape::scale(const TensorPtr& a, double c) {
  auto out = make_output("scale", a->shape());
  for (std::size_t i = 0; i < a->size(); ++i) out->at(i) = a->at(i) * c;
  finish("scale", out);
  record("scale", out, [a, c](Tape& tape, const std::vector<double>& dout) {
    if (auto* da = tape.sink(a)) {
      for (std::size_t i = 0; i < dout.size(); ++i) (*da)[i] += dout[i] * c;
    }
  });
  return out;
}

TensorPtr Tape::relu(const TensorPtr& x) {
  auto out = make_output("relu", x->shape());
  for (std::size_t i = 0; i < x->size(); ++i) out->at(i) = x->at(i) > 0.0 ? x->at(i) : 0.0;
  finish("relu", out);
  // subgradient at exactly 0 is 0
  record("relu", out, [x](Tape& tape, const std::vector<double>& dout) {
    if (auto* dx = tape.sink(x)) {
      for (std::size_t i = 0; i < dout.size(); ++i) {
        if (x->at(i) > 0.0) (*dx)[i] += dout[i];
      }
    }
  });
  return out;
}

TensorPtr Tape::sum(const TensorPtr& x) {
  auto out = make_output("sum", {1});
  double s = 0.0;
  for (double v : x->data()) s += v;
  out->at(0) = s;
  finish("sum", out);
  record("sum", out, [x](Tape& tape, const std::vector<double>& dout) {
    if (auto* dx = tape.sink(x)) {
      for (std::size_t i = 0; i < dx->size(); ++i) (*dx)[i] += dout[0];
    }
  });
  return out;
}

TensorPtr Tape::pad_cols(const TensorPtr& x, std::size_t target) {
  require_rank2(x, "pad_cols");
  const std::size_t m = x->shape()[0], d = x->shape()[1];
  if (d > target) {
    throw ShapeError("pad_cols cannot shrink " + x->shape_str() + " to " + std::to_string(target) +
                     " columns");
  }
  auto out = make_output("pad_cols", {m, target});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < d; ++j) out->at(i, j) = x->at(i, j);
  }
  finish("pad_cols", out);
  record("pad_cols", out, [x, m, d, target](Tape& tape, const std::vector<double>& dout) {
    if (auto* dx = tape.sink(x)) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) (*dx)[i * d + j] += dout[i * target + j];
      }
    }
  });
  return out;
}

TensorPtr Tape::softmax(const TensorPtr& logits) {
  require_rank2(logits, "softmax");
  const std::size_t m = logits->shape()[0], c = logits->shape()[1];
  auto out = make_output("softmax", {m, c});
  for (std::size_t i = 0; i < m; ++i) {
    const double* zi = logits->data().data() + i * c;
    double* yi = out->data().data() + i * c;
    double zmax = zi[0];
    for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, zi[j]);
    double norm = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      yi[j] = std::exp(zi[j] - zmax);
      norm += yi[j];
    }
    for (std::size_t j = 0; j < c; ++j) yi[j] /= norm;
  }
  finish("softmax", out);
  record("softmax", out, [logits, out, m, c](Tape& tape, const std::vector<double>& dout) {
    if (auto* dz = tape.sink(logits)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double* yi = out->data().data() + i * c;
        const double* di = dout.data() + i * c;
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) dot += di[j] * yi[j];
        for (std::size_t j = 0; j < c; ++j) (*dz)[i * c + j] += yi[j] * (di[j] - dot);
      }
    }
  });
  return out;
}

TensorPtr Tape::softmax_cross_entropy(const TensorPtr& logits, const std::vector<int>& labels) {
  require_rank2(logits, "softmax_cross_entropy");
  const std::size_t m = logits->shape()[0], c = logits->shape()[1];
  if (labels.size() != m) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(m) + " rows");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DataError("label " + std::to_string(labels[i]) + " out of range [0, " +
                      std::to_string(c) + ") at row " + std::to_string(i));
    }
  }
  // probs are saved for the backward pass
  auto probs = std::make_shared<Tensor>(std::vector<std::size_t>{m, c});
  auto out = make_output("softmax_cross_entropy", {1});
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double* zi = logits->data().data() + i * c;
    double* pi = probs->data().data() + i * c;
    double zmax = zi[0];
    for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, zi[j]);
    double norm = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      pi[j] = std::exp(zi[j] - zmax);
      norm += pi[j];
    }
    for (std::size_t j = 0; j < c; ++j) pi[j] /= norm;
    total += std::log(norm) + zmax - zi[labels[i]];
  }
  out->at(0) = total / static_cast<double>(m);
  finish("softmax_cross_entropy", out);
  record("softmax_cross_entropy", out,
         [logits, probs, labels, m, c](Tape& tape, const std::vector<double>& dout) {
           if (auto* dz = tape.sink(logits)) {
             const double w = dout[0] / static_cast<double>(m);
             for (std::size_t i = 0; i < m; ++i) {
               const double* pi = probs->data().data() + i * c;
               for (std::size_t j = 0; j < c; ++j) {
                 const double onehot = (static_cast<std::size_t>(labels[i]) == j) ? 1.0 : 0.0;
                 (*dz)[i * c + j] += w * (pi[j] - onehot);
               }
             }
           }
         });
  return out;
}

TensorPtr Tape::batchnorm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                          RunningStats& stats, double eps, double momentum, Mode mode) {
  require_rank2(x, "batchnorm");
  if (eps <= 0.0) throw ConfigError("batchnorm eps must be positive, got " + std::to_string(eps));
  const std::size_t b = x->shape()[0], d = x->shape()[1];
  if (gamma->size() != d || beta->size() != d) {
    throw ShapeError("batchnorm gamma/beta " + gamma->shape_str() + "/" + beta->shape_str() +
                     " do not match feature width " + std::to_string(d));
  }
  if (stats.mean.size() != d || stats.var.size() != d) {
    throw ShapeError("batchnorm running stats do not match feature width " + std::to_string(d));
  }
  if (mode == Mode::Train && b < 2) {
    throw ShapeError("batchnorm: degenerate batch of " + std::to_string(b) +
                     " rows in train mode (need >= 2)");
  }

  auto xhat = std::make_shared<Tensor>(std::vector<std::size_t>{b, d});
  std::vector<double> inv_std(d);
  if (mode == Mode::Train) {
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (std::size_t i = 0; i < b; ++i) {
      const double* xi = x->data().data() + i * d;
      for (std::size_t j = 0; j < d; ++j) mean[j] += xi[j];
    }
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
      const double* xi = x->data().data() + i * d;
      for (std::size_t j = 0; j < d; ++j) {
        const double dv = xi[j] - mean[j];
        var[j] += dv * dv;
      }
    }
    for (std::size_t j = 0; j < d; ++j) var[j] /= static_cast<double>(b);
    for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + eps);
    for (std::size_t i = 0; i < b; ++i) {
      const double* xi = x->data().data() + i * d;
      double* hi = xhat->data().data() + i * d;
      for (std::size_t j = 0; j < d; ++j) hi[j] = (xi[j] - mean[j]) * inv_std[j];
    }
    // running stats keep the unbiased variance
    const double unbias = static_cast<double>(b) / static_cast<double>(b - 1);
    for (std::size_t j = 0; j < d; ++j) {
      stats.mean[j] = momentum * stats.mean[j] + (1.0 - momentum) * mean[j];
      stats.var[j] = momentum * stats.var[j] + (1.0 - momentum) * var[j] * unbias;
    }
  } else {
    for (std::size_t j = 0; j < d; ++j) inv_std[j] = 1.0 / std::sqrt(stats.var[j] + eps);
    for (std::size_t i = 0; i < b; ++i) {
      const double* xi = x->data().data() + i * d;
      double* hi = xhat->data().data() + i * d;
      for (std::size_t j = 0; j < d; ++j) hi[j] = (xi[j] - stats.mean[j]) * inv_std[j];
    }
  }

  auto out = make_output("batchnorm", {b, d});
  for (std::size_t i = 0; i < b; ++i) {
    const double* hi = xhat->data().data() + i * d;
    double* yi = out->data().data() + i * d;
    for (std::size_t j = 0; j < d; ++j) yi[j] = gamma->at(j) * hi[j] + beta->at(j);
  }
  finish("batchnorm", out);

  record("batchnorm", out,
         [x, gamma, beta, xhat, inv_std, b, d, mode](Tape& tape, const std::vector<double>& dout) {
           auto* dgamma = tape.sink(gamma);
           auto* dbeta = tape.sink(beta);
           if (dgamma || dbeta) {
             for (std::size_t i = 0; i < b; ++i) {
               const double* hi = xhat->data().data() + i * d;
               const double* di = dout.data() + i * d;
               for (std::size_t j = 0; j < d; ++j) {
                 if (dgamma) (*dgamma)[j] += di[j] * hi[j];
                 if (dbeta) (*dbeta)[j] += di[j];
               }
             }
           }
           if (auto* dx = tape.sink(x)) {
             if (mode == Mode::Train) {
               // dx = gamma*inv_std * (dy - mean(dy) - xhat * mean(dy*xhat)), means over the batch
               std::vector<double> mean_dy(d, 0.0), mean_dyh(d, 0.0);
               for (std::size_t i = 0; i < b; ++i) {
                 const double* hi = xhat->data().data() + i * d;
                 const double* di = dout.data() + i * d;
                 for (std::size_t j = 0; j < d; ++j) {
                   mean_dy[j] += di[j];
                   mean_dyh[j] += di[j] * hi[j];
                 }
               }
               for (std::size_t j = 0; j < d; ++j) {
                 mean_dy[j] /= static_cast<double>(b);
                 mean_dyh[j] /= static_cast<double>(b);
               }
               for (std::size_t i = 0; i < b; ++i) {
                 const double* hi = xhat->data().data() + i * d;
                 const double* di = dout.data() + i * d;
                 for (std::size_t j = 0; j < d; ++j) {
                   (*dx)[i * d + j] +=
                       gamma->at(j) * inv_std[j] * (di[j] - mean_dy[j] - hi[j] * mean_dyh[j]);
                 }
               }
             } else {
               // running statistics are constants in eval mode
               for (std::size_t i = 0; i < b; ++i) {
                 const double* di = dout.data() + i * d;
                 for (std::size_t j = 0; j < d; ++j) {
                   (*dx)[i * d + j] += di[j] * gamma->at(j) * inv_std[j];
                 }
               }
             }
           }
         });
  return out;
}

}  // namespace glonet
