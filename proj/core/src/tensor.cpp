#include "deepgroup/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_set>

#include <Eigen/Core>

namespace deepgroup {

using detail::Node;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* arg) {
  require(t.defined(), std::string(op) + ": undefined " + arg);
  require(t.rank() == rank, std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) + ", got " + shape_string(t.shape()));
}

}  // namespace

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s + "]";
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = element_count(shape);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value.assign(n, 0.0);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  require(element_count(shape) == values.size(),
          "tensor: " + std::to_string(values.size()) + " values do not fill shape " + shape_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value.assign(values.begin(), values.end());
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double v, bool requires_grad) { return from({}, {v}, requires_grad); }

double Tensor::item() const {
  require(size() == 1, "item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  require(rank() == 2 && r < dim(0) && c < dim(1), "at(r, c) out of bounds for " + shape_string(shape()));
  return node_->value[r * dim(1) + c];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::make_result(Shape shape, Buffer values, std::vector<Tensor> parents,
                           std::function<void(Node&)> backward) {
  if (element_count(shape) != values.size())
    throw ShapeError("tensor: " + std::to_string(values.size()) + " values do not fill shape " + shape_string(shape));
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  Tensor out(std::move(node));
  const bool needs = std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (needs) {
    out.node_->requires_grad = true;
    for (auto& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward = std::move(backward);
  }
  return out;
}

void Tensor::backward() {
  require(size() == 1, "backward() needs a single-element tensor, got " + shape_string(shape()));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; reversed it is a topological order from the root.
  // `order` owns the nodes so releasing graph links below cannot free them early.
  std::vector<std::shared_ptr<Node>> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<std::shared_ptr<Node>, std::size_t>> stack{{node_, 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const auto& parent = node->parents[next++];
      if (parent->requires_grad && visited.insert(parent.get()).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(std::move(node));
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node& node = **it;
    if (!node.backward) continue;
    node.backward(node);
    node.backward = nullptr;
    node.parents.clear();
  }
}

Tensor linear(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "linear", "input");
  require_rank(weight, 2, "linear", "weight");
  require_rank(bias, 1, "linear", "bias");
  const auto batch = input.dim(0), p = input.dim(1), q = weight.dim(0);
  require(weight.dim(1) == p, "linear: input " + shape_string(input.shape()) + " incompatible with weight " + shape_string(weight.shape()));
  require(bias.dim(0) == q, "linear: bias " + shape_string(bias.shape()) + " does not match weight " + shape_string(weight.shape()));

  Buffer out(batch * q);
  {
    ConstMatrixMap x(input.values().data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(p));
    ConstMatrixMap w(weight.values().data(), static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(p));
    ConstVectorMap b(bias.values().data(), static_cast<Eigen::Index>(q));
    MatrixMap y(out.data(), static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(q));
    y.noalias() = x * w.transpose();
    y.rowwise() += b.transpose();
  }
  return Tensor::make_result({batch, q}, std::move(out), {input, weight, bias}, [batch, p, q](Node& self) {
    Node& x = *self.parents[0];
    Node& w = *self.parents[1];
    Node& b = *self.parents[2];
    const auto B = static_cast<Eigen::Index>(batch), P = static_cast<Eigen::Index>(p), Q = static_cast<Eigen::Index>(q);
    ConstMatrixMap dy(self.grad.data(), B, Q);
    if (x.requires_grad) MatrixMap(x.grad_buffer().data(), B, P).noalias() += dy * ConstMatrixMap(w.value.data(), Q, P);
    if (w.requires_grad) MatrixMap(w.grad_buffer().data(), Q, P).noalias() += dy.transpose() * ConstMatrixMap(x.value.data(), B, P);
    if (b.requires_grad) VectorMap(b.grad_buffer().data(), Q) += dy.colwise().sum().transpose();
  });
}

Tensor relu(const Tensor& input) {
  require(input.defined(), "relu: undefined input");
  Buffer out(input.values().begin(), input.values().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return Tensor::make_result(input.shape(), std::move(out), {input}, [](Node& self) {
    Node& x = *self.parents[0];
    auto& g = x.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x.value[i] > 0.0) g[i] += self.grad[i];
  });
}

Tensor sigmoid(const Tensor& input) {
  require(input.defined(), "sigmoid: undefined input");
  Buffer out(input.size());
  const auto in = input.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = in[i];
    if (x >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  return Tensor::make_result(input.shape(), std::move(out), {input}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * self.value[i] * (1.0 - self.value[i]);
  });
}

Tensor bce_loss(const Tensor& predictions, const Tensor& targets) {
  require(predictions.defined() && targets.defined(), "bce_loss: undefined input");
  require(predictions.shape() == targets.shape(),
          "bce_loss: predictions " + shape_string(predictions.shape()) + " vs targets " + shape_string(targets.shape()));
  require(predictions.size() > 0, "bce_loss: empty input");
  const auto p = predictions.values();
  const auto y = targets.values();
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (y[i] != 0.0 && y[i] != 1.0) throw std::invalid_argument("bce_loss: target " + std::to_string(y[i]) + " not in {0, 1}");
    const double c = std::clamp(p[i], kBceEpsilon, 1.0 - kBceEpsilon);
    total -= y[i] == 1.0 ? std::log(c) : std::log(1.0 - c);
  }
  const double n = static_cast<double>(p.size());
  return Tensor::make_result({}, {total / n}, {predictions, targets}, [n](Node& self) {
    Node& pred = *self.parents[0];
    const Node& tgt = *self.parents[1];
    if (!pred.requires_grad) return;
    auto& g = pred.grad_buffer();
    const double scale = self.grad[0] / n;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = pred.value[i];
      if (v < kBceEpsilon || v > 1.0 - kBceEpsilon) continue;  // clamped: flat
      g[i] += scale * (tgt.value[i] == 1.0 ? -1.0 / v : 1.0 / (1.0 - v));
    }
  });
}

Tensor dropout(const Tensor& input, double keep_prob, bool training, Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw std::invalid_argument("dropout: keep_prob must lie in (0, 1]");
  if (!training || keep_prob == 1.0) return input;
  const double scale = 1.0 / keep_prob;
  // Keep when a raw 64-bit draw falls below keep_prob * 2^64.
  const auto threshold = static_cast<std::uint64_t>(std::ldexp(keep_prob, 64));
  // One engine draw seeds a splitmix64 stream for the whole mask.
  const std::uint64_t base = rng();
  std::vector<double> mask(input.size());
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mix_seed(base + i * 0x9e3779b97f4a7c15ULL) < threshold ? scale : 0.0;
  Buffer out(input.size());
  const auto in = input.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] * mask[i];
  return Tensor::make_result(input.shape(), std::move(out), {input}, [mask = std::move(mask)](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

namespace {

// Reduces rows `ids` of a row-major [* x d] buffer into `out[0..d)`. For
// non-mean ops, `source` records the contributing row per column.
void reduce_rows(const double* table, std::size_t d, std::span<const int> ids, ReduceOp op, double* out, int* source,
                 std::vector<std::pair<double, int>>& scratch) {
  const std::size_t k = ids.size();
  switch (op) {
    case ReduceOp::Mean:
      for (std::size_t c = 0; c < d; ++c) out[c] = 0.0;
      for (const int r : ids) {
        const double* row = table + static_cast<std::size_t>(r) * d;
        for (std::size_t c = 0; c < d; ++c) out[c] += row[c];
      }
      for (std::size_t c = 0; c < d; ++c) out[c] /= static_cast<double>(k);
      return;
    case ReduceOp::Max:
    case ReduceOp::Min: {
      const bool is_max = op == ReduceOp::Max;
      for (std::size_t c = 0; c < d; ++c) {
        out[c] = table[static_cast<std::size_t>(ids[0]) * d + c];
        source[c] = ids[0];
      }
      for (std::size_t i = 1; i < k; ++i) {
        const double* row = table + static_cast<std::size_t>(ids[i]) * d;
        for (std::size_t c = 0; c < d; ++c) {
          if (is_max ? row[c] > out[c] : row[c] < out[c]) {
            out[c] = row[c];
            source[c] = ids[i];
          }
        }
      }
      return;
    }
    case ReduceOp::Median: {
      const std::size_t pick = (k - 1) / 2;
      for (std::size_t c = 0; c < d; ++c) {
        scratch.clear();
        for (std::size_t i = 0; i < k; ++i) scratch.emplace_back(table[static_cast<std::size_t>(ids[i]) * d + c], static_cast<int>(i));
        std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(pick), scratch.end());
        out[c] = scratch[pick].first;
        source[c] = ids[static_cast<std::size_t>(scratch[pick].second)];
      }
      return;
    }
  }
}

Tensor reduce_impl(const Tensor& table, Segments segments, ReduceOp op, Shape out_shape) {
  const std::size_t n = table.dim(0), d = table.dim(1), batch = segments.size();
  require(!segments.offsets.empty() && segments.offsets.front() == 0 && segments.offsets.back() == segments.ids.size(),
          "reduce: malformed segments");
  for (std::size_t b = 0; b < batch; ++b) require(segments.offsets[b + 1] > segments.offsets[b], "reduce: empty row set");
  for (const int r : segments.ids)
    if (r < 0 || static_cast<std::size_t>(r) >= n) throw ShapeError("reduce: row index " + std::to_string(r) + " out of range");
  Buffer out(batch * d);
  std::vector<int> source(op == ReduceOp::Mean ? 0 : batch * d);
  std::vector<std::pair<double, int>> scratch;
  const double* data = table.values().data();
  for (std::size_t b = 0; b < batch; ++b)
    reduce_rows(data, d, segments[b], op, out.data() + b * d, source.empty() ? nullptr : source.data() + b * d, scratch);

  return Tensor::make_result(std::move(out_shape), std::move(out), {table},
                             [segments = std::move(segments), source = std::move(source), op, d](Node& self) {
                               auto& g = self.parents[0]->grad_buffer();
                               for (std::size_t b = 0; b < segments.size(); ++b) {
                                 const double* up = self.grad.data() + b * d;
                                 if (op == ReduceOp::Mean) {
                                   const auto seg = segments[b];
                                   const double inv = 1.0 / static_cast<double>(seg.size());
                                   for (const int r : seg) {
                                     double* row = g.data() + static_cast<std::size_t>(r) * d;
                                     for (std::size_t c = 0; c < d; ++c) row[c] += up[c] * inv;
                                   }
                                 } else {
                                   const int* src = source.data() + b * d;
                                   for (std::size_t c = 0; c < d; ++c) g[static_cast<std::size_t>(src[c]) * d + c] += up[c];
                                 }
                               }
                             });
}

}  // namespace

Tensor elementwise_reduce(const Tensor& rows, ReduceOp op) {
  require_rank(rows, 2, "elementwise_reduce", "rows");
  require(rows.dim(0) >= 1, "elementwise_reduce: empty input");
  Segments all;
  all.ids.resize(rows.dim(0));
  std::iota(all.ids.begin(), all.ids.end(), 0);
  all.offsets.push_back(all.ids.size());
  return reduce_impl(rows, std::move(all), op, {rows.dim(1)});
}

Tensor gather_reduce(const Tensor& table, const Segments& segments, ReduceOp op) {
  require_rank(table, 2, "gather_reduce", "table");
  return reduce_impl(table, segments, op, {segments.size(), table.dim(1)});
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  require_rank(table, 2, "gather_rows", "table");
  const std::size_t n = table.dim(0), d = table.dim(1);
  Buffer out(ids.size() * d);
  const double* data = table.values().data();
  for (std::size_t b = 0; b < ids.size(); ++b) {
    if (ids[b] < 0 || static_cast<std::size_t>(ids[b]) >= n) throw ShapeError("gather_rows: index " + std::to_string(ids[b]) + " out of range");
    std::copy_n(data + static_cast<std::size_t>(ids[b]) * d, d, out.data() + b * d);
  }
  return Tensor::make_result({ids.size(), d}, std::move(out), {table}, [ids = std::vector<int>(ids.begin(), ids.end()), d](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      double* row = g.data() + static_cast<std::size_t>(ids[b]) * d;
      const double* up = self.grad.data() + b * d;
      for (std::size_t c = 0; c < d; ++c) row[c] += up[c];
    }
  });
}

Tensor concat_columns(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_columns: no inputs");
  const bool vectors = parts.front().defined() && parts.front().rank() == 1;
  std::size_t rows = vectors ? 1 : parts.front().dim(0);
  std::vector<std::size_t> widths;
  for (const auto& t : parts) {
    require(t.defined() && t.rank() == (vectors ? 1u : 2u), "concat_columns: inputs must all be rank 1 or all rank 2");
    if (!vectors) require(t.dim(0) == rows, "concat_columns: row counts differ");
    widths.push_back(vectors ? t.dim(0) : t.dim(1));
  }
  const std::size_t total = std::accumulate(widths.begin(), widths.end(), std::size_t{0});
  Buffer out(rows * total);
  for (std::size_t r = 0, offset = 0; r < rows; ++r, offset = 0) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      std::copy_n(parts[i].values().data() + r * widths[i], widths[i], out.data() + r * total + offset);
      offset += widths[i];
    }
  }
  Shape shape = vectors ? Shape{total} : Shape{rows, total};
  return Tensor::make_result(std::move(shape), std::move(out), {parts.begin(), parts.end()}, [widths, rows, total](Node& self) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::size_t offset = 0;
      for (std::size_t i = 0; i < widths.size(); ++i) {
        Node& p = *self.parents[i];
        if (p.requires_grad) {
          double* g = p.grad_buffer().data() + r * widths[i];
          const double* up = self.grad.data() + r * total + offset;
          for (std::size_t c = 0; c < widths[i]; ++c) g[c] += up[c];
        }
        offset += widths[i];
      }
    }
  });
}

Tensor concat_columns(std::initializer_list<Tensor> parts) { return concat_columns(std::span<const Tensor>(parts.begin(), parts.size())); }

Tensor sum(const Tensor& input) {
  require(input.defined(), "sum: undefined input");
  double total = 0.0;
  for (const double v : input.values()) total += v;
  return Tensor::make_result({}, {total}, {input}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (auto& v : g) v += self.grad[0];
  });
}

}  // namespace deepgroup
