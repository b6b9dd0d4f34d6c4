#include "mrsc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "mrsc/error.hpp"
#include "mrsc/kernels.hpp"

namespace mrsc {

namespace detail {

struct Node {
  Shape dims;
  std::vector<double> data;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  std::vector<double>& g() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;
using kernels::Trans;

std::size_t numel(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

namespace {

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

std::shared_ptr<Node> make_node(Shape dims) {
  auto n = std::make_shared<Node>();
  n->data.assign(numel(dims), 0.0);
  n->dims = std::move(dims);
  return n;
}

// Wires `out` to its inputs. The backward closure is only kept when some
// input needs a gradient.
Tensor finish(std::shared_ptr<Node> out, std::vector<std::shared_ptr<Node>> inputs,
              std::function<void(Node&)> bw) {
  const bool rg = std::any_of(inputs.begin(), inputs.end(),
                              [](const auto& n) { return n->requires_grad; });
  if (rg) {
    out->requires_grad = true;
    out->inputs = std::move(inputs);
    out->backward = std::move(bw);
  }
  return Tensor(std::move(out));
}

const std::shared_ptr<Node>& node_of(const Tensor& t) {
  require(t.defined(), "operation on an undefined tensor");
  return t.shared_node();
}

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.dims() == b.dims(), std::string(op) + ": shape mismatch " + shape_str(a.dims()) +
                                    " vs " + shape_str(b.dims()));
}

std::size_t last_dim(const Tensor& x, const char* op) {
  require(x.rank() >= 1, std::string(op) + ": needs rank >= 1");
  return x.dims().back();
}

Shape drop_last(const Shape& s) { return Shape(s.begin(), s.end() - 1); }

}  // namespace

// ---- Tensor --------------------------------------------------------------

Tensor Tensor::zeros(Shape dims, bool requires_grad) {
  auto n = make_node(std::move(dims));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(Shape dims, std::vector<double> data, bool requires_grad) {
  require(numel(dims) == data.size(), "Tensor::from: " + shape_str(dims) + " does not hold " +
                                          std::to_string(data.size()) + " values");
  auto n = std::make_shared<Node>();
  n->dims = std::move(dims);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

const Shape& Tensor::dims() const { return node_of(*this)->dims; }
std::size_t Tensor::size() const { return node_of(*this)->data.size(); }
std::span<double> Tensor::data() { return node_of(*this)->data; }
std::span<const double> Tensor::data() const { return node_of(*this)->data; }

double Tensor::item() const {
  require(size() == 1, "item() on a tensor of shape " + shape_str(dims()));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_of(*this)->requires_grad; }
bool Tensor::has_grad() const { return node_of(*this)->grad.size() == size(); }

std::span<const double> Tensor::grad() const {
  require(has_grad(), "grad() on a tensor without gradient");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() { return node_of(*this)->g(); }
void Tensor::clear_grad() { node_of(*this)->grad.clear(); }

Tensor Tensor::detach() const { return from(dims(), node_of(*this)->data, false); }

// ---- backward -------------------------------------------------------------

void backward(const Tensor& loss) {
  require(loss.defined() && loss.size() == 1, "backward() needs a scalar loss");
  Node* root = loss.node();
  if (!root->requires_grad) return;

  // Iterative DFS producing a post-order; grey nodes on the stack reveal cycles.
  enum class Mark : std::uint8_t { kGrey, kBlack };
  std::unordered_map<Node*, Mark> mark;
  std::vector<Node*> order;
  std::vector<std::pair<Node*, std::size_t>> stack{{root, 0}};
  mark[root] = Mark::kGrey;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (!child->requires_grad) continue;
      auto it = mark.find(child);
      if (it == mark.end()) {
        mark[child] = Mark::kGrey;
        stack.emplace_back(child, 0);
      } else if (it->second == Mark::kGrey) {
        throw ContractViolation("backward(): cycle in the computation graph");
      }
      continue;
    }
    mark[node] = Mark::kBlack;
    order.push_back(node);
    stack.pop_back();
  }

  root->g()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() == n->data.size()) n->backward(*n);
  }
}

// ---- primitives -----------------------------------------------------------

Tensor matmul(const Tensor& x, const Tensor& w) {
  const auto& xn = node_of(x);
  const auto& wn = node_of(w);
  require(w.rank() == 2, "matmul: weight must be rank 2, got " + shape_str(w.dims()));
  const std::size_t k = last_dim(x, "matmul");
  require(w.dims()[0] == k, "matmul: inner dims differ " + shape_str(x.dims()) + " x " +
                                shape_str(w.dims()));
  const std::size_t m = w.dims()[1];
  const std::size_t n = x.size() / std::max<std::size_t>(k, 1);
  Shape od = drop_last(x.dims());
  od.push_back(m);
  auto out = make_node(od);
  kernels::gemm(xn->data.data(), wn->data.data(), out->data.data(), n, k, m, Trans::kNo,
                Trans::kNo, false);
  return finish(out, {xn, wn}, [xn, wn, n, k, m](Node& o) {
    if (xn->requires_grad)
      kernels::gemm(o.grad.data(), wn->data.data(), xn->g().data(), n, m, k, Trans::kNo,
                    Trans::kYes, true);
    if (wn->requires_grad)
      kernels::gemm(xn->data.data(), o.grad.data(), wn->g().data(), k, n, m, Trans::kYes,
                    Trans::kNo, true);
  });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  const auto& an = node_of(a);
  const auto& bn = node_of(b);
  require(a.rank() == 3 && b.rank() == 3, "bmm: operands must be rank 3");
  const std::size_t g = a.dims()[0], n = a.dims()[1], k = a.dims()[2];
  require(b.dims()[0] == g, "bmm: batch mismatch");
  const std::size_t m = transpose_b ? b.dims()[1] : b.dims()[2];
  require((transpose_b ? b.dims()[2] : b.dims()[1]) == k,
          "bmm: inner dims differ " + shape_str(a.dims()) + " x " + shape_str(b.dims()));
  auto out = make_node({g, n, m});
  const Trans tb = transpose_b ? Trans::kYes : Trans::kNo;
  for (std::size_t i = 0; i < g; ++i)
    kernels::gemm(an->data.data() + i * n * k, bn->data.data() + i * k * m,
                  out->data.data() + i * n * m, n, k, m, Trans::kNo, tb, false);
  return finish(out, {an, bn}, [an, bn, g, n, k, m, transpose_b](Node& o) {
    for (std::size_t i = 0; i < g; ++i) {
      const double* dc = o.grad.data() + i * n * m;
      const double* ad = an->data.data() + i * n * k;
      const double* bd = bn->data.data() + i * k * m;
      if (an->requires_grad) {
        double* da = an->g().data() + i * n * k;
        kernels::gemm(dc, bd, da, n, m, k, Trans::kNo, transpose_b ? Trans::kNo : Trans::kYes,
                      true);
      }
      if (bn->requires_grad) {
        double* db = bn->g().data() + i * k * m;
        if (transpose_b)
          kernels::gemm(dc, ad, db, m, n, k, Trans::kYes, Trans::kNo, true);
        else
          kernels::gemm(ad, dc, db, k, n, m, Trans::kYes, Trans::kNo, true);
      }
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "add");
  const auto& an = node_of(a);
  const auto& bn = node_of(b);
  auto out = make_node(a.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = an->data[i] + bn->data[i];
  kernels::count(0, out->data.size());
  return finish(out, {an, bn}, [an, bn](Node& o) {
    for (auto* in : {an.get(), bn.get()})
      if (in->requires_grad) {
        auto& g = in->g();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "sub");
  const auto& an = node_of(a);
  const auto& bn = node_of(b);
  auto out = make_node(a.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = an->data[i] - bn->data[i];
  kernels::count(0, out->data.size());
  return finish(out, {an, bn}, [an, bn](Node& o) {
    if (an->requires_grad) {
      auto& g = an->g();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->g();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "mul");
  const auto& an = node_of(a);
  const auto& bn = node_of(b);
  auto out = make_node(a.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = an->data[i] * bn->data[i];
  kernels::count(out->data.size(), 0);
  return finish(out, {an, bn}, [an, bn](Node& o) {
    if (an->requires_grad) {
      auto& g = an->g();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * bn->data[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->g();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * an->data[i];
    }
  });
}

Tensor scale(const Tensor& x, double s) {
  const auto& xn = node_of(x);
  auto out = make_node(x.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = xn->data[i] * s;
  kernels::count(out->data.size(), 0);
  return finish(out, {xn}, [xn, s](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * s;
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const auto& xn = node_of(x);
  const auto& bn = node_of(bias);
  const std::size_t m = last_dim(x, "add_bias");
  require(bias.rank() == 1 && bias.dims()[0] == m,
          "add_bias: bias " + shape_str(bias.dims()) + " vs input " + shape_str(x.dims()));
  auto out = make_node(x.dims());
  const std::size_t rows = x.size() / std::max<std::size_t>(m, 1);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < m; ++j) out->data[r * m + j] = xn->data[r * m + j] + bn->data[j];
  kernels::count(0, out->data.size());
  return finish(out, {xn, bn}, [xn, bn, rows, m](Node& o) {
    if (xn->requires_grad) {
      auto& g = xn->g();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (bn->requires_grad) {
      auto& g = bn->g();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < m; ++j) g[j] += o.grad[r * m + j];
    }
  });
}

Tensor add_constant(const Tensor& x, std::shared_ptr<const std::vector<double>> c) {
  const auto& xn = node_of(x);
  require(c && c->size() == x.size(), "add_constant: size mismatch");
  auto out = make_node(x.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = xn->data[i] + (*c)[i];
  kernels::count(0, out->data.size());
  return finish(out, {xn}, [xn](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

Tensor relu(const Tensor& x) {
  const auto& xn = node_of(x);
  auto out = make_node(x.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = std::max(0.0, xn->data[i]);
  return finish(out, {xn}, [xn](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xn->data[i] > 0.0) g[i] += o.grad[i];
  });
}

Tensor log(const Tensor& x) {
  const auto& xn = node_of(x);
  auto out = make_node(x.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = std::log(xn->data[i]);
  return finish(out, {xn}, [xn](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] / xn->data[i];
  });
}

Tensor exp(const Tensor& x) {
  const auto& xn = node_of(x);
  auto out = make_node(x.dims());
  for (std::size_t i = 0; i < out->data.size(); ++i) out->data[i] = std::exp(xn->data[i]);
  Node* self = out.get();
  return finish(out, {xn}, [xn, self](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * self->data[i];
  });
}

Tensor max_last(const Tensor& x) {
  const auto& xn = node_of(x);
  const std::size_t m = last_dim(x, "max_last");
  require(m > 0, "max_last: empty axis");
  const std::size_t rows = x.size() / m;
  auto out = make_node(drop_last(x.dims()));
  std::vector<std::size_t> arg(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = xn->data.data() + r * m;
    arg[r] = static_cast<std::size_t>(std::max_element(row, row + m) - row);
    out->data[r] = row[arg[r]];
  }
  return finish(out, {xn}, [xn, arg = std::move(arg), m](Node& o) {
    auto& g = xn->g();
    for (std::size_t r = 0; r < arg.size(); ++r) g[r * m + arg[r]] += o.grad[r];
  });
}

Tensor sum_last(const Tensor& x) {
  const auto& xn = node_of(x);
  const std::size_t m = last_dim(x, "sum_last");
  const std::size_t rows = m ? x.size() / m : 0;
  auto out = make_node(drop_last(x.dims()));
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += xn->data[r * m + j];
    out->data[r] = s;
  }
  return finish(out, {xn}, [xn, rows, m](Node& o) {
    auto& g = xn->g();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < m; ++j) g[r * m + j] += o.grad[r];
  });
}

Tensor sub_last(const Tensor& x, const Tensor& v) {
  const auto& xn = node_of(x);
  const auto& vn = node_of(v);
  const std::size_t m = last_dim(x, "sub_last");
  require(v.dims() == drop_last(x.dims()), "sub_last: shape mismatch " + shape_str(x.dims()) +
                                               " - " + shape_str(v.dims()));
  const std::size_t rows = v.size();
  auto out = make_node(x.dims());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < m; ++j)
      out->data[r * m + j] = xn->data[r * m + j] - vn->data[r];
  kernels::count(0, out->data.size());
  return finish(out, {xn, vn}, [xn, vn, rows, m](Node& o) {
    if (xn->requires_grad) {
      auto& g = xn->g();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (vn->requires_grad) {
      auto& g = vn->g();
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < m; ++j) g[r] -= o.grad[r * m + j];
    }
  });
}

Tensor gather_last(const Tensor& x, std::shared_ptr<const std::vector<std::int32_t>> index) {
  const auto& xn = node_of(x);
  const std::size_t m = last_dim(x, "gather_last");
  const std::size_t rows = m ? x.size() / m : 0;
  require(index && index->size() == rows, "gather_last: index size mismatch");
  auto out = make_node(drop_last(x.dims()));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto j = (*index)[r];
    require(j >= 0 && static_cast<std::size_t>(j) < m, "gather_last: index out of range");
    out->data[r] = xn->data[r * m + static_cast<std::size_t>(j)];
  }
  return finish(out, {xn}, [xn, index, m](Node& o) {
    auto& g = xn->g();
    for (std::size_t r = 0; r < index->size(); ++r)
      g[r * m + static_cast<std::size_t>((*index)[r])] += o.grad[r];
  });
}

Tensor sum(const Tensor& x) {
  const auto& xn = node_of(x);
  auto out = make_node({});
  double s = 0.0;
  for (double v : xn->data) s += v;
  out->data[0] = s;
  return finish(out, {xn}, [xn](Node& o) {
    auto& g = xn->g();
    for (auto& gi : g) gi += o.grad[0];
  });
}

Tensor masked_sum(const Tensor& x, std::shared_ptr<const std::vector<std::uint8_t>> mask) {
  const auto& xn = node_of(x);
  require(mask && mask->size() == x.size(), "masked_sum: mask size mismatch");
  auto out = make_node({});
  double s = 0.0;
  for (std::size_t i = 0; i < xn->data.size(); ++i)
    if ((*mask)[i]) s += xn->data[i];
  out->data[0] = s;
  return finish(out, {xn}, [xn, mask](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < g.size(); ++i)
      if ((*mask)[i]) g[i] += o.grad[0];
  });
}

Tensor masked_mean_rows(const Tensor& x, std::shared_ptr<const std::vector<std::uint8_t>> mask) {
  const auto& xn = node_of(x);
  require(x.rank() == 3, "masked_mean_rows: input must be [b, t, d]");
  const std::size_t b = x.dims()[0], t = x.dims()[1], d = x.dims()[2];
  require(mask && mask->size() == b * t, "masked_mean_rows: mask size mismatch");
  auto out = make_node({b, d});
  std::vector<double> inv(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t cnt = 0;
    for (std::size_t s = 0; s < t; ++s) {
      if (!(*mask)[i * t + s]) continue;
      ++cnt;
      for (std::size_t j = 0; j < d; ++j) out->data[i * d + j] += xn->data[(i * t + s) * d + j];
    }
    inv[i] = cnt ? 1.0 / static_cast<double>(cnt) : 0.0;
    for (std::size_t j = 0; j < d; ++j) out->data[i * d + j] *= inv[i];
  }
  return finish(out, {xn}, [xn, mask, inv = std::move(inv), b, t, d](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t s = 0; s < t; ++s) {
        if (!(*mask)[i * t + s]) continue;
        for (std::size_t j = 0; j < d; ++j) g[(i * t + s) * d + j] += o.grad[i * d + j] * inv[i];
      }
  });
}

namespace {

void softmax_backward(const std::vector<double>& y, const std::vector<double>& dy,
                      std::vector<double>& dx, std::size_t rows, std::size_t m) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* yr = y.data() + r * m;
    const double* dyr = dy.data() + r * m;
    double dot = 0.0;
    for (std::size_t j = 0; j < m; ++j) dot += yr[j] * dyr[j];
    double* dxr = dx.data() + r * m;
    for (std::size_t j = 0; j < m; ++j) dxr[j] += yr[j] * (dyr[j] - dot);
  }
}

}  // namespace

Tensor softmax(const Tensor& x) {
  const auto& xn = node_of(x);
  const std::size_t m = last_dim(x, "softmax");
  const std::size_t rows = m ? x.size() / m : 0;
  auto out = make_node(x.dims());
  kernels::softmax_rows(xn->data.data(), nullptr, out->data.data(), rows, m);
  Node* self = out.get();
  return finish(out, {xn}, [xn, self, rows, m](Node& o) {
    softmax_backward(self->data, o.grad, xn->g(), rows, m);
  });
}

Tensor masked_softmax(const Tensor& scores, std::shared_ptr<const AttentionMask> mask,
                      std::size_t heads) {
  const auto& xn = node_of(scores);
  require(scores.rank() == 3, "masked_softmax: scores must be rank 3");
  const std::size_t g = scores.dims()[0], r = scores.dims()[1], c = scores.dims()[2];
  require(mask && heads > 0 && mask->batch * heads == g && mask->rows == r && mask->cols == c &&
              mask->allowed.size() == mask->batch * r * c,
          "masked_softmax: mask " + std::to_string(mask ? mask->batch : 0) + "x" +
              std::to_string(mask ? mask->rows : 0) + "x" + std::to_string(mask ? mask->cols : 0) +
              " does not fit scores " + shape_str(scores.dims()) + " with " +
              std::to_string(heads) + " heads");
  std::vector<std::uint8_t> expanded(g * r * c);
  for (std::size_t i = 0; i < g; ++i)
    std::copy_n(mask->allowed.begin() + static_cast<std::ptrdiff_t>((i / heads) * r * c), r * c,
                expanded.begin() + static_cast<std::ptrdiff_t>(i * r * c));
  auto out = make_node(scores.dims());
  kernels::softmax_rows(xn->data.data(), expanded.data(), out->data.data(), g * r, c);
  Node* self = out.get();
  // Masked entries have y = 0, so the plain softmax backward already gives
  // them zero gradient.
  return finish(out, {xn}, [xn, self, g, r, c](Node& o) {
    softmax_backward(self->data, o.grad, xn->g(), g * r, c);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const auto& xn = node_of(x);
  const auto& gn = node_of(gamma);
  const auto& bn = node_of(beta);
  const std::size_t d = last_dim(x, "layer_norm");
  require(gamma.dims() == Shape{d} && beta.dims() == Shape{d}, "layer_norm: gamma/beta shape");
  const std::size_t rows = d ? x.size() / d : 0;
  auto out = make_node(x.dims());
  std::vector<double> xhat(x.size());
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xn->data.data() + r * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[r * d + j] = (xr[j] - mean) * inv_std[r];
      out->data[r * d + j] = gn->data[j] * xhat[r * d + j] + bn->data[j];
    }
  }
  return finish(out, {xn, gn, bn},
                [xn, gn, bn, xhat = std::move(xhat), inv_std = std::move(inv_std), rows,
                 d](Node& o) {
                  if (gn->requires_grad || bn->requires_grad) {
                    for (std::size_t r = 0; r < rows; ++r)
                      for (std::size_t j = 0; j < d; ++j) {
                        if (gn->requires_grad) gn->g()[j] += o.grad[r * d + j] * xhat[r * d + j];
                        if (bn->requires_grad) bn->g()[j] += o.grad[r * d + j];
                      }
                  }
                  if (!xn->requires_grad) return;
                  auto& gx = xn->g();
                  const double inv_d = 1.0 / static_cast<double>(d);
                  for (std::size_t r = 0; r < rows; ++r) {
                    double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double dxh = o.grad[r * d + j] * gn->data[j];
                      mean_dxh += dxh;
                      mean_dxh_xh += dxh * xhat[r * d + j];
                    }
                    mean_dxh *= inv_d;
                    mean_dxh_xh *= inv_d;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double dxh = o.grad[r * d + j] * gn->data[j];
                      gx[r * d + j] +=
                          inv_std[r] * (dxh - mean_dxh - xhat[r * d + j] * mean_dxh_xh);
                    }
                  }
                });
}

Tensor embedding(const Tensor& table, std::shared_ptr<const std::vector<std::int32_t>> ids,
                 const Shape& id_dims) {
  const auto& tn = node_of(table);
  require(table.rank() == 2, "embedding: table must be rank 2");
  require(ids && ids->size() == numel(id_dims), "embedding: ids do not match their shape");
  const std::size_t v = table.dims()[0], d = table.dims()[1];
  Shape od = id_dims;
  od.push_back(d);
  auto out = make_node(od);
  for (std::size_t i = 0; i < ids->size(); ++i) {
    const auto id = (*ids)[i];
    require(id >= 0 && static_cast<std::size_t>(id) < v,
            "embedding: id " + std::to_string(id) + " outside table of " + std::to_string(v));
    std::copy_n(tn->data.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(id) * d),
                d, out->data.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return finish(out, {tn}, [tn, ids, d](Node& o) {
    auto& g = tn->g();
    for (std::size_t i = 0; i < ids->size(); ++i) {
      const auto row = static_cast<std::size_t>((*ids)[i]) * d;
      for (std::size_t j = 0; j < d; ++j) g[row + j] += o.grad[i * d + j];
    }
  });
}

Tensor reshape(const Tensor& x, Shape dims) {
  const auto& xn = node_of(x);
  require(numel(dims) == x.size(),
          "reshape: " + shape_str(x.dims()) + " -> " + shape_str(dims) + " changes size");
  auto out = std::make_shared<Node>();
  out->dims = std::move(dims);
  out->data = xn->data;
  return finish(out, {xn}, [xn](Node& o) {
    auto& g = xn->g();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
  });
}

namespace {

// Index maps between [b, t, h*d] and [b*h, t, d].
template <typename Fn>
void for_each_head_elem(std::size_t b, std::size_t t, std::size_t h, std::size_t d, Fn&& fn) {
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t s = 0; s < t; ++s)
      for (std::size_t hh = 0; hh < h; ++hh)
        for (std::size_t j = 0; j < d; ++j)
          fn(((i * t + s) * h + hh) * d + j, (((i * h + hh) * t) + s) * d + j);
}

}  // namespace

Tensor split_heads(const Tensor& x, std::size_t heads) {
  const auto& xn = node_of(x);
  require(x.rank() == 3 && heads > 0 && x.dims()[2] % heads == 0,
          "split_heads: width " + shape_str(x.dims()) + " not divisible by heads");
  const std::size_t b = x.dims()[0], t = x.dims()[1], d = x.dims()[2] / heads;
  auto out = make_node({b * heads, t, d});
  for_each_head_elem(b, t, heads, d,
                     [&](std::size_t src, std::size_t dst) { out->data[dst] = xn->data[src]; });
  return finish(out, {xn}, [xn, b, t, heads, d](Node& o) {
    auto& g = xn->g();
    for_each_head_elem(b, t, heads, d,
                       [&](std::size_t src, std::size_t dst) { g[src] += o.grad[dst]; });
  });
}

Tensor merge_heads(const Tensor& x, std::size_t heads) {
  const auto& xn = node_of(x);
  require(x.rank() == 3 && heads > 0 && x.dims()[0] % heads == 0,
          "merge_heads: batch not divisible by heads");
  const std::size_t b = x.dims()[0] / heads, t = x.dims()[1], d = x.dims()[2];
  auto out = make_node({b, t, heads * d});
  for_each_head_elem(b, t, heads, d,
                     [&](std::size_t dst, std::size_t src) { out->data[dst] = xn->data[src]; });
  return finish(out, {xn}, [xn, b, t, heads, d](Node& o) {
    auto& g = xn->g();
    for_each_head_elem(b, t, heads, d,
                       [&](std::size_t dst, std::size_t src) { g[src] += o.grad[dst]; });
  });
}

Tensor power_normalize(const Tensor& x) {
  const auto& xn = node_of(x);
  const std::size_t n = x.size();
  require(n > 0, "power_normalize: empty input");
  double ss = 0.0;
  for (double v : xn->data) ss += v * v;
  const double power = ss / static_cast<double>(n);
  auto out = make_node(x.dims());
  if (power == 0.0) {
    out->data = xn->data;
    return finish(out, {xn}, [xn](Node& o) {
      auto& g = xn->g();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    });
  }
  const double inv = 1.0 / std::sqrt(power);
  for (std::size_t i = 0; i < n; ++i) out->data[i] = xn->data[i] * inv;
  return finish(out, {xn}, [xn, inv, n](Node& o) {
    // d/dx_i of x_j / s with s = sqrt(sum x^2 / n): delta_ij / s - x_i x_j / (n s^3)
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += o.grad[i] * xn->data[i];
    const double k = dot * inv * inv * inv / static_cast<double>(n);
    auto& g = xn->g();
    for (std::size_t i = 0; i < n; ++i) g[i] += o.grad[i] * inv - xn->data[i] * k;
  });
}

Tensor cross_entropy(const Tensor& logits, std::shared_ptr<const std::vector<std::int32_t>> targets,
                     std::shared_ptr<const std::vector<std::uint8_t>> mask) {
  const auto& ln = node_of(logits);
  const std::size_t v = last_dim(logits, "cross_entropy");
  const std::size_t rows = v ? logits.size() / v : 0;
  require(targets && targets->size() == rows, "cross_entropy: target count mismatch");
  require(mask && mask->size() == rows, "cross_entropy: mask size mismatch");
  const auto active = static_cast<std::size_t>(std::count_if(
      mask->begin(), mask->end(), [](std::uint8_t m) { return m != 0; }));
  require(active > 0, "cross_entropy: every position is masked");

  std::vector<double> probs(logits.size());
  kernels::softmax_rows(ln->data.data(), nullptr, probs.data(), rows, v);
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!(*mask)[r]) continue;
    const auto t = (*targets)[r];
    require(t >= 0 && static_cast<std::size_t>(t) < v, "cross_entropy: target out of range");
    // log-sum-exp form keeps -log p finite for confident wrong predictions
    const double* row = ln->data.data() + r * v;
    const double mx = *std::max_element(row, row + v);
    double se = 0.0;
    for (std::size_t j = 0; j < v; ++j) se += std::exp(row[j] - mx);
    total += mx + std::log(se) - row[static_cast<std::size_t>(t)];
  }
  const double inv = 1.0 / static_cast<double>(active);
  auto out = make_node({});
  out->data[0] = total * inv;
  return finish(out, {ln}, [ln, targets, mask, probs = std::move(probs), rows, v, inv](Node& o) {
    auto& g = ln->g();
    const double scale_by = o.grad[0] * inv;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!(*mask)[r]) continue;
      for (std::size_t j = 0; j < v; ++j) g[r * v + j] += scale_by * probs[r * v + j];
      g[r * v + static_cast<std::size_t>((*targets)[r])] -= scale_by;
    }
  });
}

}  // namespace mrsc
