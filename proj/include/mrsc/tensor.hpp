#pragma once

// Dense 64-bit tensors with reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle to a graph node. Operations build new nodes that
// remember their inputs and how to push gradients back to them; `backward`
// walks the graph from a scalar loss and fills `grad` on every reachable
// tensor that requires it. Nodes whose inputs need no gradient record nothing,
// so inference runs without keeping the graph alive.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace mrsc {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& dims);

namespace detail {
struct Node;
}

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape dims, bool requires_grad = false);
  static Tensor from(Shape dims, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& dims() const;
  std::size_t rank() const { return dims().size(); }
  std::size_t size() const;

  std::span<double> data();
  std::span<const double> data() const;
  double item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();  // allocates zeros on first use
  void clear_grad();

  // Fresh leaf with a copy of the values; no graph history.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared_node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Populates gradients of every requires_grad tensor reachable from `loss`.
// `loss` must hold exactly one element.
void backward(const Tensor& loss);

// Attention mask of shape [batch, rows, cols]; nonzero = key visible.
struct AttentionMask {
  std::size_t batch = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> allowed;
};

// ---- primitives ---------------------------------------------------------

// x[..., k] * w[k, m] -> [..., m]
Tensor matmul(const Tensor& x, const Tensor& w);
// a[g, n, k] * b[g, k, m] -> [g, n, m]; with transpose_b, b is [g, m, k].
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b = false);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);
// x[..., m] + bias[m]
Tensor add_bias(const Tensor& x, const Tensor& bias);
// x + c for a constant (non-differentiable) block of the same size.
Tensor add_constant(const Tensor& x, std::shared_ptr<const std::vector<double>> c);

Tensor relu(const Tensor& x);
Tensor log(const Tensor& x);
Tensor exp(const Tensor& x);

// Reductions over the last axis: [..., m] -> [...]
Tensor max_last(const Tensor& x);
Tensor sum_last(const Tensor& x);
// x[..., m] - v[...] broadcast along the last axis.
Tensor sub_last(const Tensor& x, const Tensor& v);
// Picks x[..., index[...]].
Tensor gather_last(const Tensor& x, std::shared_ptr<const std::vector<std::int32_t>> index);

Tensor sum(const Tensor& x);
// sum_i x_i * mask_i with a constant 0/1 mask, -> scalar
Tensor masked_sum(const Tensor& x, std::shared_ptr<const std::vector<std::uint8_t>> mask);
// x[b, t, d] averaged over t where mask[b, t] is set -> [b, d]
Tensor masked_mean_rows(const Tensor& x, std::shared_ptr<const std::vector<std::uint8_t>> mask);

// Softmax over the last axis.
Tensor softmax(const Tensor& x);
// scores[batch*heads, rows, cols]; mask shared by the heads of a batch entry.
// Rows whose keys are all masked produce zeros.
Tensor masked_softmax(const Tensor& scores, std::shared_ptr<const AttentionMask> mask,
                      std::size_t heads);

// Normalises the last axis, then applies gamma/beta.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);

// table[v, d] looked up at ids (shape `id_dims`) -> [id_dims..., d]
Tensor embedding(const Tensor& table, std::shared_ptr<const std::vector<std::int32_t>> ids,
                 const Shape& id_dims);

Tensor reshape(const Tensor& x, Shape dims);
// [b, t, h*d] -> [b*h, t, d] and back.
Tensor split_heads(const Tensor& x, std::size_t heads);
Tensor merge_heads(const Tensor& x, std::size_t heads);

// x / sqrt(mean(x^2)) over the whole tensor; all-zero input passes through.
Tensor power_normalize(const Tensor& x);

// Mean over unmasked positions of -log softmax(logits)[target].
// logits[..., v]; targets and mask cover the leading axes.
Tensor cross_entropy(const Tensor& logits, std::shared_ptr<const std::vector<std::int32_t>> targets,
                     std::shared_ptr<const std::vector<std::uint8_t>> mask);

}  // namespace mrsc
