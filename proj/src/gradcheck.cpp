#include "mrsc/gradcheck.hpp"

#include <cmath>
#include <random>

#include "mrsc/error.hpp"
#include "mrsc/training.hpp"

namespace mrsc {

GradCheckResult check_gradients(const std::string& name, const std::function<Tensor()>& loss,
                                const std::vector<Tensor>& inputs, double h) {
  for (auto t : inputs) {
    require(t.requires_grad(), "check_gradients: input does not require grad");
    t.clear_grad();
  }
  backward(loss());
  GradCheckResult r;
  r.name = name;
  double diff2 = 0.0, auto2 = 0.0, fd2 = 0.0;
  for (auto t : inputs) {
    std::vector<double> g(t.size(), 0.0);
    if (t.has_grad()) std::copy(t.grad().begin(), t.grad().end(), g.begin());
    auto x = t.data();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double orig = x[i];
      x[i] = orig + h;
      const double up = loss().item();
      x[i] = orig - h;
      const double down = loss().item();
      x[i] = orig;
      const double fd = (up - down) / (2.0 * h);
      diff2 += (g[i] - fd) * (g[i] - fd);
      auto2 += g[i] * g[i];
      fd2 += fd * fd;
      r.max_abs_error = std::max(r.max_abs_error, std::abs(g[i] - fd));
      ++r.entries;
    }
    t.clear_grad();
  }
  const double denom = std::sqrt(auto2) + std::sqrt(fd2);
  r.rel_error = denom > 0.0 ? std::sqrt(diff2) / denom : 0.0;
  return r;
}

namespace {

struct Gen {
  std::mt19937_64 rng;
  Tensor param(Shape dims, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(numel(dims));
    for (auto& x : v) x = u(rng);
    return Tensor::from(std::move(dims), std::move(v), true);
  }
  // Values bounded away from zero, for ops with a kink or pole there.
  Tensor away_from_zero(Shape dims, double lo, double hi) {
    auto t = param(std::move(dims), lo, hi);
    std::bernoulli_distribution sign(0.5);
    for (auto& x : t.data()) x = sign(rng) ? x : -x;
    return t;
  }
  Tensor constant(Shape dims) {
    auto t = param(std::move(dims));
    return t.detach();
  }
};

// Reduces any output to a scalar through a fixed random weighting, so every
// output entry contributes a distinct sensitivity.
Tensor readout(const Tensor& y, const Tensor& weights) { return sum(mul(y, weights)); }

}  // namespace

std::vector<GradCheckResult> check_primitives(std::uint64_t seed) {
  Gen g{std::mt19937_64(seed)};
  std::vector<GradCheckResult> out;
  auto unary = [&](const std::string& name, Tensor x, std::function<Tensor(const Tensor&)> op) {
    const Tensor w = g.constant(op(x).dims());
    out.push_back(check_gradients(name, [=] { return readout(op(x), w); }, {x}));
  };
  auto binary = [&](const std::string& name, Tensor a, Tensor b,
                    std::function<Tensor(const Tensor&, const Tensor&)> op) {
    const Tensor w = g.constant(op(a, b).dims());
    out.push_back(check_gradients(name, [=] { return readout(op(a, b), w); }, {a, b}));
  };

  binary("matmul", g.param({2, 3, 4}), g.param({4, 5}), [](auto& a, auto& b) { return matmul(a, b); });
  binary("bmm", g.param({2, 3, 4}), g.param({2, 4, 5}), [](auto& a, auto& b) { return bmm(a, b); });
  binary("bmm_transposed", g.param({2, 3, 4}), g.param({2, 5, 4}),
         [](auto& a, auto& b) { return bmm(a, b, true); });
  binary("add", g.param({3, 4}), g.param({3, 4}), [](auto& a, auto& b) { return add(a, b); });
  binary("sub", g.param({3, 4}), g.param({3, 4}), [](auto& a, auto& b) { return sub(a, b); });
  binary("mul", g.param({3, 4}), g.param({3, 4}), [](auto& a, auto& b) { return mul(a, b); });
  binary("add_bias", g.param({2, 3, 4}), g.param({4}), [](auto& a, auto& b) { return add_bias(a, b); });
  binary("sub_last", g.param({2, 3, 4}), g.param({2, 3}), [](auto& a, auto& b) { return sub_last(a, b); });
  unary("scale", g.param({3, 4}), [](auto& x) { return scale(x, -1.7); });
  {
    const Tensor k = g.constant({3, 4});
    auto c = std::make_shared<const std::vector<double>>(k.data().begin(), k.data().end());
    unary("add_constant", g.param({3, 4}), [c](auto& x) { return add_constant(x, c); });
  }
  unary("relu", g.away_from_zero({3, 4}, 0.1, 1.0), [](auto& x) { return relu(x); });
  unary("log", g.param({3, 4}, 0.5, 2.0), [](auto& x) { return log(x); });
  unary("exp", g.param({3, 4}), [](auto& x) { return exp(x); });
  {
    // distinct entries spaced well beyond h so the arg-max is stable
    auto x = g.param({2, 3, 4});
    auto d = x.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.1 * static_cast<double>((i * 7) % 24) + 0.01 * d[i];
    unary("max_last", x, [](auto& t) { return max_last(t); });
  }
  unary("sum_last", g.param({2, 3, 4}), [](auto& x) { return sum_last(x); });
  {
    auto idx = std::make_shared<const std::vector<std::int32_t>>(std::vector<std::int32_t>{0, 3, 1, 2, 2, 0});
    unary("gather_last", g.param({2, 3, 4}), [idx](auto& x) { return gather_last(x, idx); });
  }
  unary("sum", g.param({3, 4}), [](auto& x) { return sum(x); });
  {
    auto m = std::make_shared<const std::vector<std::uint8_t>>(
        std::vector<std::uint8_t>{1, 0, 1, 1, 0, 1, 1, 1, 0, 0, 1, 1});
    unary("masked_sum", g.param({3, 4}), [m](auto& x) { return masked_sum(x, m); });
    auto rows = std::make_shared<const std::vector<std::uint8_t>>(
        std::vector<std::uint8_t>{1, 1, 0, 1, 0, 0});
    unary("masked_mean_rows", g.param({2, 3, 4}), [rows](auto& x) { return masked_mean_rows(x, rows); });
  }
  unary("softmax", g.param({2, 3, 4}), [](auto& x) { return softmax(x); });
  {
    auto m = std::make_shared<AttentionMask>();
    m->batch = 2;
    m->rows = 3;
    m->cols = 4;
    m->allowed = {1, 1, 0, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1, 0, 1, 1, 1, 1};
    std::shared_ptr<const AttentionMask> cm = m;
    unary("masked_softmax", g.param({4, 3, 4}), [cm](auto& x) { return masked_softmax(x, cm, 2); });
  }
  {
    auto x = g.param({2, 3, 5});
    auto gamma = g.param({5}, 0.5, 1.5);
    auto beta = g.param({5});
    const Tensor w = g.constant({2, 3, 5});
    out.push_back(check_gradients(
        "layer_norm", [=] { return readout(layer_norm(x, gamma, beta), w); }, {x, gamma, beta}));
  }
  {
    auto ids = std::make_shared<const std::vector<std::int32_t>>(std::vector<std::int32_t>{0, 2, 2, 4, 1, 0});
    unary("embedding", g.param({5, 3}), [ids](auto& t) { return embedding(t, ids, {2, 3}); });
  }
  unary("reshape", g.param({2, 3, 4}), [](auto& x) { return reshape(x, {6, 4}); });
  unary("split_heads", g.param({2, 3, 4}), [](auto& x) { return split_heads(x, 2); });
  unary("merge_heads", g.param({4, 3, 2}), [](auto& x) { return merge_heads(x, 2); });
  unary("power_normalize", g.param({3, 4}), [](auto& x) { return power_normalize(x); });
  {
    auto x = g.param({2, 3, 5});
    auto t = std::make_shared<const std::vector<std::int32_t>>(std::vector<std::int32_t>{0, 4, 2, 1, 3, 3});
    auto m = std::make_shared<const std::vector<std::uint8_t>>(std::vector<std::uint8_t>{1, 1, 0, 1, 0, 1});
    out.push_back(check_gradients("cross_entropy", [=] { return cross_entropy(x, t, m); }, {x}));
  }
  return out;
}

GradCheckResult check_transceiver(std::uint64_t seed) {
  Corpus corpus = {{{"alpha", "beta", "gamma", "delta"}, 0},
                   {{"beta", "gamma", "alpha", "alpha", "delta"}, 0},
                   {{"one", "two", "three", "four", "two"}, 1},
                   {{"four", "three", "two", "one"}, 1}};
  const Vocabulary vocab = build_vocab(corpus);
  ArchConfig arch;
  arch.d_model = 8;
  arch.d_attn = 8;
  arch.n_layers = 1;
  arch.n_heads = 2;
  arch.d_ff = 8;
  arch.n_ce = 4;
  arch.n_cd = 8;
  arch.slot_len = 17;
  arch.users = 2;
  arch.vocab_size = vocab.size();

  std::mt19937_64 rng(seed);
  ParamStore store;
  const Transmitter tx(arch, store, rng);
  const Receiver rx(arch, store, 1, rng);
  // Non-zero biases and norm offsets so every parameter has a generic gradient.
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& [_, t] : store.entries())
    for (auto& v : t.data()) v += n(rng);

  const auto batches = make_batches(corpus, vocab, 2, {2, arch.slot_len, false}, seed);
  const MergedBatch batch = batches.front();
  ChannelConfig ch;
  ch.kind = ChannelKind::kRayleigh;
  ch.snr_db = 10.0;
  ch.seed = seed;
  std::vector<Tensor> params;
  for (auto& [_, t] : store.entries()) params.push_back(t);
  return check_gradients("transceiver", [&] { return forward_loss(tx, rx, batch, ch); }, params);
}

}  // namespace mrsc
