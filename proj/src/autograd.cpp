#include "hiercrop/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_set>

namespace hiercrop::ag {

namespace {

thread_local bool t_grad_enabled = true;

bool any_requires(std::initializer_list<const Var*> vars) {
  if (!t_grad_enabled) return false;
  for (const Var* v : vars)
    if (v && v->requires_grad()) return true;
  return false;
}

// Builds the output node; the closure is attached only when recording.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> fn) {
  bool rec = t_grad_enabled;
  bool need = false;
  for (const auto& v : inputs) need = need || v.requires_grad();
  Var out(std::move(value), rec && need);
  if (rec && need) {
    auto& n = *out.node();
    for (auto& v : inputs)
      if (v.defined()) n.parents.push_back(v.node());
    n.backprop = std::move(fn);
  }
  return out;
}

Tensor& gbuf(const Var& v) { return v.node()->grad_buffer(); }

}  // namespace

Tensor& Node::grad_buffer() {
  if (grad.size() != value.size()) grad = Tensor(value.shape(), 0.0);
  return grad;
}

Var::Var(Tensor value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Var::zero_grad() {
  if (node_) node_->grad = Tensor(node_->value.shape(), 0.0);
}

Var parameter(Tensor value) { return Var(std::move(value), true); }
Var constant(Tensor value) { return Var(std::move(value), false); }

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = prev_; }

void backward(const Var& root, double seed) {
  HC_CHECK(root.defined() && root.value().size() == 1, "backward needs a scalar root");
  if (!root.requires_grad()) return;
  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backprop && n->grad.size() == n->value.size()) n->backprop(*n);
  }
  // Interior grads are only needed during the sweep.
  for (Node* n : order)
    if (n->backprop) n->grad = Tensor();
}

Var linear(const Var& x, const Var& w, const Var& b) {
  const std::size_t in = w.value().dim(0), out = w.value().dim(1);
  HC_CHECK(x.cols() == in, "linear: input width " + std::to_string(x.cols()) + " != " + std::to_string(in));
  HC_CHECK(!b.defined() || b.value().size() == out, "linear: bias size mismatch");
  const std::size_t n = x.rows();
  Shape shape = x.shape();
  shape.back() = out;
  Tensor y(shape);
  kernels::gemm(x.value().data(), w.value().data(), b.defined() ? b.value().data() : nullptr, y.data(), n, in,
                out);
  return make_result(std::move(y), {x, w, b}, [x, w, b, n, in, out](Node& self) {
    const double* dy = self.grad.data();
    if (x.requires_grad()) {
      Tensor dx(x.shape());
      kernels::gemm_nt(dy, w.value().data(), dx.data(), n, in, out);
      auto& gx = gbuf(x);
      for (std::size_t i = 0; i < dx.size(); ++i) gx[i] += dx[i];
    }
    if (w.requires_grad()) kernels::gemm_tn_acc(x.value().data(), dy, gbuf(w).data(), n, in, out);
    if (b.defined() && b.requires_grad()) {
      auto& gb = gbuf(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < out; ++o) gb[o] += dy[i * out + o];
    }
  });
}

Var add(const Var& a, const Var& b) {
  HC_CHECK(a.value().size() == b.value().size(), "add: size mismatch " + shape_str(a.shape()) + " vs " +
                                                      shape_str(b.shape()));
  Tensor y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  return make_result(std::move(y), {a, b}, [a, b](Node& self) {
    for (const Var* v : {&a, &b}) {
      if (!v->requires_grad()) continue;
      auto& g = gbuf(*v);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Var scale(const Var& x, double s) {
  Tensor y = x.value();
  for (auto& v : y.values()) v *= s;
  return make_result(std::move(y), {x}, [x, s](Node& self) {
    auto& g = gbuf(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += s * self.grad[i];
  });
}

Var relu(const Var& x) {
  Tensor y = x.value();
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return make_result(std::move(y), {x}, [x](Node& self) {
    auto& g = gbuf(x);
    const auto& xv = x.value();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (xv[i] > 0.0) g[i] += self.grad[i];
  });
}

Var gelu(const Var& x) {
  Tensor y = x.value();
  for (auto& v : y.values()) v = 0.5 * v * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
  return make_result(std::move(y), {x}, [x](Node& self) {
    auto& g = gbuf(x);
    const auto& xv = x.value();
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double d = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0)) +
                       v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      g[i] += d * self.grad[i];
    }
  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, double eps) {
  const std::size_t c = x.cols(), n = x.rows();
  HC_CHECK(gamma.value().size() == c && beta.value().size() == c, "layer_norm: affine size mismatch");
  Tensor y(x.shape());
  auto xhat = std::make_shared<std::vector<double>>(x.value().size());
  auto rstd = std::make_shared<std::vector<double>>(n);
  const double* g = gamma.value().data();
  const double* bt = beta.value().data();
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.value().data() + r * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xr[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<double>(c);
    const double rs = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (xr[j] - mu) * rs;
      (*xhat)[r * c + j] = xh;
      y[r * c + j] = xh * g[j] + bt[j];
    }
  }
  return make_result(std::move(y), {x, gamma, beta}, [x, gamma, beta, xhat, rstd, n, c](Node& self) {
    const double* dy = self.grad.data();
    if (gamma.requires_grad() || beta.requires_grad()) {
      auto& gg = gbuf(gamma);
      auto& gb = gbuf(beta);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < c; ++j) {
          gg[j] += dy[r * c + j] * (*xhat)[r * c + j];
          gb[j] += dy[r * c + j];
        }
    }
    if (!x.requires_grad()) return;
    auto& gx = gbuf(x);
    const double* g = gamma.value().data();
    for (std::size_t r = 0; r < n; ++r) {
      double m1 = 0.0, m2 = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        const double d = dy[r * c + j] * g[j];
        m1 += d;
        m2 += d * (*xhat)[r * c + j];
      }
      m1 /= static_cast<double>(c);
      m2 /= static_cast<double>(c);
      for (std::size_t j = 0; j < c; ++j) {
        const double d = dy[r * c + j] * g[j];
        gx[r * c + j] += (*rstd)[r] * (d - m1 - (*xhat)[r * c + j] * m2);
      }
    }
  });
}

Var softmax_rows(const Var& x) {
  const std::size_t c = x.cols(), n = x.rows();
  Tensor y(x.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = x.value().data() + r * c;
    double* yr = y.data() + r * c;
    const double mx = *std::max_element(xr, xr + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += (yr[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < c; ++j) yr[j] /= s;
  }
  return make_result(std::move(y), {x}, [x, n, c](Node& self) {
    auto& gx = gbuf(x);
    const double* p = self.value.data();
    const double* dy = self.grad.data();
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += p[r * c + j] * dy[r * c + j];
      for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += p[r * c + j] * (dy[r * c + j] - dot);
    }
  });
}

Var gather_rows(const Var& x, std::shared_ptr<const std::vector<std::int64_t>> idx) {
  const std::size_t c = x.cols(), n = x.rows();
  Tensor y({idx->size(), c});
  for (std::size_t r = 0; r < idx->size(); ++r) {
    const std::int64_t s = (*idx)[r];
    if (s < 0) continue;
    HC_CHECK(static_cast<std::size_t>(s) < n, "gather_rows: index out of range");
    std::copy_n(x.value().data() + s * c, c, y.data() + r * c);
  }
  return make_result(std::move(y), {x}, [x, idx, c](Node& self) {
    auto& gx = gbuf(x);
    for (std::size_t r = 0; r < idx->size(); ++r) {
      const std::int64_t s = (*idx)[r];
      if (s < 0) continue;
      for (std::size_t j = 0; j < c; ++j) gx[s * c + j] += self.grad[r * c + j];
    }
  });
}

Var reshape(const Var& x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return make_result(std::move(y), {x}, [x](Node& self) {
    auto& gx = gbuf(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  HC_CHECK(!parts.empty(), "concat_cols: no inputs");
  const std::size_t n = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    HC_CHECK(p.rows() == n, "concat_cols: row count mismatch");
    total += p.cols();
  }
  Tensor y({n, total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.cols();
    for (std::size_t r = 0; r < n; ++r) std::copy_n(p.value().data() + r * c, c, y.data() + r * total + off);
    off += c;
  }
  return make_result(std::move(y), parts, [parts, n, total](Node& self) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      const std::size_t c = p.cols();
      if (p.requires_grad()) {
        auto& g = gbuf(p);
        for (std::size_t r = 0; r < n; ++r)
          for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[r * total + off + j];
      }
      off += c;
    }
  });
}

Var attention(const Var& qkv, const Var& bias, std::shared_ptr<const std::vector<std::uint8_t>> mask,
              const kernels::AttentionDims& dims) {
  HC_CHECK(qkv.rows() == dims.windows * dims.len && qkv.cols() == 3 * dims.channels(),
           "attention: qkv shape " + shape_str(qkv.shape()) + " does not match window layout");
  HC_CHECK(!bias.defined() || bias.value().size() == dims.len * dims.len * dims.heads,
           "attention: bias size mismatch");
  HC_CHECK(!mask || mask->size() == dims.windows * dims.len * dims.len, "attention: mask size mismatch");
  Tensor out({dims.windows * dims.len, dims.channels()});
  kernels::AttentionArgs args{dims, qkv.value().data(), bias.defined() ? bias.value().data() : nullptr,
                              mask ? mask->data() : nullptr};
  const bool rec = any_requires({&qkv, &bias});
  auto probs = std::make_shared<std::vector<double>>(rec ? dims.prob_size() : 0);
  kernels::attention_forward(args, out.data(), rec ? probs->data() : nullptr);
  return make_result(std::move(out), {qkv, bias}, [qkv, bias, mask, dims, probs](Node& self) {
    kernels::AttentionArgs args{dims, qkv.value().data(), bias.defined() ? bias.value().data() : nullptr,
                                mask ? mask->data() : nullptr};
    Tensor dqkv(qkv.shape());
    std::vector<double> scratch(dims.prob_size());
    double* dbias = bias.defined() && bias.requires_grad() ? gbuf(bias).data() : nullptr;
    kernels::attention_backward(args, probs->data(), self.grad.data(), dqkv.data(), dbias, scratch.data());
    if (qkv.requires_grad()) {
      auto& g = gbuf(qkv);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += dqkv[i];
    }
  });
}

Var masked_nll(const Var& logits, const std::vector<std::uint16_t>& targets) {
  const std::size_t n = logits.rows(), k = logits.cols();
  HC_CHECK(targets.size() == n, "masked_nll: target count mismatch");
  auto probs = std::make_shared<std::vector<double>>(n * k);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* xr = logits.value().data() + r * k;
    double* pr = probs->data() + r * k;
    const double mx = *std::max_element(xr, xr + k);
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += (pr[j] = std::exp(xr[j] - mx));
    for (std::size_t j = 0; j < k; ++j) pr[j] /= s;
    if (targets[r] == 0) continue;
    HC_CHECK(targets[r] <= k, "masked_nll: target id out of range");
    total += -(xr[targets[r] - 1] - mx - std::log(s));
    ++count;
  }
  const double inv = count ? 1.0 / static_cast<double>(count) : 0.0;
  Tensor y({1}, total * inv);
  return make_result(std::move(y), {logits}, [logits, targets, probs, n, k, inv](Node& self) {
    auto& g = gbuf(logits);
    const double s = self.grad[0] * inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (targets[r] == 0) continue;
      for (std::size_t j = 0; j < k; ++j) g[r * k + j] += s * (*probs)[r * k + j];
      g[r * k + targets[r] - 1] -= s;
    }
  });
}

Var sum(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v;
  return make_result(Tensor({1}, s), {x}, [x](Node& self) {
    auto& g = gbuf(x);
    for (auto& v : g.values()) v += self.grad[0];
  });
}

Var dot_const(const Var& x, const Tensor& weights) {
  HC_CHECK(weights.size() == x.value().size(), "dot_const: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) s += weights[i] * x.value()[i];
  return make_result(Tensor({1}, s), {x}, [x, weights](Node& self) {
    auto& g = gbuf(x);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[0] * weights[i];
  });
}

Var add_scalars(const std::vector<Var>& parts) {
  double s = 0.0;
  for (const auto& p : parts) s += p.value()[0];
  return make_result(Tensor({1}, s), parts, [parts](Node& self) {
    for (const auto& p : parts)
      if (p.requires_grad()) gbuf(p)[0] += self.grad[0];
  });
}

}  // namespace hiercrop::ag
