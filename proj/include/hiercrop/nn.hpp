#pragma once

#include <random>
#include <string>
#include <vector>

#include "hiercrop/autograd.hpp"
#include "hiercrop/window.hpp"

namespace hiercrop::nn {

struct NamedParam {
  std::string name;
  ag::Var var;
};

// Owns every trainable array of a model in creation order. Names are
// unique and stable; checkpoints are keyed by them.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : rng_(seed) {}

  ag::Var add(const std::string& name, Tensor init);
  // Normal(0, std) weights.
  ag::Var normal(const std::string& name, Shape shape, double std);
  ag::Var zeros(const std::string& name, Shape shape);
  ag::Var ones(const std::string& name, Shape shape);

  const std::vector<NamedParam>& params() const { return params_; }
  std::vector<NamedParam>& params() { return params_; }
  std::size_t scalar_count() const;
  void zero_grad();
  const NamedParam& find(const std::string& name) const;

 private:
  std::vector<NamedParam> params_;
  std::mt19937_64 rng_;
};

// Per-row affine map, i.e. a 1x1 convolution on a channels-last grid.
class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, bool bias = true);
  ag::Var operator()(const ag::Var& x) const { return ag::linear(x, w_, b_); }
  std::size_t in() const { return w_.value().dim(0); }
  std::size_t out() const { return w_.value().dim(1); }
  const ag::Var& weight() const { return w_; }
  const ag::Var& bias() const { return b_; }

 private:
  ag::Var w_, b_;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& ps, const std::string& name, std::size_t dim);
  ag::Var operator()(const ag::Var& x) const { return ag::layer_norm(x, g_, b_); }

 private:
  ag::Var g_, b_;
};

// Pre-norm transformer layer: x + MSA(LN(x)), then x + MLP(LN(x)).
// The attention runs over the windows described by a WindowLayout; a
// global layout gives standard ViT self-attention.
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParamStore& ps, const std::string& name, std::size_t dim, std::size_t heads,
                   std::size_t mlp_hidden, const WindowLayout& layout, bool rel_bias);

  ag::Var operator()(const ag::Var& x) const;
  const WindowLayout& layout() const { return layout_; }

 private:
  LayerNorm ln1_, ln2_;
  Linear qkv_, proj_, fc1_, fc2_;
  ag::Var bias_table_;
  WindowLayout layout_;
  std::size_t heads_ = 1;
};

// out[r*i + a, r*j + b, e] = x[i, j, (a*r + b)*E + e]
Tensor pixel_shuffle(const Tensor& x, std::size_t r);
Tensor pixel_unshuffle(const Tensor& x, std::size_t r);
// Row index map for shuffling an [h, w, r*r*E] grid viewed as rows of E.
std::shared_ptr<const std::vector<std::int64_t>> pixel_shuffle_index(std::size_t h, std::size_t w,
                                                                     std::size_t r);
// x: [h, w, r*r*E] -> [r*h, r*w, E], differentiable.
ag::Var pixel_shuffle(const ag::Var& x, std::size_t h, std::size_t w, std::size_t r);

}  // namespace hiercrop::nn
