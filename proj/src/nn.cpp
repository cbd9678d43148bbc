#include "hiercrop/nn.hpp"

#include <cmath>
#include <unordered_set>

namespace hiercrop::nn {

ag::Var ParamStore::add(const std::string& name, Tensor init) {
  for (const auto& p : params_) HC_CHECK(p.name != name, "duplicate parameter name " + name);
  params_.push_back({name, ag::parameter(std::move(init))});
  return params_.back().var;
}

ag::Var ParamStore::normal(const std::string& name, Shape shape, double std) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std);
  for (auto& v : t.values()) v = dist(rng_);
  return add(name, std::move(t));
}

ag::Var ParamStore::zeros(const std::string& name, Shape shape) { return add(name, Tensor(std::move(shape), 0.0)); }
ag::Var ParamStore::ones(const std::string& name, Shape shape) { return add(name, Tensor(std::move(shape), 1.0)); }

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var.value().size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p.var.zero_grad();
}

const NamedParam& ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw std::invalid_argument("no parameter named " + name);
}

Linear::Linear(ParamStore& ps, const std::string& name, std::size_t in, std::size_t out, bool bias) {
  w_ = ps.normal(name + ".weight", {in, out}, 1.0 / std::sqrt(static_cast<double>(in)));
  if (bias) b_ = ps.zeros(name + ".bias", {out});
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& name, std::size_t dim) {
  g_ = ps.ones(name + ".gamma", {dim});
  b_ = ps.zeros(name + ".beta", {dim});
}

TransformerLayer::TransformerLayer(ParamStore& ps, const std::string& name, std::size_t dim, std::size_t heads,
                                   std::size_t mlp_hidden, const WindowLayout& layout, bool rel_bias)
    : layout_(layout), heads_(heads) {
  HC_CHECK(heads > 0 && dim % heads == 0, name + ": embedding dim must divide into heads");
  ln1_ = LayerNorm(ps, name + ".ln1", dim);
  qkv_ = Linear(ps, name + ".qkv", dim, 3 * dim);
  proj_ = Linear(ps, name + ".proj", dim, dim);
  ln2_ = LayerNorm(ps, name + ".ln2", dim);
  fc1_ = Linear(ps, name + ".fc1", dim, mlp_hidden);
  fc2_ = Linear(ps, name + ".fc2", mlp_hidden, dim);
  if (rel_bias && layout.rel_index) bias_table_ = ps.normal(name + ".rel_bias", {layout.table_size, heads}, 0.02);
}

ag::Var TransformerLayer::operator()(const ag::Var& x) const {
  const std::size_t dim = x.cols();
  ag::Var h = ln1_(x);
  if (layout_.gather) h = ag::gather_rows(h, layout_.gather);
  kernels::AttentionDims dims{layout_.windows, layout_.len, heads_, dim / heads_,
                              1.0 / std::sqrt(static_cast<double>(dim / heads_))};
  ag::Var bias;
  if (bias_table_.defined()) bias = ag::gather_rows(bias_table_, layout_.rel_index);
  ag::Var a = proj_(ag::attention(qkv_(h), bias, layout_.mask, dims));
  if (layout_.scatter) a = ag::gather_rows(a, layout_.scatter);
  ag::Var y = ag::add(x, a);
  return ag::add(y, fc2_(ag::gelu(fc1_(ln2_(y)))));
}

std::shared_ptr<const std::vector<std::int64_t>> pixel_shuffle_index(std::size_t h, std::size_t w,
                                                                     std::size_t r) {
  // Output row (r*i + a, r*j + b) reads input sub-row ((i*w + j)*r*r + a*r + b).
  auto idx = std::make_shared<std::vector<std::int64_t>>(h * w * r * r);
  const std::size_t ow = w * r;
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = 0; b < r; ++b)
          (*idx)[(r * i + a) * ow + r * j + b] = static_cast<std::int64_t>((i * w + j) * r * r + a * r + b);
  return idx;
}

Tensor pixel_shuffle(const Tensor& x, std::size_t r) {
  HC_CHECK(x.rank() == 3, "pixel_shuffle expects [H, W, C]");
  HC_CHECK(r > 0 && x.dim(2) % (r * r) == 0, "pixel_shuffle: channels " + std::to_string(x.dim(2)) +
                                                  " not divisible by r^2 = " + std::to_string(r * r));
  const std::size_t h = x.dim(0), w = x.dim(1), e = x.dim(2) / (r * r);
  const auto idx = pixel_shuffle_index(h, w, r);
  Tensor y({h * r, w * r, e});
  for (std::size_t o = 0; o < idx->size(); ++o)
    std::copy_n(x.data() + (*idx)[o] * e, e, y.data() + o * e);
  return y;
}

Tensor pixel_unshuffle(const Tensor& x, std::size_t r) {
  HC_CHECK(x.rank() == 3, "pixel_unshuffle expects [H, W, C]");
  HC_CHECK(r > 0 && x.dim(0) % r == 0 && x.dim(1) % r == 0, "pixel_unshuffle: grid not divisible by r");
  const std::size_t h = x.dim(0) / r, w = x.dim(1) / r, e = x.dim(2);
  const auto idx = pixel_shuffle_index(h, w, r);
  Tensor y({h, w, e * r * r});
  for (std::size_t o = 0; o < idx->size(); ++o)
    std::copy_n(x.data() + o * e, e, y.data() + (*idx)[o] * e);
  return y;
}

ag::Var pixel_shuffle(const ag::Var& x, std::size_t h, std::size_t w, std::size_t r) {
  HC_CHECK(x.value().size() % (h * w * r * r) == 0 && x.rows() == h * w && x.cols() % (r * r) == 0,
           "pixel_shuffle: input " + shape_str(x.shape()) + " incompatible with grid and ratio");
  const std::size_t e = x.cols() / (r * r);
  ag::Var rows = ag::reshape(x, {h * w * r * r, e});
  return ag::gather_rows(rows, pixel_shuffle_index(h, w, r));
}

}  // namespace hiercrop::nn
