#include "hiercrop/fusion_cascade.hpp"

#include <algorithm>

namespace hiercrop {

std::string to_string(HeadsMode m) { return m == HeadsMode::kHierarchical ? "hierarchical" : "independent"; }

HeadsMode heads_mode_from(const std::string& s) {
  if (s == "hierarchical") return HeadsMode::kHierarchical;
  if (s == "independent") return HeadsMode::kIndependent;
  throw std::invalid_argument("unknown heads mode '" + s + "' (hierarchical | independent)");
}

std::string ModalityConfig::label() const {
  std::string s = "S2";
  if (use_prior) s += "+Prior";
  if (use_hyper) s += "+Hyper";
  if (heads == HeadsMode::kIndependent) s += "/independent";
  return s;
}

PriorEncoding encode_prior(const LabelStack* prior, const std::array<std::size_t, kLevels>& sizes, std::size_t h,
                           std::size_t w) {
  PriorEncoding enc;
  for (int k = 1; k <= kLevels; ++k) {
    const std::size_t ch = sizes[k - 1] + 1;
    Tensor t({h * w, ch}, 0.0);
    if (prior) {
      HC_CHECK(prior->height == h && prior->width == w, "prior map grid mismatch");
      const auto lv = prior->level(k);
      for (std::size_t i = 0; i < h * w; ++i) {
        HC_CHECK(lv[i] < ch, "prior id out of range at level " + std::to_string(k));
        t[i * ch + lv[i]] = 1.0;
      }
    }
    enc.onehot[k - 1] = std::move(t);
  }
  return enc;
}

ag::Var concat_features(const std::optional<ag::Var>& hyper, const ag::Var& msi) {
  const Shape grid = msi.shape();
  ag::Var m = ag::reshape(msi, {msi.rows(), msi.cols()});
  if (!hyper) return m;
  HC_CHECK(hyper->shape().size() == grid.size() &&
               std::equal(grid.begin(), grid.end() - 1, hyper->shape().begin()),
           "concat_features: grid mismatch " + shape_str(hyper->shape()) + " vs " + shape_str(grid));
  return ag::concat_cols({ag::reshape(*hyper, {hyper->rows(), hyper->cols()}), m});
}

CascadeHeads::CascadeHeads(nn::ParamStore& ps, std::size_t feature_dim, const std::array<std::size_t, kLevels>& sizes,
                           HeadsMode mode, const std::string& name)
    : mode_(mode), sizes_(sizes) {
  for (int k = 1; k <= kLevels; ++k) {
    HC_CHECK(sizes[k - 1] > 0, "cascade heads: level " + std::to_string(k) + " has no classes");
    std::size_t in = feature_dim + sizes[k - 1] + 1;
    if (mode == HeadsMode::kHierarchical && k > 1) in += sizes[k - 2];
    heads_[k - 1] = nn::Linear(ps, name + ".level" + std::to_string(k), in, sizes[k - 1]);
  }
}

CascadeOutputs CascadeHeads::operator()(const ag::Var& features, const PriorEncoding& priors) const {
  CascadeOutputs out;
  for (int k = 1; k <= kLevels; ++k) {
    const Tensor& r = priors.onehot[k - 1];
    HC_CHECK(r.rows() == features.rows() && r.cols() == sizes_[k - 1] + 1,
             "cascade heads: prior encoding does not match level " + std::to_string(k));
    std::vector<ag::Var> parts;
    if (mode_ == HeadsMode::kHierarchical && k > 1) parts.push_back(out.probs[k - 2]);
    parts.push_back(features);
    parts.push_back(ag::constant(r));
    ag::Var in = ag::concat_cols(parts);
    HC_CHECK(in.cols() == heads_[k - 1].in(), "cascade heads: level " + std::to_string(k) + " expects " +
                                                  std::to_string(heads_[k - 1].in()) + " input channels, got " +
                                                  std::to_string(in.cols()));
    out.logits[k - 1] = heads_[k - 1](in);
    out.probs[k - 1] = ag::softmax_rows(out.logits[k - 1]);
  }
  return out;
}

LossBreakdown composite_loss(const CascadeOutputs& out, const LabelStack& labels) {
  LossBreakdown b;
  std::vector<ag::Var> terms;
  for (int k = 1; k <= kLevels; ++k) {
    const auto lv = labels.level(k);
    HC_CHECK(out.logits[k - 1].rows() == lv.size(), "composite_loss: label grid does not match predictions");
    std::vector<ClassId> targets(lv.begin(), lv.end());
    b.labeled[k - 1] = static_cast<std::size_t>(std::count_if(targets.begin(), targets.end(), [](ClassId v) { return v != 0; }));
    ag::Var term = ag::masked_nll(out.logits[k - 1], targets);
    b.per_level[k - 1] = term.value()[0];
    terms.push_back(term);
  }
  b.total = ag::add_scalars(terms);
  return b;
}

LabelStack predict_labels(const CascadeOutputs& out, std::size_t h, std::size_t w) {
  LabelStack s(h, w);
  for (int k = 1; k <= kLevels; ++k) {
    const Tensor& p = out.logits[k - 1].value();
    const std::size_t n = p.cols();
    auto lv = s.level(k);
    for (std::size_t i = 0; i < h * w; ++i) {
      const double* row = p.data() + i * n;
      lv[i] = static_cast<ClassId>(std::max_element(row, row + n) - row + 1);
    }
  }
  return s;
}

}  // namespace hiercrop
