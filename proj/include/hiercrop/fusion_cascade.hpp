#pragma once

// Cross-modal concatenation, the four cascaded per-level heads conditioned
// on prior-year crop maps, and the composite masked cross-entropy.

#include <array>
#include <optional>
#include <string>

#include "hiercrop/labels.hpp"
#include "hiercrop/nn.hpp"

namespace hiercrop {

enum class HeadsMode { kHierarchical, kIndependent };

std::string to_string(HeadsMode m);
HeadsMode heads_mode_from(const std::string& s);

struct ModalityConfig {
  bool use_hyper = true;
  bool use_prior = true;
  HeadsMode heads = HeadsMode::kHierarchical;

  std::string label() const;
};

// One-hot prior grids R_k, [H*W, N_k + 1]; channel 0 = background/unknown.
struct PriorEncoding {
  std::array<Tensor, kLevels> onehot;
};

// All-zero grids when `prior` is null (priors disabled).
PriorEncoding encode_prior(const LabelStack* prior, const std::array<std::size_t, kLevels>& level_sizes,
                           std::size_t h, std::size_t w);

struct CascadeOutputs {
  std::array<ag::Var, kLevels> logits;  // [H*W, N_k]
  std::array<ag::Var, kLevels> probs;   // softmax of logits
};

// [H, W, E] hyper (optional, first) and multispectral features -> [H*W, C].
ag::Var concat_features(const std::optional<ag::Var>& hyper, const ag::Var& msi);

class CascadeHeads {
 public:
  CascadeHeads() = default;
  CascadeHeads(nn::ParamStore& ps, std::size_t feature_dim, const std::array<std::size_t, kLevels>& level_sizes,
               HeadsMode mode, const std::string& name = "heads");

  CascadeOutputs operator()(const ag::Var& features, const PriorEncoding& priors) const;

  HeadsMode mode() const { return mode_; }
  std::size_t input_channels(int level) const { return heads_[level - 1].in(); }
  nn::Linear& head(int level) { return heads_[level - 1]; }

 private:
  HeadsMode mode_ = HeadsMode::kHierarchical;
  std::array<std::size_t, kLevels> sizes_{};
  std::array<nn::Linear, kLevels> heads_;
};

struct LossBreakdown {
  ag::Var total;
  std::array<double, kLevels> per_level{};
  std::array<std::size_t, kLevels> labeled{};  // pixels in V_k
};

// Sum over levels of the mean -log p[label] over pixels labeled at that
// level. Levels with no labeled pixel contribute 0 (labeled[k] == 0).
LossBreakdown composite_loss(const CascadeOutputs& out, const LabelStack& labels);

// Argmax ids (1-based) per level, [4, H, W].
LabelStack predict_labels(const CascadeOutputs& out, std::size_t h, std::size_t w);

}  // namespace hiercrop
