#pragma once

#include <cstddef>

#include "hiercrop/nn.hpp"

namespace hiercrop {

struct ScheduleConfig {
  double start = 6e-7, peak = 6e-5, final = 6e-6;
  std::size_t warmup = 1000, total = 10000;

  void validate() const;
};

// Linear warmup start -> peak over `warmup` steps, then cosine from peak to
// `final` at step `total`; constant afterwards.
double lr_at(std::size_t step, const ScheduleConfig& cfg);

struct AdamWConfig {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8, weight_decay = 0.01;
  // Store parameters at float32 precision after each step, so a float32
  // checkpoint reloads to exactly the trained weights.
  bool float32_params = true;
};

class AdamW {
 public:
  AdamW(nn::ParamStore& ps, const AdamWConfig& cfg);
  // Uses the current grads; does not clear them.
  void step(double lr);
  std::size_t steps() const { return t_; }

 private:
  nn::ParamStore* ps_;
  AdamWConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace hiercrop
