#include "hiercrop/schedule.hpp"

#include <cmath>
#include <numbers>

namespace hiercrop {

void ScheduleConfig::validate() const {
  HC_CHECK(start >= 0 && start <= peak, "schedule: need 0 <= start <= peak");
  HC_CHECK(final >= 0 && final <= peak, "schedule: need 0 <= final <= peak");
  HC_CHECK(warmup <= total, "schedule: warmup exceeds total iterations");
}

double lr_at(std::size_t step, const ScheduleConfig& c) {
  if (step < c.warmup) return c.start + (c.peak - c.start) * static_cast<double>(step) / static_cast<double>(c.warmup);
  if (step >= c.total) return c.total == c.warmup ? c.peak : c.final;
  const double u = static_cast<double>(step - c.warmup) / static_cast<double>(c.total - c.warmup);
  return c.final + 0.5 * (c.peak - c.final) * (1.0 + std::cos(std::numbers::pi * u));
}

AdamW::AdamW(nn::ParamStore& ps, const AdamWConfig& cfg) : ps_(&ps), cfg_(cfg) {
  for (const auto& p : ps.params()) {
    m_.emplace_back(p.var.value().shape());
    v_.emplace_back(p.var.value().shape());
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  auto& params = ps_->params();
  HC_CHECK(params.size() == m_.size(), "optimizer: parameter set changed after construction");
  for (std::size_t i = 0; i < params.size(); ++i) {
    ag::Var& var = params[i].var;
    double* w = var.value().data();
    const Tensor& gt = var.grad();
    if (gt.size() == 0) continue;
    const double* g = gt.data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    const std::size_t n = var.value().size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = cfg_.beta1 * m[j] + (1 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1 - cfg_.beta2) * g[j] * g[j];
      const double upd = (m[j] / bc1) / (std::sqrt(v[j] / bc2) + cfg_.eps);
      w[j] -= lr * (upd + cfg_.weight_decay * w[j]);
      if (cfg_.float32_params) w[j] = static_cast<float>(w[j]);
    }
  }
}

}  // namespace hiercrop
