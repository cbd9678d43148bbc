#include <algorithm>
#include <vector>

#include "kernels_detail.hpp"

namespace hiercrop::kernels::serial {

void gemm(const double* x, const double* w, const double* b, double* y, std::size_t n, std::size_t in,
          std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) detail::gemm_row(x + i * in, w, b, y + i * out, in, out);
}

void gemm_nt(const double* dy, const double* w, double* dx, std::size_t n, std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) detail::gemm_nt_row(dy + i * out, w, dx + i * in, in, out);
}

void gemm_tn_acc(const double* x, const double* dy, double* dw, std::size_t n, std::size_t in,
                 std::size_t out) {
  for (std::size_t k = 0; k < in; ++k) detail::gemm_tn_row(x, dy, dw + k * out, k, n, in, out);
}

void attention_forward(const AttentionArgs& a, double* out, double* probs) {
  const auto& d = a.dims;
  std::vector<double> scratch(d.len);
  for (std::size_t w = 0; w < d.windows; ++w)
    for (std::size_t h = 0; h < d.heads; ++h)
      for (std::size_t i = 0; i < d.len; ++i) {
        double* p = probs ? probs + ((w * d.heads + h) * d.len + i) * d.len : scratch.data();
        detail::attention_row(a, w, h, i, p, out + (w * d.len + i) * d.channels() + h * d.head_dim);
      }
}

void attention_backward(const AttentionArgs& a, const double* probs, const double* dout, double* dqkv,
                        double* dbias, double* scratch) {
  const auto& d = a.dims;
  const std::size_t c = d.channels();
  for (std::size_t w = 0; w < d.windows; ++w)
    for (std::size_t h = 0; h < d.heads; ++h) {
      const std::size_t base = (w * d.heads + h) * d.len * d.len;
      for (std::size_t i = 0; i < d.len; ++i) {
        const std::size_t row = w * d.len + i;
        detail::attention_back_query(a, w, h, i, probs + base + i * d.len, dout + row * c + h * d.head_dim,
                                     scratch + base + i * d.len, dqkv + row * 3 * c + h * d.head_dim);
      }
      for (std::size_t j = 0; j < d.len; ++j) {
        const std::size_t row = w * d.len + j;
        double* dk = dqkv + row * 3 * c + c + h * d.head_dim;
        detail::attention_back_key(a, w, h, j, probs + base, scratch + base, dout, dk, dk + c);
      }
    }
  if (!dbias) return;
  for (std::size_t h = 0; h < d.heads; ++h)
    for (std::size_t ij = 0; ij < d.len * d.len; ++ij) {
      double s = 0.0;
      for (std::size_t w = 0; w < d.windows; ++w) s += scratch[(w * d.heads + h) * d.len * d.len + ij];
      dbias[ij * d.heads + h] += s;
    }
}

}  // namespace hiercrop::kernels::serial
