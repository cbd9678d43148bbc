#include <omp.h>

#include <vector>

#include "kernels_detail.hpp"

namespace hiercrop::kernels {

void set_num_threads(int n) { omp_set_num_threads(n < 1 ? 1 : n); }
int num_threads() { return omp_get_max_threads(); }

namespace {
bool g_serial = false;
}

void set_serial(bool on) { g_serial = on; }
bool serial_mode() { return g_serial; }

void gemm(const double* x, const double* w, const double* b, double* y, std::size_t n, std::size_t in,
          std::size_t out) {
  g_serial ? serial::gemm(x, w, b, y, n, in, out) : omp::gemm(x, w, b, y, n, in, out);
}
void gemm_nt(const double* dy, const double* w, double* dx, std::size_t n, std::size_t in, std::size_t out) {
  g_serial ? serial::gemm_nt(dy, w, dx, n, in, out) : omp::gemm_nt(dy, w, dx, n, in, out);
}
void gemm_tn_acc(const double* x, const double* dy, double* dw, std::size_t n, std::size_t in,
                 std::size_t out) {
  g_serial ? serial::gemm_tn_acc(x, dy, dw, n, in, out) : omp::gemm_tn_acc(x, dy, dw, n, in, out);
}
void attention_forward(const AttentionArgs& a, double* out, double* probs) {
  g_serial ? serial::attention_forward(a, out, probs) : omp::attention_forward(a, out, probs);
}
void attention_backward(const AttentionArgs& a, const double* probs, const double* dout, double* dqkv,
                        double* dbias, double* scratch) {
  g_serial ? serial::attention_backward(a, probs, dout, dqkv, dbias, scratch)
           : omp::attention_backward(a, probs, dout, dqkv, dbias, scratch);
}

namespace omp {

namespace {
// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1 << 15;
}

void gemm(const double* x, const double* w, const double* b, double* y, std::size_t n, std::size_t in,
          std::size_t out) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * in * out > kParallelWork)
  for (std::ptrdiff_t i = 0; i < nn; ++i) detail::gemm_row(x + i * in, w, b, y + i * out, in, out);
}

void gemm_nt(const double* dy, const double* w, double* dx, std::size_t n, std::size_t in, std::size_t out) {
  const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n * in * out > kParallelWork)
  for (std::ptrdiff_t i = 0; i < nn; ++i) detail::gemm_nt_row(dy + i * out, w, dx + i * in, in, out);
}

void gemm_tn_acc(const double* x, const double* dy, double* dw, std::size_t n, std::size_t in,
                 std::size_t out) {
  const auto nk = static_cast<std::ptrdiff_t>(in);
#pragma omp parallel for schedule(static) if (n * in * out > kParallelWork)
  for (std::ptrdiff_t k = 0; k < nk; ++k) detail::gemm_tn_row(x, dy, dw + k * out, k, n, in, out);
}

void attention_forward(const AttentionArgs& a, double* out, double* probs) {
  const auto& d = a.dims;
  const auto rows = static_cast<std::ptrdiff_t>(d.windows * d.heads * d.len);
  const bool par = d.windows * d.heads * d.len * d.len * d.head_dim > kParallelWork;
#pragma omp parallel if (par)
  {
    std::vector<double> scratch(probs ? 0 : d.len);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      const std::size_t i = r % d.len;
      const std::size_t wh = r / d.len;
      const std::size_t h = wh % d.heads;
      const std::size_t w = wh / d.heads;
      double* p = probs ? probs + static_cast<std::size_t>(r) * d.len : scratch.data();
      detail::attention_row(a, w, h, i, p, out + (w * d.len + i) * d.channels() + h * d.head_dim);
    }
  }
}

void attention_backward(const AttentionArgs& a, const double* probs, const double* dout, double* dqkv,
                        double* dbias, double* scratch) {
  const auto& d = a.dims;
  const std::size_t c = d.channels();
  const auto rows = static_cast<std::ptrdiff_t>(d.windows * d.heads * d.len);
  const bool par = d.windows * d.heads * d.len * d.len * d.head_dim > kParallelWork;
#pragma omp parallel if (par)
  {
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      const std::size_t i = r % d.len;
      const std::size_t wh = r / d.len;
      const std::size_t h = wh % d.heads;
      const std::size_t w = wh / d.heads;
      const std::size_t row = w * d.len + i;
      detail::attention_back_query(a, w, h, i, probs + r * d.len, dout + row * c + h * d.head_dim,
                                   scratch + r * d.len, dqkv + row * 3 * c + h * d.head_dim);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
      const std::size_t j = r % d.len;
      const std::size_t wh = r / d.len;
      const std::size_t h = wh % d.heads;
      const std::size_t w = wh / d.heads;
      const std::size_t base = wh * d.len * d.len;
      double* dk = dqkv + (w * d.len + j) * 3 * c + c + h * d.head_dim;
      detail::attention_back_key(a, w, h, j, probs + base, scratch + base, dout, dk, dk + c);
    }
    if (dbias) {
      const auto nb = static_cast<std::ptrdiff_t>(d.heads * d.len * d.len);
#pragma omp for schedule(static)
      for (std::ptrdiff_t r = 0; r < nb; ++r) {
        const std::size_t h = r / (d.len * d.len);
        const std::size_t ij = r % (d.len * d.len);
        double s = 0.0;
        for (std::size_t w = 0; w < d.windows; ++w) s += scratch[(w * d.heads + h) * d.len * d.len + ij];
        dbias[ij * d.heads + h] += s;
      }
    }
  }
}

}  // namespace omp
}  // namespace hiercrop::kernels
