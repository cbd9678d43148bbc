#pragma once

// Per-row building blocks shared by the serial and OpenMP kernel drivers.

#include <algorithm>
#include <cmath>
#include <limits>

#include "hiercrop/kernels.hpp"

namespace hiercrop::kernels::detail {

inline void gemm_row(const double* x, const double* w, const double* b, double* y, std::size_t in,
                     std::size_t out) {
  if (b) {
    std::copy(b, b + out, y);
  } else {
    std::fill(y, y + out, 0.0);
  }
  for (std::size_t k = 0; k < in; ++k) {
    const double xv = x[k];
    const double* wr = w + k * out;
    for (std::size_t o = 0; o < out; ++o) y[o] += xv * wr[o];
  }
}

inline void gemm_nt_row(const double* dy, const double* w, double* dx, std::size_t in, std::size_t out) {
  for (std::size_t k = 0; k < in; ++k) {
    const double* wr = w + k * out;
    double s = 0.0;
    for (std::size_t o = 0; o < out; ++o) s += dy[o] * wr[o];
    dx[k] = s;
  }
}

// dw row k accumulated over all n samples, sample order ascending.
inline void gemm_tn_row(const double* x, const double* dy, double* dwk, std::size_t k, std::size_t n,
                        std::size_t in, std::size_t out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xv = x[i * in + k];
    if (xv == 0.0) continue;
    const double* dyr = dy + i * out;
    for (std::size_t o = 0; o < out; ++o) dwk[o] += xv * dyr[o];
  }
}

struct AttnIndex {
  const AttentionArgs& a;
  std::size_t c3() const { return 3 * a.dims.channels(); }
  const double* q(std::size_t w, std::size_t h, std::size_t i) const {
    return a.qkv + (w * a.dims.len + i) * c3() + h * a.dims.head_dim;
  }
  const double* k(std::size_t w, std::size_t h, std::size_t j) const {
    return q(w, h, j) + a.dims.channels();
  }
  const double* v(std::size_t w, std::size_t h, std::size_t j) const {
    return q(w, h, j) + 2 * a.dims.channels();
  }
  bool visible(std::size_t w, std::size_t i, std::size_t j) const {
    return !a.mask || a.mask[(w * a.dims.len + i) * a.dims.len + j] != 0;
  }
  double bias(std::size_t h, std::size_t i, std::size_t j) const {
    return a.bias ? a.bias[(i * a.dims.len + j) * a.dims.heads + h] : 0.0;
  }
};

// Softmax weights for query i of (window w, head h) into p[len]; writes the
// attended output into out (head slice of the output row).
inline void attention_row(const AttentionArgs& a, std::size_t w, std::size_t h, std::size_t i, double* p,
                          double* out) {
  const AttnIndex ix{a};
  const auto& d = a.dims;
  const double* q = ix.q(w, h, i);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d.len; ++j) {
    if (!ix.visible(w, i, j)) {
      p[j] = -std::numeric_limits<double>::infinity();
      continue;
    }
    const double* kj = ix.k(w, h, j);
    double s = 0.0;
    for (std::size_t c = 0; c < d.head_dim; ++c) s += q[c] * kj[c];
    s = s * d.scale + ix.bias(h, i, j);
    p[j] = s;
    mx = std::max(mx, s);
  }
  std::fill(out, out + d.head_dim, 0.0);
  if (mx == -std::numeric_limits<double>::infinity()) {
    std::fill(p, p + d.len, 0.0);
    return;
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < d.len; ++j) {
    p[j] = std::isinf(p[j]) ? 0.0 : std::exp(p[j] - mx);
    sum += p[j];
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < d.len; ++j) {
    p[j] *= inv;
    if (p[j] == 0.0) continue;
    const double* vj = ix.v(w, h, j);
    for (std::size_t c = 0; c < d.head_dim; ++c) out[c] += p[j] * vj[c];
  }
}

// Phase 1 of backward for query row i: dS row into ds[len], dq into dq.
inline void attention_back_query(const AttentionArgs& a, std::size_t w, std::size_t h, std::size_t i,
                                 const double* p, const double* dout, double* ds, double* dq) {
  const AttnIndex ix{a};
  const auto& d = a.dims;
  double dot = 0.0;
  for (std::size_t j = 0; j < d.len; ++j) {
    if (p[j] == 0.0) {
      ds[j] = 0.0;
      continue;
    }
    const double* vj = ix.v(w, h, j);
    double dp = 0.0;
    for (std::size_t c = 0; c < d.head_dim; ++c) dp += dout[c] * vj[c];
    ds[j] = dp;
    dot += p[j] * dp;
  }
  std::fill(dq, dq + d.head_dim, 0.0);
  for (std::size_t j = 0; j < d.len; ++j) {
    if (p[j] == 0.0) continue;
    ds[j] = p[j] * (ds[j] - dot);
    const double* kj = ix.k(w, h, j);
    const double g = ds[j] * d.scale;
    for (std::size_t c = 0; c < d.head_dim; ++c) dq[c] += g * kj[c];
  }
}

// Phase 2 for key/value row j: dk, dv from all queries of the window.
inline void attention_back_key(const AttentionArgs& a, std::size_t w, std::size_t h, std::size_t j,
                               const double* probs_wh, const double* ds_wh, const double* dout, double* dk,
                               double* dv) {
  const AttnIndex ix{a};
  const auto& d = a.dims;
  const std::size_t cout = d.channels();
  std::fill(dk, dk + d.head_dim, 0.0);
  std::fill(dv, dv + d.head_dim, 0.0);
  for (std::size_t i = 0; i < d.len; ++i) {
    const double pij = probs_wh[i * d.len + j];
    if (pij == 0.0) continue;
    const double g = ds_wh[i * d.len + j] * d.scale;
    const double* qi = ix.q(w, h, i);
    const double* doi = dout + (w * d.len + i) * cout + h * d.head_dim;
    for (std::size_t c = 0; c < d.head_dim; ++c) {
      dk[c] += g * qi[c];
      dv[c] += pij * doi[c];
    }
  }
}

}  // namespace hiercrop::kernels::detail
