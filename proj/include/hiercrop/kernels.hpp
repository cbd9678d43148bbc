#pragma once

// Dense kernels behind the autograd ops. Each kernel has a plain serial
// reference in `serial::` and an OpenMP version in `omp::` with the same
// summation order, so both produce identical results for any thread count.
// The tests compare the two; bench/ times them.

#include <cstddef>
#include <cstdint>

namespace hiercrop::kernels {

// Windowed multi-head attention over `windows` independent blocks of `len`
// tokens each. Row layout of qkv is [q | k | v], each of width heads*head_dim.
struct AttentionDims {
  std::size_t windows = 1;
  std::size_t len = 0;
  std::size_t heads = 1;
  std::size_t head_dim = 0;
  double scale = 1.0;

  std::size_t channels() const { return heads * head_dim; }
  std::size_t prob_size() const { return windows * heads * len * len; }
};

// Optional inputs may be null:
//   bias  [len*len*heads]     added to scores, shared by all windows
//   mask  [windows*len*len]   1 = key visible to query, 0 = masked
//   probs [windows*heads*len*len]  softmax weights saved for backward
// A query with every key masked produces a zero output row.
struct AttentionArgs {
  AttentionDims dims;
  const double* qkv = nullptr;
  const double* bias = nullptr;
  const std::uint8_t* mask = nullptr;
};

namespace serial {

// y[n,out] = x[n,in] * w[in,out] (+ b[out])
void gemm(const double* x, const double* w, const double* b, double* y, std::size_t n, std::size_t in,
          std::size_t out);
// dx[n,in] = dy[n,out] * w^T   (overwrites dx)
void gemm_nt(const double* dy, const double* w, double* dx, std::size_t n, std::size_t in, std::size_t out);
// dw[in,out] += x^T * dy
void gemm_tn_acc(const double* x, const double* dy, double* dw, std::size_t n, std::size_t in, std::size_t out);

void attention_forward(const AttentionArgs& a, double* out, double* probs);
// dqkv is overwritten; dbias (if non-null) is accumulated. `scratch` must
// hold prob_size() doubles.
void attention_backward(const AttentionArgs& a, const double* probs, const double* dout, double* dqkv,
                        double* dbias, double* scratch);

}  // namespace serial

namespace omp {

void gemm(const double* x, const double* w, const double* b, double* y, std::size_t n, std::size_t in,
          std::size_t out);
void gemm_nt(const double* dy, const double* w, double* dx, std::size_t n, std::size_t in, std::size_t out);
void gemm_tn_acc(const double* x, const double* dy, double* dw, std::size_t n, std::size_t in, std::size_t out);

void attention_forward(const AttentionArgs& a, double* out, double* probs);
void attention_backward(const AttentionArgs& a, const double* probs, const double* dout, double* dqkv,
                        double* dbias, double* scratch);

}  // namespace omp

// Thread control for the omp kernels. Results do not depend on it.
void set_num_threads(int n);
int num_threads();

// Dispatch used by the autograd ops: omp:: by default, serial:: when
// serial mode is on (fully single-threaded runs).
void set_serial(bool on);
bool serial_mode();

void gemm(const double* x, const double* w, const double* b, double* y, std::size_t n, std::size_t in,
          std::size_t out);
void gemm_nt(const double* dy, const double* w, double* dx, std::size_t n, std::size_t in, std::size_t out);
void gemm_tn_acc(const double* x, const double* dy, double* dw, std::size_t n, std::size_t in, std::size_t out);
void attention_forward(const AttentionArgs& a, double* out, double* probs);
void attention_backward(const AttentionArgs& a, const double* probs, const double* dout, double* dqkv,
                        double* dbias, double* scratch);

}  // namespace hiercrop::kernels
