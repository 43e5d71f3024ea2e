#pragma once

// Shared test helpers: random tensors and scalar reference implementations.
// The references are written as plain loops over the index definitions and
// are kept independent of the library kernels.

#include <cmath>
#include <random>
#include <vector>

#include "tegcn/tensor.hpp"

namespace tegcn::oracle {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = d(rng);
  return t;
}

inline std::size_t rand_dim(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return lo + rng() % (hi - lo + 1);
}

// index helpers for [B, C, T, J]
inline std::size_t idx4(const Tensor& t, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return ((a * t.dim(1) + b) * t.dim(2) + c) * t.dim(3) + d;
}

inline Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
      out.at(i, j) = s;
    }
  return out;
}

inline Tensor naive_softmax_rows(const Tensor& m) {
  const std::size_t cols = m.shape().back();
  const std::size_t rows = m.size() / cols;
  Tensor out(m.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double denom = 0.0;
    for (std::size_t c = 0; c < cols; ++c) denom += std::exp(m[r * cols + c]);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = std::exp(m[r * cols + c]) / denom;
  }
  return out;
}

// Spatial graph conv: out[b,o,t,w] = sum_k sum_i sum_v W_k[o,i] x[b,i,t,v] A_k[v,w]
inline Tensor sg_oracle(const Tensor& x, const std::vector<Tensor>& w, const std::vector<Tensor>& a) {
  const std::size_t B = x.dim(0), Ci = x.dim(1), T = x.dim(2), J = x.dim(3), Co = w[0].dim(0);
  Tensor out(Shape{B, Co, T, J});
  for (std::size_t k = 0; k < w.size(); ++k)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < Co; ++o)
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t wj = 0; wj < J; ++wj) {
            double s = 0.0;
            for (std::size_t i = 0; i < Ci; ++i)
              for (std::size_t v = 0; v < J; ++v) s += w[k].at(o, i) * x[idx4(x, b, i, t, v)] * a[k].at(v, wj);
            out[idx4(out, b, o, t, wj)] += s;
          }
  return out;
}

// Sliding window along T with zero padding (K-1)/2.
inline Tensor tc_oracle(const Tensor& x, const Tensor& w, std::size_t stride) {
  const std::size_t B = x.dim(0), Ci = x.dim(1), T = x.dim(2), J = x.dim(3);
  const std::size_t Co = w.dim(0), K = w.dim(2);
  const long pad = static_cast<long>(K / 2);
  const std::size_t To = (T + stride - 1) / stride;
  Tensor out(Shape{B, Co, To, J});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t o = 0; o < Co; ++o)
      for (std::size_t t = 0; t < To; ++t)
        for (std::size_t v = 0; v < J; ++v) {
          double s = 0.0;
          for (std::size_t i = 0; i < Ci; ++i)
            for (std::size_t k = 0; k < K; ++k) {
              const long src = static_cast<long>(t * stride) + static_cast<long>(k) - pad;
              if (src < 0 || src >= static_cast<long>(T)) continue;
              s += w[(o * Ci + i) * K + k] * x[idx4(x, b, i, static_cast<std::size_t>(src), v)];
            }
          out[idx4(out, b, o, t, v)] = s;
        }
  return out;
}

// Relevance by inner products of explicit per-frame feature vectors.
// Returns [B, T, T].
inline Tensor calculated_oracle(const Tensor& x, const Tensor& wa, const Tensor& wb) {
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), J = x.dim(3), R = wa.dim(0);
  Tensor out(Shape{B, T, T});
  for (std::size_t b = 0; b < B; ++b) {
    // feature vectors of length R * J per frame
    std::vector<std::vector<double>> fa(T, std::vector<double>(R * J)), fb(T, std::vector<double>(R * J));
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t r = 0; r < R; ++r)
        for (std::size_t v = 0; v < J; ++v) {
          double sa = 0.0, sb = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            sa += wa.at(r, c) * x[idx4(x, b, c, t, v)];
            sb += wb.at(r, c) * x[idx4(x, b, c, t, v)];
          }
          fa[t][r * J + v] = sa;
          fb[t][r * J + v] = sb;
        }
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t j = 0; j < T; ++j) {
        double dot = 0.0;
        for (std::size_t q = 0; q < R * J; ++q) dot += fa[i][q] * fb[j][q];
        out[(b * T + i) * T + j] = dot;
      }
  }
  return out;
}

// Three explicit contractions: channels, joints, then the frame map.
inline Tensor learned_oracle(const Tensor& x, const Tensor& wc, const Tensor& wj, const Tensor& wt, const Tensor& bt) {
  const std::size_t B = x.dim(0), C = x.dim(1), T = x.dim(2), J = x.dim(3);
  Tensor out(Shape{B, T, T});
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<std::vector<double>> stage1(T, std::vector<double>(J, 0.0));
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t v = 0; v < J; ++v)
        for (std::size_t c = 0; c < C; ++c) stage1[t][v] += wc[c] * x[idx4(x, b, c, t, v)];
    std::vector<double> stage2(T, 0.0);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t v = 0; v < J; ++v) stage2[t] += stage1[t][v] * wj[v];
    for (std::size_t i = 0; i < T; ++i)
      for (std::size_t j = 0; j < T; ++j) out[(b * T + i) * T + j] = wt.at(i, j) * stage2[j] + bt[i];
  }
  return out;
}

// out[b,o,i,v] = sum_n sum_j A_n[b,i,j] sum_c W_n[o,c] f[b,c,j,v]
inline Tensor tgc_oracle(const Tensor& f, const std::vector<Tensor>& adj, const std::vector<Tensor>& w) {
  const std::size_t B = f.dim(0), C = f.dim(1), T = f.dim(2), J = f.dim(3), Co = w[0].dim(0);
  Tensor out(Shape{B, Co, T, J});
  for (std::size_t n = 0; n < adj.size(); ++n)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t o = 0; o < Co; ++o)
        for (std::size_t i = 0; i < T; ++i)
          for (std::size_t v = 0; v < J; ++v) {
            double s = 0.0;
            for (std::size_t j = 0; j < T; ++j) {
              double fw = 0.0;
              for (std::size_t c = 0; c < C; ++c) fw += w[n].at(o, c) * f[idx4(f, b, c, j, v)];
              s += adj[n][(b * T + i) * T + j] * fw;
            }
            out[idx4(out, b, o, i, v)] += s;
          }
  return out;
}

}  // namespace tegcn::oracle
