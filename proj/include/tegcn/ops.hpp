#pragma once

#include <vector>

#include "tegcn/autodiff.hpp"

// Differentiable operations. Feature maps are laid out (B, C, T, J): batch
// (batch x body) first, then channel, frame, joint. There is no broadcasting
// beyond scalar scaling; every shape combination below is explicit.
namespace tegcn {

// Elementwise.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var relu(const Var& a);

/// Matrix product of [m x k] and [k x n].
Var matmul(const Var& a, const Var& b);

/// Softmax over the last axis (each "row"), max-subtracted. Throws NumericError on NaN input.
Var softmax_rows(const Var& m);

Var reshape(const Var& a, Shape shape);
Var permute(const Var& a, const std::vector<std::size_t>& perm);

Var sum_all(const Var& a);
Var mean_all(const Var& a);

// 1x1 convolution over the channel axis: out[b,o,t,j] = sum_i w[o,i] x[b,i,t,j].
Var channel_mix(const Var& w, const Var& x);

// Right-multiplication along the joint axis: out[b,c,t,j'] = sum_j x[b,c,t,j] a[j,j'].
Var joint_mix(const Var& x, const Var& a);

// Per-sample temporal mixing: out[b,c,t,j] = sum_s adj[b,t,s] x[b,c,s,j].
Var temporal_mix(const Var& adj, const Var& x);

// Inner products of temporal features: r[b,i,j] = sum_{c,v} a[b,c,i,v] b[b,c,j,v].
Var temporal_corr(const Var& a, const Var& b);

// Convolution along T with kernel w[o,i,k], symmetric zero padding (k-1)/2
// and the given stride. Output length is ceil(T / stride).
Var temporal_conv(const Var& x, const Var& w, std::size_t stride);

// Learned relevance map: r[b,i,j] = w[i,j] * g[b,j] + bias[i].
// g is the squeezed temporal profile [B, T].
Var learned_scores(const Var& g, const Var& w, const Var& bias);

// [B, C, T, J] -> [B, C], mean over T and J.
Var mean_pool_tj(const Var& x);

// [R, C] -> [R / group, C], mean over consecutive groups of rows.
Var group_mean(const Var& x, std::size_t group);

// [N, K] + bias[K] on every row.
Var add_row_bias(const Var& x, const Var& bias);

// Mean softmax cross-entropy of logits [N, K] against class indices.
Var cross_entropy(const Var& logits, const std::vector<int>& labels);

struct BatchNormStats {
  Tensor running_mean;
  Tensor running_var;
};

/// Normalizes axis 1 of a rank>=2 tensor. Train mode uses batch statistics and
/// updates the running estimates with the given momentum.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormStats& stats, bool train,
              double momentum = 0.1, double eps = 1e-5);

}  // namespace tegcn
