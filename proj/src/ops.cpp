#include "tegcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kernels.hpp"

namespace tegcn {

namespace {

Tape& common_tape(const Var& a, const Var& b, const char* op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw ConfigError(std::string(op) + ": operands live on different tapes");
  }
  return a.tape();
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
  }
}

void add_into(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var add(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b, "add");
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  add_into(out, b.value());
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ia)) add_into(t.grad_buffer(ia), g);
    if (t.requires_grad(ib)) add_into(t.grad_buffer(ib), g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b, "sub");
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ia)) add_into(t.grad_buffer(ia), g);
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b, "mul");
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad_buffer(ia);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(const Var& a, double s) {
  Tensor out = a.value();
  for (auto& v : out.data()) v *= s;
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, s](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * g[i];
  });
}

Var relu(const Var& a) {
  Tensor out = a.value();
  for (auto& v : out.data()) v = v > 0.0 ? v : 0.0;
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& x = t.value(ia);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() != 2 || B.rank() != 2 || A.dim(1) != B.dim(0)) {
    throw DimensionError("matmul: cannot multiply " + shape_str(A.shape()) + " by " + shape_str(B.shape()));
  }
  const std::size_t m = A.dim(0), k = A.dim(1), n = B.dim(1);
  Tensor out(Shape{m, n});
  kernels::gemm_nn(m, k, n, A.data().data(), B.data().data(), out.data().data());
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ia)) {
      kernels::gemm_nt(m, n, k, g.data().data(), t.value(ib).data().data(), t.grad_buffer(ia).data().data());
    }
    if (t.requires_grad(ib)) {
      kernels::gemm_tn(k, m, n, t.value(ia).data().data(), g.data().data(), t.grad_buffer(ib).data().data());
    }
  });
}

Var softmax_rows(const Var& m) {
  const Tensor& x = m.value();
  if (x.rank() < 1) throw DimensionError("softmax_rows: empty shape");
  const std::size_t cols = x.shape().back();
  const std::size_t rows = x.size() / cols;
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data().data() + r * cols;
    double* yr = out.data().data() + r * cols;
    double mx = xr[0];
    for (std::size_t c = 0; c < cols; ++c) {
      if (std::isnan(xr[c])) throw NumericError("softmax_rows: NaN input in row " + std::to_string(r));
      mx = std::max(mx, xr[c]);
    }
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      s += yr[c];
    }
    for (std::size_t c = 0; c < cols; ++c) yr[c] /= s;
  }
  const auto im = m.id();
  return m.tape().record(std::move(out), {im}, [im, rows, cols](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad_buffer(im);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t off = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += g[off + c] * y[off + c];
      for (std::size_t c = 0; c < cols; ++c) gx[off + c] += y[off + c] * (g[off + c] - dot);
    }
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    add_into(t.grad_buffer(ia), t.grad_buffer(self));
  });
}

Var permute(const Var& a, const std::vector<std::size_t>& perm) {
  const Tensor& x = a.value();
  const std::size_t rank = x.rank();
  if (perm.size() != rank) throw DimensionError("permute: permutation length does not match rank");
  std::vector<bool> seen(rank, false);
  for (auto p : perm) {
    if (p >= rank || seen[p]) throw DimensionError("permute: invalid permutation");
    seen[p] = true;
  }
  Shape out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i) out_shape[i] = x.dim(perm[i]);

  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank - 1; i > 0; --i) in_strides[i - 1] = in_strides[i] * x.dim(i);
  // map[k] = flat input index of output element k
  std::vector<std::size_t> map(x.size());
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t k = 0; k < map.size(); ++k) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) src += idx[i] * in_strides[perm[i]];
    map[k] = src;
    for (std::size_t i = rank; i-- > 0;) {
      if (++idx[i] < out_shape[i]) break;
      idx[i] = 0;
    }
  }
  Tensor out(out_shape);
  for (std::size_t k = 0; k < map.size(); ++k) out[k] = x[map[k]];
  const auto ia = a.id();
  return a.tape().record(std::move(out), {ia}, [ia, map = std::move(map)](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& ga = t.grad_buffer(ia);
    for (std::size_t k = 0; k < map.size(); ++k) ga[map[k]] += g[k];
  });
}

Var sum_all(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const auto ia = a.id();
  return a.tape().record(Tensor::scalar(s), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad_buffer(self)[0];
    for (auto& v : t.grad_buffer(ia).data()) v += g;
  });
}

Var mean_all(const Var& a) {
  return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

Var channel_mix(const Var& w, const Var& x) {
  Tape& tape = common_tape(w, x, "channel_mix");
  const Tensor& W = w.value();
  const Tensor& X = x.value();
  require_rank(W, 2, "channel_mix", "weight");
  require_rank(X, 4, "channel_mix", "input");
  if (W.dim(1) != X.dim(1)) {
    throw DimensionError("channel_mix: weight " + shape_str(W.shape()) + " does not accept input " +
                         shape_str(X.shape()));
  }
  const std::size_t batch = X.dim(0), cin = X.dim(1), cout = W.dim(0), tj = X.dim(2) * X.dim(3);
  Tensor out(Shape{batch, cout, X.dim(2), X.dim(3)});
  for (std::size_t b = 0; b < batch; ++b) {
    kernels::gemm_nn(cout, cin, tj, W.data().data(), X.data().data() + b * cin * tj,
                     out.data().data() + b * cout * tj);
  }
  const auto iw = w.id(), ix = x.id();
  return tape.record(std::move(out), {iw, ix}, [iw, ix, batch, cin, cout, tj](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(iw)) {
      Tensor& gw = t.grad_buffer(iw);
      const Tensor& xv = t.value(ix);
      for (std::size_t b = 0; b < batch; ++b) {
        kernels::gemm_nt(cout, tj, cin, g.data().data() + b * cout * tj, xv.data().data() + b * cin * tj,
                         gw.data().data());
      }
    }
    if (t.requires_grad(ix)) {
      Tensor& gx = t.grad_buffer(ix);
      const Tensor& wv = t.value(iw);
      for (std::size_t b = 0; b < batch; ++b) {
        kernels::gemm_tn(cin, cout, tj, wv.data().data(), g.data().data() + b * cout * tj,
                         gx.data().data() + b * cin * tj);
      }
    }
  });
}

Var joint_mix(const Var& x, const Var& a) {
  Tape& tape = common_tape(x, a, "joint_mix");
  const Tensor& X = x.value();
  const Tensor& A = a.value();
  require_rank(X, 4, "joint_mix", "input");
  require_rank(A, 2, "joint_mix", "adjacency");
  if (A.dim(0) != X.dim(3)) {
    throw DimensionError("joint_mix: input " + shape_str(X.shape()) + " has " + std::to_string(X.dim(3)) +
                         " joints but adjacency is " + shape_str(A.shape()));
  }
  const std::size_t rows = X.dim(0) * X.dim(1) * X.dim(2), jin = A.dim(0), jout = A.dim(1);
  Tensor out(Shape{X.dim(0), X.dim(1), X.dim(2), jout});
  kernels::gemm_nn(rows, jin, jout, X.data().data(), A.data().data(), out.data().data());
  const auto ix = x.id(), ia = a.id();
  return tape.record(std::move(out), {ix, ia}, [ix, ia, rows, jin, jout](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    if (t.requires_grad(ix)) {
      kernels::gemm_nt(rows, jout, jin, g.data().data(), t.value(ia).data().data(),
                       t.grad_buffer(ix).data().data());
    }
    if (t.requires_grad(ia)) {
      kernels::gemm_tn(jin, rows, jout, t.value(ix).data().data(), g.data().data(),
                       t.grad_buffer(ia).data().data());
    }
  });
}

Var temporal_mix(const Var& adj, const Var& x) {
  Tape& tape = common_tape(adj, x, "temporal_mix");
  const Tensor& A = adj.value();
  const Tensor& X = x.value();
  require_rank(A, 3, "temporal_mix", "adjacency");
  require_rank(X, 4, "temporal_mix", "input");
  const std::size_t batch = X.dim(0), ch = X.dim(1), frames = X.dim(2), joints = X.dim(3);
  if (A.dim(0) != batch || A.dim(1) != frames || A.dim(2) != frames) {
    throw DimensionError("temporal_mix: adjacency " + shape_str(A.shape()) + " does not match feature " +
                         shape_str(X.shape()));
  }
  Tensor out(X.shape());
  const std::size_t tt = frames * frames, tj = frames * joints;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t off = (b * ch + c) * tj;
      kernels::gemm_nn(frames, frames, joints, A.data().data() + b * tt, X.data().data() + off,
                       out.data().data() + off);
    }
  }
  const auto ia = adj.id(), ix = x.id();
  return tape.record(std::move(out), {ia, ix}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& av = t.value(ia);
    const Tensor& xv = t.value(ix);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t off = (b * ch + c) * tj;
        if (t.requires_grad(ia)) {
          kernels::gemm_nt(frames, joints, frames, g.data().data() + off, xv.data().data() + off,
                           t.grad_buffer(ia).data().data() + b * tt);
        }
        if (t.requires_grad(ix)) {
          kernels::gemm_tn(frames, frames, joints, av.data().data() + b * tt, g.data().data() + off,
                           t.grad_buffer(ix).data().data() + off);
        }
      }
    }
  });
}

Var temporal_corr(const Var& a, const Var& b) {
  Tape& tape = common_tape(a, b, "temporal_corr");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank(A, 4, "temporal_corr", "left operand");
  require_same_shape(A, B, "temporal_corr");
  const std::size_t batch = A.dim(0), ch = A.dim(1), frames = A.dim(2), joints = A.dim(3);
  const std::size_t tt = frames * frames, tj = frames * joints;
  Tensor out(Shape{batch, frames, frames});
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t off = (n * ch + c) * tj;
      kernels::gemm_nt(frames, joints, frames, A.data().data() + off, B.data().data() + off,
                       out.data().data() + n * tt);
    }
  }
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t off = (n * ch + c) * tj;
        if (t.requires_grad(ia)) {
          kernels::gemm_nn(frames, frames, joints, g.data().data() + n * tt, bv.data().data() + off,
                           t.grad_buffer(ia).data().data() + off);
        }
        if (t.requires_grad(ib)) {
          kernels::gemm_tn(frames, frames, joints, g.data().data() + n * tt, av.data().data() + off,
                           t.grad_buffer(ib).data().data() + off);
        }
      }
    }
  });
}

Var temporal_conv(const Var& x, const Var& w, std::size_t stride) {
  Tape& tape = common_tape(x, w, "temporal_conv");
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  require_rank(X, 4, "temporal_conv", "input");
  require_rank(W, 3, "temporal_conv", "kernel");
  if (stride == 0) throw ConfigError("temporal_conv: stride must be positive");
  const std::size_t batch = X.dim(0), cin = X.dim(1), frames = X.dim(2), joints = X.dim(3);
  const std::size_t cout = W.dim(0), ksize = W.dim(2);
  if (W.dim(1) != cin) {
    throw DimensionError("temporal_conv: kernel " + shape_str(W.shape()) + " does not accept input " +
                         shape_str(X.shape()));
  }
  if (ksize % 2 == 0) throw ConfigError("temporal_conv: kernel length must be odd");
  if (stride > 1 && frames < ksize) {
    throw DimensionError("temporal_conv: " + std::to_string(frames) + " frames is shorter than kernel " +
                         std::to_string(ksize) + " at stride " + std::to_string(stride));
  }
  const long pad = static_cast<long>(ksize - 1) / 2;
  const std::size_t tout = (frames + stride - 1) / stride;
  Tensor out(Shape{batch, cout, tout, joints});

  auto for_each_tap = [=](auto&& fn) {
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t o = 0; o < cout; ++o)
        for (std::size_t i = 0; i < cin; ++i)
          for (std::size_t k = 0; k < ksize; ++k)
            for (std::size_t to = 0; to < tout; ++to) {
              const long src = static_cast<long>(to * stride + k) - pad;
              if (src < 0 || src >= static_cast<long>(frames)) continue;
              fn(((b * cout + o) * tout + to) * joints, ((b * cin + i) * frames + src) * joints,
                 (o * cin + i) * ksize + k);
            }
  };

  {
    const double* xd = X.data().data();
    const double* wd = W.data().data();
    double* od = out.data().data();
    for_each_tap([&](std::size_t oo, std::size_t xo, std::size_t wo) {
      const double wv = wd[wo];
      for (std::size_t j = 0; j < joints; ++j) od[oo + j] += wv * xd[xo + j];
    });
  }
  const auto ix = x.id(), iw = w.id();
  return tape.record(std::move(out), {ix, iw}, [=](Tape& t, std::size_t self) {
    const double* gd = t.grad_buffer(self).data().data();
    const double* xd = t.value(ix).data().data();
    const double* wd = t.value(iw).data().data();
    double* gx = t.requires_grad(ix) ? t.grad_buffer(ix).data().data() : nullptr;
    double* gw = t.requires_grad(iw) ? t.grad_buffer(iw).data().data() : nullptr;
    for_each_tap([&](std::size_t oo, std::size_t xo, std::size_t wo) {
      if (gx) {
        const double wv = wd[wo];
        for (std::size_t j = 0; j < joints; ++j) gx[xo + j] += wv * gd[oo + j];
      }
      if (gw) {
        double s = 0.0;
        for (std::size_t j = 0; j < joints; ++j) s += gd[oo + j] * xd[xo + j];
        gw[wo] += s;
      }
    });
  });
}

Var learned_scores(const Var& g, const Var& w, const Var& bias) {
  Tape& tape = common_tape(g, w, "learned_scores");
  common_tape(g, bias, "learned_scores");
  const Tensor& G = g.value();
  const Tensor& W = w.value();
  const Tensor& Bv = bias.value();
  require_rank(G, 2, "learned_scores", "profile");
  require_rank(W, 2, "learned_scores", "kernel");
  const std::size_t batch = G.dim(0), frames = G.dim(1);
  if (W.dim(0) != frames || W.dim(1) != frames || Bv.size() != frames) {
    throw DimensionError("learned_scores: temporal profile " + shape_str(G.shape()) +
                         " does not match T-conv kernel " + shape_str(W.shape()) + " / bias " +
                         shape_str(Bv.shape()));
  }
  Tensor out(Shape{batch, frames, frames});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < frames; ++i)
      for (std::size_t j = 0; j < frames; ++j)
        out[(b * frames + i) * frames + j] = W.at(i, j) * G.at(b, j) + Bv[i];
  const auto ig = g.id(), iw = w.id(), ib = bias.id();
  return tape.record(std::move(out), {ig, iw, ib}, [=](Tape& t, std::size_t self) {
    const Tensor& d = t.grad_buffer(self);
    const Tensor& gv = t.value(ig);
    const Tensor& wv = t.value(iw);
    Tensor* dg = t.requires_grad(ig) ? &t.grad_buffer(ig) : nullptr;
    Tensor* dw = t.requires_grad(iw) ? &t.grad_buffer(iw) : nullptr;
    Tensor* db = t.requires_grad(ib) ? &t.grad_buffer(ib) : nullptr;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t i = 0; i < frames; ++i)
        for (std::size_t j = 0; j < frames; ++j) {
          const double dv = d[(b * frames + i) * frames + j];
          if (dg) dg->at(b, j) += dv * wv.at(i, j);
          if (dw) dw->at(i, j) += dv * gv.at(b, j);
          if (db) (*db)[i] += dv;
        }
  });
}

Var mean_pool_tj(const Var& x) {
  const Tensor& X = x.value();
  require_rank(X, 4, "mean_pool_tj", "input");
  const std::size_t rows = X.dim(0) * X.dim(1), tj = X.dim(2) * X.dim(3);
  Tensor out(Shape{X.dim(0), X.dim(1)});
  const double inv = 1.0 / static_cast<double>(tj);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < tj; ++k) s += X[r * tj + k];
    out[r] = s * inv;
  }
  const auto ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t k = 0; k < tj; ++k) gx[r * tj + k] += g[r] * inv;
  });
}

Var group_mean(const Var& x, std::size_t group) {
  const Tensor& X = x.value();
  require_rank(X, 2, "group_mean", "input");
  if (group == 0 || X.dim(0) % group != 0) {
    throw DimensionError("group_mean: " + std::to_string(X.dim(0)) + " rows not divisible by group " +
                         std::to_string(group));
  }
  const std::size_t groups = X.dim(0) / group, cols = X.dim(1);
  const double inv = 1.0 / static_cast<double>(group);
  Tensor out(Shape{groups, cols});
  for (std::size_t g = 0; g < groups; ++g)
    for (std::size_t c = 0; c < cols; ++c) {
      double s = 0.0;
      for (std::size_t m = 0; m < group; ++m) s += X.at(g * group + m, c);
      out.at(g, c) = s * inv;
    }
  const auto ix = x.id();
  return x.tape().record(std::move(out), {ix}, [=](Tape& t, std::size_t self) {
    const Tensor& d = t.grad_buffer(self);
    Tensor& gx = t.grad_buffer(ix);
    for (std::size_t g = 0; g < groups; ++g)
      for (std::size_t m = 0; m < group; ++m)
        for (std::size_t c = 0; c < cols; ++c) gx.at(g * group + m, c) += d.at(g, c) * inv;
  });
}

Var add_row_bias(const Var& x, const Var& bias) {
  Tape& tape = common_tape(x, bias, "add_row_bias");
  const Tensor& X = x.value();
  const Tensor& Bv = bias.value();
  require_rank(X, 2, "add_row_bias", "input");
  if (Bv.size() != X.dim(1)) {
    throw DimensionError("add_row_bias: bias " + shape_str(Bv.shape()) + " does not match " + shape_str(X.shape()));
  }
  Tensor out = X;
  for (std::size_t r = 0; r < X.dim(0); ++r)
    for (std::size_t c = 0; c < X.dim(1); ++c) out.at(r, c) += Bv[c];
  const auto ix = x.id(), ib = bias.id();
  const std::size_t rows = X.dim(0), cols = X.dim(1);
  return tape.record(std::move(out), {ix, ib}, [=](Tape& t, std::size_t self) {
    const Tensor& d = t.grad_buffer(self);
    if (t.requires_grad(ix)) add_into(t.grad_buffer(ix), d);
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad_buffer(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += d.at(r, c);
    }
  });
}

Var cross_entropy(const Var& logits, const std::vector<int>& labels) {
  const Tensor& L = logits.value();
  require_rank(L, 2, "cross_entropy", "logits");
  const std::size_t n = L.dim(0), k = L.dim(1);
  if (labels.size() != n) throw DimensionError("cross_entropy: label count does not match batch");
  Tensor probs(L.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
      throw ConfigError("cross_entropy: label " + std::to_string(labels[r]) + " outside " + std::to_string(k) +
                        " classes");
    }
    double mx = L.at(r, 0);
    for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, L.at(r, c));
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      probs.at(r, c) = std::exp(L.at(r, c) - mx);
      s += probs.at(r, c);
    }
    for (std::size_t c = 0; c < k; ++c) probs.at(r, c) /= s;
    loss += std::log(s) + mx - L.at(r, static_cast<std::size_t>(labels[r]));
  }
  loss /= static_cast<double>(n);
  const auto il = logits.id();
  return logits.tape().record(Tensor::scalar(loss), {il},
                              [il, n, k, labels, probs = std::move(probs)](Tape& t, std::size_t self) {
                                const double g = t.grad_buffer(self)[0] / static_cast<double>(n);
                                Tensor& gl = t.grad_buffer(il);
                                for (std::size_t r = 0; r < n; ++r)
                                  for (std::size_t c = 0; c < k; ++c) {
                                    const double onehot = static_cast<int>(c) == labels[r] ? 1.0 : 0.0;
                                    gl.at(r, c) += g * (probs.at(r, c) - onehot);
                                  }
                              });
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormStats& stats, bool train,
              double momentum, double eps) {
  Tape& tape = common_tape(x, gamma, "batchnorm");
  common_tape(x, beta, "batchnorm");
  const Tensor& X = x.value();
  if (X.rank() < 2) throw DimensionError("batchnorm: input needs a channel axis, got " + shape_str(X.shape()));
  const std::size_t batch = X.dim(0), ch = X.dim(1);
  const std::size_t inner = X.size() / (batch * ch);
  const std::size_t count = batch * inner;
  if (gamma.value().size() != ch || beta.value().size() != ch) {
    throw DimensionError("batchnorm: affine parameters do not match " + std::to_string(ch) + " channels");
  }
  if (stats.running_mean.size() != ch) {
    stats.running_mean = Tensor(Shape{ch}, 0.0);
    stats.running_var = Tensor(Shape{ch}, 1.0);
  }

  std::vector<double> mean(ch), inv_std(ch);
  if (train) {
    for (std::size_t c = 0; c < ch; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = X.data().data() + (b * ch + c) * inner;
        for (std::size_t k = 0; k < inner; ++k) s += p[k];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double* p = X.data().data() + (b * ch + c) * inner;
        for (std::size_t k = 0; k < inner; ++k) ss += (p[k] - mu) * (p[k] - mu);
      }
      const double var = ss / static_cast<double>(count);
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + eps);
      const double unbiased = count > 1 ? var * static_cast<double>(count) / static_cast<double>(count - 1) : var;
      stats.running_mean[c] = round_to_precision((1.0 - momentum) * stats.running_mean[c] + momentum * mu);
      stats.running_var[c] = round_to_precision((1.0 - momentum) * stats.running_var[c] + momentum * unbiased);
    }
  } else {
    for (std::size_t c = 0; c < ch; ++c) {
      mean[c] = stats.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(stats.running_var[c] + eps);
    }
  }

  Tensor xhat(X.shape());
  Tensor out(X.shape());
  const Tensor& G = gamma.value();
  const Tensor& Bt = beta.value();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t off = (b * ch + c) * inner;
      for (std::size_t k = 0; k < inner; ++k) {
        const double h = (X[off + k] - mean[c]) * inv_std[c];
        xhat[off + k] = h;
        out[off + k] = G[c] * h + Bt[c];
      }
    }
  const auto ix = x.id(), ig = gamma.id(), ib = beta.id();
  return tape.record(
      std::move(out), {ix, ig, ib},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, std::size_t self) {
        const Tensor& d = t.grad_buffer(self);
        const Tensor& gv = t.value(ig);
        std::vector<double> dsum(ch, 0.0), dxhat_sum(ch, 0.0);
        for (std::size_t b = 0; b < batch; ++b)
          for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t off = (b * ch + c) * inner;
            for (std::size_t k = 0; k < inner; ++k) {
              dsum[c] += d[off + k];
              dxhat_sum[c] += d[off + k] * xhat[off + k];
            }
          }
        if (t.requires_grad(ig)) {
          Tensor& gg = t.grad_buffer(ig);
          for (std::size_t c = 0; c < ch; ++c) gg[c] += dxhat_sum[c];
        }
        if (t.requires_grad(ib)) {
          Tensor& gb = t.grad_buffer(ib);
          for (std::size_t c = 0; c < ch; ++c) gb[c] += dsum[c];
        }
        if (t.requires_grad(ix)) {
          Tensor& gx = t.grad_buffer(ix);
          const double n = static_cast<double>(count);
          for (std::size_t b = 0; b < batch; ++b)
            for (std::size_t c = 0; c < ch; ++c) {
              const std::size_t off = (b * ch + c) * inner;
              const double k0 = gv[c] * inv_std[c];
              for (std::size_t k = 0; k < inner; ++k) {
                if (train) {
                  gx[off + k] += k0 * (d[off + k] - dsum[c] / n - xhat[off + k] * dxhat_sum[c] / n);
                } else {
                  gx[off + k] += k0 * d[off + k];
                }
              }
            }
        }
      });
}

}  // namespace tegcn
