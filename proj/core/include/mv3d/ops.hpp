#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "mv3d/graph.hpp"
#include "mv3d/threads.hpp"

// Differentiable operations on GraphT<T>. Each op validates shapes up front,
// computes its forward value, and appends a node whose backward closure
// accumulates exact reverse-mode gradients into the input nodes. Kernels may
// split work across threads, but every output element is reduced in a fixed
// sequential order, so results do not depend on the worker count.

namespace mv3d {
namespace ops {

namespace detail {

inline void fail(const std::string& msg) { throw std::invalid_argument(msg); }

// Valid kernel-tap range [lo, hi] for output index o: taps t such that
// o*stride + t - pad lands inside [0, extent).
struct TapTable {
  std::vector<int> lo, hi;

  TapTable(int extent, int out_extent, int stride, int k, int pad) {
    lo.resize(out_extent);
    hi.resize(out_extent);
    for (int o = 0; o < out_extent; ++o) {
      const int base = o * stride - pad;
      lo[o] = base < 0 ? -base : 0;
      hi[o] = std::min(k - 1, extent - 1 - base);
    }
  }
};

template <typename T>
void conv2d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int stride,
                    int pad, TensorT<T>& out) {
  const int ci = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int co = w.shape[0], k = w.shape[2];
  const int oh = out.shape[1], ow = out.shape[2];
  const TapTable ty(h, oh, stride, k, pad);
  const TapTable tx(wd, ow, stride, k, pad);
  parallel_for(co, [&](std::int64_t oc0, std::int64_t oc1) {
    for (int oc = static_cast<int>(oc0); oc < oc1; ++oc) {
      T* plane = out.data.data() + static_cast<std::size_t>(oc) * oh * ow;
      std::fill(plane, plane + static_cast<std::size_t>(oh) * ow, b.data[oc]);
      for (int ic = 0; ic < ci; ++ic) {
        const T* xin = x.data.data() + static_cast<std::size_t>(ic) * h * wd;
        const T* wbase = w.data.data() + ((static_cast<std::size_t>(oc) * ci + ic) * k) * k;
        for (int oy = 0; oy < oh; ++oy) {
          T* orow = plane + static_cast<std::size_t>(oy) * ow;
          const int iy0 = oy * stride - pad;
          for (int ky = ty.lo[oy]; ky <= ty.hi[oy]; ++ky) {
            const T* xrow = xin + static_cast<std::size_t>(iy0 + ky) * wd;
            const T* wrow = wbase + static_cast<std::size_t>(ky) * k;
            if (stride == 1) {
              // saxpy over the contiguous output row per tap
              for (int kx = 0; kx < k; ++kx) {
                const T wv = wrow[kx];
                const int ox_lo = std::max(0, pad - kx);
                const int ox_hi = std::min(ow - 1, wd - 1 + pad - kx);
                const T* xr = xrow + kx - pad;
                for (int ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += wv * xr[ox];
              }
            } else {
              // contiguous k-length dot product per output element
              for (int ox = 0; ox < ow; ++ox) {
                const T* xr = xrow + ox * stride - pad;
                T acc = T(0);
                for (int kx = tx.lo[ox]; kx <= tx.hi[ox]; ++kx) acc += wrow[kx] * xr[kx];
                orow[ox] += acc;
              }
            }
          }
        }
      }
    }
  });
}

template <typename T>
void conv2d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& gy, int stride,
                     int pad, TensorT<T>& gx, TensorT<T>& gw, TensorT<T>& gb) {
  const int ci = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int co = w.shape[0], k = w.shape[2];
  const int oh = gy.shape[1], ow = gy.shape[2];
  const TapTable ty(h, oh, stride, k, pad);
  const TapTable tx(wd, ow, stride, k, pad);
  // d/dx: each input plane is owned by one task; every (output element, tap)
  // scatters a contiguous k-length row segment into it.
  parallel_for(ci, [&](std::int64_t ic0, std::int64_t ic1) {
    for (int ic = static_cast<int>(ic0); ic < ic1; ++ic) {
      T* gplane = gx.data.data() + static_cast<std::size_t>(ic) * h * wd;
      for (int oc = 0; oc < co; ++oc) {
        const T* gyp = gy.data.data() + static_cast<std::size_t>(oc) * oh * ow;
        const T* wbase = w.data.data() + ((static_cast<std::size_t>(oc) * ci + ic) * k) * k;
        for (int oy = 0; oy < oh; ++oy) {
          const T* gyrow = gyp + static_cast<std::size_t>(oy) * ow;
          const int iy0 = oy * stride - pad;
          for (int ky = ty.lo[oy]; ky <= ty.hi[oy]; ++ky) {
            T* grow = gplane + static_cast<std::size_t>(iy0 + ky) * wd;
            const T* wrow = wbase + static_cast<std::size_t>(ky) * k;
            for (int ox = 0; ox < ow; ++ox) {
              const T gv = gyrow[ox];
              T* gr = grow + ox * stride - pad;
              for (int kx = tx.lo[ox]; kx <= tx.hi[ox]; ++kx) gr[kx] += gv * wrow[kx];
            }
          }
        }
      }
    }
  });
  // d/dw, d/db: one output-channel slab per task; taps accumulate into the
  // contiguous kernel row.
  parallel_for(co, [&](std::int64_t oc0, std::int64_t oc1) {
    for (int oc = static_cast<int>(oc0); oc < oc1; ++oc) {
      const T* gyp = gy.data.data() + static_cast<std::size_t>(oc) * oh * ow;
      for (int ic = 0; ic < ci; ++ic) {
        const T* xin = x.data.data() + static_cast<std::size_t>(ic) * h * wd;
        T* gwbase = gw.data.data() + ((static_cast<std::size_t>(oc) * ci + ic) * k) * k;
        for (int oy = 0; oy < oh; ++oy) {
          const T* gyrow = gyp + static_cast<std::size_t>(oy) * ow;
          const int iy0 = oy * stride - pad;
          for (int ky = ty.lo[oy]; ky <= ty.hi[oy]; ++ky) {
            const T* xrow = xin + static_cast<std::size_t>(iy0 + ky) * wd;
            T* gwrow = gwbase + static_cast<std::size_t>(ky) * k;
            for (int ox = 0; ox < ow; ++ox) {
              const T gv = gyrow[ox];
              const T* xr = xrow + ox * stride - pad;
              for (int kx = tx.lo[ox]; kx <= tx.hi[ox]; ++kx) gwrow[kx] += gv * xr[kx];
            }
          }
        }
      }
      T bacc = T(0);
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i) bacc += gyp[i];
      gb.data[oc] += bacc;
    }
  });
}

}  // namespace detail

// Strided cross-correlation with zero padding; pad must be (k-1)/2 so a
// stride-s layer maps HxW exactly onto (H/s)x(W/s).
template <typename T>
typename GraphT<T>::NodeId conv2d(GraphT<T>& g, typename GraphT<T>::NodeId x,
                                  typename GraphT<T>::NodeId w, typename GraphT<T>::NodeId b,
                                  int stride, int pad) {
  const auto& xv = g.value(x);
  const auto& wv = g.value(w);
  const auto& bv = g.value(b);
  if (xv.rank() != 3) detail::fail("conv2d: input must be rank 3, got " + shape_str(xv.shape));
  if (wv.rank() != 4) detail::fail("conv2d: kernel must be rank 4, got " + shape_str(wv.shape));
  if (bv.rank() != 1) detail::fail("conv2d: bias must be rank 1, got " + shape_str(bv.shape));
  const int k = wv.shape[2];
  if (wv.shape[3] != k) detail::fail("conv2d: kernel must be square, got " + shape_str(wv.shape));
  if (k % 2 == 0) detail::fail("conv2d: kernel size " + std::to_string(k) + " must be odd");
  if (pad != (k - 1) / 2) {
    detail::fail("conv2d: pad " + std::to_string(pad) + " must be (k-1)/2 = " +
                 std::to_string((k - 1) / 2));
  }
  if (wv.shape[1] != xv.shape[0]) {
    detail::fail("conv2d: input channels " + std::to_string(xv.shape[0]) +
                 " != kernel input channels " + std::to_string(wv.shape[1]));
  }
  if (bv.shape[0] != wv.shape[0]) {
    detail::fail("conv2d: bias length " + std::to_string(bv.shape[0]) +
                 " != output channels " + std::to_string(wv.shape[0]));
  }
  if (stride < 1 || xv.shape[1] % stride || xv.shape[2] % stride) {
    detail::fail("conv2d: spatial dims " + std::to_string(xv.shape[1]) + "x" +
                 std::to_string(xv.shape[2]) + " not divisible by stride " +
                 std::to_string(stride));
  }
  TensorT<T> out({wv.shape[0], xv.shape[1] / stride, xv.shape[2] / stride});
  detail::conv2d_forward(xv, wv, bv, stride, pad, out);
  return g.add("conv2d", {x, w, b}, std::move(out),
               [stride, pad](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 detail::conv2d_backward(gr.value(n.inputs[0]), gr.value(n.inputs[1]), n.grad,
                                         stride, pad, gr.grad(n.inputs[0]), gr.grad(n.inputs[1]),
                                         gr.grad(n.inputs[2]));
               });
}

namespace detail {

// Tap parity tables for the fused up-convolution. For output index o, the
// zero-inserted input U(t) = x(t/2) is nonzero only at even t = o + k - pad,
// so the valid taps are k0, k0+2, ... mapping onto the contiguous x indices
// j0, j0+1, ...
struct UpTapTable {
  std::vector<int> k0, j0, n;

  UpTapTable(int in_extent, int out_extent, int k, int pad) {
    k0.resize(out_extent);
    j0.resize(out_extent);
    n.resize(out_extent);
    for (int o = 0; o < out_extent; ++o) {
      int lo = std::max(0, pad - o);
      if (((o + lo - pad) & 1) != 0) ++lo;  // bump to an even t
      const int t_first = o + lo - pad;
      int count = 0;
      if (lo < k && t_first <= 2 * in_extent - 2) {
        const int t_last = std::min(o + k - 1 - pad, 2 * in_extent - 2);
        count = (t_last - t_first) / 2 + 1;
      }
      k0[o] = lo;
      j0[o] = count > 0 ? t_first / 2 : 0;
      n[o] = count;
    }
  }
};

template <typename T>
void up_conv2d_forward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& b, int pad,
                       TensorT<T>& out) {
  const int ci = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int co = w.shape[0], k = w.shape[2];
  const int oh = out.shape[1], ow = out.shape[2];
  const UpTapTable ty(h, oh, k, pad);
  const UpTapTable tx(wd, ow, k, pad);
  parallel_for(co, [&](std::int64_t oc0, std::int64_t oc1) {
    for (int oc = static_cast<int>(oc0); oc < oc1; ++oc) {
      T* plane = out.data.data() + static_cast<std::size_t>(oc) * oh * ow;
      std::fill(plane, plane + static_cast<std::size_t>(oh) * ow, b.data[oc]);
      for (int ic = 0; ic < ci; ++ic) {
        const T* xin = x.data.data() + static_cast<std::size_t>(ic) * h * wd;
        const T* wbase = w.data.data() + ((static_cast<std::size_t>(oc) * ci + ic) * k) * k;
        for (int u = 0; u < oh; ++u) {
          T* orow = plane + static_cast<std::size_t>(u) * ow;
          for (int my = 0; my < ty.n[u]; ++my) {
            const int ky = ty.k0[u] + 2 * my;
            const T* xrow = xin + static_cast<std::size_t>(ty.j0[u] + my) * wd;
            const T* wrow = wbase + static_cast<std::size_t>(ky) * k;
            for (int v = 0; v < ow; ++v) {
              const T* xr = xrow + tx.j0[v];
              const int kx0 = tx.k0[v];
              T acc = T(0);
              for (int m = 0; m < tx.n[v]; ++m) acc += wrow[kx0 + 2 * m] * xr[m];
              orow[v] += acc;
            }
          }
        }
      }
    }
  });
}

template <typename T>
void up_conv2d_backward(const TensorT<T>& x, const TensorT<T>& w, const TensorT<T>& gy, int pad,
                        TensorT<T>& gx, TensorT<T>& gw, TensorT<T>& gb) {
  const int ci = x.shape[0], h = x.shape[1], wd = x.shape[2];
  const int co = w.shape[0], k = w.shape[2];
  const int oh = gy.shape[1], ow = gy.shape[2];
  const UpTapTable ty(h, oh, k, pad);
  const UpTapTable tx(wd, ow, k, pad);
  parallel_for(ci, [&](std::int64_t ic0, std::int64_t ic1) {
    for (int ic = static_cast<int>(ic0); ic < ic1; ++ic) {
      T* gplane = gx.data.data() + static_cast<std::size_t>(ic) * h * wd;
      for (int oc = 0; oc < co; ++oc) {
        const T* gyp = gy.data.data() + static_cast<std::size_t>(oc) * oh * ow;
        const T* wbase = w.data.data() + ((static_cast<std::size_t>(oc) * ci + ic) * k) * k;
        for (int u = 0; u < oh; ++u) {
          const T* gyrow = gyp + static_cast<std::size_t>(u) * ow;
          for (int my = 0; my < ty.n[u]; ++my) {
            const int ky = ty.k0[u] + 2 * my;
            T* grow = gplane + static_cast<std::size_t>(ty.j0[u] + my) * wd;
            const T* wrow = wbase + static_cast<std::size_t>(ky) * k;
            for (int v = 0; v < ow; ++v) {
              const T gv = gyrow[v];
              T* gr = grow + tx.j0[v];
              const int kx0 = tx.k0[v];
              for (int m = 0; m < tx.n[v]; ++m) gr[m] += gv * wrow[kx0 + 2 * m];
            }
          }
        }
      }
    }
  });
  parallel_for(co, [&](std::int64_t oc0, std::int64_t oc1) {
    for (int oc = static_cast<int>(oc0); oc < oc1; ++oc) {
      const T* gyp = gy.data.data() + static_cast<std::size_t>(oc) * oh * ow;
      for (int ic = 0; ic < ci; ++ic) {
        const T* xin = x.data.data() + static_cast<std::size_t>(ic) * h * wd;
        T* gwbase = gw.data.data() + ((static_cast<std::size_t>(oc) * ci + ic) * k) * k;
        for (int u = 0; u < oh; ++u) {
          const T* gyrow = gyp + static_cast<std::size_t>(u) * ow;
          for (int my = 0; my < ty.n[u]; ++my) {
            const int ky = ty.k0[u] + 2 * my;
            const T* xrow = xin + static_cast<std::size_t>(ty.j0[u] + my) * wd;
            T* gwrow = gwbase + static_cast<std::size_t>(ky) * k;
            for (int v = 0; v < ow; ++v) {
              const T gv = gyrow[v];
              const T* xr = xrow + tx.j0[v];
              const int kx0 = tx.k0[v];
              for (int m = 0; m < tx.n[v]; ++m) gwrow[kx0 + 2 * m] += gv * xr[m];
            }
          }
        }
      }
      T bacc = T(0);
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(oh) * ow; ++i) bacc += gyp[i];
      gb.data[oc] += bacc;
    }
  });
}

}  // namespace detail

// Up-convolution: zero-insertion 2x upsampling followed by a stride-1
// convolution, fused so the structurally zero taps are skipped. Identical in
// value and gradient to upsample_zero + conv2d.
template <typename T>
typename GraphT<T>::NodeId up_conv2d(GraphT<T>& g, typename GraphT<T>::NodeId x,
                                     typename GraphT<T>::NodeId w, typename GraphT<T>::NodeId b,
                                     int pad) {
  const auto& xv = g.value(x);
  const auto& wv = g.value(w);
  const auto& bv = g.value(b);
  if (xv.rank() != 3) detail::fail("up_conv2d: input must be rank 3, got " + shape_str(xv.shape));
  if (wv.rank() != 4) detail::fail("up_conv2d: kernel must be rank 4, got " + shape_str(wv.shape));
  const int k = wv.shape[2];
  if (wv.shape[3] != k || k % 2 == 0) {
    detail::fail("up_conv2d: kernel must be square with odd size, got " + shape_str(wv.shape));
  }
  if (pad != (k - 1) / 2) {
    detail::fail("up_conv2d: pad " + std::to_string(pad) + " must be (k-1)/2 = " +
                 std::to_string((k - 1) / 2));
  }
  if (wv.shape[1] != xv.shape[0]) {
    detail::fail("up_conv2d: input channels " + std::to_string(xv.shape[0]) +
                 " != kernel input channels " + std::to_string(wv.shape[1]));
  }
  if (bv.rank() != 1 || bv.shape[0] != wv.shape[0]) {
    detail::fail("up_conv2d: bias shape " + shape_str(bv.shape) + " != output channels " +
                 std::to_string(wv.shape[0]));
  }
  TensorT<T> out({wv.shape[0], 2 * xv.shape[1], 2 * xv.shape[2]});
  detail::up_conv2d_forward(xv, wv, bv, pad, out);
  return g.add("up_conv2d", {x, w, b}, std::move(out),
               [pad](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 detail::up_conv2d_backward(gr.value(n.inputs[0]), gr.value(n.inputs[1]), n.grad,
                                            pad, gr.grad(n.inputs[0]), gr.grad(n.inputs[1]),
                                            gr.grad(n.inputs[2]));
               });
}

// 2x zero-insertion upsampling: each pixel becomes the top-left element of a
// 2x2 block, the other three entries are exactly zero.
template <typename T>
typename GraphT<T>::NodeId upsample_zero(GraphT<T>& g, typename GraphT<T>::NodeId x) {
  const auto& xv = g.value(x);
  if (xv.rank() != 3) detail::fail("upsample_zero: input must be rank 3, got " + shape_str(xv.shape));
  const int c = xv.shape[0], h = xv.shape[1], w = xv.shape[2];
  TensorT<T> out({c, 2 * h, 2 * w});
  for (int ch = 0; ch < c; ++ch)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) out.at(ch, 2 * i, 2 * j) = xv.at(ch, i, j);
  return g.add("upsample_zero", {x}, std::move(out),
               [c, h, w](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 auto& gx = gr.grad(n.inputs[0]);
                 const auto& gy = n.grad;
                 for (int ch = 0; ch < c; ++ch)
                   for (int i = 0; i < h; ++i)
                     for (int j = 0; j < w; ++j) gx.at(ch, i, j) += gy.at(ch, 2 * i, 2 * j);
               });
}

template <typename T>
typename GraphT<T>::NodeId fully_connected(GraphT<T>& g, typename GraphT<T>::NodeId x,
                                           typename GraphT<T>::NodeId w,
                                           typename GraphT<T>::NodeId b) {
  const auto& xv = g.value(x);
  const auto& wv = g.value(w);
  const auto& bv = g.value(b);
  if (xv.rank() != 1) detail::fail("fully_connected: input must be rank 1, got " + shape_str(xv.shape));
  if (wv.rank() != 2) detail::fail("fully_connected: weight must be rank 2, got " + shape_str(wv.shape));
  if (wv.shape[1] != xv.shape[0]) {
    detail::fail("fully_connected: weight columns " + std::to_string(wv.shape[1]) +
                 " != input length " + std::to_string(xv.shape[0]));
  }
  if (bv.rank() != 1 || bv.shape[0] != wv.shape[0]) {
    detail::fail("fully_connected: bias shape " + shape_str(bv.shape) + " != rows " +
                 std::to_string(wv.shape[0]));
  }
  const int m = wv.shape[0], nn = wv.shape[1];
  TensorT<T> out({m});
  for (int i = 0; i < m; ++i) {
    const T* row = wv.data.data() + static_cast<std::size_t>(i) * nn;
    T acc = bv.data[i];
    for (int j = 0; j < nn; ++j) acc += row[j] * xv.data[j];
    out.data[i] = acc;
  }
  return g.add("fully_connected", {x, w, b}, std::move(out),
               [m, nn](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 const auto& xv = gr.value(n.inputs[0]);
                 const auto& wv = gr.value(n.inputs[1]);
                 auto& gx = gr.grad(n.inputs[0]);
                 auto& gw = gr.grad(n.inputs[1]);
                 auto& gb = gr.grad(n.inputs[2]);
                 const auto& gy = n.grad;
                 for (int i = 0; i < m; ++i) {
                   const T gi = gy.data[i];
                   const T* wrow = wv.data.data() + static_cast<std::size_t>(i) * nn;
                   T* gwrow = gw.data.data() + static_cast<std::size_t>(i) * nn;
                   for (int j = 0; j < nn; ++j) {
                     gx.data[j] += gi * wrow[j];
                     gwrow[j] += gi * xv.data[j];
                   }
                   gb.data[i] += gi;
                 }
               });
}

// max(x, slope*x); the subgradient at exactly 0 takes the positive branch.
template <typename T>
typename GraphT<T>::NodeId leaky_relu(GraphT<T>& g, typename GraphT<T>::NodeId x, T slope) {
  if (!(slope > T(0) && slope < T(1)))
    detail::fail("leaky_relu: slope must be in (0,1), got " + std::to_string(slope));
  const auto& xv = g.value(x);
  TensorT<T> out(xv.shape);
  for (std::int64_t i = 0; i < xv.numel(); ++i) {
    const T v = xv.data[i];
    out.data[i] = v >= T(0) ? v : slope * v;
  }
  return g.add("leaky_relu", {x}, std::move(out),
               [slope](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 const auto& xv = gr.value(n.inputs[0]);
                 auto& gx = gr.grad(n.inputs[0]);
                 for (std::int64_t i = 0; i < xv.numel(); ++i) {
                   gx.data[i] += xv.data[i] >= T(0) ? n.grad.data[i] : slope * n.grad.data[i];
                 }
               });
}

template <typename T>
typename GraphT<T>::NodeId tanh_act(GraphT<T>& g, typename GraphT<T>::NodeId x) {
  const auto& xv = g.value(x);
  TensorT<T> out(xv.shape);
  for (std::int64_t i = 0; i < xv.numel(); ++i) out.data[i] = std::tanh(xv.data[i]);
  return g.add("tanh", {x}, std::move(out), [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
    auto& n = gr.node(self);
    auto& gx = gr.grad(n.inputs[0]);
    for (std::int64_t i = 0; i < n.value.numel(); ++i) {
      const T y = n.value.data[i];
      gx.data[i] += (T(1) - y * y) * n.grad.data[i];
    }
  });
}

template <typename T>
typename GraphT<T>::NodeId sigmoid(GraphT<T>& g, typename GraphT<T>::NodeId x) {
  const auto& xv = g.value(x);
  TensorT<T> out(xv.shape);
  for (std::int64_t i = 0; i < xv.numel(); ++i) {
    const T v = xv.data[i];
    out.data[i] = v >= T(0) ? T(1) / (T(1) + std::exp(-v))
                            : std::exp(v) / (T(1) + std::exp(v));
  }
  return g.add("sigmoid", {x}, std::move(out), [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
    auto& n = gr.node(self);
    auto& gx = gr.grad(n.inputs[0]);
    for (std::int64_t i = 0; i < n.value.numel(); ++i) {
      const T y = n.value.data[i];
      gx.data[i] += y * (T(1) - y) * n.grad.data[i];
    }
  });
}

// log(1 + e^x), computed as max(x,0) + log1p(e^-|x|).
template <typename T>
typename GraphT<T>::NodeId softplus(GraphT<T>& g, typename GraphT<T>::NodeId x) {
  const auto& xv = g.value(x);
  TensorT<T> out(xv.shape);
  for (std::int64_t i = 0; i < xv.numel(); ++i) {
    const T v = xv.data[i];
    out.data[i] = std::max(v, T(0)) + std::log1p(std::exp(-std::abs(v)));
  }
  return g.add("softplus", {x}, std::move(out), [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
    auto& n = gr.node(self);
    const auto& xv = gr.value(n.inputs[0]);
    auto& gx = gr.grad(n.inputs[0]);
    for (std::int64_t i = 0; i < xv.numel(); ++i) {
      const T v = xv.data[i];
      const T s = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
      gx.data[i] += s * n.grad.data[i];
    }
  });
}

template <typename T>
typename GraphT<T>::NodeId concat(GraphT<T>& g, typename GraphT<T>::NodeId a,
                                  typename GraphT<T>::NodeId b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (av.rank() != 1 || bv.rank() != 1) {
    detail::fail("concat: both inputs must be rank 1, got " + shape_str(av.shape) + " and " +
                 shape_str(bv.shape));
  }
  const int na = av.shape[0], nb = bv.shape[0];
  TensorT<T> out({na + nb});
  std::copy(av.data.begin(), av.data.end(), out.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + na);
  return g.add("concat", {a, b}, std::move(out),
               [na, nb](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 auto& ga = gr.grad(n.inputs[0]);
                 auto& gb = gr.grad(n.inputs[1]);
                 for (int i = 0; i < na; ++i) ga.data[i] += n.grad.data[i];
                 for (int i = 0; i < nb; ++i) gb.data[i] += n.grad.data[na + i];
               });
}

// Channel-wise stack of two rank-3 tensors with matching spatial dims.
template <typename T>
typename GraphT<T>::NodeId concat_channels(GraphT<T>& g, typename GraphT<T>::NodeId a,
                                           typename GraphT<T>::NodeId b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (av.rank() != 3 || bv.rank() != 3 || av.shape[1] != bv.shape[1] || av.shape[2] != bv.shape[2]) {
    detail::fail("concat_channels: incompatible shapes " + shape_str(av.shape) + " and " +
                 shape_str(bv.shape));
  }
  TensorT<T> out({av.shape[0] + bv.shape[0], av.shape[1], av.shape[2]});
  std::copy(av.data.begin(), av.data.end(), out.data.begin());
  std::copy(bv.data.begin(), bv.data.end(), out.data.begin() + av.numel());
  return g.add("concat_channels", {a, b}, std::move(out),
               [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 auto& ga = gr.grad(n.inputs[0]);
                 auto& gb = gr.grad(n.inputs[1]);
                 const std::int64_t na = ga.numel();
                 for (std::int64_t i = 0; i < na; ++i) ga.data[i] += n.grad.data[i];
                 for (std::int64_t i = 0; i < gb.numel(); ++i) gb.data[i] += n.grad.data[na + i];
               });
}

// Channels [c0, c1) of a rank-3 tensor.
template <typename T>
typename GraphT<T>::NodeId slice_channels(GraphT<T>& g, typename GraphT<T>::NodeId x, int c0,
                                          int c1) {
  const auto& xv = g.value(x);
  if (xv.rank() != 3) detail::fail("slice_channels: input must be rank 3, got " + shape_str(xv.shape));
  if (c0 < 0 || c1 > xv.shape[0] || c0 >= c1) {
    detail::fail("slice_channels: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                 ") invalid for " + std::to_string(xv.shape[0]) + " channels");
  }
  const std::int64_t plane = static_cast<std::int64_t>(xv.shape[1]) * xv.shape[2];
  TensorT<T> out({c1 - c0, xv.shape[1], xv.shape[2]});
  std::copy(xv.data.begin() + c0 * plane, xv.data.begin() + c1 * plane, out.data.begin());
  return g.add("slice_channels", {x}, std::move(out),
               [c0, plane](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 auto& gx = gr.grad(n.inputs[0]);
                 for (std::int64_t i = 0; i < n.grad.numel(); ++i) {
                   gx.data[c0 * plane + i] += n.grad.data[i];
                 }
               });
}

template <typename T>
typename GraphT<T>::NodeId reshape(GraphT<T>& g, typename GraphT<T>::NodeId x,
                                   std::vector<int> shape) {
  const auto& xv = g.value(x);
  if (shape_numel(shape) != xv.numel()) {
    detail::fail("reshape: cannot view " + shape_str(xv.shape) + " as " + shape_str(shape));
  }
  TensorT<T> out(std::move(shape), xv.data);
  return g.add("reshape", {x}, std::move(out), [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
    auto& n = gr.node(self);
    auto& gx = gr.grad(n.inputs[0]);
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) gx.data[i] += n.grad.data[i];
  });
}

template <typename T>
typename GraphT<T>::NodeId add(GraphT<T>& g, typename GraphT<T>::NodeId a,
                               typename GraphT<T>::NodeId b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (!av.same_shape(bv)) {
    detail::fail("add: shape mismatch " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  }
  TensorT<T> out(av.shape);
  for (std::int64_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] + bv.data[i];
  return g.add("add", {a, b}, std::move(out), [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
    auto& n = gr.node(self);
    auto& ga = gr.grad(n.inputs[0]);
    auto& gb = gr.grad(n.inputs[1]);
    for (std::int64_t i = 0; i < n.grad.numel(); ++i) {
      ga.data[i] += n.grad.data[i];
      gb.data[i] += n.grad.data[i];
    }
  });
}

template <typename T>
typename GraphT<T>::NodeId subtract(GraphT<T>& g, typename GraphT<T>::NodeId a,
                                    typename GraphT<T>::NodeId b) {
  const auto& av = g.value(a);
  const auto& bv = g.value(b);
  if (!av.same_shape(bv)) {
    detail::fail("subtract: shape mismatch " + shape_str(av.shape) + " vs " + shape_str(bv.shape));
  }
  TensorT<T> out(av.shape);
  for (std::int64_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] - bv.data[i];
  return g.add("subtract", {a, b}, std::move(out),
               [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 auto& ga = gr.grad(n.inputs[0]);
                 auto& gb = gr.grad(n.inputs[1]);
                 for (std::int64_t i = 0; i < n.grad.numel(); ++i) {
                   ga.data[i] += n.grad.data[i];
                   gb.data[i] -= n.grad.data[i];
                 }
               });
}

template <typename T>
typename GraphT<T>::NodeId scale(GraphT<T>& g, typename GraphT<T>::NodeId x, T factor) {
  const auto& xv = g.value(x);
  TensorT<T> out(xv.shape);
  for (std::int64_t i = 0; i < xv.numel(); ++i) out.data[i] = factor * xv.data[i];
  return g.add("scale", {x}, std::move(out),
               [factor](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 auto& gx = gr.grad(n.inputs[0]);
                 for (std::int64_t i = 0; i < n.grad.numel(); ++i) gx.data[i] += factor * n.grad.data[i];
               });
}

template <typename T>
typename GraphT<T>::NodeId sum_all(GraphT<T>& g, typename GraphT<T>::NodeId x) {
  const auto& xv = g.value(x);
  T acc = T(0);
  for (std::int64_t i = 0; i < xv.numel(); ++i) acc += xv.data[i];
  return g.add("sum", {x}, TensorT<T>::scalar(acc),
               [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 auto& gx = gr.grad(n.inputs[0]);
                 const T gy = n.grad.data[0];
                 for (std::int64_t i = 0; i < gx.numel(); ++i) gx.data[i] += gy;
               });
}

template <typename T>
typename GraphT<T>::NodeId sum_squares(GraphT<T>& g, typename GraphT<T>::NodeId x) {
  const auto& xv = g.value(x);
  T acc = T(0);
  for (std::int64_t i = 0; i < xv.numel(); ++i) acc += xv.data[i] * xv.data[i];
  return g.add("sum_squares", {x}, TensorT<T>::scalar(acc),
               [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 const auto& xv = gr.value(n.inputs[0]);
                 auto& gx = gr.grad(n.inputs[0]);
                 const T gy = n.grad.data[0];
                 for (std::int64_t i = 0; i < xv.numel(); ++i) gx.data[i] += T(2) * xv.data[i] * gy;
               });
}

// L1 norm; the subgradient of |v| at v = 0 is 0.
template <typename T>
typename GraphT<T>::NodeId sum_abs(GraphT<T>& g, typename GraphT<T>::NodeId x) {
  const auto& xv = g.value(x);
  T acc = T(0);
  for (std::int64_t i = 0; i < xv.numel(); ++i) acc += std::abs(xv.data[i]);
  return g.add("sum_abs", {x}, TensorT<T>::scalar(acc),
               [](GraphT<T>& gr, typename GraphT<T>::NodeId self) {
                 auto& n = gr.node(self);
                 const auto& xv = gr.value(n.inputs[0]);
                 auto& gx = gr.grad(n.inputs[0]);
                 const T gy = n.grad.data[0];
                 for (std::int64_t i = 0; i < xv.numel(); ++i) {
                   const T v = xv.data[i];
                   gx.data[i] += (v > T(0) ? gy : v < T(0) ? -gy : T(0));
                 }
               });
}

}  // namespace ops
}  // namespace mv3d
