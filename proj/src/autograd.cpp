#include "stitchvton/autograd.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace stitchvton::nn {
namespace {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMatMap = Eigen::Map<const RowMat<S>>;
template <typename S>
using VecMap = Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>;
template <typename S>
using ConstVecMap = Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>;

// Accumulator wide enough that float reductions do not drift.
template <typename S>
using Acc = std::conditional_t<std::is_same_v<S, float>, double, S>;

template <typename S>
Variable<S> make_result(BasicTensor<S> value, std::vector<std::shared_ptr<Node<S>>> parents,
                        std::function<void(Node<S>&)> backward) {
  auto node = std::make_shared<Node<S>>();
  node->value = std::move(value);
  node->requires_grad =
      std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Variable<S>(std::move(node));
}

template <typename S>
bool any_requires_grad(std::initializer_list<const Variable<S>*> vars) {
  return std::any_of(vars.begin(), vars.end(), [](const auto* v) { return v->requires_grad(); });
}

template <typename S>
void im2col(const S* x, int cin, int h, int w, int kh, int kw, int stride, int pad, int ho, int wo,
            S* cols) {
  const int p = ho * wo;
  for (int c = 0; c < cin; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        S* row = cols + static_cast<std::size_t>((c * kh + ki) * kw + kj) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ki;
          S* dst = row + oy * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, S(0));
            continue;
          }
          const S* src = x + (static_cast<std::size_t>(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kj;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : S(0);
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const S* cols, int cin, int h, int w, int kh, int kw, int stride, int pad, int ho,
                int wo, S* dx) {
  const int p = ho * wo;
  for (int c = 0; c < cin; ++c) {
    for (int ki = 0; ki < kh; ++ki) {
      for (int kj = 0; kj < kw; ++kj) {
        const S* row = cols + static_cast<std::size_t>((c * kh + ki) * kw + kj) * p;
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          S* dst = dx + (static_cast<std::size_t>(c) * h + iy) * w;
          const S* src = row + oy * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename S>
AlignedVector<S>& Node<S>::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), S(0));
  return grad;
}

template <typename S>
void Node<S>::accumulate(std::span<const S> g) {
  auto& buf = grad_buffer();
  VecMap<S>(buf.data(), buf.size()) += ConstVecMap<S>(g.data(), g.size());
}

template <typename S>
Variable<S> constant(BasicTensor<S> value) {
  auto node = std::make_shared<Node<S>>();
  node->value = std::move(value);
  return Variable<S>(std::move(node));
}

template <typename S>
Variable<S> parameter(BasicTensor<S> value) {
  auto node = std::make_shared<Node<S>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Variable<S>(std::move(node));
}

template <typename S>
const BasicTensor<S>& Gradients<S>::of(const Variable<S>& v) const {
  auto it = grads_.find(v.id());
  if (it == grads_.end()) {
    throw ContractError("gradients: variable is not a requires_grad leaf of this graph");
  }
  return it->second;
}

template <typename S>
Gradients<S> backprop(const Variable<S>& loss) {
  if (loss.value().size() != 1) {
    throw ContractError("backprop: loss must be scalar, got shape " + loss.shape().str());
  }
  Gradients<S> out;
  if (!loss.requires_grad()) return out;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node<S>*> order;
  std::unordered_set<Node<S>*> visited;
  std::vector<std::pair<Node<S>*, std::size_t>> stack{{loss.node().get(), 0}};
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<S>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node<S>* node : order) node->grad.clear();
  loss.node()->grad_buffer()[0] = S(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<S>* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
  for (Node<S>* node : order) {
    if (!node->parents.empty()) continue;
    const auto& g = node->grad_buffer();
    out.grads_.emplace(node, BasicTensor<S>(node->value.shape(), g));
  }
  return out;
}

template <typename S>
Variable<S> conv2d(const Variable<S>& input, const Variable<S>& weight, const Variable<S>& bias,
                   int stride, int padding) {
  const Shape xs = input.shape();
  const Shape ws = weight.shape();
  if (ws.c != xs.c) throw_shape_error("conv2d (input vs weight in-channels)", xs, ws);
  if (static_cast<int>(bias.value().size()) != ws.n) {
    throw_shape_error("conv2d (weight vs bias)", ws, bias.shape());
  }
  if (stride < 1) throw ContractError("conv2d: stride must be >= 1");
  if (padding < 0) throw ContractError("conv2d: padding must be >= 0");
  const int kh = ws.h, kw = ws.w, cout = ws.n, cin = xs.c;
  const int ho = (xs.h + 2 * padding - kh) / stride + 1;
  const int wo = (xs.w + 2 * padding - kw) / stride + 1;
  if (xs.h + 2 * padding < kh || xs.w + 2 * padding < kw || ho <= 0 || wo <= 0) {
    throw_shape_error("conv2d (kernel larger than padded input)", xs, ws);
  }
  const int k = cin * kh * kw;
  const int p = ho * wo;
  const bool direct = kh == 1 && kw == 1 && stride == 1 && padding == 0;
  const bool track = any_requires_grad<S>({&input, &weight, &bias});

  const S* x = input.value().data().data();
  const std::size_t x_stride = static_cast<std::size_t>(cin) * xs.h * xs.w;
  auto cols = std::make_shared<AlignedVector<S>>();
  AlignedVector<S> scratch;
  if (!direct) {
    if (track) {
      cols->resize(static_cast<std::size_t>(xs.n) * k * p);
    } else {
      scratch.resize(static_cast<std::size_t>(k) * p);
    }
  }

  ConstMatMap<S> wmat(weight.value().data().data(), cout, k);
  Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>> bvec(bias.value().data().data(), cout);
  AlignedVector<S> out(static_cast<std::size_t>(xs.n) * cout * p);
  for (int n = 0; n < xs.n; ++n) {
    const S* cn = x + n * x_stride;
    if (!direct) {
      S* dst = track ? cols->data() + static_cast<std::size_t>(n) * k * p : scratch.data();
      im2col(x + n * x_stride, cin, xs.h, xs.w, kh, kw, stride, padding, ho, wo, dst);
      cn = dst;
    }
    MatMap<S> y(out.data() + static_cast<std::size_t>(n) * cout * p, cout, p);
    y.noalias() = wmat * ConstMatMap<S>(cn, k, p);
    y.colwise() += bvec;
  }

  BasicTensor<S> value({xs.n, cout, ho, wo}, std::move(out));
  if (!track) return make_result<S>(std::move(value), {}, nullptr);

  auto backward = [=](Node<S>& self) {
    Node<S>& xin = *self.parents[0];
    Node<S>& wn = *self.parents[1];
    Node<S>& bn = *self.parents[2];
    const S* dy = self.grad.data();
    const S* xv = xin.value.data().data();
    ConstMatMap<S> wm(wn.value.data().data(), cout, k);
    RowMat<S> dcols;
    for (int n = 0; n < xs.n; ++n) {
      ConstMatMap<S> dyn(dy + static_cast<std::size_t>(n) * cout * p, cout, p);
      const S* cn = direct ? xv + n * x_stride : cols->data() + static_cast<std::size_t>(n) * k * p;
      if (wn.requires_grad) {
        MatMap<S>(wn.grad_buffer().data(), cout, k).noalias() +=
            dyn * ConstMatMap<S>(cn, k, p).transpose();
      }
      if (bn.requires_grad) {
        auto& gb = bn.grad_buffer();
        Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>>(gb.data(), cout) += dyn.rowwise().sum();
      }
      if (xin.requires_grad) {
        S* dx = xin.grad_buffer().data() + n * x_stride;
        if (direct) {
          MatMap<S>(dx, k, p).noalias() += wm.transpose() * dyn;
        } else {
          dcols.noalias() = wm.transpose() * dyn;
          col2im_add(dcols.data(), cin, xs.h, xs.w, kh, kw, stride, padding, ho, wo, dx);
        }
      }
    }
  };
  return make_result<S>(std::move(value), {input.node(), weight.node(), bias.node()}, backward);
}

template <typename S>
Variable<S> upsample_nearest2x(const Variable<S>& x) {
  const Shape s = x.shape();
  const int ho = s.h * 2, wo = s.w * 2;
  const S* xv = x.value().data().data();
  AlignedVector<S> out(static_cast<std::size_t>(s.n) * s.c * ho * wo);
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const S* src = xv + pl * s.h * s.w;
    S* dst = out.data() + pl * ho * wo;
    for (int i = 0; i < ho; ++i) {
      for (int j = 0; j < wo; ++j) dst[i * wo + j] = src[(i / 2) * s.w + j / 2];
    }
  }
  auto backward = [s, ho, wo, planes](Node<S>& self) {
    auto& dx = self.parents[0]->grad_buffer();
    const S* dy = self.grad.data();
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const S* src = dy + pl * ho * wo;
      S* dst = dx.data() + pl * s.h * s.w;
      for (int i = 0; i < ho; ++i) {
        for (int j = 0; j < wo; ++j) dst[(i / 2) * s.w + j / 2] += src[i * wo + j];
      }
    }
  };
  return make_result<S>(BasicTensor<S>({s.n, s.c, ho, wo}, std::move(out)), {x.node()}, backward);
}

template <typename S>
Variable<S> avg_pool2x(const Variable<S>& x) {
  const Shape s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("avg_pool2x: spatial dims must be even, got " + s.str());
  }
  const int ho = s.h / 2, wo = s.w / 2;
  const S* xv = x.value().data().data();
  const std::size_t planes = static_cast<std::size_t>(s.n) * s.c;
  AlignedVector<S> out(planes * ho * wo);
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const S* src = xv + pl * s.h * s.w;
    S* dst = out.data() + pl * ho * wo;
    for (int i = 0; i < ho; ++i) {
      for (int j = 0; j < wo; ++j) {
        const S* r0 = src + (2 * i) * s.w + 2 * j;
        const S* r1 = r0 + s.w;
        dst[i * wo + j] = (r0[0] + r0[1] + r1[0] + r1[1]) * S(0.25);
      }
    }
  }
  auto backward = [s, ho, wo, planes](Node<S>& self) {
    auto& dx = self.parents[0]->grad_buffer();
    const S* dy = self.grad.data();
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const S* src = dy + pl * ho * wo;
      S* dst = dx.data() + pl * s.h * s.w;
      for (int i = 0; i < s.h; ++i) {
        for (int j = 0; j < s.w; ++j) dst[i * s.w + j] += src[(i / 2) * wo + j / 2] * S(0.25);
      }
    }
  };
  return make_result<S>(BasicTensor<S>({s.n, s.c, ho, wo}, std::move(out)), {x.node()}, backward);
}

template <typename S>
Variable<S> group_norm(const Variable<S>& x, const Variable<S>& gamma, const Variable<S>& beta,
                       int groups, double eps) {
  const Shape s = x.shape();
  if (groups < 1 || s.c % groups != 0) {
    std::ostringstream os;
    os << "group_norm: " << s.c << " channels not divisible into " << groups << " groups";
    throw ShapeError(os.str());
  }
  if (static_cast<int>(gamma.value().size()) != s.c) throw_shape_error("group_norm (gamma)", s, gamma.shape());
  if (static_cast<int>(beta.value().size()) != s.c) throw_shape_error("group_norm (beta)", s, beta.shape());

  const int cpg = s.c / groups;
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  const std::size_t m = cpg * hw;
  const S* xv = x.value().data().data();
  const S* gv = gamma.value().data().data();
  const S* bv = beta.value().data().data();

  auto xhat = std::make_shared<AlignedVector<S>>(s.numel());
  auto inv_std = std::make_shared<AlignedVector<S>>(static_cast<std::size_t>(s.n) * groups);
  AlignedVector<S> out(s.numel());
  for (int n = 0; n < s.n; ++n) {
    for (int g = 0; g < groups; ++g) {
      const std::size_t base = (static_cast<std::size_t>(n) * s.c + g * cpg) * hw;
      Acc<S> mean = 0;
      for (std::size_t i = 0; i < m; ++i) mean += xv[base + i];
      mean /= static_cast<Acc<S>>(m);
      Acc<S> var = 0;
      for (std::size_t i = 0; i < m; ++i) {
        const Acc<S> d = xv[base + i] - mean;
        var += d * d;
      }
      var /= static_cast<Acc<S>>(m);
      const Acc<S> istd = 1.0 / std::sqrt(var + eps);
      (*inv_std)[n * groups + g] = static_cast<S>(istd);
      for (int cc = 0; cc < cpg; ++cc) {
        const int c = g * cpg + cc;
        for (std::size_t i = 0; i < hw; ++i) {
          const std::size_t idx = base + cc * hw + i;
          const S xh = static_cast<S>((xv[idx] - mean) * istd);
          (*xhat)[idx] = xh;
          out[idx] = gv[c] * xh + bv[c];
        }
      }
    }
  }

  auto backward = [s, groups, cpg, hw, m, xhat, inv_std](Node<S>& self) {
    Node<S>& xn = *self.parents[0];
    Node<S>& gn = *self.parents[1];
    Node<S>& bn = *self.parents[2];
    const S* dy = self.grad.data();
    const S* gv = gn.value.data().data();
    AlignedVector<S> dxhat(m);
    for (int n = 0; n < s.n; ++n) {
      for (int g = 0; g < groups; ++g) {
        const std::size_t base = (static_cast<std::size_t>(n) * s.c + g * cpg) * hw;
        Acc<S> sum_dxhat = 0, sum_dxhat_xhat = 0;
        for (int cc = 0; cc < cpg; ++cc) {
          const int c = g * cpg + cc;
          Acc<S> dgamma = 0, dbeta = 0;
          for (std::size_t i = 0; i < hw; ++i) {
            const std::size_t idx = base + cc * hw + i;
            const S d = dy[idx];
            const S xh = (*xhat)[idx];
            dgamma += static_cast<Acc<S>>(d) * xh;
            dbeta += d;
            const S dxh = d * gv[c];
            dxhat[cc * hw + i] = dxh;
            sum_dxhat += dxh;
            sum_dxhat_xhat += static_cast<Acc<S>>(dxh) * xh;
          }
          if (gn.requires_grad) gn.grad_buffer()[c] += static_cast<S>(dgamma);
          if (bn.requires_grad) bn.grad_buffer()[c] += static_cast<S>(dbeta);
        }
        if (!xn.requires_grad) continue;
        auto& dx = xn.grad_buffer();
        const Acc<S> istd = (*inv_std)[n * groups + g];
        const Acc<S> inv_m = 1.0 / static_cast<Acc<S>>(m);
        for (std::size_t i = 0; i < m; ++i) {
          const Acc<S> xh = (*xhat)[base + i];
          dx[base + i] += static_cast<S>(
              istd * (dxhat[i] - inv_m * sum_dxhat - xh * inv_m * sum_dxhat_xhat));
        }
      }
    }
  };
  return make_result<S>(BasicTensor<S>(s, std::move(out)), {x.node(), gamma.node(), beta.node()},
                        backward);
}

template <typename S>
Variable<S> silu(const Variable<S>& x) {
  ConstVecMap<S> xv(x.value().data().data(), x.value().size());
  AlignedVector<S> out(xv.size());
  VecMap<S>(out.data(), out.size()) = xv / (S(1) + (-xv).exp());
  auto backward = [](Node<S>& self) {
    Node<S>& xn = *self.parents[0];
    ConstVecMap<S> xin(xn.value.data().data(), xn.value.size());
    ConstVecMap<S> dy(self.grad.data(), self.grad.size());
    const Eigen::Array<S, Eigen::Dynamic, 1> sig = S(1) / (S(1) + (-xin).exp());
    auto& dx = xn.grad_buffer();
    VecMap<S>(dx.data(), dx.size()) += dy * sig * (S(1) + xin * (S(1) - sig));
  };
  return make_result<S>(BasicTensor<S>(x.shape(), std::move(out)), {x.node()}, backward);
}

template <typename S>
Variable<S> add(const Variable<S>& a, const Variable<S>& b) {
  const Shape as = a.shape(), bs = b.shape();
  if (as == bs) {
    AlignedVector<S> out(as.numel());
    VecMap<S>(out.data(), out.size()) = a.value().array() + b.value().array();
    auto backward = [](Node<S>& self) {
      for (auto& parent : self.parents) {
        if (parent->requires_grad) parent->accumulate(self.grad);
      }
    };
    return make_result<S>(BasicTensor<S>(as, std::move(out)), {a.node(), b.node()}, backward);
  }
  if (bs.n != as.n || bs.c != as.c || bs.h != 1 || bs.w != 1) throw_shape_error("add", as, bs);
  const std::size_t hw = static_cast<std::size_t>(as.h) * as.w;
  const std::size_t planes = static_cast<std::size_t>(as.n) * as.c;
  AlignedVector<S> out(as.numel());
  const S* av = a.value().data().data();
  const S* bv = b.value().data().data();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    for (std::size_t i = 0; i < hw; ++i) out[pl * hw + i] = av[pl * hw + i] + bv[pl];
  }
  auto backward = [hw, planes](Node<S>& self) {
    Node<S>& an = *self.parents[0];
    Node<S>& bn = *self.parents[1];
    if (an.requires_grad) an.accumulate(self.grad);
    if (bn.requires_grad) {
      auto& db = bn.grad_buffer();
      for (std::size_t pl = 0; pl < planes; ++pl) {
        Acc<S> acc = 0;
        for (std::size_t i = 0; i < hw; ++i) acc += self.grad[pl * hw + i];
        db[pl] += static_cast<S>(acc);
      }
    }
  };
  return make_result<S>(BasicTensor<S>(as, std::move(out)), {a.node(), b.node()}, backward);
}

template <typename S>
Variable<S> concat_channels(std::span<const Variable<S>> parts) {
  if (parts.empty()) throw ContractError("concat_channels: no inputs");
  const Shape first = parts[0].shape();
  int total_c = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) throw_shape_error("concat_channels", first, s);
    total_c += s.c;
  }
  const std::size_t hw = static_cast<std::size_t>(first.h) * first.w;
  AlignedVector<S> out(static_cast<std::size_t>(first.n) * total_c * hw);
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const int c = p.shape().c;
    const S* src = p.value().data().data();
    for (int n = 0; n < first.n; ++n) {
      std::copy_n(src + static_cast<std::size_t>(n) * c * hw, c * hw,
                  out.data() + (static_cast<std::size_t>(n) * total_c + off) * hw);
    }
    off += c;
  }
  std::vector<std::shared_ptr<Node<S>>> parents;
  for (const auto& p : parts) parents.push_back(p.node());
  auto backward = [first, total_c, hw, offsets](Node<S>& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node<S>& pn = *self.parents[k];
      if (!pn.requires_grad) continue;
      const int c = pn.value.shape().c;
      auto& dx = pn.grad_buffer();
      for (int n = 0; n < first.n; ++n) {
        const S* src = self.grad.data() + (static_cast<std::size_t>(n) * total_c + offsets[k]) * hw;
        S* dst = dx.data() + static_cast<std::size_t>(n) * c * hw;
        for (std::size_t i = 0; i < c * hw; ++i) dst[i] += src[i];
      }
    }
  };
  return make_result<S>(BasicTensor<S>({first.n, total_c, first.h, first.w}, std::move(out)),
                        std::move(parents), backward);
}

template <typename S>
Variable<S> concat_width(std::span<const Variable<S>> parts) {
  if (parts.empty()) throw ContractError("concat_width: no inputs");
  const Shape first = parts[0].shape();
  int total_w = 0;
  for (const auto& p : parts) {
    const Shape s = p.shape();
    if (s.n != first.n || s.c != first.c || s.h != first.h) throw_shape_error("concat_width", first, s);
    total_w += s.w;
  }
  const std::size_t rows = static_cast<std::size_t>(first.n) * first.c * first.h;
  AlignedVector<S> out(rows * total_w);
  std::vector<int> offsets;
  int off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const int w = p.shape().w;
    const S* src = p.value().data().data();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(src + r * w, w, out.data() + r * total_w + off);
    off += w;
  }
  std::vector<std::shared_ptr<Node<S>>> parents;
  for (const auto& p : parts) parents.push_back(p.node());
  auto backward = [rows, total_w, offsets](Node<S>& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node<S>& pn = *self.parents[k];
      if (!pn.requires_grad) continue;
      const int w = pn.value.shape().w;
      auto& dx = pn.grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        const S* src = self.grad.data() + r * total_w + offsets[k];
        for (int j = 0; j < w; ++j) dx[r * w + j] += src[j];
      }
    }
  };
  return make_result<S>(BasicTensor<S>({first.n, first.c, first.h, total_w}, std::move(out)),
                        std::move(parents), backward);
}

template <typename S>
Variable<S> slice_width(const Variable<S>& x, int start, int length) {
  const Shape s = x.shape();
  if (start < 0 || length < 0 || start + length > s.w) {
    std::ostringstream os;
    os << "slice_width: columns [" << start << ", " << start + length << ") outside width " << s.w;
    throw ShapeError(os.str());
  }
  const std::size_t rows = static_cast<std::size_t>(s.n) * s.c * s.h;
  AlignedVector<S> out(rows * length);
  const S* xv = x.value().data().data();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(xv + r * s.w + start, length, out.data() + r * length);
  auto backward = [rows, s, start, length](Node<S>& self) {
    auto& dx = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      for (int j = 0; j < length; ++j) dx[r * s.w + start + j] += self.grad[r * length + j];
    }
  };
  return make_result<S>(BasicTensor<S>({s.n, s.c, s.h, length}, std::move(out)), {x.node()}, backward);
}

template <typename S>
Variable<S> mse(const Variable<S>& a, const Variable<S>& b) {
  if (a.shape() != b.shape()) throw_shape_error("mse", a.shape(), b.shape());
  const auto diff = (a.value().array() - b.value().array()).eval();
  const Acc<S> m = static_cast<Acc<S>>(diff.size());
  const Acc<S> value = diff.template cast<Acc<S>>().square().sum() / m;
  auto backward = [diff, m](Node<S>& self) {
    const S scale = static_cast<S>(2.0 * self.grad[0] / m);
    Node<S>& an = *self.parents[0];
    Node<S>& bn = *self.parents[1];
    if (an.requires_grad) {
      auto& g = an.grad_buffer();
      VecMap<S>(g.data(), g.size()) += scale * diff;
    }
    if (bn.requires_grad) {
      auto& g = bn.grad_buffer();
      VecMap<S>(g.data(), g.size()) -= scale * diff;
    }
  };
  return make_result<S>(BasicTensor<S>({1, 1, 1, 1}, {static_cast<S>(value)}), {a.node(), b.node()},
                        backward);
}

template <typename S>
Variable<S> sum(const Variable<S>& x) {
  const Acc<S> value = x.value().array().template cast<Acc<S>>().sum();
  auto backward = [](Node<S>& self) {
    auto& g = self.parents[0]->grad_buffer();
    VecMap<S>(g.data(), g.size()) += self.grad[0];
  };
  return make_result<S>(BasicTensor<S>({1, 1, 1, 1}, {static_cast<S>(value)}), {x.node()}, backward);
}

#define STITCHVTON_INSTANTIATE(S)                                                                 \
  template struct Node<S>;                                                                        \
  template class Gradients<S>;                                                                    \
  template Variable<S> constant<S>(BasicTensor<S>);                                               \
  template Variable<S> parameter<S>(BasicTensor<S>);                                              \
  template Gradients<S> backprop<S>(const Variable<S>&);                                          \
  template Variable<S> conv2d<S>(const Variable<S>&, const Variable<S>&, const Variable<S>&, int, \
                                 int);                                                            \
  template Variable<S> upsample_nearest2x<S>(const Variable<S>&);                                 \
  template Variable<S> avg_pool2x<S>(const Variable<S>&);                                         \
  template Variable<S> group_norm<S>(const Variable<S>&, const Variable<S>&, const Variable<S>&,  \
                                     int, double);                                                \
  template Variable<S> silu<S>(const Variable<S>&);                                               \
  template Variable<S> add<S>(const Variable<S>&, const Variable<S>&);                            \
  template Variable<S> concat_channels<S>(std::span<const Variable<S>>);                          \
  template Variable<S> concat_width<S>(std::span<const Variable<S>>);                             \
  template Variable<S> slice_width<S>(const Variable<S>&, int, int);                              \
  template Variable<S> mse<S>(const Variable<S>&, const Variable<S>&);                            \
  template Variable<S> sum<S>(const Variable<S>&);

STITCHVTON_INSTANTIATE(float)
STITCHVTON_INSTANTIATE(double)

#undef STITCHVTON_INSTANTIATE

}  // namespace stitchvton::nn
