#include "giorom/autodiff.hpp"

#include <cmath>

#include "giorom/threading.hpp"

namespace giorom {

void Tape::backward(const Var& loss) {
    if (!loss.taped() || loss.tape != this) throw ShapeError("backward: loss is not on this tape");
    if (loss.v.numel() != 1) throw ShapeError("backward: loss must be scalar, got " + loss.v.shape_str());
    grad_buf(loss.node, {1}).mut()[0] = 1.0;
    for (int i = loss.node; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.defined() && n.pull) n.pull();
    }
}

namespace ad {

namespace {

Tape* pick_tape(std::initializer_list<const Var*> vars) {
    Tape* t = nullptr;
    for (const Var* v : vars) {
        if (v->taped()) {
            if (t && t != v->tape) throw ShapeError("operands live on different tapes");
            t = v->tape;
        }
    }
    return t;
}

int node_of(const Var& v) { return v.taped() ? v.node : -1; }

}  // namespace

Var linear(const Var& x, const Var& W, const Var& b) {
    if (x.v.ndim() != 2 || W.v.ndim() != 2 || b.v.ndim() != 1)
        throw ShapeError("linear: expected x[N,in], W[in,out], b[out]; got x" + x.v.shape_str() +
                         " W" + W.v.shape_str() + " b" + b.v.shape_str());
    const int64_t N = x.v.extent(0), in = x.v.extent(1);
    const int64_t out = W.v.extent(1);
    if (W.v.extent(0) != in || b.v.extent(0) != out)
        throw ShapeError("linear: shape mismatch x" + x.v.shape_str() + " W" + W.v.shape_str() +
                         " b" + b.v.shape_str());
    Tensor y({N, out});
    double* yd = y.mut_data();
    for (int64_t i = 0; i < N; ++i)
        for (int64_t j = 0; j < out; ++j) yd[i * out + j] = b.v.flat(j);
    gemm_acc(x.v.data(), W.v.data(), yd, N, in, out);

    Tape* t = pick_tape({&x, &W, &b});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, xn = node_of(x), Wn = node_of(W), bn = node_of(b);
    const Tensor xv = x.v, Wv = W.v;
    t->set_pull(self, [t, self, xn, Wn, bn, xv, Wv, N, in, out]() {
        const Tensor& g = t->grad(self);
        if (xn >= 0) {
            Tensor& gx = t->grad_buf(xn, {N, in});
            gemm_nt_acc(g.data(), Wv.data(), gx.mut_data(), N, out, in);
        }
        if (Wn >= 0) {
            Tensor& gW = t->grad_buf(Wn, {in, out});
            gemm_tn_acc(xv.data(), g.data(), gW.mut_data(), N, in, out);
        }
        if (bn >= 0) {
            Tensor& gb = t->grad_buf(bn, {out});
            double* gbd = gb.mut_data();
            for (int64_t i = 0; i < N; ++i)
                for (int64_t j = 0; j < out; ++j) gbd[j] += g.flat(i * out + j);
        }
    });
    return r;
}

Var gelu(const Var& x) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    Tensor y(x.v.shape());
    double* yd = y.mut_data();
    for (int64_t i = 0; i < x.v.numel(); ++i) {
        const double v = x.v.flat(i);
        yd[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
    }
    Tape* t = pick_tape({&x});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, xn = x.node;
    const Tensor xv = x.v;
    t->set_pull(self, [t, self, xn, xv, inv_sqrt2]() {
        const Tensor& g = t->grad(self);
        Tensor& gx = t->grad_buf(xn, xv.shape());
        double* gxd = gx.mut_data();
        const double inv_sqrt2pi = 1.0 / std::sqrt(2.0 * M_PI);
        for (int64_t i = 0; i < xv.numel(); ++i) {
            const double v = xv.flat(i);
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            const double pdf = std::exp(-0.5 * v * v) * inv_sqrt2pi;
            gxd[i] += g.flat(i) * (cdf + v * pdf);
        }
    });
    return r;
}

Var add(const Var& a, const Var& b) {
    Tensor y = t_add(a.v, b.v);
    Tape* t = pick_tape({&a, &b});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, an = node_of(a), bn = node_of(b);
    const auto shape = a.v.shape();
    t->set_pull(self, [t, self, an, bn, shape]() {
        const Tensor& g = t->grad(self);
        if (an >= 0) {
            double* gd = t->grad_buf(an, shape).mut_data();
            for (int64_t i = 0; i < g.numel(); ++i) gd[i] += g.flat(i);
        }
        if (bn >= 0) {
            double* gd = t->grad_buf(bn, shape).mut_data();
            for (int64_t i = 0; i < g.numel(); ++i) gd[i] += g.flat(i);
        }
    });
    return r;
}

Var sub(const Var& a, const Var& b) {
    Tensor y = t_sub(a.v, b.v);
    Tape* t = pick_tape({&a, &b});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, an = node_of(a), bn = node_of(b);
    const auto shape = a.v.shape();
    t->set_pull(self, [t, self, an, bn, shape]() {
        const Tensor& g = t->grad(self);
        if (an >= 0) {
            double* gd = t->grad_buf(an, shape).mut_data();
            for (int64_t i = 0; i < g.numel(); ++i) gd[i] += g.flat(i);
        }
        if (bn >= 0) {
            double* gd = t->grad_buf(bn, shape).mut_data();
            for (int64_t i = 0; i < g.numel(); ++i) gd[i] -= g.flat(i);
        }
    });
    return r;
}

Var mul(const Var& a, const Var& b) {
    if (!a.v.same_shape(b.v)) throw ShapeError("mul: shape mismatch");
    Tensor y(a.v.shape());
    double* yd = y.mut_data();
    for (int64_t i = 0; i < a.v.numel(); ++i) yd[i] = a.v.flat(i) * b.v.flat(i);
    Tape* t = pick_tape({&a, &b});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, an = node_of(a), bn = node_of(b);
    const Tensor av = a.v, bv = b.v;
    t->set_pull(self, [t, self, an, bn, av, bv]() {
        const Tensor& g = t->grad(self);
        if (an >= 0) {
            double* gd = t->grad_buf(an, av.shape()).mut_data();
            for (int64_t i = 0; i < g.numel(); ++i) gd[i] += g.flat(i) * bv.flat(i);
        }
        if (bn >= 0) {
            double* gd = t->grad_buf(bn, bv.shape()).mut_data();
            for (int64_t i = 0; i < g.numel(); ++i) gd[i] += g.flat(i) * av.flat(i);
        }
    });
    return r;
}

Var scale(const Var& a, double c) {
    Tensor y = t_scale(a.v, c);
    Tape* t = pick_tape({&a});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, an = a.node;
    const auto shape = a.v.shape();
    t->set_pull(self, [t, self, an, shape, c]() {
        const Tensor& g = t->grad(self);
        double* gd = t->grad_buf(an, shape).mut_data();
        for (int64_t i = 0; i < g.numel(); ++i) gd[i] += c * g.flat(i);
    });
    return r;
}

Var reshape(const Var& x, std::vector<int64_t> shape) {
    Tensor y = x.v.reshaped(shape);
    Tape* t = pick_tape({&x});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, xn = x.node;
    const auto xshape = x.v.shape();
    t->set_pull(self, [t, self, xn, xshape]() {
        const Tensor& g = t->grad(self);
        double* gd = t->grad_buf(xn, xshape).mut_data();
        for (int64_t i = 0; i < g.numel(); ++i) gd[i] += g.flat(i);
    });
    return r;
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const int64_t N = parts[0].v.extent(0);
    int64_t total = 0;
    for (const Var& p : parts) {
        if (p.v.ndim() != 2 || p.v.extent(0) != N) throw ShapeError("concat_cols: row mismatch");
        total += p.v.extent(1);
    }
    Tensor y({N, total});
    double* yd = y.mut_data();
    int64_t col = 0;
    for (const Var& p : parts) {
        const int64_t c = p.v.extent(1);
        for (int64_t i = 0; i < N; ++i)
            for (int64_t j = 0; j < c; ++j) yd[i * total + col + j] = p.v.flat(i * c + j);
        col += c;
    }
    Tape* t = nullptr;
    for (const Var& p : parts)
        if (p.taped()) t = p.tape;
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node;
    struct Piece {
        int node;
        int64_t offset, cols;
    };
    std::vector<Piece> pieces;
    int64_t off = 0;
    for (const Var& p : parts) {
        pieces.push_back({node_of(p), off, p.v.extent(1)});
        off += p.v.extent(1);
    }
    t->set_pull(self, [t, self, pieces, N, total]() {
        const Tensor& g = t->grad(self);
        for (const auto& p : pieces) {
            if (p.node < 0) continue;
            double* gd = t->grad_buf(p.node, {N, p.cols}).mut_data();
            for (int64_t i = 0; i < N; ++i)
                for (int64_t j = 0; j < p.cols; ++j) gd[i * p.cols + j] += g.flat(i * total + p.offset + j);
        }
    });
    return r;
}

Var gather_rows(const Var& x, const std::vector<int>& idx) {
    if (x.v.ndim() != 2) throw ShapeError("gather_rows: expected 2-d tensor");
    const int64_t c = x.v.extent(1);
    const int64_t E = static_cast<int64_t>(idx.size());
    Tensor y({std::max<int64_t>(E, 1), c});
    double* yd = y.mut_data();
    for (int64_t e = 0; e < E; ++e) {
        const double* src = x.v.data() + static_cast<int64_t>(idx[static_cast<std::size_t>(e)]) * c;
        for (int64_t j = 0; j < c; ++j) yd[e * c + j] = src[j];
    }
    Tape* t = pick_tape({&x});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, xn = x.node;
    const auto xshape = x.v.shape();
    const std::vector<int> idx_copy = idx;
    t->set_pull(self, [t, self, xn, xshape, idx_copy, c, E]() {
        const Tensor& g = t->grad(self);
        double* gd = t->grad_buf(xn, xshape).mut_data();
        for (int64_t e = 0; e < E; ++e) {
            double* dst = gd + static_cast<int64_t>(idx_copy[static_cast<std::size_t>(e)]) * c;
            for (int64_t j = 0; j < c; ++j) dst[j] += g.flat(e * c + j);
        }
    });
    return r;
}

Var segment_mean_ordered(const Var& x, const std::vector<int>& order,
                         const std::vector<int>& offsets) {
    if (x.v.ndim() != 2) throw ShapeError("segment_mean_ordered: expected 2-d tensor");
    const int64_t c = x.v.extent(1);
    const int64_t S = static_cast<int64_t>(offsets.size()) - 1;
    Tensor y({S, c});
    double* yd = y.mut_data();
    for (int64_t s = 0; s < S; ++s) {
        const int lo = offsets[static_cast<std::size_t>(s)];
        const int hi = offsets[static_cast<std::size_t>(s + 1)];
        if (hi == lo) continue;  // empty neighborhood stays zero
        double* row = yd + s * c;
        for (int p = lo; p < hi; ++p) {
            const double* src = x.v.data() + static_cast<int64_t>(order[static_cast<std::size_t>(p)]) * c;
            for (int64_t j = 0; j < c; ++j) row[j] += src[j];
        }
        const double inv = 1.0 / (hi - lo);
        for (int64_t j = 0; j < c; ++j) row[j] *= inv;
    }
    Tape* t = pick_tape({&x});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, xn = x.node;
    const auto xshape = x.v.shape();
    const std::vector<int> order_copy = order, offsets_copy = offsets;
    t->set_pull(self, [t, self, xn, xshape, order_copy, offsets_copy, c, S]() {
        const Tensor& g = t->grad(self);
        double* gd = t->grad_buf(xn, xshape).mut_data();
        for (int64_t s = 0; s < S; ++s) {
            const int lo = offsets_copy[static_cast<std::size_t>(s)];
            const int hi = offsets_copy[static_cast<std::size_t>(s + 1)];
            if (hi == lo) continue;
            const double inv = 1.0 / (hi - lo);
            for (int p = lo; p < hi; ++p) {
                double* dst = gd + static_cast<int64_t>(order_copy[static_cast<std::size_t>(p)]) * c;
                for (int64_t j = 0; j < c; ++j) dst[j] += g.flat(s * c + j) * inv;
            }
        }
    });
    return r;
}

Var blockwise_matvec(const Var& U, const Var& q, int d) {
    if (U.v.ndim() != 2 || q.v.ndim() != 1) throw ShapeError("blockwise_matvec: expected U[N,d*r], q[r]");
    const int64_t N = U.v.extent(0);
    const int64_t r_rank = q.v.extent(0);
    if (U.v.extent(1) != static_cast<int64_t>(d) * r_rank)
        throw ShapeError("blockwise_matvec: U columns != d*r");
    Tensor y({N, d});
    double* yd = y.mut_data();
    for (int64_t i = 0; i < N; ++i)
        for (int a = 0; a < d; ++a) {
            double acc = 0.0;
            const double* u = U.v.data() + (i * d + a) * r_rank;
            for (int64_t j = 0; j < r_rank; ++j) acc += u[j] * q.v.flat(j);
            yd[i * d + a] = acc;
        }
    Tape* t = pick_tape({&U, &q});
    Var r(std::move(y), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, Un = node_of(U), qn = node_of(q);
    const Tensor Uv = U.v, qv = q.v;
    t->set_pull(self, [t, self, Un, qn, Uv, qv, N, d, r_rank]() {
        const Tensor& g = t->grad(self);
        if (Un >= 0) {
            double* gd = t->grad_buf(Un, Uv.shape()).mut_data();
            for (int64_t i = 0; i < N; ++i)
                for (int a = 0; a < d; ++a) {
                    const double gv = g.flat(i * d + a);
                    double* dst = gd + (i * d + a) * r_rank;
                    for (int64_t j = 0; j < r_rank; ++j) dst[j] += gv * qv.flat(j);
                }
        }
        if (qn >= 0) {
            double* gd = t->grad_buf(qn, qv.shape()).mut_data();
            for (int64_t i = 0; i < N; ++i)
                for (int a = 0; a < d; ++a) {
                    const double gv = g.flat(i * d + a);
                    const double* u = Uv.data() + (i * d + a) * r_rank;
                    for (int64_t j = 0; j < r_rank; ++j) gd[j] += gv * u[j];
                }
        }
    });
    return r;
}

Var sum(const Var& x) {
    double s = 0.0;
    for (int64_t i = 0; i < x.v.numel(); ++i) s += x.v.flat(i);
    Tape* t = pick_tape({&x});
    Var r(Tensor::scalar(s), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, xn = x.node;
    const auto xshape = x.v.shape();
    t->set_pull(self, [t, self, xn, xshape]() {
        const double g = t->grad(self).flat(0);
        double* gd = t->grad_buf(xn, xshape).mut_data();
        int64_t n = 1;
        for (int64_t e : xshape) n *= e;
        for (int64_t i = 0; i < n; ++i) gd[i] += g;
    });
    return r;
}

Var mse(const Var& a, const Var& b) {
    if (!a.v.same_shape(b.v))
        throw ShapeError("mse: shape mismatch " + a.v.shape_str() + " vs " + b.v.shape_str());
    const int64_t n = a.v.numel();
    double s = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = a.v.flat(i) - b.v.flat(i);
        s += d * d;
    }
    s /= static_cast<double>(n);
    Tape* t = pick_tape({&a, &b});
    Var r(Tensor::scalar(s), t, -1);
    if (!t) return r;
    r.node = t->add_node();
    const int self = r.node, an = node_of(a), bn = node_of(b);
    const Tensor av = a.v, bv = b.v;
    t->set_pull(self, [t, self, an, bn, av, bv, n]() {
        const double g = t->grad(self).flat(0);
        const double coef = 2.0 * g / static_cast<double>(n);
        if (an >= 0) {
            double* gd = t->grad_buf(an, av.shape()).mut_data();
            for (int64_t i = 0; i < n; ++i) gd[i] += coef * (av.flat(i) - bv.flat(i));
        }
        if (bn >= 0) {
            double* gd = t->grad_buf(bn, bv.shape()).mut_data();
            for (int64_t i = 0; i < n; ++i) gd[i] -= coef * (av.flat(i) - bv.flat(i));
        }
    });
    return r;
}

// ---- spectral convolution ----

std::vector<SpectralMode> spectral_modes(int m) {
    std::vector<SpectralMode> modes;
    for (int kc = 0; kc < m; ++kc) {
        if (kc == 0) {
            for (int kr = 0; kr < m; ++kr) modes.push_back({kr, 0});
        } else {
            for (int kr = -(m - 1); kr <= m - 1; ++kr) modes.push_back({kr, kc});
        }
    }
    return modes;
}

int64_t spectral_mode_count(int m) {
    return static_cast<int64_t>(m) + static_cast<int64_t>(m - 1) * (2 * m - 1);
}

namespace {

inline std::size_t zidx(int r, int c, int ch, int W, int C) {
    return static_cast<std::size_t>((r * W + c) * C + ch);
}

}  // namespace

Var spectral_conv(const Var& x, const Var& weights, int m) {
    if (x.v.ndim() != 3) throw ShapeError("spectral_conv: expected grid tensor [H,W,c]");
    const int H = static_cast<int>(x.v.extent(0));
    const int W = static_cast<int>(x.v.extent(1));
    const int C = static_cast<int>(x.v.extent(2));
    if (m < 1 || 2 * m > H || 2 * m > W)
        throw ShapeError("spectral_conv: mode count too large for grid (m=" + std::to_string(m) +
                         ", grid " + std::to_string(H) + "x" + std::to_string(W) + ")");
    const int64_t nm = spectral_mode_count(m);
    if (weights.v.ndim() != 4 || weights.v.extent(0) != nm || weights.v.extent(1) != C ||
        weights.v.extent(2) != C || weights.v.extent(3) != 2)
        throw ShapeError("spectral_conv: weights must be [" + std::to_string(nm) + "," +
                         std::to_string(C) + "," + std::to_string(C) + ",2], got " + weights.v.shape_str());

    const auto modes = spectral_modes(m);

    // forward transform of the input
    auto Z = std::make_shared<std::vector<cplx>>(static_cast<std::size_t>(H) * W * C);
    for (int64_t i = 0; i < x.v.numel(); ++i) (*Z)[static_cast<std::size_t>(i)] = cplx(x.v.flat(i), 0.0);
    fft2_full(*Z, H, W, C, -1);

    std::vector<cplx> Y(static_cast<std::size_t>(H) * W * C, cplx(0, 0));
    const double* Rw = weights.v.data();
    for (std::size_t p = 0; p < modes.size(); ++p) {
        const int kr = modes[p].kr, kc = modes[p].kc;
        const int r = kr >= 0 ? kr : H + kr;
        const bool self_conj = (kr == 0 && kc == 0);
        const int mr = (H - r) % H, mc = (W - kc) % W;
        for (int o = 0; o < C; ++o) {
            cplx acc(0, 0), acc_m(0, 0);
            for (int i = 0; i < C; ++i) {
                const double re = Rw[((p * C + o) * C + i) * 2 + 0];
                const double im = self_conj ? 0.0 : Rw[((p * C + o) * C + i) * 2 + 1];
                const cplx w(re, im);
                acc += w * (*Z)[zidx(r, kc, i, W, C)];
                if (!self_conj) acc_m += std::conj(w) * (*Z)[zidx(mr, mc, i, W, C)];
            }
            Y[zidx(r, kc, o, W, C)] = acc;
            if (!self_conj) Y[zidx(mr, mc, o, W, C)] = acc_m;
        }
    }
    fft2_full(Y, H, W, C, +1);
    Tensor y({H, W, C});
    double* yd = y.mut_data();
    const double inv_hw = 1.0 / (static_cast<double>(H) * W);
    for (int64_t i = 0; i < y.numel(); ++i) yd[i] = Y[static_cast<std::size_t>(i)].real() * inv_hw;

    Tape* t = pick_tape({&x, &weights});
    Var rv(std::move(y), t, -1);
    if (!t) return rv;
    rv.node = t->add_node();
    const int self = rv.node, xn = node_of(x), wn = node_of(weights);
    const Tensor Wv = weights.v;
    const auto xshape = x.v.shape();
    const auto wshape = weights.v.shape();
    t->set_pull(self, [t, self, xn, wn, Z, Wv, xshape, wshape, modes, H, W, C]() {
        const Tensor& g = t->grad(self);
        // spectrum of the upstream gradient
        std::vector<cplx> G(static_cast<std::size_t>(H) * W * C);
        for (int64_t i = 0; i < g.numel(); ++i) G[static_cast<std::size_t>(i)] = cplx(g.flat(i), 0.0);
        fft2_full(G, H, W, C, -1);
        const double inv_hw = 1.0 / (static_cast<double>(H) * W);
        const double* Rw = Wv.data();

        if (xn >= 0) {
            // D_k = S_k^T conj(G_k) on every weighted mode; dx = Re(F[D]) / (H*W)
            std::vector<cplx> D(static_cast<std::size_t>(H) * W * C, cplx(0, 0));
            for (std::size_t p = 0; p < modes.size(); ++p) {
                const int kr = modes[p].kr, kc = modes[p].kc;
                const int r = kr >= 0 ? kr : H + kr;
                const bool self_conj = (kr == 0 && kc == 0);
                const int mr = (H - r) % H, mc = (W - kc) % W;
                for (int i = 0; i < C; ++i) {
                    cplx acc(0, 0), acc_m(0, 0);
                    for (int o = 0; o < C; ++o) {
                        const double re = Rw[((p * C + o) * C + i) * 2 + 0];
                        const double im = self_conj ? 0.0 : Rw[((p * C + o) * C + i) * 2 + 1];
                        const cplx w(re, im);
                        acc += w * std::conj(G[zidx(r, kc, o, W, C)]);
                        if (!self_conj) acc_m += std::conj(w) * std::conj(G[zidx(mr, mc, o, W, C)]);
                    }
                    D[zidx(r, kc, i, W, C)] = acc;
                    if (!self_conj) D[zidx(mr, mc, i, W, C)] = acc_m;
                }
            }
            fft2_full(D, H, W, C, -1);
            Tensor& gx = t->grad_buf(xn, xshape);
            double* gxd = gx.mut_data();
            for (int64_t i = 0; i < gx.numel(); ++i) gxd[i] += D[static_cast<std::size_t>(i)].real() * inv_hw;
        }
        if (wn >= 0) {
            Tensor& gw = t->grad_buf(wn, wshape);
            double* gwd = gw.mut_data();
            for (std::size_t p = 0; p < modes.size(); ++p) {
                const int kr = modes[p].kr, kc = modes[p].kc;
                const int r = kr >= 0 ? kr : H + kr;
                const bool self_conj = (kr == 0 && kc == 0);
                for (int o = 0; o < C; ++o) {
                    for (int i = 0; i < C; ++i) {
                        const cplx alpha = std::conj(G[zidx(r, kc, o, W, C)]) * (*Z)[zidx(r, kc, i, W, C)];
                        if (self_conj) {
                            gwd[((p * C + o) * C + i) * 2 + 0] += inv_hw * alpha.real();
                        } else {
                            gwd[((p * C + o) * C + i) * 2 + 0] += 2.0 * inv_hw * alpha.real();
                            gwd[((p * C + o) * C + i) * 2 + 1] -= 2.0 * inv_hw * alpha.imag();
                        }
                    }
                }
            }
        }
    });
    return rv;
}

}  // namespace ad
}  // namespace giorom
