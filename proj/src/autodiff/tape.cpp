#include "gesturelab/autodiff/tape.hpp"

#include <cmath>
#include <memory>

#include "gesturelab/core/error.hpp"

namespace gesturelab::autodiff {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_cycles(double s) {
    double w = s - std::floor(s);
    if (w >= 1.0) w = 0.0;
    return w;
}

// wraps into [-0.5, 0.5)
double wrap_signed(double d) {
    double w = d - std::floor(d + 0.5);
    if (w >= 0.5) w = -0.5;
    return w;
}

void require_same_shape(const TensorData& a, const TensorData& b, const char* op) {
    if (a.shape != b.shape)
        throw Error(std::string(op) + ": shape mismatch");
}

} // namespace

Tape::Id Tape::push(TensorData value, bool requires_grad,
                    std::function<void(Tape&, Id)> fn) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return static_cast<Id>(nodes_.size() - 1);
}

bool Tape::any_requires(const std::vector<Id>& ids) const {
    for (Id id : ids)
        if (requires_grad(id)) return true;
    return false;
}

Tape::Id Tape::input(TensorData value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Tape::Id Tape::add(Id a, Id b) {
    const TensorData& va = value(a);
    const TensorData& vb = value(b);
    require_same_shape(va, vb, "add");
    TensorData out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += vb.v[i];
    return push(std::move(out), any_requires({a, b}), [a, b](Tape& t, Id self) {
        const auto& g = t.grad(self).v;
        if (t.requires_grad(a)) {
            auto& ga = t.grad_ref(a).v;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.requires_grad(b)) {
            auto& gb = t.grad_ref(b).v;
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
}

Tape::Id Tape::sub(Id a, Id b) {
    const TensorData& va = value(a);
    const TensorData& vb = value(b);
    require_same_shape(va, vb, "sub");
    TensorData out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] -= vb.v[i];
    return push(std::move(out), any_requires({a, b}), [a, b](Tape& t, Id self) {
        const auto& g = t.grad(self).v;
        if (t.requires_grad(a)) {
            auto& ga = t.grad_ref(a).v;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.requires_grad(b)) {
            auto& gb = t.grad_ref(b).v;
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Tape::Id Tape::mul(Id a, Id b) {
    const TensorData& va = value(a);
    const TensorData& vb = value(b);
    require_same_shape(va, vb, "mul");
    TensorData out = va;
    for (std::size_t i = 0; i < out.size(); ++i) out.v[i] *= vb.v[i];
    return push(std::move(out), any_requires({a, b}), [a, b](Tape& t, Id self) {
        const auto& g = t.grad(self).v;
        const auto& va2 = t.value(a).v;
        const auto& vb2 = t.value(b).v;
        if (t.requires_grad(a)) {
            auto& ga = t.grad_ref(a).v;
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb2[i];
        }
        if (t.requires_grad(b)) {
            auto& gb = t.grad_ref(b).v;
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va2[i];
        }
    });
}

Tape::Id Tape::scale(Id a, double c) {
    TensorData out = value(a);
    for (double& x : out.v) x *= c;
    return push(std::move(out), requires_grad(a), [a, c](Tape& t, Id self) {
        const auto& g = t.grad(self).v;
        if (!t.requires_grad(a)) return;
        auto& ga = t.grad_ref(a).v;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
    });
}

Tape::Id Tape::add_all(const std::vector<Id>& terms) {
    if (terms.empty()) throw Error("add_all: no terms");
    TensorData out = value(terms[0]);
    for (std::size_t k = 1; k < terms.size(); ++k) {
        const TensorData& v = value(terms[k]);
        require_same_shape(out, v, "add_all");
        for (std::size_t i = 0; i < out.size(); ++i) out.v[i] += v.v[i];
    }
    return push(std::move(out), any_requires(terms), [terms](Tape& t, Id self) {
        const auto& g = t.grad(self).v;
        for (Id id : terms) {
            if (!t.requires_grad(id)) continue;
            auto& gi = t.grad_ref(id).v;
            for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
    });
}

Tape::Id Tape::concat1d(const std::vector<Id>& parts) {
    std::vector<double> data;
    for (Id id : parts) {
        const TensorData& v = value(id);
        if (v.rank() != 1) throw Error("concat1d: parts must be 1-D");
        data.insert(data.end(), v.v.begin(), v.v.end());
    }
    return push(TensorData::vector(std::move(data)), any_requires(parts),
                [parts](Tape& t, Id self) {
                    const auto& g = t.grad(self).v;
                    std::size_t off = 0;
                    for (Id id : parts) {
                        const std::size_t n = t.value(id).size();
                        if (t.requires_grad(id)) {
                            auto& gi = t.grad_ref(id).v;
                            for (std::size_t i = 0; i < n; ++i) gi[i] += g[off + i];
                        }
                        off += n;
                    }
                });
}

Tape::Id Tape::concat_cols(Id a, Id b) {
    const TensorData& va = value(a);
    const TensorData& vb = value(b);
    if (va.rank() != 2 || vb.rank() != 2 || va.dim(0) != vb.dim(0))
        throw Error("concat_cols: need 2-D inputs with matching rows");
    const std::size_t rows = va.dim(0), ca = va.dim(1), cb = vb.dim(1);
    TensorData out = TensorData::zeros({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < ca; ++c) out.v[r * (ca + cb) + c] = va.v[r * ca + c];
        for (std::size_t c = 0; c < cb; ++c)
            out.v[r * (ca + cb) + ca + c] = vb.v[r * cb + c];
    }
    return push(std::move(out), any_requires({a, b}),
                [a, b, rows, ca, cb](Tape& t, Id self) {
                    const auto& g = t.grad(self).v;
                    if (t.requires_grad(a)) {
                        auto& ga = t.grad_ref(a).v;
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < ca; ++c)
                                ga[r * ca + c] += g[r * (ca + cb) + c];
                    }
                    if (t.requires_grad(b)) {
                        auto& gb = t.grad_ref(b).v;
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t c = 0; c < cb; ++c)
                                gb[r * cb + c] += g[r * (ca + cb) + ca + c];
                    }
                });
}

Tape::Id Tape::row(Id a, std::size_t r) {
    const TensorData& va = value(a);
    if (va.rank() != 2) throw Error("row: need a 2-D input");
    const std::size_t cols = va.dim(1);
    std::vector<double> data(va.v.begin() + static_cast<long>(r * cols),
                             va.v.begin() + static_cast<long>((r + 1) * cols));
    return push(TensorData::vector(std::move(data)), requires_grad(a),
                [a, r, cols](Tape& t, Id self) {
                    if (!t.requires_grad(a)) return;
                    const auto& g = t.grad(self).v;
                    auto& ga = t.grad_ref(a).v;
                    for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[c];
                });
}

Tape::Id Tape::col(Id a, std::size_t c) {
    const TensorData& va = value(a);
    if (va.rank() != 2) throw Error("col: need a 2-D input");
    const std::size_t rows = va.dim(0), cols = va.dim(1);
    std::vector<double> data(rows);
    for (std::size_t r = 0; r < rows; ++r) data[r] = va.v[r * cols + c];
    return push(TensorData::vector(std::move(data)), requires_grad(a),
                [a, c, rows, cols](Tape& t, Id self) {
                    if (!t.requires_grad(a)) return;
                    const auto& g = t.grad(self).v;
                    auto& ga = t.grad_ref(a).v;
                    for (std::size_t r = 0; r < rows; ++r) ga[r * cols + c] += g[r];
                });
}

Tape::Id Tape::stack_rows(const std::vector<Id>& rows) {
    if (rows.empty()) throw Error("stack_rows: no rows");
    const std::size_t cols = value(rows[0]).size();
    TensorData out = TensorData::zeros({rows.size(), cols});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const TensorData& v = value(rows[r]);
        if (v.rank() != 1 || v.size() != cols)
            throw Error("stack_rows: rows must be 1-D with equal length");
        for (std::size_t c = 0; c < cols; ++c) out.v[r * cols + c] = v.v[c];
    }
    return push(std::move(out), any_requires(rows), [rows, cols](Tape& t, Id self) {
        const auto& g = t.grad(self).v;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (!t.requires_grad(rows[r])) continue;
            auto& gr = t.grad_ref(rows[r]).v;
            for (std::size_t c = 0; c < cols; ++c) gr[c] += g[r * cols + c];
        }
    });
}

Tape::Id Tape::stack_scalars(const std::vector<Id>& xs) {
    std::vector<double> data(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (value(xs[i]).size() != 1) throw Error("stack_scalars: inputs must be scalars");
        data[i] = value(xs[i]).v[0];
    }
    return push(TensorData::vector(std::move(data)), any_requires(xs),
                [xs](Tape& t, Id self) {
                    const auto& g = t.grad(self).v;
                    for (std::size_t i = 0; i < xs.size(); ++i)
                        if (t.requires_grad(xs[i])) t.grad_ref(xs[i]).v[0] += g[i];
                });
}

Tape::Id Tape::element(Id a, std::size_t flat_index) {
    const TensorData& va = value(a);
    if (flat_index >= va.size()) throw Error("element: index out of range");
    return push(TensorData::scalar(va.v[flat_index]), requires_grad(a),
                [a, flat_index](Tape& t, Id self) {
                    if (!t.requires_grad(a)) return;
                    t.grad_ref(a).v[flat_index] += t.grad(self).v[0];
                });
}

Tape::Id Tape::tanh_op(Id a) {
    TensorData out = value(a);
    for (double& x : out.v) x = std::tanh(x);
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(self).v;
        const auto& y = t.value(self).v;
        auto& ga = t.grad_ref(a).v;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Tape::Id Tape::sigmoid_op(Id a) {
    TensorData out = value(a);
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(self).v;
        const auto& y = t.value(self).v;
        auto& ga = t.grad_ref(a).v;
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Tape::Id Tape::softmax_op(Id a) {
    const TensorData& va = value(a);
    if (va.rank() != 1) throw Error("softmax: need a 1-D input");
    TensorData out = va;
    double mx = out.v[0];
    for (double x : out.v) mx = std::max(mx, x);
    double sum = 0.0;
    for (double& x : out.v) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : out.v) x /= sum;
    return push(std::move(out), requires_grad(a), [a](Tape& t, Id self) {
        if (!t.requires_grad(a)) return;
        const auto& g = t.grad(self).v;
        const auto& y = t.value(self).v;
        auto& ga = t.grad_ref(a).v;
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - dot);
    });
}

Tape::Id Tape::atan2_cycles(Id y, Id x) {
    const TensorData& vy = value(y);
    const TensorData& vx = value(x);
    require_same_shape(vy, vx, "atan2_cycles");
    TensorData out = vy;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.v[i] = wrap_cycles(std::atan2(vy.v[i], vx.v[i]) / kTwoPi);
    return push(std::move(out), any_requires({y, x}), [y, x](Tape& t, Id self) {
        const auto& g = t.grad(self).v;
        const auto& vy2 = t.value(y).v;
        const auto& vx2 = t.value(x).v;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double denom = vx2[i] * vx2[i] + vy2[i] * vy2[i];
            if (denom == 0.0) continue;  // gradient defined as 0 at the origin
            if (t.requires_grad(y)) t.grad_ref(y).v[i] += g[i] * vx2[i] / (kTwoPi * denom);
            if (t.requires_grad(x)) t.grad_ref(x).v[i] -= g[i] * vy2[i] / (kTwoPi * denom);
        }
    });
}

Tape::Id Tape::dense(Id input, Id weights, Id bias) {
    const TensorData& x = value(input);
    const TensorData& w = value(weights);
    const TensorData& b = value(bias);
    if (w.rank() != 2) throw Error("dense: weights must be 2-D");
    const std::size_t m = w.dim(0), n = w.dim(1);
    if (b.rank() != 1 || b.size() != m) throw Error("dense: bias must be length " + std::to_string(m));

    const bool rowwise = x.rank() == 2;
    const std::size_t in_cols = rowwise ? x.dim(1) : x.size();
    if (in_cols != n) throw Error("dense: input width mismatch");
    const std::size_t rows = rowwise ? x.dim(0) : 1;

    TensorData out = rowwise ? TensorData::zeros({rows, m})
                             : TensorData::zeros({m});
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t i = 0; i < m; ++i) {
            double acc = b.v[i];
            const double* xr = x.v.data() + r * n;
            const double* wr = w.v.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) acc += wr[j] * xr[j];
            out.v[r * m + i] = acc;
        }
    return push(std::move(out), any_requires({input, weights, bias}),
                [input, weights, bias, rows, m, n](Tape& t, Id self) {
                    const auto& g = t.grad(self).v;
                    const auto& x2 = t.value(input).v;
                    const auto& w2 = t.value(weights).v;
                    if (t.requires_grad(input)) {
                        auto& gx = t.grad_ref(input).v;
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t i = 0; i < m; ++i) {
                                const double gi = g[r * m + i];
                                if (gi == 0.0) continue;
                                const double* wr = w2.data() + i * n;
                                double* gxr = gx.data() + r * n;
                                for (std::size_t j = 0; j < n; ++j) gxr[j] += gi * wr[j];
                            }
                    }
                    if (t.requires_grad(weights)) {
                        auto& gw = t.grad_ref(weights).v;
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t i = 0; i < m; ++i) {
                                const double gi = g[r * m + i];
                                if (gi == 0.0) continue;
                                const double* xr = x2.data() + r * n;
                                double* gwr = gw.data() + i * n;
                                for (std::size_t j = 0; j < n; ++j) gwr[j] += gi * xr[j];
                            }
                    }
                    if (t.requires_grad(bias)) {
                        auto& gb = t.grad_ref(bias).v;
                        for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t i = 0; i < m; ++i) gb[i] += g[r * m + i];
                    }
                });
}

Tape::Id Tape::conv1d(Id input, Id kernels, Id bias, int stride, int pad_left,
                      int pad_right, int dilation) {
    const TensorData& x = value(input);
    const TensorData& k = value(kernels);
    const TensorData& b = value(bias);
    if (x.rank() != 2) throw Error("conv1d: input must be T x Cin");
    if (k.rank() != 3) throw Error("conv1d: kernels must be Cout x Cin x W");
    if (stride < 1 || dilation < 1 || pad_left < 0 || pad_right < 0)
        throw Error("conv1d: bad stride/padding/dilation");
    const std::size_t T = x.dim(0), cin = x.dim(1);
    const std::size_t cout = k.dim(0), kcin = k.dim(1), W = k.dim(2);
    if (kcin != cin) throw Error("conv1d: kernel channel mismatch");
    if (b.size() != cout) throw Error("conv1d: bias size mismatch");
    const long eff = static_cast<long>(dilation) * (static_cast<long>(W) - 1) + 1;
    const long padded = static_cast<long>(T) + pad_left + pad_right;
    if (padded < eff) throw Error("conv1d: kernel wider than padded input");
    const std::size_t t_out = static_cast<std::size_t>((padded - eff) / stride + 1);

    TensorData out = TensorData::zeros({t_out, cout});
    for (std::size_t t = 0; t < t_out; ++t) {
        const long base = static_cast<long>(t) * stride - pad_left;
        for (std::size_t o = 0; o < cout; ++o) {
            double acc = b.v[o];
            for (std::size_t w = 0; w < W; ++w) {
                const long ti = base + static_cast<long>(w) * dilation;
                if (ti < 0 || ti >= static_cast<long>(T)) continue;
                const double* xr = x.v.data() + static_cast<std::size_t>(ti) * cin;
                const double* kk = k.v.data() + o * cin * W + w;
                for (std::size_t ci = 0; ci < cin; ++ci) acc += xr[ci] * kk[ci * W];
            }
            out.v[t * cout + o] = acc;
        }
    }
    return push(std::move(out), any_requires({input, kernels, bias}),
                [input, kernels, bias, stride, pad_left, dilation, T, cin, cout,
                 W, t_out](Tape& t, Id self) {
                    const auto& g = t.grad(self).v;
                    const auto& x2 = t.value(input).v;
                    const auto& k2 = t.value(kernels).v;
                    const bool want_x = t.requires_grad(input);
                    const bool want_k = t.requires_grad(kernels);
                    const bool want_b = t.requires_grad(bias);
                    auto* gx = want_x ? &t.grad_ref(input).v : nullptr;
                    auto* gk = want_k ? &t.grad_ref(kernels).v : nullptr;
                    auto* gb = want_b ? &t.grad_ref(bias).v : nullptr;
                    for (std::size_t to = 0; to < t_out; ++to) {
                        const long base = static_cast<long>(to) * stride - pad_left;
                        for (std::size_t o = 0; o < cout; ++o) {
                            const double go = g[to * cout + o];
                            if (go == 0.0) continue;
                            if (gb) (*gb)[o] += go;
                            for (std::size_t w = 0; w < W; ++w) {
                                const long ti = base + static_cast<long>(w) * dilation;
                                if (ti < 0 || ti >= static_cast<long>(T)) continue;
                                const std::size_t ut = static_cast<std::size_t>(ti);
                                for (std::size_t ci = 0; ci < cin; ++ci) {
                                    const std::size_t ki = o * cin * W + ci * W + w;
                                    if (gx) (*gx)[ut * cin + ci] += go * k2[ki];
                                    if (gk) (*gk)[ki] += go * x2[ut * cin + ci];
                                }
                            }
                        }
                    }
                });
}

Tape::Id Tape::channel_norm(Id input, double eps) {
    const TensorData& x = value(input);
    if (x.rank() != 2) throw Error("channel_norm: input must be T x C");
    const std::size_t T = x.dim(0), C = x.dim(1);
    if (T < 1) throw Error("channel_norm: empty input");

    // per-channel mean and scale
    auto stats = std::make_shared<std::vector<double>>(2 * C);  // mean, inv_scale
    TensorData out = TensorData::zeros({T, C});
    for (std::size_t c = 0; c < C; ++c) {
        double mean = 0.0;
        for (std::size_t t = 0; t < T; ++t) mean += x.v[t * C + c];
        mean /= static_cast<double>(T);
        double var = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double d = x.v[t * C + c] - mean;
            var += d * d;
        }
        var /= static_cast<double>(T);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*stats)[c] = mean;
        (*stats)[C + c] = inv;
        for (std::size_t t = 0; t < T; ++t) out.v[t * C + c] = (x.v[t * C + c] - mean) * inv;
    }
    return push(std::move(out), requires_grad(input),
                [input, T, C, stats](Tape& t, Id self) {
                    if (!t.requires_grad(input)) return;
                    const auto& g = t.grad(self).v;
                    const auto& y = t.value(self).v;
                    auto& gx = t.grad_ref(input).v;
                    for (std::size_t c = 0; c < C; ++c) {
                        const double inv = (*stats)[C + c];
                        double gmean = 0.0, gydot = 0.0;
                        for (std::size_t tt = 0; tt < T; ++tt) {
                            gmean += g[tt * C + c];
                            gydot += g[tt * C + c] * y[tt * C + c];
                        }
                        gmean /= static_cast<double>(T);
                        gydot /= static_cast<double>(T);
                        for (std::size_t tt = 0; tt < T; ++tt)
                            gx[tt * C + c] +=
                                inv * (g[tt * C + c] - gmean - y[tt * C + c] * gydot);
                    }
                });
}

Tape::FftOut Tape::fft_params(Id latent) {
    const TensorData& y = value(latent);
    if (y.rank() != 2) throw Error("fft_params: latent must be T x N");
    const std::size_t T = y.dim(0), N = y.dim(1);
    if (T < 2 || T % 2 != 0) throw Error("fft_params: T must be even and >= 2");
    const std::size_t K = T / 2;
    const double Tf = static_cast<double>(T);

    struct ChannelState {
        std::vector<double> re, im;  // bins 0..K
        double sum_power = 0.0;
        double amplitude = 0.0, frequency = 0.0;
        bool degenerate = false;
    };
    struct Shared {
        std::size_t T = 0, N = 0, K = 0;
        std::vector<double> cos_tab, sin_tab;  // index (j*t) mod T
        std::vector<ChannelState> channels;
    };
    auto sh = std::make_shared<Shared>();
    sh->T = T;
    sh->N = N;
    sh->K = K;
    sh->cos_tab.resize(T);
    sh->sin_tab.resize(T);
    for (std::size_t m = 0; m < T; ++m) {
        const double ang = kTwoPi * static_cast<double>(m) / Tf;
        sh->cos_tab[m] = std::cos(ang);
        sh->sin_tab[m] = std::sin(ang);
    }
    sh->channels.resize(N);

    TensorData amp = TensorData::zeros({N});
    TensorData freq = TensorData::zeros({N});
    TensorData off = TensorData::zeros({N});

    for (std::size_t c = 0; c < N; ++c) {
        ChannelState& st = sh->channels[c];
        st.re.assign(K + 1, 0.0);
        st.im.assign(K + 1, 0.0);
        for (std::size_t j = 0; j <= K; ++j) {
            double re = 0.0, im = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                const std::size_t m = (j * t) % T;
                const double x = y.v[t * N + c];
                re += x * sh->cos_tab[m];
                im -= x * sh->sin_tab[m];
            }
            st.re[j] = re;
            st.im[j] = im;
        }
        double sum_p = 0.0, freq_num = 0.0;
        for (std::size_t j = 1; j <= K; ++j) {
            const double p = (2.0 / Tf) * (st.re[j] * st.re[j] + st.im[j] * st.im[j]);
            sum_p += p;
            freq_num += (static_cast<double>(j) / Tf) * p;
        }
        st.sum_power = sum_p;
        const double dc = st.re[0] / Tf;
        const double floor = 1e-20 * std::max(1.0, dc * dc);
        st.degenerate = sum_p <= floor;
        st.amplitude = std::sqrt(std::max(0.0, (2.0 / Tf) * sum_p));
        st.frequency = st.degenerate ? 0.0 : freq_num / sum_p;
        amp.v[c] = st.amplitude;
        freq.v[c] = st.frequency;
        off.v[c] = dc;
    }

    const bool req = requires_grad(latent);

    // Each output node scatters its own gradient through the shared DFT
    // state. dP_j/dy_t = (4/T) (Re_j cos - Im_j sin).
    Id amp_id = push(std::move(amp), req, [latent, sh](Tape& t, Id self) {
        if (!t.requires_grad(latent)) return;
        const auto& g = t.grad(self).v;
        auto& gy = t.grad_ref(latent).v;
        const std::size_t T2 = sh->T, N2 = sh->N, K2 = sh->K;
        const double Tf2 = static_cast<double>(T2);
        for (std::size_t c = 0; c < N2; ++c) {
            const ChannelState& st = sh->channels[c];
            if (g[c] == 0.0 || st.degenerate || st.amplitude <= 0.0) continue;
            const double coef = g[c] / (Tf2 * st.amplitude) * (4.0 / Tf2);
            for (std::size_t tt = 0; tt < T2; ++tt) {
                double acc = 0.0;
                for (std::size_t j = 1; j <= K2; ++j) {
                    const std::size_t m = (j * tt) % T2;
                    acc += st.re[j] * sh->cos_tab[m] - st.im[j] * sh->sin_tab[m];
                }
                gy[tt * N2 + c] += coef * acc;
            }
        }
    });

    Id freq_id = push(std::move(freq), req, [latent, sh](Tape& t, Id self) {
        if (!t.requires_grad(latent)) return;
        const auto& g = t.grad(self).v;
        auto& gy = t.grad_ref(latent).v;
        const std::size_t T2 = sh->T, N2 = sh->N, K2 = sh->K;
        const double Tf2 = static_cast<double>(T2);
        for (std::size_t c = 0; c < N2; ++c) {
            const ChannelState& st = sh->channels[c];
            if (g[c] == 0.0 || st.degenerate) continue;
            const double coef = g[c] / st.sum_power * (4.0 / Tf2);
            for (std::size_t tt = 0; tt < T2; ++tt) {
                double acc = 0.0;
                for (std::size_t j = 1; j <= K2; ++j) {
                    const std::size_t m = (j * tt) % T2;
                    const double alpha = static_cast<double>(j) / Tf2;
                    acc += (alpha - st.frequency) *
                           (st.re[j] * sh->cos_tab[m] - st.im[j] * sh->sin_tab[m]);
                }
                gy[tt * N2 + c] += coef * acc;
            }
        }
    });

    Id off_id = push(std::move(off), req, [latent, sh](Tape& t, Id self) {
        if (!t.requires_grad(latent)) return;
        const auto& g = t.grad(self).v;
        auto& gy = t.grad_ref(latent).v;
        const std::size_t T2 = sh->T, N2 = sh->N;
        const double inv = 1.0 / static_cast<double>(T2);
        for (std::size_t c = 0; c < N2; ++c) {
            if (g[c] == 0.0) continue;
            for (std::size_t tt = 0; tt < T2; ++tt) gy[tt * N2 + c] += g[c] * inv;
        }
    });

    return {amp_id, freq_id, off_id};
}

Tape::Id Tape::periodic_reconstruct(Id amplitude, Id frequency, Id offset, Id phase,
                                    std::size_t frames) {
    const TensorData& A = value(amplitude);
    const TensorData& F = value(frequency);
    const TensorData& B = value(offset);
    const TensorData& S = value(phase);
    const std::size_t N = A.size();
    if (F.size() != N || B.size() != N || S.size() != N)
        throw Error("periodic_reconstruct: parameter length mismatch");

    TensorData out = TensorData::zeros({frames, N});
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t c = 0; c < N; ++c) {
            const double ph = kTwoPi * (F.v[c] * static_cast<double>(t) - S.v[c]);
            out.v[t * N + c] = A.v[c] * std::sin(ph) + B.v[c];
        }
    return push(std::move(out), any_requires({amplitude, frequency, offset, phase}),
                [amplitude, frequency, offset, phase, frames, N](Tape& t, Id self) {
                    const auto& g = t.grad(self).v;
                    const auto& A2 = t.value(amplitude).v;
                    const auto& F2 = t.value(frequency).v;
                    const auto& S2 = t.value(phase).v;
                    const bool wa = t.requires_grad(amplitude);
                    const bool wf = t.requires_grad(frequency);
                    const bool wb = t.requires_grad(offset);
                    const bool ws = t.requires_grad(phase);
                    for (std::size_t tt = 0; tt < frames; ++tt)
                        for (std::size_t c = 0; c < N; ++c) {
                            const double go = g[tt * N + c];
                            if (go == 0.0) continue;
                            const double ph =
                                kTwoPi * (F2[c] * static_cast<double>(tt) - S2[c]);
                            const double s = std::sin(ph), co = std::cos(ph);
                            if (wa) t.grad_ref(amplitude).v[c] += go * s;
                            if (wf)
                                t.grad_ref(frequency).v[c] +=
                                    go * A2[c] * co * kTwoPi * static_cast<double>(tt);
                            if (wb) t.grad_ref(offset).v[c] += go;
                            if (ws) t.grad_ref(phase).v[c] -= go * A2[c] * co * kTwoPi;
                        }
                });
}

Tape::Id Tape::l1_loss(Id x, Id y) {
    const TensorData& vx = value(x);
    const TensorData& vy = value(y);
    require_same_shape(vx, vy, "l1_loss");
    const double n = static_cast<double>(vx.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < vx.size(); ++i) acc += std::fabs(vx.v[i] - vy.v[i]);
    return push(TensorData::scalar(acc / n), any_requires({x, y}),
                [x, y, n](Tape& t, Id self) {
                    const double g = t.grad(self).v[0] / n;
                    const auto& vx2 = t.value(x).v;
                    const auto& vy2 = t.value(y).v;
                    for (std::size_t i = 0; i < vx2.size(); ++i) {
                        const double d = vx2[i] - vy2[i];
                        const double s = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                        if (t.requires_grad(x)) t.grad_ref(x).v[i] += g * s;
                        if (t.requires_grad(y)) t.grad_ref(y).v[i] -= g * s;
                    }
                });
}

Tape::Id Tape::mse_loss(Id x, Id y) {
    const TensorData& vx = value(x);
    const TensorData& vy = value(y);
    require_same_shape(vx, vy, "mse_loss");
    const double n = static_cast<double>(vx.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < vx.size(); ++i) {
        const double d = vx.v[i] - vy.v[i];
        acc += d * d;
    }
    return push(TensorData::scalar(acc / n), any_requires({x, y}),
                [x, y, n](Tape& t, Id self) {
                    const double g = t.grad(self).v[0] / n;
                    const auto& vx2 = t.value(x).v;
                    const auto& vy2 = t.value(y).v;
                    for (std::size_t i = 0; i < vx2.size(); ++i) {
                        const double d = vx2[i] - vy2[i];
                        if (t.requires_grad(x)) t.grad_ref(x).v[i] += g * 2.0 * d;
                        if (t.requires_grad(y)) t.grad_ref(y).v[i] -= g * 2.0 * d;
                    }
                });
}

Tape::Id Tape::velocity_l1_loss(Id x, Id y, double dt) {
    const TensorData& vx = value(x);
    const TensorData& vy = value(y);
    require_same_shape(vx, vy, "velocity_l1_loss");
    if (vx.rank() != 2) throw Error("velocity_l1_loss: inputs must be T x C");
    if (!(dt > 0.0)) throw Error("velocity_l1_loss: dt must be positive");
    const std::size_t T = vx.dim(0), C = vx.dim(1);
    if (T < 2) throw Error("velocity_l1_loss: need at least 2 frames");
    const double n = static_cast<double>((T - 1) * C);

    double acc = 0.0;
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t c = 0; c < C; ++c) {
            const double d = (vx.v[(t + 1) * C + c] - vy.v[(t + 1) * C + c]) -
                             (vx.v[t * C + c] - vy.v[t * C + c]);
            acc += std::fabs(d / dt);
        }
    return push(TensorData::scalar(acc / n), any_requires({x, y}),
                [x, y, dt, T, C, n](Tape& t, Id self) {
                    const double g = t.grad(self).v[0] / (n * dt);
                    const auto& vx2 = t.value(x).v;
                    const auto& vy2 = t.value(y).v;
                    for (std::size_t tt = 0; tt + 1 < T; ++tt)
                        for (std::size_t c = 0; c < C; ++c) {
                            const double d = (vx2[(tt + 1) * C + c] - vy2[(tt + 1) * C + c]) -
                                             (vx2[tt * C + c] - vy2[tt * C + c]);
                            const double s = (d > 0.0) ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                            if (t.requires_grad(x)) {
                                t.grad_ref(x).v[(tt + 1) * C + c] += g * s;
                                t.grad_ref(x).v[tt * C + c] -= g * s;
                            }
                            if (t.requires_grad(y)) {
                                t.grad_ref(y).v[(tt + 1) * C + c] -= g * s;
                                t.grad_ref(y).v[tt * C + c] += g * s;
                            }
                        }
                });
}

Tape::Id Tape::sq_loss_const(Id pred, std::vector<double> target,
                             std::vector<double> mask) {
    const TensorData& p = value(pred);
    if (p.size() != target.size() || p.size() != mask.size())
        throw Error("sq_loss_const: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p.v[i] - target[i];
        acc += mask[i] * d * d;
    }
    auto tgt = std::make_shared<std::vector<double>>(std::move(target));
    auto msk = std::make_shared<std::vector<double>>(std::move(mask));
    return push(TensorData::scalar(acc), requires_grad(pred),
                [pred, tgt, msk](Tape& t, Id self) {
                    if (!t.requires_grad(pred)) return;
                    const double g = t.grad(self).v[0];
                    const auto& p2 = t.value(pred).v;
                    auto& gp = t.grad_ref(pred).v;
                    for (std::size_t i = 0; i < p2.size(); ++i)
                        gp[i] += g * (*msk)[i] * 2.0 * (p2[i] - (*tgt)[i]);
                });
}

Tape::Id Tape::circular_sq_loss_const(Id pred, std::vector<double> target,
                                      std::vector<double> mask) {
    const TensorData& p = value(pred);
    if (p.size() != target.size() || p.size() != mask.size())
        throw Error("circular_sq_loss_const: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = wrap_signed(p.v[i] - target[i]);
        acc += mask[i] * d * d;
    }
    auto tgt = std::make_shared<std::vector<double>>(std::move(target));
    auto msk = std::make_shared<std::vector<double>>(std::move(mask));
    return push(TensorData::scalar(acc), requires_grad(pred),
                [pred, tgt, msk](Tape& t, Id self) {
                    if (!t.requires_grad(pred)) return;
                    const double g = t.grad(self).v[0];
                    const auto& p2 = t.value(pred).v;
                    auto& gp = t.grad_ref(pred).v;
                    for (std::size_t i = 0; i < p2.size(); ++i) {
                        const double d = wrap_signed(p2[i] - (*tgt)[i]);
                        gp[i] += g * (*msk)[i] * 2.0 * d;
                    }
                });
}

void Tape::backward(Id root) {
    if (value(root).size() != 1) throw Error("backward: root must be a scalar");
    for (auto& node : nodes_) {
        node.grad = TensorData::zeros(node.value.shape);
    }
    nodes_[static_cast<std::size_t>(root)].grad.v[0] = 1.0;
    for (Id id = root; id >= 0; --id) {
        Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.backward && node.requires_grad) node.backward(*this, id);
    }
}

} // namespace gesturelab::autodiff
