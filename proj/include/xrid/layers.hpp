// Neural network layers with hand-written forward and reverse passes.
// Activations are cached on forward and consumed by backward; parameter
// gradients accumulate into each tensor's grad buffer.
//
// Layout conventions: sequence batches are [B, T, F] at the model boundary;
// convolutional stacks run internally on [B, C, T] so the innermost loops
// stream over contiguous time steps.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "xrid/error.hpp"
#include "xrid/parallel.hpp"
#include "xrid/rng.hpp"
#include "xrid/tensor.hpp"

namespace xrid {

template <typename S>
inline void uniform_init(Tensor<S>& t, double bound, Rng& rng) {
    for (S& v : t.values) v = static_cast<S>(rng.uniform(-bound, bound));
}

// y = x W^T + b, x: [B, In] -> y: [B, Out]
template <typename S>
class Linear {
public:
    Linear() = default;
    Linear(int in, int out) : in_(in), out_(out), weight_({out, in}), bias_({out}) {
        weight_.ensure_grad();
        bias_.ensure_grad();
    }

    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_));
        uniform_init(weight_, bound, rng);
        uniform_init(bias_, bound, rng);
    }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.shape.size() != 2 || x.dim(1) != in_) {
            throw ShapeError("linear input: expected [*," + std::to_string(in_) + "], got " +
                             shape_string(x.shape));
        }
        input_ = x;
        const int batch = x.dim(0);
        Tensor<S> y({batch, out_});
        const S* w = weight_.data();
        const S* b = bias_.data();
        parallel_for(static_cast<std::size_t>(batch), [&](std::size_t bi) {
            const S* row = x.data() + bi * static_cast<std::size_t>(in_);
            S* out_row = y.data() + bi * static_cast<std::size_t>(out_);
            for (int o = 0; o < out_; ++o) {
                const S* wrow = w + static_cast<std::size_t>(o) * in_;
                S acc = b[o];
                for (int i = 0; i < in_; ++i) acc += wrow[i] * row[i];
                out_row[o] = acc;
            }
        });
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        const int batch = dy.dim(0);
        require_shape(dy.shape, {batch, out_}, "linear output grad");
        // dW[o,i] = sum_b dy[b,o] x[b,i]; db[o] = sum_b dy[b,o]
        S* dw = weight_.grad.data();
        S* db = bias_.grad.data();
        parallel_for(static_cast<std::size_t>(out_), [&](std::size_t o) {
            S* dwrow = dw + o * static_cast<std::size_t>(in_);
            S acc_b = S(0);
            for (int b = 0; b < batch; ++b) {
                const S g = dy.data()[static_cast<std::size_t>(b) * out_ + o];
                const S* xrow = input_.data() + static_cast<std::size_t>(b) * in_;
                for (int i = 0; i < in_; ++i) dwrow[i] += g * xrow[i];
                acc_b += g;
            }
            db[o] += acc_b;
        });
        Tensor<S> dx({batch, in_});
        parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
            S* dxrow = dx.data() + b * static_cast<std::size_t>(in_);
            const S* dyrow = dy.data() + b * static_cast<std::size_t>(out_);
            for (int o = 0; o < out_; ++o) {
                const S g = dyrow[o];
                const S* wrow = weight_.data() + static_cast<std::size_t>(o) * in_;
                for (int i = 0; i < in_; ++i) dxrow[i] += g * wrow[i];
            }
        });
        return dx;
    }

    Tensor<S>& weight() { return weight_; }
    Tensor<S>& bias() { return bias_; }
    int in_features() const { return in_; }
    int out_features() const { return out_; }

private:
    int in_ = 0;
    int out_ = 0;
    Tensor<S> weight_;
    Tensor<S> bias_;
    Tensor<S> input_;
};

// Temporal convolution with stride 1 and same-length zero padding.
// x: [B, Cin, T] -> y: [B, Cout, T]
template <typename S>
class Conv1d {
public:
    Conv1d() = default;
    Conv1d(int in_channels, int out_channels, int kernel)
        : cin_(in_channels), cout_(out_channels), kernel_(kernel),
          weight_({out_channels, in_channels, kernel}), bias_({out_channels}) {
        weight_.ensure_grad();
        bias_.ensure_grad();
    }

    void init(Rng& rng) {
        const double fan_in = static_cast<double>(cin_ * kernel_);
        const double bound = 1.0 / std::sqrt(fan_in);
        uniform_init(weight_, bound, rng);
        uniform_init(bias_, bound, rng);
    }

    Tensor<S> forward(const Tensor<S>& x) {
        if (x.shape.size() != 3 || x.dim(1) != cin_) {
            throw ShapeError("conv input: expected [*," + std::to_string(cin_) + ",*], got " +
                             shape_string(x.shape));
        }
        input_ = x;
        const int batch = x.dim(0);
        const int time = x.dim(2);
        const int pad_left = (kernel_ - 1) / 2;
        Tensor<S> y({batch, cout_, time});
        parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
            const S* xb = x.data() + b * static_cast<std::size_t>(cin_) * time;
            S* yb = y.data() + b * static_cast<std::size_t>(cout_) * time;
            for (int co = 0; co < cout_; ++co) {
                S* yrow = yb + static_cast<std::size_t>(co) * time;
                const S bias = bias_.data()[co];
                for (int t = 0; t < time; ++t) yrow[t] = bias;
                for (int ci = 0; ci < cin_; ++ci) {
                    const S* xrow = xb + static_cast<std::size_t>(ci) * time;
                    const S* wrow =
                        weight_.data() + (static_cast<std::size_t>(co) * cin_ + ci) * kernel_;
                    for (int k = 0; k < kernel_; ++k) {
                        const S w = wrow[k];
                        const int offset = k - pad_left;
                        const int t0 = std::max(0, -offset);
                        const int t1 = std::min(time, time - offset);
                        for (int t = t0; t < t1; ++t) yrow[t] += w * xrow[t + offset];
                    }
                }
            }
        });
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy, bool need_input_grad = true) {
        const int batch = dy.dim(0);
        const int time = dy.dim(2);
        require_shape(dy.shape, {batch, cout_, time}, "conv output grad");
        const int pad_left = (kernel_ - 1) / 2;

        // Weight/bias grads: one thread owns one output channel.
        parallel_for(static_cast<std::size_t>(cout_), [&](std::size_t co) {
            S* dwbase = weight_.grad.data() + co * static_cast<std::size_t>(cin_) * kernel_;
            S acc_bias = S(0);
            for (int b = 0; b < batch; ++b) {
                const S* dyrow =
                    dy.data() + (static_cast<std::size_t>(b) * cout_ + co) * time;
                const S* xb = input_.data() + static_cast<std::size_t>(b) * cin_ * time;
                for (int t = 0; t < time; ++t) acc_bias += dyrow[t];
                for (int ci = 0; ci < cin_; ++ci) {
                    const S* xrow = xb + static_cast<std::size_t>(ci) * time;
                    S* dwrow = dwbase + static_cast<std::size_t>(ci) * kernel_;
                    for (int k = 0; k < kernel_; ++k) {
                        const int offset = k - pad_left;
                        const int t0 = std::max(0, -offset);
                        const int t1 = std::min(time, time - offset);
                        S acc = S(0);
                        for (int t = t0; t < t1; ++t) acc += dyrow[t] * xrow[t + offset];
                        dwrow[k] += acc;
                    }
                }
            }
            bias_.grad.data()[co] += acc_bias;
        });

        Tensor<S> dx;
        if (need_input_grad) {
            dx = Tensor<S>({batch, cin_, time});
            parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
                S* dxb = dx.data() + b * static_cast<std::size_t>(cin_) * time;
                const S* dyb = dy.data() + b * static_cast<std::size_t>(cout_) * time;
                for (int co = 0; co < cout_; ++co) {
                    const S* dyrow = dyb + static_cast<std::size_t>(co) * time;
                    for (int ci = 0; ci < cin_; ++ci) {
                        S* dxrow = dxb + static_cast<std::size_t>(ci) * time;
                        const S* wrow =
                            weight_.data() + (static_cast<std::size_t>(co) * cin_ + ci) * kernel_;
                        for (int k = 0; k < kernel_; ++k) {
                            const S w = wrow[k];
                            const int offset = k - pad_left;
                            const int t0 = std::max(0, -offset);
                            const int t1 = std::min(time, time - offset);
                            for (int t = t0; t < t1; ++t) dxrow[t + offset] += w * dyrow[t];
                        }
                    }
                }
            });
        }
        return dx;
    }

    Tensor<S>& weight() { return weight_; }
    Tensor<S>& bias() { return bias_; }

private:
    int cin_ = 0;
    int cout_ = 0;
    int kernel_ = 0;
    Tensor<S> weight_;
    Tensor<S> bias_;
    Tensor<S> input_;
};

template <typename S>
class ReLU {
public:
    Tensor<S> forward(const Tensor<S>& x) {
        mask_.assign(x.size(), 0);
        Tensor<S> y = x;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y.values[i] > S(0)) {
                mask_[i] = 1;
            } else {
                y.values[i] = S(0);
            }
        }
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) {
        Tensor<S> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i) {
            if (!mask_[i]) dx.values[i] = S(0);
        }
        return dx;
    }

private:
    std::vector<unsigned char> mask_;
};

// Inverted dropout: active only in training mode; eval mode is the identity.
template <typename S>
class Dropout {
public:
    explicit Dropout(double rate = 0.0) : rate_(rate) {
        if (rate < 0.0 || rate >= 1.0) throw ParameterError("dropout rate must be in [0,1)");
    }

    Tensor<S> forward(const Tensor<S>& x, bool training, Rng* rng) {
        if (!training || rate_ == 0.0) {
            active_ = false;
            return x;
        }
        if (!rng) throw StateError("dropout in training mode requires an rng");
        active_ = true;
        const S keep_scale = static_cast<S>(1.0 / (1.0 - rate_));
        scale_.assign(x.size(), S(0));
        Tensor<S> y = x;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (rng->uniform() >= rate_) {
                scale_[i] = keep_scale;
                y.values[i] *= keep_scale;
            } else {
                y.values[i] = S(0);
            }
        }
        return y;
    }

    Tensor<S> backward(const Tensor<S>& dy) {
        if (!active_) return dy;
        Tensor<S> dx = dy;
        for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] *= scale_[i];
        return dx;
    }

private:
    double rate_ = 0.0;
    bool active_ = false;
    std::vector<S> scale_;
};

// Mean over the time axis: [B, C, T] -> [B, C]
template <typename S>
class GlobalAvgPool {
public:
    Tensor<S> forward(const Tensor<S>& x) {
        const int batch = x.dim(0);
        const int channels = x.dim(1);
        time_ = x.dim(2);
        Tensor<S> y({batch, channels});
        const S inv = static_cast<S>(1.0 / static_cast<double>(time_));
        for (int b = 0; b < batch; ++b) {
            for (int c = 0; c < channels; ++c) {
                const S* row = x.data() + (static_cast<std::size_t>(b) * channels + c) * time_;
                S acc = S(0);
                for (int t = 0; t < time_; ++t) acc += row[t];
                y.values[static_cast<std::size_t>(b) * channels + c] = acc * inv;
            }
        }
        return y;
    }
    Tensor<S> backward(const Tensor<S>& dy) {
        const int batch = dy.dim(0);
        const int channels = dy.dim(1);
        Tensor<S> dx({batch, channels, time_});
        const S inv = static_cast<S>(1.0 / static_cast<double>(time_));
        for (int b = 0; b < batch; ++b) {
            for (int c = 0; c < channels; ++c) {
                const S g = dy.values[static_cast<std::size_t>(b) * channels + c] * inv;
                S* row = dx.data() + (static_cast<std::size_t>(b) * channels + c) * time_;
                for (int t = 0; t < time_; ++t) row[t] = g;
            }
        }
        return dx;
    }

private:
    int time_ = 0;
};

// Single GRU layer over a full sequence, gate order (reset, update,
// candidate). x: [B, T, In] -> h: [B, T, H]; h0 = 0.
template <typename S>
class GruLayer {
public:
    GruLayer() = default;
    GruLayer(int in, int hidden)
        : in_(in), hidden_(hidden), w_ih_({3 * hidden, in}), w_hh_({3 * hidden, hidden}),
          b_ih_({3 * hidden}), b_hh_({3 * hidden}) {
        w_ih_.ensure_grad();
        w_hh_.ensure_grad();
        b_ih_.ensure_grad();
        b_hh_.ensure_grad();
    }

    void init(Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
        uniform_init(w_ih_, bound, rng);
        uniform_init(w_hh_, bound, rng);
        uniform_init(b_ih_, bound, rng);
        uniform_init(b_hh_, bound, rng);
    }

    const Tensor<S>& forward(const Tensor<S>& x) {
        if (x.shape.size() != 3 || x.dim(2) != in_) {
            throw ShapeError("gru input: expected [*,*," + std::to_string(in_) + "], got " +
                             shape_string(x.shape));
        }
        input_ = x;
        const int batch = x.dim(0);
        const int time = x.dim(1);
        const std::size_t bh = static_cast<std::size_t>(batch) * hidden_;

        output_ = Tensor<S>({batch, time, hidden_});
        reset_.assign(static_cast<std::size_t>(time) * bh, S(0));
        update_.assign(static_cast<std::size_t>(time) * bh, S(0));
        candidate_.assign(static_cast<std::size_t>(time) * bh, S(0));
        hidden_pre_.assign(static_cast<std::size_t>(time) * bh, S(0));

        std::vector<S> h(bh, S(0));
        std::vector<S> gi(static_cast<std::size_t>(batch) * 3 * hidden_);
        std::vector<S> gh(static_cast<std::size_t>(batch) * 3 * hidden_);

        for (int t = 0; t < time; ++t) {
            gates(x, t, h, gi, gh);
            S* r_t = reset_.data() + static_cast<std::size_t>(t) * bh;
            S* z_t = update_.data() + static_cast<std::size_t>(t) * bh;
            S* n_t = candidate_.data() + static_cast<std::size_t>(t) * bh;
            S* hn_t = hidden_pre_.data() + static_cast<std::size_t>(t) * bh;
            parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
                const S* gi_b = gi.data() + b * 3 * hidden_;
                const S* gh_b = gh.data() + b * 3 * hidden_;
                S* h_b = h.data() + b * hidden_;
                for (int j = 0; j < hidden_; ++j) {
                    const S r = sigmoid(gi_b[j] + gh_b[j]);
                    const S z = sigmoid(gi_b[hidden_ + j] + gh_b[hidden_ + j]);
                    const S hn = gh_b[2 * hidden_ + j];
                    const S n = std::tanh(gi_b[2 * hidden_ + j] + r * hn);
                    r_t[b * hidden_ + j] = r;
                    z_t[b * hidden_ + j] = z;
                    n_t[b * hidden_ + j] = n;
                    hn_t[b * hidden_ + j] = hn;
                    h_b[j] = (S(1) - z) * n + z * h_b[j];
                }
                S* out_row = output_.data() +
                             (b * static_cast<std::size_t>(time) + static_cast<std::size_t>(t)) *
                                 hidden_;
                for (int j = 0; j < hidden_; ++j) out_row[j] = h_b[j];
            });
        }
        return output_;
    }

    // dh_seq: gradient w.r.t. the full output sequence [B, T, H].
    Tensor<S> backward(const Tensor<S>& dh_seq) {
        const int batch = dh_seq.dim(0);
        const int time = dh_seq.dim(1);
        require_shape(dh_seq.shape, {batch, time, hidden_}, "gru output grad");
        const std::size_t bh = static_cast<std::size_t>(batch) * hidden_;

        Tensor<S> dx({batch, time, in_});
        std::vector<S> dh_carry(bh, S(0));
        std::vector<S> dgi(static_cast<std::size_t>(batch) * 3 * hidden_);
        std::vector<S> dgh(static_cast<std::size_t>(batch) * 3 * hidden_);

        for (int t = time - 1; t >= 0; --t) {
            const S* r_t = reset_.data() + static_cast<std::size_t>(t) * bh;
            const S* z_t = update_.data() + static_cast<std::size_t>(t) * bh;
            const S* n_t = candidate_.data() + static_cast<std::size_t>(t) * bh;
            const S* hn_t = hidden_pre_.data() + static_cast<std::size_t>(t) * bh;

            parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
                S* dgi_b = dgi.data() + b * 3 * hidden_;
                S* dgh_b = dgh.data() + b * 3 * hidden_;
                S* dh_b = dh_carry.data() + b * hidden_;
                for (int j = 0; j < hidden_; ++j) {
                    const std::size_t idx = b * hidden_ + static_cast<std::size_t>(j);
                    const S dh = dh_b[j] +
                                 dh_seq.values[(b * static_cast<std::size_t>(time) + t) * hidden_ + j];
                    const S r = r_t[idx];
                    const S z = z_t[idx];
                    const S n = n_t[idx];
                    const S hn = hn_t[idx];
                    const S h_prev = prev_hidden(b, t, time, j);
                    const S dz = dh * (h_prev - n);
                    const S dn = dh * (S(1) - z);
                    const S dn_pre = dn * (S(1) - n * n);
                    const S dr = dn_pre * hn;
                    dgi_b[j] = dr * r * (S(1) - r);
                    dgi_b[hidden_ + j] = dz * z * (S(1) - z);
                    dgi_b[2 * hidden_ + j] = dn_pre;
                    dgh_b[j] = dgi_b[j];
                    dgh_b[hidden_ + j] = dgi_b[hidden_ + j];
                    dgh_b[2 * hidden_ + j] = dn_pre * r;
                    dh_b[j] = dh * z; // carry into h_{t-1}; W_hh part added below
                }
            });

            // Parameter gradients, one thread per gate row.
            parallel_for(static_cast<std::size_t>(3 * hidden_), [&](std::size_t row) {
                S* dwih_row = w_ih_.grad.data() + row * static_cast<std::size_t>(in_);
                S* dwhh_row = w_hh_.grad.data() + row * static_cast<std::size_t>(hidden_);
                S acc_bi = S(0);
                S acc_bh = S(0);
                for (int b = 0; b < batch; ++b) {
                    const S gi_g = dgi[static_cast<std::size_t>(b) * 3 * hidden_ + row];
                    const S gh_g = dgh[static_cast<std::size_t>(b) * 3 * hidden_ + row];
                    const S* x_row = input_.data() +
                                     (static_cast<std::size_t>(b) * time + static_cast<std::size_t>(t)) * in_;
                    for (int i = 0; i < in_; ++i) dwih_row[i] += gi_g * x_row[i];
                    for (int j = 0; j < hidden_; ++j) {
                        dwhh_row[j] += gh_g * prev_hidden(static_cast<std::size_t>(b), t, time, j);
                    }
                    acc_bi += gi_g;
                    acc_bh += gh_g;
                }
                b_ih_.grad.data()[row] += acc_bi;
                b_hh_.grad.data()[row] += acc_bh;
            });

            // Input grads and hidden-state carry.
            parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
                const S* dgi_b = dgi.data() + b * 3 * hidden_;
                const S* dgh_b = dgh.data() + b * 3 * hidden_;
                S* dx_row = dx.data() +
                            (b * static_cast<std::size_t>(time) + static_cast<std::size_t>(t)) * in_;
                for (int row = 0; row < 3 * hidden_; ++row) {
                    const S g = dgi_b[row];
                    if (g == S(0)) continue;
                    const S* w_row = w_ih_.data() + static_cast<std::size_t>(row) * in_;
                    for (int i = 0; i < in_; ++i) dx_row[i] += g * w_row[i];
                }
                S* dh_b = dh_carry.data() + b * hidden_;
                for (int row = 0; row < 3 * hidden_; ++row) {
                    const S g = dgh_b[row];
                    if (g == S(0)) continue;
                    const S* w_row = w_hh_.data() + static_cast<std::size_t>(row) * hidden_;
                    for (int j = 0; j < hidden_; ++j) dh_b[j] += g * w_row[j];
                }
            });
        }
        return dx;
    }

    Tensor<S>& w_ih() { return w_ih_; }
    Tensor<S>& w_hh() { return w_hh_; }
    Tensor<S>& b_ih() { return b_ih_; }
    Tensor<S>& b_hh() { return b_hh_; }
    int hidden_size() const { return hidden_; }

private:
    static S sigmoid(S v) { return S(1) / (S(1) + std::exp(-v)); }

    // h_{t-1} for batch row b, read back from the stored output sequence.
    S prev_hidden(std::size_t b, int t, int time, int j) const {
        if (t == 0) return S(0);
        return output_.values[(b * static_cast<std::size_t>(time) +
                               static_cast<std::size_t>(t - 1)) *
                                  hidden_ +
                              static_cast<std::size_t>(j)];
    }

    void gates(const Tensor<S>& x, int t, const std::vector<S>& h, std::vector<S>& gi,
               std::vector<S>& gh) {
        const int batch = x.dim(0);
        const int time = x.dim(1);
        parallel_for(static_cast<std::size_t>(batch), [&](std::size_t b) {
            const S* x_row = x.data() + (b * static_cast<std::size_t>(time) + t) * in_;
            const S* h_row = h.data() + b * hidden_;
            S* gi_row = gi.data() + b * 3 * hidden_;
            S* gh_row = gh.data() + b * 3 * hidden_;
            for (int row = 0; row < 3 * hidden_; ++row) {
                const S* wi = w_ih_.data() + static_cast<std::size_t>(row) * in_;
                S acc = b_ih_.data()[row];
                for (int i = 0; i < in_; ++i) acc += wi[i] * x_row[i];
                gi_row[row] = acc;
                const S* wh = w_hh_.data() + static_cast<std::size_t>(row) * hidden_;
                S acch = b_hh_.data()[row];
                for (int j = 0; j < hidden_; ++j) acch += wh[j] * h_row[j];
                gh_row[row] = acch;
            }
        });
    }

    int in_ = 0;
    int hidden_ = 0;
    Tensor<S> w_ih_;
    Tensor<S> w_hh_;
    Tensor<S> b_ih_;
    Tensor<S> b_hh_;
    Tensor<S> input_;
    Tensor<S> output_;
    std::vector<S> reset_;
    std::vector<S> update_;
    std::vector<S> candidate_;
    std::vector<S> hidden_pre_; // W_hn h_{t-1} + b_hn, needed for the reset-gate grad
};

} // namespace xrid
