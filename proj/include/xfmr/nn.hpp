#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "xfmr/dataset.hpp"
#include "xfmr/rng.hpp"

namespace xfmr {

/// Dense row-major matrix.
template <typename T>
struct Mat {
    std::size_t rows = 0, cols = 0;
    std::vector<T> v;

    Mat() = default;
    Mat(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c) {}
    T* operator[](std::size_t r) { return v.data() + r * cols; }
    const T* operator[](std::size_t r) const { return v.data() + r * cols; }
    bool empty() const { return v.empty(); }
};

namespace detail {

// C = A * B. Rows of C are independent; the per-element accumulation order
// is fixed, so the result is identical for any number of OpenMP workers.
template <typename T>
void matmul(const Mat<T>& a, const Mat<T>& b, Mat<T>& c) {
    c.rows = a.rows;
    c.cols = b.cols;
    c.v.assign(a.rows * b.cols, T(0));
    const std::int64_t m = static_cast<std::int64_t>(a.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a[static_cast<std::size_t>(i)];
        T* crow = c[static_cast<std::size_t>(i)];
        for (std::size_t l = 0; l < a.cols; ++l) {
            const T av = arow[l];
            const T* brow = b[l];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
}

// C = A^T * B with A: m x k, B: m x n, C: k x n.
template <typename T>
void matmul_at_b(const Mat<T>& a, const Mat<T>& b, Mat<T>& c) {
    c.rows = a.cols;
    c.cols = b.cols;
    c.v.assign(a.cols * b.cols, T(0));
    const std::int64_t k = static_cast<std::int64_t>(a.cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t l = 0; l < k; ++l) {
        T* crow = c[static_cast<std::size_t>(l)];
        for (std::size_t i = 0; i < a.rows; ++i) {
            const T av = a[i][static_cast<std::size_t>(l)];
            const T* brow = b[i];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
Mat<T> transpose(const Mat<T>& a) {
    Mat<T> t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t[j][i] = a[i][j];
    return t;
}

}  // namespace detail

template <typename T>
struct LinearLayer {
    std::size_t in = 0, out = 0;
    Mat<T> wt;            // weights stored transposed (in x out) for fast forward
    std::vector<T> bias;  // out
};

template <typename T>
struct BatchNormLayer {
    std::size_t dim = 0;
    std::vector<T> gamma, beta, run_mean, run_var;
    T momentum = T(0.1);
    T eps = T(1e-5);
};

struct ReluLayer {};

template <typename T>
using Layer = std::variant<LinearLayer<T>, BatchNormLayer<T>, ReluLayer>;

template <typename T>
struct LayerStack {
    std::vector<Layer<T>> layers;
    std::size_t in_dim = 0, out_dim = 0;
};

/// Per-layer activations cached by the training forward pass for backward.
template <typename T>
struct ForwardTrace {
    std::vector<Mat<T>> inputs;           // input fed to each layer
    std::vector<Mat<T>> bn_xhat;          // normalized pre-gamma/beta activations
    std::vector<std::vector<T>> bn_istd;  // 1/sqrt(var + eps) per feature
    Mat<T> output;
};

/// Gradient tensors in parameter order (see `parameters`).
template <typename T>
using GradTensors = std::vector<std::vector<T>>;

/// Flattened list of trainable tensors: per layer, linear -> {weights, bias},
/// batch norm -> {gamma, beta}. Running stats are not trainable.
template <typename T>
std::vector<std::span<T>> parameters(LayerStack<T>& stack) {
    std::vector<std::span<T>> out;
    for (auto& layer : stack.layers) {
        if (auto* lin = std::get_if<LinearLayer<T>>(&layer)) {
            out.emplace_back(lin->wt.v);
            out.emplace_back(lin->bias);
        } else if (auto* bn = std::get_if<BatchNormLayer<T>>(&layer)) {
            out.emplace_back(bn->gamma);
            out.emplace_back(bn->beta);
        }
    }
    return out;
}

template <typename T>
GradTensors<T> make_grad_tensors(LayerStack<T>& stack) {
    GradTensors<T> g;
    for (auto view : parameters(stack)) g.emplace_back(view.size(), T(0));
    return g;
}

template <typename T>
Mat<T> forward_eval(const LayerStack<T>& stack, const Mat<T>& x) {
    Mat<T> cur = x;
    Mat<T> next;
    for (const auto& layer : stack.layers) {
        if (const auto* lin = std::get_if<LinearLayer<T>>(&layer)) {
            detail::matmul(cur, lin->wt, next);
            for (std::size_t i = 0; i < next.rows; ++i)
                for (std::size_t j = 0; j < lin->out; ++j) next[i][j] += lin->bias[j];
            cur = std::move(next);
        } else if (const auto* bn = std::get_if<BatchNormLayer<T>>(&layer)) {
            for (std::size_t j = 0; j < bn->dim; ++j) {
                const T scale = bn->gamma[j] / std::sqrt(bn->run_var[j] + bn->eps);
                const T shift = bn->beta[j] - bn->run_mean[j] * scale;
                for (std::size_t i = 0; i < cur.rows; ++i)
                    cur[i][j] = cur[i][j] * scale + shift;
            }
        } else {
            for (auto& v : cur.v) v = v > T(0) ? v : T(0);
        }
    }
    return cur;
}

/// Training-mode forward: batch statistics in batch norm (running stats are
/// updated in place), caches recorded for backward. Batch must be >= 2.
template <typename T>
void forward_train(LayerStack<T>& stack, const Mat<T>& x, ForwardTrace<T>& trace) {
    if (x.rows < 2) throw std::invalid_argument("training forward needs batch size >= 2");
    const std::size_t nl = stack.layers.size();
    trace.inputs.assign(nl, Mat<T>());
    trace.bn_xhat.assign(nl, Mat<T>());
    trace.bn_istd.assign(nl, {});

    Mat<T> cur = x;
    Mat<T> next;
    for (std::size_t li = 0; li < nl; ++li) {
        trace.inputs[li] = cur;
        auto& layer = stack.layers[li];
        if (auto* lin = std::get_if<LinearLayer<T>>(&layer)) {
            detail::matmul(cur, lin->wt, next);
            for (std::size_t i = 0; i < next.rows; ++i)
                for (std::size_t j = 0; j < lin->out; ++j) next[i][j] += lin->bias[j];
            cur = std::move(next);
        } else if (auto* bn = std::get_if<BatchNormLayer<T>>(&layer)) {
            const std::size_t b = cur.rows;
            const T inv_b = T(1) / static_cast<T>(b);
            Mat<T> xhat(b, bn->dim);
            std::vector<T> istd(bn->dim);
            for (std::size_t j = 0; j < bn->dim; ++j) {
                T mean = 0;
                for (std::size_t i = 0; i < b; ++i) mean += cur[i][j];
                mean *= inv_b;
                T var = 0;
                for (std::size_t i = 0; i < b; ++i) {
                    const T d = cur[i][j] - mean;
                    var += d * d;
                }
                var *= inv_b;  // population variance for normalization
                const T is = T(1) / std::sqrt(var + bn->eps);
                istd[j] = is;
                for (std::size_t i = 0; i < b; ++i) {
                    const T xh = (cur[i][j] - mean) * is;
                    xhat[i][j] = xh;
                    cur[i][j] = bn->gamma[j] * xh + bn->beta[j];
                }
                // running stats track the unbiased batch variance
                const T unbiased = var * static_cast<T>(b) / static_cast<T>(b - 1);
                bn->run_mean[j] = (T(1) - bn->momentum) * bn->run_mean[j] + bn->momentum * mean;
                bn->run_var[j] = (T(1) - bn->momentum) * bn->run_var[j] + bn->momentum * unbiased;
            }
            trace.bn_xhat[li] = std::move(xhat);
            trace.bn_istd[li] = std::move(istd);
        } else {
            for (auto& v : cur.v) v = v > T(0) ? v : T(0);
        }
    }
    trace.output = std::move(cur);
}

/// Reverse pass. `dout` is dL/d(output); parameter gradients are ACCUMULATED
/// into `grads` (zeroed by the caller); if `dinput` is non-null it receives
/// dL/d(input) for chaining into an upstream stack.
template <typename T>
void backward(const LayerStack<T>& stack, const ForwardTrace<T>& trace, const Mat<T>& dout,
              GradTensors<T>& grads, Mat<T>* dinput) {
    Mat<T> d = dout;
    Mat<T> dprev;
    // index of the last grad tensor, walked backwards
    std::size_t gi = grads.size();
    for (std::size_t li = stack.layers.size(); li-- > 0;) {
        const auto& layer = stack.layers[li];
        const Mat<T>& x = trace.inputs[li];
        if (const auto* lin = std::get_if<LinearLayer<T>>(&layer)) {
            gi -= 2;
            {
                std::span<T> dbias(grads[gi + 1]);
                for (std::size_t i = 0; i < d.rows; ++i)
                    for (std::size_t j = 0; j < lin->out; ++j) dbias[j] += d[i][j];
            }
            // dWt = x^T * d
            {
                Mat<T> dwt;
                detail::matmul_at_b(x, d, dwt);
                std::span<T> gw(grads[gi]);
                for (std::size_t idx = 0; idx < gw.size(); ++idx) gw[idx] += dwt.v[idx];
            }
            const bool need_dx = li > 0 || dinput != nullptr;
            if (need_dx) {
                const Mat<T> w = detail::transpose(lin->wt);  // (out x in)
                detail::matmul(d, w, dprev);
                d = std::move(dprev);
            }
        } else if (const auto* bn = std::get_if<BatchNormLayer<T>>(&layer)) {
            gi -= 2;
            const Mat<T>& xhat = trace.bn_xhat[li];
            const std::vector<T>& istd = trace.bn_istd[li];
            const std::size_t b = d.rows;
            const T inv_b = T(1) / static_cast<T>(b);
            std::span<T> dgamma(grads[gi]);
            std::span<T> dbeta(grads[gi + 1]);
            for (std::size_t j = 0; j < bn->dim; ++j) {
                T sum_dy = 0, sum_dy_xhat = 0;
                for (std::size_t i = 0; i < b; ++i) {
                    sum_dy += d[i][j];
                    sum_dy_xhat += d[i][j] * xhat[i][j];
                }
                dgamma[j] += sum_dy_xhat;
                dbeta[j] += sum_dy;
                const T g_is = bn->gamma[j] * istd[j];
                const T mean_dy = sum_dy * inv_b;
                const T mean_dy_xhat = sum_dy_xhat * inv_b;
                for (std::size_t i = 0; i < b; ++i)
                    d[i][j] = g_is * (d[i][j] - mean_dy - xhat[i][j] * mean_dy_xhat);
            }
        } else {
            for (std::size_t idx = 0; idx < d.v.size(); ++idx)
                if (!(x.v[idx] > T(0))) d.v[idx] = T(0);
        }
    }
    if (dinput != nullptr) *dinput = std::move(d);
}

/// Linear chain [dims0 -> dims1 -> ...]; batch norm + ReLU follow every
/// linear layer except the last. Weights and biases start uniform in
/// +/- sqrt(1/fan_in); batch norm starts at identity (gamma 1, beta 0).
template <typename T>
LayerStack<T> make_mlp(const std::vector<std::size_t>& dims, Rng& rng) {
    if (dims.size() < 2) throw std::invalid_argument("mlp needs at least 2 dims");
    LayerStack<T> stack;
    stack.in_dim = dims.front();
    stack.out_dim = dims.back();
    for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
        LinearLayer<T> lin;
        lin.in = dims[li];
        lin.out = dims[li + 1];
        lin.wt = Mat<T>(lin.in, lin.out);
        lin.bias.resize(lin.out);
        const double bound = std::sqrt(1.0 / static_cast<double>(lin.in));
        // draw order is the logical (out x in) row-major layout
        for (std::size_t o = 0; o < lin.out; ++o)
            for (std::size_t i = 0; i < lin.in; ++i)
                lin.wt[i][o] = static_cast<T>(rng.uniform(-bound, bound));
        for (std::size_t o = 0; o < lin.out; ++o)
            lin.bias[o] = static_cast<T>(rng.uniform(-bound, bound));
        stack.layers.emplace_back(std::move(lin));
        if (li + 2 < dims.size()) {
            BatchNormLayer<T> bn;
            bn.dim = dims[li + 1];
            bn.gamma.assign(bn.dim, T(1));
            bn.beta.assign(bn.dim, T(0));
            bn.run_mean.assign(bn.dim, T(0));
            bn.run_var.assign(bn.dim, T(1));
            stack.layers.emplace_back(std::move(bn));
            stack.layers.emplace_back(ReluLayer{});
        }
    }
    return stack;
}

/// Two-stage synthesis network: the circuit net maps standardized
/// (x1, x2) -> y, the physical net maps y -> v.
template <typename T>
struct SynthesisModel {
    LayerStack<T> circuit;   // 7 linear layers, 4 -> hidden x6 -> 5
    LayerStack<T> physical;  // 3 linear layers, 5 -> hidden x2 -> 3
    std::size_t hidden = 0;
    NormStats norm;
};

template <typename T>
SynthesisModel<T> make_synthesis_model(std::size_t hidden, std::uint64_t seed) {
    SynthesisModel<T> m;
    m.hidden = hidden;
    Rng rng(mix_seed(seed, 10));
    m.circuit = make_mlp<T>({kXCols, hidden, hidden, hidden, hidden, hidden, hidden, kYCols}, rng);
    m.physical = make_mlp<T>({kYCols, hidden, hidden, kVCols}, rng);
    return m;
}

template <typename T>
std::string architecture_descriptor(const SynthesisModel<T>& m) {
    std::string s;
    for (const LayerStack<T>* stack : {&m.circuit, &m.physical}) {
        s += s.empty() ? "circuit:" : ";physical:";
        for (const auto& layer : stack->layers) {
            if (const auto* lin = std::get_if<LinearLayer<T>>(&layer))
                s += "L" + std::to_string(lin->in) + "x" + std::to_string(lin->out);
            else if (std::get_if<BatchNormLayer<T>>(&layer))
                s += "B";
            else
                s += "R";
        }
    }
    return s;
}

template <typename T>
std::pair<Mat<T>, Mat<T>> model_forward_eval(const SynthesisModel<T>& m, const Mat<T>& x) {
    Mat<T> y = forward_eval(m.circuit, x);
    Mat<T> v = forward_eval(m.physical, y);
    return {std::move(y), std::move(v)};
}

/// Composite loss: tau * mean((y - y_hat)^2) + mean((v - v_hat)^2), means
/// over batch and output dimensions.
template <typename T>
T composite_loss(const Mat<T>& y_hat, const Mat<T>& v_hat, const Mat<T>& y, const Mat<T>& v,
                 T tau) {
    T ly = 0, lv = 0;
    for (std::size_t i = 0; i < y.v.size(); ++i) {
        const T d = y.v[i] - y_hat.v[i];
        ly += d * d;
    }
    for (std::size_t i = 0; i < v.v.size(); ++i) {
        const T d = v.v[i] - v_hat.v[i];
        lv += d * d;
    }
    return tau * ly / static_cast<T>(y.v.size()) + lv / static_cast<T>(v.v.size());
}

/// One full forward/backward of the composite loss. Gradients are
/// accumulated into the provided tensors (caller zeroes them); returns the
/// batch loss. Both loss terms reach the circuit net; only the physical
/// term reaches the physical net.
template <typename T>
T model_loss_backward(SynthesisModel<T>& m, const Mat<T>& x, const Mat<T>& y, const Mat<T>& v,
                      T tau, GradTensors<T>& grads_circuit, GradTensors<T>& grads_physical) {
    ForwardTrace<T> tf, tg;
    forward_train(m.circuit, x, tf);
    forward_train(m.physical, tf.output, tg);
    const Mat<T>& y_hat = tf.output;
    const Mat<T>& v_hat = tg.output;
    const T loss = composite_loss(y_hat, v_hat, y, v, tau);

    Mat<T> dv(v.rows, v.cols);
    const T sv = T(2) / static_cast<T>(v.v.size());
    for (std::size_t i = 0; i < v.v.size(); ++i) dv.v[i] = sv * (v_hat.v[i] - v.v[i]);

    Mat<T> dy_from_g;
    backward(m.physical, tg, dv, grads_physical, &dy_from_g);

    const T sy = tau * T(2) / static_cast<T>(y.v.size());
    for (std::size_t i = 0; i < y.v.size(); ++i) dy_from_g.v[i] += sy * (y_hat.v[i] - y.v[i]);
    backward(m.circuit, tf, dy_from_g, grads_circuit, nullptr);
    return loss;
}

/// Adam with coupled weight decay (decay added to the gradient before the
/// moment updates) and bias correction.
template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m, v;
    long long t = 0;

    static AdamState init_for(const std::vector<std::span<T>>& params) {
        AdamState st;
        for (auto p : params) {
            st.m.emplace_back(p.size(), T(0));
            st.v.emplace_back(p.size(), T(0));
        }
        return st;
    }
};

template <typename T>
void adam_step(const std::vector<std::span<T>>& params, const GradTensors<T>& grads,
               AdamState<T>& st, T lr, T weight_decay, T beta1, T beta2, T eps) {
    if (params.size() != grads.size() || params.size() != st.m.size())
        throw std::invalid_argument("adam_step: state/gradient layout mismatch");
    st.t += 1;
    const T bc1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1), static_cast<double>(st.t)));
    const T bc2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2), static_cast<double>(st.t)));
    for (std::size_t p = 0; p < params.size(); ++p) {
        std::span<T> w = params[p];
        const std::vector<T>& g = grads[p];
        std::vector<T>& m = st.m[p];
        std::vector<T>& v = st.v[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const T gi = g[i] + weight_decay * w[i];
            m[i] = beta1 * m[i] + (T(1) - beta1) * gi;
            v[i] = beta2 * v[i] + (T(1) - beta2) * gi * gi;
            const T mhat = m[i] / bc1;
            const T vhat = v[i] / bc2;
            w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace xfmr
