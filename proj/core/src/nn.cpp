#include "asmap/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace asmap {

namespace {

constexpr std::size_t kConv1Maps = 32;
constexpr std::size_t kConv2Maps = 16;
constexpr std::size_t kKernel = 3;

Tensor he_normal(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in) {
    Tensor t(std::move(shape));
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : t.data) v = std_dev * rng.normal();
    return t;
}

std::vector<Tensor> grads_like(const Model& model) {
    std::vector<Tensor> g;
    g.reserve(model.params.size());
    for (const auto& p : model.params) g.emplace_back(Tensor::zeros(p.shape));
    return g;
}

}  // namespace

Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      const std::vector<double>& bias) {
    if (input.shape.size() != 3 || kernels.shape.size() != 4)
        throw std::invalid_argument("conv2d: input must be [C,H,W], kernels [O,C,KH,KW]");
    const std::size_t in_c = input.shape[0], in_h = input.shape[1], in_w = input.shape[2];
    const std::size_t out_c = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    if (kernels.shape[1] != in_c || bias.size() != out_c)
        throw std::invalid_argument("conv2d: kernel/bias shape mismatch");
    if (in_h < kh || in_w < kw)
        throw std::invalid_argument("conv2d: input smaller than kernel");
    const std::size_t out_h = in_h - kh + 1, out_w = in_w - kw + 1;

    Tensor out({out_c, out_h, out_w});
    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t y = 0; y < out_h; ++y)
            for (std::size_t x = 0; x < out_w; ++x) {
                double acc = bias[o];
                for (std::size_t c = 0; c < in_c; ++c)
                    for (std::size_t dy = 0; dy < kh; ++dy)
                        for (std::size_t dx = 0; dx < kw; ++dx)
                            acc += kernels.at4(o, c, dy, dx) * input.at3(c, y + dy, x + dx);
                out.at3(o, y, x) = acc;
            }
    return out;
}

void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor& grad_in, Tensor& grad_kernels, std::vector<double>& grad_bias) {
    const std::size_t in_c = input.shape[0];
    const std::size_t out_c = kernels.shape[0], kh = kernels.shape[2], kw = kernels.shape[3];
    const std::size_t out_h = grad_out.shape[1], out_w = grad_out.shape[2];

    grad_in = Tensor::zeros(input.shape);
    grad_kernels = Tensor::zeros(kernels.shape);
    grad_bias.assign(out_c, 0.0);

    for (std::size_t o = 0; o < out_c; ++o)
        for (std::size_t y = 0; y < out_h; ++y)
            for (std::size_t x = 0; x < out_w; ++x) {
                const double g = grad_out.at3(o, y, x);
                grad_bias[o] += g;
                for (std::size_t c = 0; c < in_c; ++c)
                    for (std::size_t dy = 0; dy < kh; ++dy)
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            grad_kernels.at4(o, c, dy, dx) += g * input.at3(c, y + dy, x + dx);
                            grad_in.at3(c, y + dy, x + dx) += g * kernels.at4(o, c, dy, dx);
                        }
            }
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = std::max(0.0, v);
    return out;
}

Tensor relu_backward(const Tensor& grad, const Tensor& x) {
    if (grad.data.size() != x.data.size())
        throw std::invalid_argument("relu_backward: shape mismatch");
    Tensor out = grad;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        if (x.data[i] <= 0.0) out.data[i] = 0.0;
    return out;
}

PoolResult maxpool2x2(const Tensor& input) {
    if (input.shape.size() != 3)
        throw std::invalid_argument("maxpool2x2: input must be [C,H,W]");
    const std::size_t c_n = input.shape[0], h = input.shape[1], w = input.shape[2];
    if (h < 2 || w < 2)
        throw std::invalid_argument("maxpool2x2: spatial dims must be >= 2");
    const std::size_t oh = h / 2, ow = w / 2;

    PoolResult res;
    res.out = Tensor({c_n, oh, ow});
    res.argmax.resize(c_n * oh * ow);
    std::size_t cell = 0;
    for (std::size_t c = 0; c < c_n; ++c)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x, ++cell) {
                double best = input.at3(c, 2 * y, 2 * x);
                std::size_t best_idx = (c * h + 2 * y) * w + 2 * x;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const double v = input.at3(c, 2 * y + dy, 2 * x + dx);
                        if (v > best) {
                            best = v;
                            best_idx = (c * h + 2 * y + dy) * w + 2 * x + dx;
                        }
                    }
                res.out.at3(c, y, x) = best;
                res.argmax[cell] = best_idx;
            }
    return res;
}

Tensor maxpool2x2_backward(const Tensor& grad_out, const PoolResult& pooled,
                           const std::vector<std::size_t>& input_shape) {
    Tensor grad_in = Tensor::zeros(input_shape);
    for (std::size_t i = 0; i < pooled.argmax.size(); ++i)
        grad_in.data[pooled.argmax[i]] += grad_out.data[i];
    return grad_in;
}

Tensor dropout(const Tensor& input, double rate, Rng& rng, bool training,
               std::vector<std::uint8_t>* mask_out) {
    if (rate < 0.0 || rate >= 1.0)
        throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) {
        if (mask_out) mask_out->assign(input.size(), 1);
        return input;
    }
    Tensor out = input;
    const double scale = 1.0 / (1.0 - rate);
    if (mask_out) mask_out->assign(input.size(), 1);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (rng.uniform() < rate) {
            out.data[i] = 0.0;
            if (mask_out) (*mask_out)[i] = 0;
        } else {
            out.data[i] *= scale;
        }
    }
    return out;
}

Tensor dropout_backward(const Tensor& grad, double rate,
                        const std::vector<std::uint8_t>& mask) {
    Tensor out = grad;
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = mask[i] ? out.data[i] * scale : 0.0;
    return out;
}

std::vector<double> dense_forward(const std::vector<double>& x, const Tensor& w,
                                  const std::vector<double>& b) {
    if (w.shape.size() != 2 || w.shape[1] != x.size() || w.shape[0] != b.size())
        throw std::invalid_argument("dense: shape mismatch");
    const std::size_t out_n = w.shape[0], in_n = w.shape[1];
    std::vector<double> y(b);
    for (std::size_t o = 0; o < out_n; ++o) {
        const double* row = &w.data[o * in_n];
        double acc = 0.0;
        for (std::size_t i = 0; i < in_n; ++i) acc += row[i] * x[i];
        y[o] += acc;
    }
    return y;
}

void dense_backward(const std::vector<double>& x, const Tensor& w,
                    const std::vector<double>& grad_y, Tensor& grad_w,
                    std::vector<double>& grad_b, std::vector<double>& grad_x) {
    const std::size_t out_n = w.shape[0], in_n = w.shape[1];
    grad_w = Tensor::zeros(w.shape);
    grad_b = grad_y;
    grad_x.assign(in_n, 0.0);
    for (std::size_t o = 0; o < out_n; ++o) {
        const double g = grad_y[o];
        const double* row = &w.data[o * in_n];
        double* grow = &grad_w.data[o * in_n];
        for (std::size_t i = 0; i < in_n; ++i) {
            grow[i] = g * x[i];
            grad_x[i] += g * row[i];
        }
    }
}

XentResult softmax_cross_entropy(const std::vector<double>& logits,
                                 std::size_t true_class) {
    if (logits.size() < 2)
        throw std::invalid_argument("softmax_cross_entropy: need >= 2 classes");
    if (true_class >= logits.size())
        throw std::invalid_argument("softmax_cross_entropy: class index out of range");
    XentResult r;
    const double mx = *std::max_element(logits.begin(), logits.end());
    r.probs.resize(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        r.probs[i] = std::exp(logits[i] - mx);
        z += r.probs[i];
    }
    for (double& p : r.probs) p /= z;
    r.loss = -std::log(std::max(r.probs[true_class], 1e-300));
    r.grad = r.probs;
    r.grad[true_class] -= 1.0;
    return r;
}

std::size_t cnn_flat_dim(std::size_t in_h, std::size_t in_w) {
    if (in_h < 3 || in_w < 3)
        throw std::invalid_argument("cnn: input spatial dims must be >= 3");
    std::size_t h = in_h - 2, w = in_w - 2;
    if (h >= 2 && w >= 2) { h /= 2; w /= 2; }
    if (h < 3 || w < 3)
        throw std::invalid_argument("cnn: input too small for the second conv");
    h -= 2; w -= 2;
    if (h >= 2 && w >= 2) { h /= 2; w /= 2; }
    return kConv2Maps * h * w;
}

Model init_params(Rng& rng, const ModelSpec& spec) {
    Model m;
    m.spec = spec;
    if (spec.n_classes < 2)
        throw std::invalid_argument("init_params: need >= 2 classes");

    std::size_t head_in = 0;
    if (spec.kind == ModelKind::Cnn) {
        if (spec.in_h < 3 || spec.in_w < 3)
            throw std::invalid_argument("init_params: Cnn input must be >= 3x3");
        m.h1 = spec.in_h - 2;
        m.w1 = spec.in_w - 2;
        m.pool1 = m.h1 >= 2 && m.w1 >= 2;
        m.hp1 = m.pool1 ? m.h1 / 2 : m.h1;
        m.wp1 = m.pool1 ? m.w1 / 2 : m.w1;
        if (m.hp1 < 3 || m.wp1 < 3)
            throw std::invalid_argument("init_params: input too small for conv2");
        m.h2 = m.hp1 - 2;
        m.w2 = m.wp1 - 2;
        m.pool2 = m.h2 >= 2 && m.w2 >= 2;
        m.hp2 = m.pool2 ? m.h2 / 2 : m.h2;
        m.wp2 = m.pool2 ? m.w2 / 2 : m.w2;
        m.flat_dim = kConv2Maps * m.hp2 * m.wp2;
        head_in = m.flat_dim;

        m.params.push_back(he_normal(rng, {kConv1Maps, spec.in_channels, kKernel, kKernel},
                                     spec.in_channels * kKernel * kKernel));
        m.param_names.emplace_back("conv1.kernels");
        m.params.push_back(Tensor::zeros({kConv1Maps}));
        m.param_names.emplace_back("conv1.bias");
        m.params.push_back(he_normal(rng, {kConv2Maps, kConv1Maps, kKernel, kKernel},
                                     kConv1Maps * kKernel * kKernel));
        m.param_names.emplace_back("conv2.kernels");
        m.params.push_back(Tensor::zeros({kConv2Maps}));
        m.param_names.emplace_back("conv2.bias");
    } else {
        if (spec.in_dim == 0)
            throw std::invalid_argument("init_params: Mlp input dim must be positive");
        head_in = spec.in_dim;
        m.flat_dim = spec.in_dim;
    }

    m.params.push_back(he_normal(rng, {spec.hidden, head_in}, head_in));
    m.param_names.emplace_back("dense1.w");
    m.params.push_back(Tensor::zeros({spec.hidden}));
    m.param_names.emplace_back("dense1.b");
    m.params.push_back(he_normal(rng, {spec.hidden, spec.hidden}, spec.hidden));
    m.param_names.emplace_back("dense2.w");
    m.params.push_back(Tensor::zeros({spec.hidden}));
    m.param_names.emplace_back("dense2.b");
    m.params.push_back(he_normal(rng, {spec.n_classes, spec.hidden}, spec.hidden));
    m.param_names.emplace_back("output.w");
    m.params.push_back(Tensor::zeros({spec.n_classes}));
    m.param_names.emplace_back("output.b");
    return m;
}

// --- forward / backward ------------------------------------------------------

struct ForwardCache {
    Tensor x;
    Tensor z1, a1;
    PoolResult p1;
    bool pooled1 = false;
    std::vector<std::uint8_t> mask1;
    Tensor d1;
    Tensor z2, a2;
    PoolResult p2;
    bool pooled2 = false;
    std::vector<std::uint8_t> mask2;
    Tensor d2;
    std::vector<double> flat;
    std::vector<double> h1z, h1a, h2z, h2a, logits;
    bool dropout_active = false;
};

namespace {

std::vector<double> forward_impl(const Model& m, const Tensor& x, bool training,
                                 Rng* drop_rng, ForwardCache& c) {
    const auto& s = m.spec;
    c.dropout_active = training && drop_rng != nullptr && s.dropout_rate > 0.0;

    if (s.kind == ModelKind::Cnn) {
        if (x.shape.size() != 3 || x.shape[0] != s.in_channels ||
            x.shape[1] != s.in_h || x.shape[2] != s.in_w)
            throw std::invalid_argument("forward: Cnn input shape mismatch");
        c.x = x;
        c.z1 = conv2d_forward(x, m.params[0], m.params[1].data);
        c.a1 = relu(c.z1);
        if (m.pool1) {
            c.p1 = maxpool2x2(c.a1);
            c.pooled1 = true;
        } else {
            c.p1.out = c.a1;
        }
        if (c.dropout_active)
            c.d1 = dropout(c.p1.out, s.dropout_rate, *drop_rng, true, &c.mask1);
        else
            c.d1 = c.p1.out;
        c.z2 = conv2d_forward(c.d1, m.params[2], m.params[3].data);
        c.a2 = relu(c.z2);
        if (m.pool2) {
            c.p2 = maxpool2x2(c.a2);
            c.pooled2 = true;
        } else {
            c.p2.out = c.a2;
        }
        if (c.dropout_active)
            c.d2 = dropout(c.p2.out, s.dropout_rate, *drop_rng, true, &c.mask2);
        else
            c.d2 = c.p2.out;
        c.flat = c.d2.data;
    } else {
        if (x.size() != s.in_dim)
            throw std::invalid_argument("forward: Mlp input dim mismatch");
        c.flat = x.data;
    }

    const std::size_t base = s.kind == ModelKind::Cnn ? 4 : 0;
    c.h1z = dense_forward(c.flat, m.params[base], m.params[base + 1].data);
    c.h1a = c.h1z;
    if (s.relu_hidden)
        for (double& v : c.h1a) v = std::max(0.0, v);
    c.h2z = dense_forward(c.h1a, m.params[base + 2], m.params[base + 3].data);
    c.h2a = c.h2z;
    if (s.relu_hidden)
        for (double& v : c.h2a) v = std::max(0.0, v);
    c.logits = dense_forward(c.h2a, m.params[base + 4], m.params[base + 5].data);
    return c.logits;
}

void backward_impl(const Model& m, const ForwardCache& c,
                   const std::vector<double>& dlogits, std::vector<Tensor>& grads) {
    const auto& s = m.spec;
    const std::size_t base = s.kind == ModelKind::Cnn ? 4 : 0;

    Tensor gw;
    std::vector<double> gb, gh2a;
    dense_backward(c.h2a, m.params[base + 4], dlogits, gw, gb, gh2a);
    for (std::size_t i = 0; i < gw.size(); ++i) grads[base + 4].data[i] += gw.data[i];
    for (std::size_t i = 0; i < gb.size(); ++i) grads[base + 5].data[i] += gb[i];

    std::vector<double> gh2z = gh2a;
    if (s.relu_hidden)
        for (std::size_t i = 0; i < gh2z.size(); ++i)
            if (c.h2z[i] <= 0.0) gh2z[i] = 0.0;

    std::vector<double> gh1a;
    dense_backward(c.h1a, m.params[base + 2], gh2z, gw, gb, gh1a);
    for (std::size_t i = 0; i < gw.size(); ++i) grads[base + 2].data[i] += gw.data[i];
    for (std::size_t i = 0; i < gb.size(); ++i) grads[base + 3].data[i] += gb[i];

    std::vector<double> gh1z = gh1a;
    if (s.relu_hidden)
        for (std::size_t i = 0; i < gh1z.size(); ++i)
            if (c.h1z[i] <= 0.0) gh1z[i] = 0.0;

    std::vector<double> gflat;
    dense_backward(c.flat, m.params[base], gh1z, gw, gb, gflat);
    for (std::size_t i = 0; i < gw.size(); ++i) grads[base].data[i] += gw.data[i];
    for (std::size_t i = 0; i < gb.size(); ++i) grads[base + 1].data[i] += gb[i];

    if (s.kind != ModelKind::Cnn) return;

    Tensor gd2 = Tensor::zeros(c.d2.shape);
    gd2.data = gflat;
    Tensor gp2 = c.dropout_active ? dropout_backward(gd2, s.dropout_rate, c.mask2) : gd2;
    Tensor ga2 = c.pooled2 ? maxpool2x2_backward(gp2, c.p2, c.a2.shape) : gp2;
    Tensor gz2 = relu_backward(ga2, c.z2);

    Tensor gd1, gk2;
    std::vector<double> gb2;
    conv2d_backward(c.d1, m.params[2], gz2, gd1, gk2, gb2);
    for (std::size_t i = 0; i < gk2.size(); ++i) grads[2].data[i] += gk2.data[i];
    for (std::size_t i = 0; i < gb2.size(); ++i) grads[3].data[i] += gb2[i];

    Tensor gp1 = c.dropout_active ? dropout_backward(gd1, s.dropout_rate, c.mask1) : gd1;
    Tensor ga1 = c.pooled1 ? maxpool2x2_backward(gp1, c.p1, c.a1.shape) : gp1;
    Tensor gz1 = relu_backward(ga1, c.z1);

    Tensor gx, gk1;
    std::vector<double> gb1;
    conv2d_backward(c.x, m.params[0], gz1, gx, gk1, gb1);
    for (std::size_t i = 0; i < gk1.size(); ++i) grads[0].data[i] += gk1.data[i];
    for (std::size_t i = 0; i < gb1.size(); ++i) grads[1].data[i] += gb1[i];
}

// ReLU/pool decision fingerprint; parameters whose perturbation flips it are
// excluded from the finite-difference comparison.
void collect_pattern(const Model& m, const ForwardCache& c,
                     std::vector<std::uint8_t>& pattern) {
    pattern.clear();
    auto push_signs = [&pattern](const std::vector<double>& v) {
        for (double x : v) pattern.push_back(x > 0.0 ? 1 : 0);
    };
    if (m.spec.kind == ModelKind::Cnn) {
        push_signs(c.z1.data);
        push_signs(c.z2.data);
        auto push_indices = [&pattern](const std::vector<std::size_t>& v) {
            for (std::size_t idx : v)
                for (int b = 0; b < 4; ++b)
                    pattern.push_back(static_cast<std::uint8_t>(idx >> (8 * b)));
        };
        push_indices(c.p1.argmax);
        push_indices(c.p2.argmax);
    }
    if (m.spec.relu_hidden) {
        push_signs(c.h1z);
        push_signs(c.h2z);
    }
}

double loss_of(const Model& m, const Tensor& x, std::size_t y,
               std::vector<std::uint8_t>* pattern) {
    ForwardCache c;
    const auto logits = forward_impl(m, x, /*training=*/false, nullptr, c);
    if (pattern) collect_pattern(m, c, *pattern);
    return softmax_cross_entropy(logits, y).loss;
}

}  // namespace

std::vector<double> predict(const Model& model, const Tensor& x) {
    ForwardCache c;
    const auto logits = forward_impl(model, x, /*training=*/false, nullptr, c);
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - mx);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

TrainResult train(Model& model, const std::vector<Tensor>& inputs,
                  const std::vector<std::size_t>& labels, const TrainConfig& cfg) {
    if (inputs.empty() || inputs.size() != labels.size())
        throw std::invalid_argument("train: empty dataset or label count mismatch");
    if (cfg.batch_size == 0 || cfg.learning_rate < 0.0)
        throw std::invalid_argument("train: invalid hyperparameters");
    for (std::size_t y : labels)
        if (y >= model.spec.n_classes)
            throw std::invalid_argument("train: label out of range");

    // Separate streams: shuffling order must not depend on dropout draws.
    Rng shuffle_rng(cfg.seed + 2);
    Rng dropout_rng(cfg.seed + 1);

    std::vector<Tensor> m1 = grads_like(model);
    std::vector<Tensor> m2 = grads_like(model);
    std::size_t t = 0;

    std::vector<std::size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    result.history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(start + cfg.batch_size, order.size());
            std::vector<Tensor> grads = grads_like(model);
            for (std::size_t i = start; i < end; ++i) {
                ForwardCache c;
                const auto logits =
                    forward_impl(model, inputs[order[i]], true, &dropout_rng, c);
                const auto xr = softmax_cross_entropy(logits, labels[order[i]]);
                loss_sum += xr.loss;
                ++loss_count;
                backward_impl(model, c, xr.grad, grads);
            }
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            ++t;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
            for (std::size_t p = 0; p < model.params.size(); ++p) {
                auto& theta = model.params[p].data;
                auto& mm = m1[p].data;
                auto& vv = m2[p].data;
                const auto& g = grads[p].data;
                for (std::size_t i = 0; i < theta.size(); ++i) {
                    const double gi = g[i] * inv_batch;
                    mm[i] = cfg.beta1 * mm[i] + (1.0 - cfg.beta1) * gi;
                    vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gi * gi;
                    theta[i] -= cfg.learning_rate * (mm[i] / bc1) /
                                (std::sqrt(vv[i] / bc2) + cfg.adam_eps);
                }
            }
        }

        // inference-mode accuracy on the training set
        std::size_t correct = 0;
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            const auto p = predict(model, inputs[i]);
            const std::size_t arg = static_cast<std::size_t>(
                std::max_element(p.begin(), p.end()) - p.begin());
            if (arg == labels[i]) ++correct;
        }
        result.history.push_back(
            {loss_sum / static_cast<double>(loss_count),
             static_cast<double>(correct) / static_cast<double>(inputs.size())});
    }
    return result;
}

double grad_check(const Model& model, const Tensor& x, std::size_t true_class,
                  double epsilon, std::size_t per_layer, std::uint64_t sample_seed) {
    if (epsilon <= 0.0)
        throw std::invalid_argument("grad_check: epsilon must be positive");

    std::vector<Tensor> grads = grads_like(model);
    {
        ForwardCache c;
        const auto logits = forward_impl(model, x, false, nullptr, c);
        const auto xr = softmax_cross_entropy(logits, true_class);
        backward_impl(model, c, xr.grad, grads);
    }

    std::vector<std::uint8_t> base_pattern;
    loss_of(model, x, true_class, &base_pattern);

    Model probe = model;  // perturbed copy
    Rng rng(sample_seed);
    double max_rel = 0.0;
    for (std::size_t p = 0; p < model.params.size(); ++p) {
        const std::size_t n = model.params[p].size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        if (n > per_layer) {
            rng.shuffle(idx);
            idx.resize(per_layer);
        }
        for (std::size_t i : idx) {
            const double saved = probe.params[p].data[i];
            std::vector<std::uint8_t> pat_plus, pat_minus;
            probe.params[p].data[i] = saved + epsilon;
            const double lp = loss_of(probe, x, true_class, &pat_plus);
            probe.params[p].data[i] = saved - epsilon;
            const double lm = loss_of(probe, x, true_class, &pat_minus);
            probe.params[p].data[i] = saved;
            if (pat_plus != base_pattern || pat_minus != base_pattern)
                continue;  // crosses a ReLU/pool kink
            const double numeric = (lp - lm) / (2.0 * epsilon);
            const double analytic = grads[p].data[i];
            const double rel = std::fabs(analytic - numeric) /
                               std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace asmap
