#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "asmap/rng.hpp"
#include "asmap/tensor.hpp"

namespace asmap {

// Architecture selector. Cnn: conv(32,3x3) -> pool -> dropout -> conv(16,3x3)
// -> pool -> dropout -> flatten -> 512 -> 512 -> classes. Mlp: the dense head
// alone, fed flat baseline features.
enum class ModelKind { Cnn, Mlp };

struct ModelSpec {
    ModelKind kind = ModelKind::Mlp;
    // Cnn input
    std::size_t in_channels = 1;
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    // Mlp input
    std::size_t in_dim = 0;
    std::size_t n_classes = 2;
    std::size_t hidden = 512;
    double dropout_rate = 0.25;
    bool relu_hidden = true;  // false -> purely linear head (smooth grad check)
};

// Parameter order (Cnn): conv1.kernels, conv1.bias, conv2.kernels, conv2.bias,
// dense1.w, dense1.b, dense2.w, dense2.b, output.w, output.b.
// (Mlp): the dense triplet only.
struct Model {
    ModelSpec spec;
    std::vector<Tensor> params;
    std::vector<std::string> param_names;
    // Derived Cnn geometry. Pools degrade to identity when a feature map is
    // smaller than 2x2 (tiny toy inputs).
    bool pool1 = true, pool2 = true;
    std::size_t h1 = 0, w1 = 0, hp1 = 0, wp1 = 0;
    std::size_t h2 = 0, w2 = 0, hp2 = 0, wp2 = 0;
    std::size_t flat_dim = 0;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    bool shuffle = true;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;  // Adam
};

struct EpochStats {
    double loss = 0.0;      // mean training loss over the epoch
    double accuracy = 0.0;  // inference-mode accuracy on the training set
};

struct TrainResult {
    std::vector<EpochStats> history;
};

// --- layer primitives -------------------------------------------------------

// Valid padding, stride 1. input [C,H,W], kernels [O,C,KH,KW], bias [O];
// output [O,H-KH+1,W-KW+1].
Tensor conv2d_forward(const Tensor& input, const Tensor& kernels,
                      const std::vector<double>& bias);
void conv2d_backward(const Tensor& input, const Tensor& kernels, const Tensor& grad_out,
                     Tensor& grad_in, Tensor& grad_kernels, std::vector<double>& grad_bias);

Tensor relu(const Tensor& x);
// Subgradient 0 at x == 0.
Tensor relu_backward(const Tensor& grad, const Tensor& x);

struct PoolResult {
    Tensor out;
    std::vector<std::size_t> argmax;  // flat input index per output cell
};
// 2x2, stride 2, non-overlapping; odd trailing row/column dropped. Ties break
// first in scan order. Requires H,W >= 2.
PoolResult maxpool2x2(const Tensor& input);
Tensor maxpool2x2_backward(const Tensor& grad_out, const PoolResult& pooled,
                           const std::vector<std::size_t>& input_shape);

// Inverted dropout: training zeroes each unit with probability rate and
// scales survivors by 1/(1-rate); inference is the identity. 0 <= rate < 1.
Tensor dropout(const Tensor& input, double rate, Rng& rng, bool training,
               std::vector<std::uint8_t>* mask_out = nullptr);
Tensor dropout_backward(const Tensor& grad, double rate,
                        const std::vector<std::uint8_t>& mask);

// y = Wx + b. W [out,in], b [out].
std::vector<double> dense_forward(const std::vector<double>& x, const Tensor& w,
                                  const std::vector<double>& b);
void dense_backward(const std::vector<double>& x, const Tensor& w,
                    const std::vector<double>& grad_y, Tensor& grad_w,
                    std::vector<double>& grad_b, std::vector<double>& grad_x);

struct XentResult {
    double loss = 0.0;
    std::vector<double> probs;
    std::vector<double> grad;  // dloss/dlogits = p - onehot
};
XentResult softmax_cross_entropy(const std::vector<double>& logits,
                                 std::size_t true_class);

// --- model ------------------------------------------------------------------

// He-normal weights (std = sqrt(2/fan_in)), zero biases; deterministic per rng.
Model init_params(Rng& rng, const ModelSpec& spec);

struct ForwardCache;  // opaque; defined in nn.cpp

// Inference probabilities; dropout inactive. Probabilities sum to 1.
std::vector<double> predict(const Model& model, const Tensor& x);

// Mini-batch Adam on softmax cross-entropy. Deterministic for a fixed seed;
// single-threaded by contract. Shuffle and dropout consume separate RNG
// streams so toggling one does not perturb the other.
TrainResult train(Model& model, const std::vector<Tensor>& inputs,
                  const std::vector<std::size_t>& labels, const TrainConfig& cfg);

// Max relative error between analytic and central-difference gradients over a
// sampled subset (up to per_layer parameters of each layer). Parameters whose
// perturbation flips a ReLU activation pattern are skipped (kink exclusion).
double grad_check(const Model& model, const Tensor& x, std::size_t true_class,
                  double epsilon = 1e-3, std::size_t per_layer = 200,
                  std::uint64_t sample_seed = 1234);

// Expected flatten width for a Cnn spec; throws if a conv underflows.
std::size_t cnn_flat_dim(std::size_t in_h, std::size_t in_w);

}  // namespace asmap
