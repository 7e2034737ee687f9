#ifndef WMORPH_NETCORE_HPP
#define WMORPH_NETCORE_HPP

#include "wmorph/common.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wmorph {

enum class Activation { relu };
enum class BiasMode { zero, trainable };
enum class OptimizerKind { sgd, adam };

std::string to_string(BiasMode mode);
std::string to_string(OptimizerKind kind);
BiasMode parse_bias_mode(const std::string& text);
OptimizerKind parse_optimizer(const std::string& text);

// Layer widths n_0..n_H. n_0 is the input dimension and n_H the single linear
// output; layers 1..H-1 are ReLU hidden layers.
struct NetworkArch {
    std::vector<std::size_t> layer_sizes;
    Activation hidden_activation = Activation::relu;
    BiasMode bias_mode = BiasMode::zero;

    /// Number of weight layers H.
    std::size_t depth() const { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }
    std::size_t width(std::size_t layer) const { return layer_sizes.at(layer); }
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t weight_count() const;

    /// Throws ConfigError unless there is at least one hidden layer, a single
    /// output node, and no zero-width layer.
    void validate() const;

    bool operator==(const NetworkArch&) const = default;
};

/// Fully connected ReLU network with one linear output node.
///
/// Weight layer l (1-based, l = 1..H) maps layer l-1 to layer l and is stored
/// in `weights[l-1]` with shape n_{l-1} x n_l, so `weight(l)(a, b)` is the
/// weight from node a of layer l-1 to node b of layer l.
struct LayeredNetwork {
    NetworkArch arch;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static LayeredNetwork zeros(const NetworkArch& arch);

    Matrix& weight(std::size_t layer) { return weights.at(layer - 1); }
    const Matrix& weight(std::size_t layer) const { return weights.at(layer - 1); }
    std::vector<double>& bias(std::size_t layer) { return biases.at(layer - 1); }
    const std::vector<double>& bias(std::size_t layer) const { return biases.at(layer - 1); }

    /// Total absolute weight W^(l) of one weight layer.
    double total_abs_weight(std::size_t layer) const;

    void check_shapes() const;

    bool operator==(const LayeredNetwork&) const = default;
};

struct Dataset {
    Matrix features;              // M x d
    std::vector<double> targets;  // M
    std::string name;

    std::size_t size() const { return targets.size(); }
    std::size_t dim() const { return features.cols(); }
    std::span<const double> sample(std::size_t m) const { return features.row(m); }

    Dataset subset(std::span<const std::size_t> rows) const;
    void check() const;
};

struct TrainConfig {
    double learning_rate = 0.01;
    std::size_t batch_size = 256;
    std::size_t epochs = 500;
    OptimizerKind optimizer = OptimizerKind::adam;
    bool loss_halved = true;
    double init_low = -0.05;
    double init_high = 0.05;
    std::uint64_t seed = 0;
    // Keep every k-th epoch (the initial and final network are always kept).
    std::size_t snapshot_every = 1;

    void validate() const;
};

struct SnapshotSeries {
    NetworkArch arch;
    TrainConfig config;
    std::vector<LayeredNetwork> snapshots;
    std::vector<std::size_t> epoch_indices;
    // loss_history[e] is the mean training loss of epoch e (e >= 1); entry 0
    // is the full-data loss of the initial network.
    std::vector<double> loss_history;
    std::uint64_t seed = 0;

    const LayeredNetwork& final_network() const { return snapshots.back(); }
};

/// Gradient of the loss with respect to every parameter, shaped like a network.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const LayeredNetwork& net);
    const Matrix& weight(std::size_t layer) const { return weights.at(layer - 1); }
};

/// Per-sample record of a forward pass: pre-activations z^(l) for l = 1..H
/// (index l-1) and post-activations h^(l) for l = 0..H (index l; h^(0) = x,
/// h^(H) = z^(H)).
struct ForwardTrace {
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> post;
    double output() const { return post.back().front(); }
};

// ReLU node activity; theta(0) = 1.
inline bool node_active(double preactivation) { return preactivation >= 0.0; }

LayeredNetwork init_network(const NetworkArch& arch, const TrainConfig& config);

double forward(const LayeredNetwork& net, std::span<const double> x);
ForwardTrace forward_trace(const LayeredNetwork& net, std::span<const double> x);
std::vector<double> predict(const LayeredNetwork& net, const Dataset& data);

/// (1/2M) sum (Y - Yhat)^2 when halved, (1/M) sum otherwise.
double loss_mse(std::span<const double> targets, std::span<const double> predictions, bool halved);
double dataset_loss(const LayeredNetwork& net, const Dataset& data, bool halved);

/// Exact reverse-mode gradient of the MSE loss over `batch`. The ReLU
/// derivative at exactly zero is taken as 1.
Gradients backprop_gradient(const LayeredNetwork& net, const Dataset& batch, bool halved);

/// Same as above for the rows `rows` of `data`; returns the batch loss.
double backprop_gradient_rows(const LayeredNetwork& net, const Dataset& data,
                              std::span<const std::size_t> rows, bool halved, Gradients& out);

struct OptimizerState {
    std::size_t step = 0;
    Gradients first_moment;
    Gradients second_moment;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// Biases are left untouched in zero-bias mode.
void optimizer_step(LayeredNetwork& net, const Gradients& grads, const TrainConfig& config,
                    OptimizerState& state);

/// Mini-batch training from `net`; the returned series starts with `net`
/// itself at epoch 0. Throws DivergenceError on a non-finite loss.
SnapshotSeries train(const LayeredNetwork& net, const Dataset& data, const TrainConfig& config);

/// Fraction of samples whose prediction rounds to the integer target.
double accuracy(const LayeredNetwork& net, const Dataset& data);

} // namespace wmorph

#endif
