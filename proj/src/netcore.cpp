#include "wmorph/netcore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace wmorph {

std::string to_string(BiasMode mode) { return mode == BiasMode::zero ? "zero" : "trainable"; }
std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

BiasMode parse_bias_mode(const std::string& text) {
    if (text == "zero") return BiasMode::zero;
    if (text == "trainable") return BiasMode::trainable;
    throw ConfigError("unknown bias mode '" + text + "' (expected zero|trainable)");
}

OptimizerKind parse_optimizer(const std::string& text) {
    if (text == "sgd") return OptimizerKind::sgd;
    if (text == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + text + "' (expected sgd|adam)");
}

std::size_t NetworkArch::weight_count() const {
    std::size_t n = 0;
    for (std::size_t l = 1; l < layer_sizes.size(); ++l) n += layer_sizes[l - 1] * layer_sizes[l];
    return n;
}

void NetworkArch::validate() const {
    if (layer_sizes.size() < 3)
        throw ConfigError("architecture needs at least one hidden layer (got " +
                          std::to_string(layer_sizes.size()) + " layer sizes)");
    if (layer_sizes.back() != 1)
        throw ConfigError("architecture must end in a single output node");
    for (std::size_t n : layer_sizes)
        if (n == 0) throw ConfigError("architecture has a zero-width layer");
}

LayeredNetwork LayeredNetwork::zeros(const NetworkArch& arch) {
    arch.validate();
    LayeredNetwork net;
    net.arch = arch;
    for (std::size_t l = 1; l <= arch.depth(); ++l) {
        net.weights.emplace_back(arch.width(l - 1), arch.width(l));
        net.biases.emplace_back(arch.width(l), 0.0);
    }
    return net;
}

double LayeredNetwork::total_abs_weight(std::size_t layer) const {
    double total = 0.0;
    for (double w : weight(layer).values()) total += std::abs(w);
    return total;
}

void LayeredNetwork::check_shapes() const {
    arch.validate();
    if (weights.size() != arch.depth() || biases.size() != arch.depth())
        throw ShapeError("network has " + std::to_string(weights.size()) +
                         " weight layers, architecture expects " + std::to_string(arch.depth()));
    for (std::size_t l = 1; l <= arch.depth(); ++l) {
        const Matrix& w = weight(l);
        if (w.rows() != arch.width(l - 1) || w.cols() != arch.width(l))
            throw ShapeError("weight layer " + std::to_string(l) + " has shape " +
                             std::to_string(w.rows()) + "x" + std::to_string(w.cols()));
        if (bias(l).size() != arch.width(l))
            throw ShapeError("bias layer " + std::to_string(l) + " has wrong length");
        if (arch.bias_mode == BiasMode::zero)
            for (double b : bias(l))
                if (b != 0.0) throw ShapeError("nonzero bias in zero-bias network");
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.name = name;
    out.features = Matrix(rows.size(), dim());
    out.targets.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = sample(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.targets[i] = targets[rows[i]];
    }
    return out;
}

void Dataset::check() const {
    if (targets.empty()) throw ArgumentError("dataset '" + name + "' is empty");
    if (features.rows() != targets.size())
        throw ShapeError("dataset '" + name + "' has " + std::to_string(features.rows()) +
                         " feature rows but " + std::to_string(targets.size()) + " targets");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(init_low < init_high)) throw ConfigError("init_low must be below init_high");
    if (snapshot_every == 0) throw ConfigError("snapshot_every must be positive");
}

Gradients Gradients::zeros_like(const LayeredNetwork& net) {
    Gradients g;
    for (const Matrix& w : net.weights) g.weights.emplace_back(w.rows(), w.cols());
    for (const auto& b : net.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

LayeredNetwork init_network(const NetworkArch& arch, const TrainConfig& config) {
    config.validate();
    LayeredNetwork net = LayeredNetwork::zeros(arch);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> dist(config.init_low, config.init_high);
    for (Matrix& w : net.weights)
        for (double& v : w.values()) v = dist(rng);
    if (arch.bias_mode == BiasMode::trainable)
        for (auto& b : net.biases)
            for (double& v : b) v = dist(rng);
    return net;
}

namespace {

void check_input(const LayeredNetwork& net, std::size_t dim) {
    if (dim != net.arch.input_dim())
        throw ShapeError("input has " + std::to_string(dim) + " features, network expects " +
                         std::to_string(net.arch.input_dim()));
}

// Scratch buffers reused across samples during training.
struct Workspace {
    std::vector<std::vector<double>> pre;   // z^(l), l = 1..H at index l-1
    std::vector<std::vector<double>> post;  // h^(l), l = 0..H at index l
    std::vector<std::vector<double>> delta; // dL/dz^(l) at index l-1

    explicit Workspace(const NetworkArch& arch) {
        const std::size_t H = arch.depth();
        post.resize(H + 1);
        post[0].resize(arch.width(0));
        for (std::size_t l = 1; l <= H; ++l) {
            pre.emplace_back(arch.width(l));
            post[l].resize(arch.width(l));
            delta.emplace_back(arch.width(l));
        }
    }
};

double run_forward(const LayeredNetwork& net, std::span<const double> x, Workspace& ws) {
    const std::size_t H = net.arch.depth();
    std::copy(x.begin(), x.end(), ws.post[0].begin());
    for (std::size_t l = 1; l <= H; ++l) {
        const Matrix& w = net.weight(l);
        const auto& in = ws.post[l - 1];
        auto& z = ws.pre[l - 1];
        std::copy(net.bias(l).begin(), net.bias(l).end(), z.begin());
        for (std::size_t a = 0; a < w.rows(); ++a) {
            const double ha = in[a];
            if (ha == 0.0) continue;
            const auto row = w.row(a);
            for (std::size_t b = 0; b < row.size(); ++b) z[b] += ha * row[b];
        }
        auto& h = ws.post[l];
        if (l == H) {
            h = z;
        } else {
            for (std::size_t b = 0; b < z.size(); ++b) h[b] = node_active(z[b]) ? z[b] : 0.0;
        }
    }
    return ws.post[H][0];
}

// Accumulates d(loss)/d(params) for one sample with output error derivative g.
void run_backward(const LayeredNetwork& net, double g, Workspace& ws, Gradients& out,
                  bool with_bias) {
    const std::size_t H = net.arch.depth();
    ws.delta[H - 1][0] = g;
    for (std::size_t l = H; l >= 1; --l) {
        const Matrix& w = net.weight(l);
        Matrix& gw = out.weights[l - 1];
        const auto& in = ws.post[l - 1];
        const auto& d = ws.delta[l - 1];
        for (std::size_t a = 0; a < w.rows(); ++a) {
            const double ha = in[a];
            if (ha == 0.0) continue;
            auto grow = gw.row(a);
            for (std::size_t b = 0; b < d.size(); ++b) grow[b] += ha * d[b];
        }
        if (with_bias)
            for (std::size_t b = 0; b < d.size(); ++b) out.biases[l - 1][b] += d[b];
        if (l == 1) break;
        auto& dprev = ws.delta[l - 2];
        const auto& zprev = ws.pre[l - 2];
        for (std::size_t a = 0; a < w.rows(); ++a) {
            if (!node_active(zprev[a])) {
                dprev[a] = 0.0;
                continue;
            }
            const auto row = w.row(a);
            double s = 0.0;
            for (std::size_t b = 0; b < d.size(); ++b) s += row[b] * d[b];
            dprev[a] = s;
        }
    }
}

void zero_fill(Gradients& g) {
    for (Matrix& m : g.weights) std::fill(m.values().begin(), m.values().end(), 0.0);
    for (auto& b : g.biases) std::fill(b.begin(), b.end(), 0.0);
}

} // namespace

ForwardTrace forward_trace(const LayeredNetwork& net, std::span<const double> x) {
    check_input(net, x.size());
    Workspace ws(net.arch);
    run_forward(net, x, ws);
    return ForwardTrace{std::move(ws.pre), std::move(ws.post)};
}

double forward(const LayeredNetwork& net, std::span<const double> x) {
    check_input(net, x.size());
    Workspace ws(net.arch);
    return run_forward(net, x, ws);
}

std::vector<double> predict(const LayeredNetwork& net, const Dataset& data) {
    data.check();
    check_input(net, data.dim());
    Workspace ws(net.arch);
    std::vector<double> out(data.size());
    for (std::size_t m = 0; m < data.size(); ++m) out[m] = run_forward(net, data.sample(m), ws);
    return out;
}

double loss_mse(std::span<const double> targets, std::span<const double> predictions, bool halved) {
    if (targets.empty()) throw ArgumentError("loss_mse: empty input");
    if (targets.size() != predictions.size())
        throw ShapeError("loss_mse: " + std::to_string(targets.size()) + " targets vs " +
                         std::to_string(predictions.size()) + " predictions");
    double sum = 0.0;
    for (std::size_t m = 0; m < targets.size(); ++m) {
        const double e = targets[m] - predictions[m];
        sum += e * e;
    }
    return sum / (static_cast<double>(targets.size()) * (halved ? 2.0 : 1.0));
}

double dataset_loss(const LayeredNetwork& net, const Dataset& data, bool halved) {
    const auto yhat = predict(net, data);
    return loss_mse(data.targets, yhat, halved);
}

double backprop_gradient_rows(const LayeredNetwork& net, const Dataset& data,
                              std::span<const std::size_t> rows, bool halved, Gradients& out) {
    if (rows.empty()) throw ArgumentError("backprop_gradient: empty batch");
    check_input(net, data.dim());
    zero_fill(out);
    Workspace ws(net.arch);
    const double M = static_cast<double>(rows.size());
    const double scale = (halved ? 1.0 : 2.0) / M;
    const bool with_bias = net.arch.bias_mode == BiasMode::trainable;
    double sq = 0.0;
    for (std::size_t m : rows) {
        const double yhat = run_forward(net, data.sample(m), ws);
        const double err = data.targets[m] - yhat;
        sq += err * err;
        run_backward(net, -scale * err, ws, out, with_bias);
    }
    return sq / (M * (halved ? 2.0 : 1.0));
}

Gradients backprop_gradient(const LayeredNetwork& net, const Dataset& batch, bool halved) {
    batch.check();
    net.check_shapes();
    Gradients g = Gradients::zeros_like(net);
    std::vector<std::size_t> rows(batch.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    backprop_gradient_rows(net, batch, rows, halved, g);
    return g;
}

void optimizer_step(LayeredNetwork& net, const Gradients& grads, const TrainConfig& config,
                    OptimizerState& state) {
    if (grads.weights.size() != net.weights.size())
        throw ShapeError("gradient set does not match network depth");
    for (std::size_t i = 0; i < net.weights.size(); ++i)
        if (grads.weights[i].rows() != net.weights[i].rows() ||
            grads.weights[i].cols() != net.weights[i].cols())
            throw ShapeError("gradient shape mismatch in layer " + std::to_string(i + 1));

    const bool with_bias = net.arch.bias_mode == BiasMode::trainable;
    const double lr = config.learning_rate;

    if (config.optimizer == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < net.weights.size(); ++i) {
            auto& w = net.weights[i].values();
            const auto& g = grads.weights[i].values();
            for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * g[k];
            if (with_bias)
                for (std::size_t k = 0; k < net.biases[i].size(); ++k)
                    net.biases[i][k] -= lr * grads.biases[i][k];
        }
        ++state.step;
        return;
    }

    if (state.first_moment.weights.empty()) {
        state.first_moment = Gradients::zeros_like(net);
        state.second_moment = Gradients::zeros_like(net);
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(kAdamBeta1, t);
    const double c2 = 1.0 - std::pow(kAdamBeta2, t);
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = kAdamBeta1 * m[k] + (1.0 - kAdamBeta1) * g[k];
            v[k] = kAdamBeta2 * v[k] + (1.0 - kAdamBeta2) * g[k] * g[k];
            const double mhat = m[k] / c1;
            const double vhat = v[k] / c2;
            p[k] -= lr * mhat / (std::sqrt(vhat) + kAdamEpsilon);
        }
    };
    for (std::size_t i = 0; i < net.weights.size(); ++i) {
        update(net.weights[i].values(), grads.weights[i].values(),
               state.first_moment.weights[i].values(), state.second_moment.weights[i].values());
        if (with_bias)
            update(net.biases[i], grads.biases[i], state.first_moment.biases[i],
                   state.second_moment.biases[i]);
    }
}

SnapshotSeries train(const LayeredNetwork& initial, const Dataset& data, const TrainConfig& config) {
    config.validate();
    data.check();
    initial.check_shapes();
    check_input(initial, data.dim());

    SnapshotSeries series;
    series.arch = initial.arch;
    series.config = config;
    series.seed = config.seed;
    series.snapshots.push_back(initial);
    series.epoch_indices.push_back(0);
    series.loss_history.push_back(dataset_loss(initial, data, config.loss_halved));

    LayeredNetwork net = initial;
    OptimizerState state;
    Gradients grads = Gradients::zeros_like(net);
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, 1));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double weighted = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const std::span<const std::size_t> rows(order.data() + start, stop - start);
            const double batch_loss = backprop_gradient_rows(net, data, rows, config.loss_halved, grads);
            if (!std::isfinite(batch_loss)) {
                std::ostringstream msg;
                msg << "training diverged at epoch " << epoch << " (seed " << config.seed
                    << "): non-finite loss";
                throw DivergenceError(msg.str());
            }
            weighted += batch_loss * static_cast<double>(rows.size());
            optimizer_step(net, grads, config, state);
        }
        const double epoch_loss = weighted / static_cast<double>(order.size());
        series.loss_history.push_back(epoch_loss);
        if (epoch % config.snapshot_every == 0 || epoch == config.epochs) {
            series.snapshots.push_back(net);
            series.epoch_indices.push_back(epoch);
        }
    }
    return series;
}

double accuracy(const LayeredNetwork& net, const Dataset& data) {
    if (data.size() == 0) throw ArgumentError("accuracy: empty dataset");
    const auto yhat = predict(net, data);
    std::size_t hits = 0;
    for (std::size_t m = 0; m < yhat.size(); ++m)
        if (std::round(yhat[m]) == data.targets[m]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(yhat.size());
}

} // namespace wmorph
