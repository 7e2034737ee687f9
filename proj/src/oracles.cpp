#include "wmorph/oracles.hpp"

#include "wmorph/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace wmorph {

namespace {

bool frozen_active(const std::vector<std::size_t>& path, const ForwardTrace& trace) {
    for (std::size_t l = 1; l + 1 < path.size(); ++l)
        if (!node_active(trace.pre[l - 1][path[l]])) return false;
    return true;
}

// Straight-line forward pass and loss in extended precision, independent of
// the production evaluator.
long double extended_loss(const LayeredNetwork& net, const Dataset& data, const WeightId& w, long double value,
                          bool halved) {
    const std::size_t H = net.arch.depth();
    long double total = 0.0L;
    for (std::size_t m = 0; m < data.size(); ++m) {
        std::vector<long double> h(data.sample(m).begin(), data.sample(m).end());
        for (std::size_t l = 1; l <= H; ++l) {
            const Matrix& W = net.weight(l);
            std::vector<long double> z(W.cols(), 0.0L);
            for (std::size_t k = 0; k < W.cols(); ++k) {
                long double s = net.bias(l)[k];
                for (std::size_t j = 0; j < W.rows(); ++j) {
                    const long double wv = (l == w.layer && j == w.from && k == w.to) ? value : W(j, k);
                    s += h[j] * wv;
                }
                z[k] = (l == H || s >= 0.0L) ? s : 0.0L;
            }
            h = std::move(z);
        }
        const long double e = data.targets[m] - h[0];
        total += e * e;
    }
    return (halved ? 0.5L : 1.0L) * total / static_cast<long double>(data.size());
}

std::vector<WeightId> all_weights(const NetworkArch& arch) {
    std::vector<WeightId> ids;
    for (std::size_t l = 1; l <= arch.depth(); ++l)
        for (std::size_t a = 0; a < arch.width(l - 1); ++a)
            for (std::size_t b = 0; b < arch.width(l); ++b) ids.push_back({l, a, b});
    return ids;
}

void record(CheckResult& check, double error) {
    ++check.comparisons;
    if (!(error <= check.max_error)) check.max_error = std::isnan(error) ? INFINITY : error;
}

void finish(CheckResult& check) { check.passed = check.comparisons > 0 && check.max_error <= check.tolerance; }

Dataset random_inputs(std::size_t dim, std::size_t count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> target(0.0, 2.0);
    Dataset d;
    d.name = "random";
    d.features = Matrix(count, dim);
    for (double& v : d.features.values()) v = u(rng);
    d.targets.resize(count);
    for (double& t : d.targets) t = target(rng);
    return d;
}

LayeredNetwork uniform_chain(std::size_t width, std::size_t hidden, double value) {
    NetworkArch arch;
    arch.layer_sizes.assign(hidden + 1, width);
    arch.layer_sizes.push_back(1);
    LayeredNetwork net = LayeredNetwork::zeros(arch);
    for (Matrix& w : net.weights) std::fill(w.values().begin(), w.values().end(), value);
    return net;
}

} // namespace

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) return 0.0;
    return std::abs(a - b) / scale;
}

double brute_force_U(const LayeredNetwork& net, std::span<const double> x, const WeightId& weight, std::size_t n,
                     std::size_t n_prime, const PathSet& paths) {
    const std::size_t p = weight.layer;
    const ForwardTrace trace = forward_trace(net, x);
    double total = 0.0;
    for (const auto& path : paths.paths) {
        if (path[p - 2] != n || path[p - 1] != weight.from || path[p] != weight.to || path[p + 1] != n_prime) continue;
        if (!frozen_active(path, trace)) continue;
        double v = x[path[0]];
        for (std::size_t l = 1; l < path.size(); ++l)
            if (l < p - 1 || l > p + 1) v *= net.weight(l)(path[l - 1], path[l]);
        total += v;
    }
    return total;
}

double frozen_increment(const LayeredNetwork& net, std::span<const double> x, double delta_y, const WeightId& updated,
                        const WeightId& probed, double value, double learning_rate, const PathSet& paths) {
    const ForwardTrace trace = forward_trace(net, x);
    LayeredNetwork probe = net;
    probe.weight(probed.layer)(probed.from, probed.to) = value;
    const std::size_t p = updated.layer;
    double total = 0.0;
    for (const auto& path : paths.paths) {
        if (path[p - 1] != updated.from || path[p] != updated.to) continue;
        if (!frozen_active(path, trace)) continue;
        double v = x[path[0]];
        for (std::size_t l = 1; l < path.size(); ++l)
            if (l != p) v *= probe.weight(l)(path[l - 1], path[l]);
        total += v;
    }
    return learning_rate * delta_y * total;
}

double linear_probe(const LayeredNetwork& net, std::span<const double> x, double delta_y, const WeightId& updated,
                    const WeightId& probed, double learning_rate, double step, const PathSet& paths) {
    const double w = net.weight(probed.layer)(probed.from, probed.to);
    const double hi = frozen_increment(net, x, delta_y, updated, probed, w + step, learning_rate, paths);
    const double lo = frozen_increment(net, x, delta_y, updated, probed, w - step, learning_rate, paths);
    return (hi - lo) / (2.0 * step);
}

double finite_difference_gradient(const LayeredNetwork& net, const Dataset& data, const WeightId& weight, double step,
                                  bool halved) {
    const long double w = net.weight(weight.layer)(weight.from, weight.to);
    const long double h = step;
    return static_cast<double>(
        (extended_loss(net, data, weight, w + h, halved) - extended_loss(net, data, weight, w - h, halved)) / (2.0L * h));
}

std::uint64_t count_window_paths(const PathSet& paths, const WeightId& weight) {
    const std::size_t p = weight.layer;
    const auto& sizes = paths.arch.layer_sizes;
    std::uint64_t total = 0;
    for (std::size_t n = 0; n < sizes[p - 2]; ++n)
        for (std::size_t np = 0; np < sizes[p + 1]; ++np)
            total += static_cast<std::uint64_t>(std::count_if(paths.paths.begin(), paths.paths.end(), [&](const auto& q) {
                return q[p - 2] == n && q[p - 1] == weight.from && q[p] == weight.to && q[p + 1] == np;
            }));
    return total;
}

double min_abs_preactivation(const LayeredNetwork& net, const Dataset& data) {
    double m = INFINITY;
    for (std::size_t s = 0; s < data.size(); ++s) {
        const ForwardTrace t = forward_trace(net, data.sample(s));
        for (std::size_t l = 0; l + 1 < t.pre.size(); ++l)
            for (double z : t.pre[l]) m = std::min(m, std::abs(z));
    }
    return m;
}

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

nlohmann::json VerifyReport::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : checks)
        out.push_back({{"name", c.name},
                       {"comparisons", c.comparisons},
                       {"max_error", c.max_error},
                       {"metric", c.metric},
                       {"tolerance", c.tolerance},
                       {"passed", c.passed}});
    return {{"passed", passed()}, {"checks", out}};
}

NetworkArch random_small_arch(std::uint64_t seed, std::size_t min_hidden, std::size_t max_hidden) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> hidden(min_hidden, max_hidden);
    std::uniform_int_distribution<std::size_t> width(1, 4);
    NetworkArch arch;
    const std::size_t h = hidden(rng);
    for (std::size_t l = 0; l <= h; ++l) arch.layer_sizes.push_back(width(rng));
    arch.layer_sizes.push_back(1);
    return arch;
}

LayeredNetwork random_network(const NetworkArch& arch, std::uint64_t seed) {
    TrainConfig config;
    config.init_low = -1.0;
    config.init_high = 1.0;
    config.seed = seed;
    NetworkArch zero_bias = arch;
    zero_bias.bias_mode = BiasMode::zero;
    return init_network(zero_bias, config);
}

VerifyReport run_verification(const VerifyOptions& options) {
    CheckResult output{"path_output_vs_forward", 0, 0.0, 1e-10};
    CheckResult gradient{"path_gradient_vs_backprop", 0, 0.0, 1e-10};
    CheckResult finite{"backprop_vs_finite_difference", 0, 0.0, 1e-6};
    CheckResult u_term{"u_term_vs_enumeration", 0, 0.0, 1e-10};
    CheckResult adjacent{"coupling_adjacent_vs_linear_probe", 0, 0.0, 1e-10};
    CheckResult separated{"coupling_separated_vs_linear_probe", 0, 0.0, 1e-10};
    CheckResult counting{"window_path_count_identity", 0, 0.0, 0.0, "absolute"};

    constexpr double kEta = 0.01;
    constexpr double kProbeSteps[] = {0.5, 0.25};
    for (std::size_t i = 0; i < options.nets; ++i) {
        const std::uint64_t seed = derive_seed(options.seed, i);
        const NetworkArch arch = random_small_arch(seed, 1, 3);
        const LayeredNetwork net = random_network(arch, derive_seed(seed, 1));
        std::mt19937_64 rng(derive_seed(seed, 2));
        const Dataset data = random_inputs(arch.input_dim(), options.inputs, rng);
        const PathSet paths = enumerate_paths(arch);

        LayeredNetwork evaluated = net;
        if (options.inject_fault) evaluated.weight(1)(0, 0) += 1.0;
        for (std::size_t m = 0; m < data.size(); ++m)
            record(output, relative_error(path_output(evaluated, data.sample(m), paths), forward(net, data.sample(m))));

        const Gradients g = backprop_gradient(net, data, true);
        for (const WeightId& w : all_weights(arch))
            record(gradient, relative_error(path_gradient(net, data, w, paths), g.weight(w.layer)(w.from, w.to)));

        // finite differences only on samples well away from activation kinks
        std::vector<std::size_t> smooth;
        for (std::size_t m = 0; m < data.size(); ++m)
            if (min_abs_preactivation(net, data.subset(std::vector<std::size_t>{m})) >= 1e-3) smooth.push_back(m);
        if (!smooth.empty()) {
            const Dataset sub = data.subset(smooth);
            const Gradients gs = backprop_gradient(net, sub, true);
            for (const WeightId& w : all_weights(arch))
                record(finite, relative_error(finite_difference_gradient(net, sub, w, 1e-5),
                                              gs.weight(w.layer)(w.from, w.to)));
        }

    }

    // U-terms and couplings need deeper nets for every direction to exist
    for (std::size_t i = 0; i < options.nets; ++i) {
        const std::uint64_t seed = derive_seed(options.seed ^ 0x5eedULL, i);
        const NetworkArch arch = random_small_arch(seed, 2, 4);
        const LayeredNetwork net = random_network(arch, derive_seed(seed, 1));
        std::mt19937_64 rng(derive_seed(seed, 2));
        const Dataset data = random_inputs(arch.input_dim(), 1, rng);
        const PathSet paths = enumerate_paths(arch);
        const std::size_t H = arch.depth();
        const auto x = data.sample(0);
        const double dy = data.targets[0] - forward(net, x);
        for (std::size_t p = 2; p + 1 <= H; ++p) {
            for (std::size_t a = 0; a < arch.width(p - 1); ++a)
                for (std::size_t b = 0; b < arch.width(p); ++b) {
                    const WeightId w{p, a, b};
                    std::uint64_t counted = 0;
                    for (std::size_t n = 0; n < arch.width(p - 2); ++n)
                        for (std::size_t np = 0; np < arch.width(p + 1); ++np) {
                            record(u_term, relative_error(compute_U(net, x, w, n, np).value,
                                                          brute_force_U(net, x, w, n, np, paths)));
                        }
                    counted = count_window_paths(paths, w);
                    const std::uint64_t expected = paths.total / (arch.width(p - 1) * arch.width(p));
                    record(counting, counted == expected ? 0.0 : std::abs(double(counted) - double(expected)));

                    for (std::size_t c = 0; c < arch.width(p + 1); ++c) {
                        const WeightId v{p + 1, b, c};
                        const CouplingPair pair = coupling_adjacent(net, x, dy, w, v, kEta);
                        for (double h : kProbeSteps) {
                            record(adjacent, relative_error(pair.forward.value, linear_probe(net, x, dy, w, v, kEta, h, paths)));
                            if (pair.reverse)
                                record(adjacent,
                                       relative_error(pair.reverse->value, linear_probe(net, x, dy, v, w, kEta, h, paths)));
                        }
                    }
                    if (p + 2 <= H)
                        for (std::size_t d = 0; d < arch.width(p + 1); ++d)
                            for (std::size_t e = 0; e < arch.width(p + 2); ++e) {
                                const WeightId v{p + 2, d, e};
                                const CouplingPair pair = coupling_separated(net, x, dy, w, v, kEta);
                                for (double h : kProbeSteps) {
                                    record(separated,
                                           relative_error(pair.forward.value, linear_probe(net, x, dy, w, v, kEta, h, paths)));
                                    if (pair.reverse)
                                        record(separated, relative_error(pair.reverse->value,
                                                                         linear_probe(net, x, dy, v, w, kEta, h, paths)));
                                }
                            }
                }
        }
    }

    CheckResult ratio{"coupling_ratio_law", 0, 0.0, 1e-12};
    for (std::size_t width : {3u, 5u, 10u}) {
        LayeredNetwork net = uniform_chain(width, 5, 0.3);
        const std::vector<double> x(width, 1.0);
        record(ratio, relative_error(coupling_ratio(net, x, 0.7, 2), 1.0 / double(width)));
        std::fill(net.weight(3).values().begin(), net.weight(3).values().end(), 0.6);
        record(ratio, relative_error(coupling_ratio(net, x, 0.7, 2), 2.0 / double(width)));
    }

    CheckResult fixed{"homogeneous_fixed_points", 0, 0.0, 1e-12, "absolute"};
    for (std::size_t N : {2u, 10u, 20u}) {
        const double r0 = 1.0 / double(N * N);
        LayerState s{std::vector<double>(N, r0), std::vector<double>(N, 1.3)};
        for (double v : intralayer_rhs(s)) record(fixed, std::abs(v));
        LayerStackState stack;
        for (std::size_t l = 0; l < 3; ++l) {
            stack.layers.push_back({std::vector<double>(N, r0), std::vector<double>(N, 1.0)});
            stack.cR.emplace_back(N, 0.7);
            stack.cL.emplace_back(N, 0.4);
            Matrix next(N, N), prev(N, N);
            for (std::size_t k = 0; k < N; ++k)
                for (std::size_t j = 0; j < N; ++j) {
                    next(j, k) = 0.5 + 0.1 * double(k); // c_jk = c_k
                    prev(k, j) = 0.8 + 0.05 * double(k); // c_kj = c_k
                }
            stack.c_next.push_back(next);
            stack.c_prev.push_back(prev);
        }
        for (std::size_t l = 1; l <= 3; ++l)
            for (double v : coupled_rhs(stack, l)) record(fixed, std::abs(v));
    }

    CheckResult order{"rk_convergence_order", 0, 0.0, 0.5, "abs(log2(error ratio) - 6)"};
    {
        // local error of one step on dy/dt = -y scales as dt^6
        auto rhs = [](std::span<const double> y) { return std::vector<double>{-y[0]}; };
        const double y0[] = {1.0};
        const double dt = 0.2;
        const double e1 = std::abs(rk_step(rhs, y0, dt, -INFINITY)[0] - std::exp(-dt));
        const double e2 = std::abs(rk_step(rhs, y0, dt / 2, -INFINITY)[0] - std::exp(-dt / 2));
        record(order, std::abs(std::log2(e1 / e2) - 6.0));
    }

    CheckResult growth{"growth_criterion_vs_rhs_sign", 0, 0.0, 0.0, "disagreements"};
    {
        std::mt19937_64 rng(derive_seed(options.seed, 1u << 20));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> width(2, 20);
        for (int t = 0; t < 10000; ++t) {
            const std::size_t N = width(rng);
            LayerState s;
            double norm = 0.0;
            for (std::size_t j = 0; j < N; ++j) {
                s.r.push_back(u(rng));
                s.c.push_back(0.5 + u(rng));
                norm += std::sqrt(s.r.back());
            }
            for (double& v : s.r) v /= norm * norm;
            const auto d = intralayer_rhs(s);
            for (std::size_t j = 0; j < N; ++j) {
                if (d[j] == 0.0) continue;
                record(growth, growth_criterion(s, j) == (d[j] > 0.0) ? 0.0 : growth.max_error + 1.0);
            }
        }
    }

    VerifyReport report;
    for (CheckResult* c : {&output, &gradient, &finite, &u_term, &adjacent, &separated, &counting, &ratio, &fixed,
                           &order, &growth}) {
        finish(*c);
        report.checks.push_back(*c);
    }
    return report;
}

} // namespace wmorph
