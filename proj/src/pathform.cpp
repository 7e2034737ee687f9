#include "wmorph/pathform.hpp"

#include <cmath>
#include <limits>

namespace wmorph {

namespace {

void require_zero_bias(const LayeredNetwork& net, const char* what) {
    if (net.arch.bias_mode != BiasMode::zero)
        throw UnsupportedMode(std::string(what) + " requires a zero-bias network");
}

void check_weight(const NetworkArch& arch, const WeightId& w) {
    if (w.layer < 1 || w.layer > arch.depth())
        throw IndexError("weight layer " + std::to_string(w.layer) + " outside 1.." + std::to_string(arch.depth()));
    if (w.from >= arch.width(w.layer - 1) || w.to >= arch.width(w.layer))
        throw IndexError("weight (" + std::to_string(w.layer) + ", " + std::to_string(w.from) + ", " +
                         std::to_string(w.to) + ") has a node index outside its layer");
}

void check_node(const NetworkArch& arch, std::size_t layer, std::size_t node, const char* role) {
    if (node >= arch.width(layer))
        throw IndexError(std::string(role) + " node " + std::to_string(node) + " outside layer " +
                         std::to_string(layer) + " of width " + std::to_string(arch.width(layer)));
}

bool path_active(const std::vector<std::size_t>& path, const ForwardTrace& trace) {
    const std::size_t H = path.size() - 1;
    for (std::size_t l = 1; l < H; ++l)
        if (!node_active(trace.pre[l - 1][path[l]])) return false;
    return true;
}

// x_{i_0} times the weight product along the path, skipping weight layer `skip` (0 = none).
double path_product(const LayeredNetwork& net, const std::vector<std::size_t>& path, std::span<const double> x,
                    std::size_t skip) {
    double v = x[path[0]];
    for (std::size_t l = 1; l < path.size(); ++l)
        if (l != skip) v *= net.weight(l)(path[l - 1], path[l]);
    return v;
}

} // namespace

std::uint64_t path_count(const NetworkArch& arch) {
    std::uint64_t total = 1;
    for (std::size_t n : arch.layer_sizes) {
        if (n != 0 && total > std::numeric_limits<std::uint64_t>::max() / n)
            return std::numeric_limits<std::uint64_t>::max();
        total *= n;
    }
    return total;
}

PathSet enumerate_paths(const NetworkArch& arch, std::uint64_t cap) {
    arch.validate();
    const std::uint64_t total = path_count(arch);
    if (total > cap)
        throw CapacityError("architecture has " + std::to_string(total) + " paths, above the enumeration cap of " +
                            std::to_string(cap));
    PathSet set;
    set.arch = arch;
    set.total = total;
    set.gamma = total / arch.input_dim();
    set.paths.reserve(total);
    std::vector<std::size_t> path(arch.layer_sizes.size(), 0);
    for (std::uint64_t i = 0; i < total; ++i) {
        set.paths.push_back(path);
        // odometer increment, last layer fastest
        for (std::size_t l = path.size(); l-- > 0;) {
            if (++path[l] < arch.layer_sizes[l]) break;
            path[l] = 0;
        }
    }
    return set;
}

PathActivityTable activity_table(const LayeredNetwork& net, const Dataset& data, const PathSet& paths) {
    if (paths.arch.layer_sizes != net.arch.layer_sizes) throw ShapeError("path set built for another architecture");
    PathActivityTable table;
    for (std::size_t m = 0; m < data.size(); ++m) {
        table.traces.push_back(forward_trace(net, data.sample(m)));
        std::vector<std::uint8_t> row(paths.paths.size());
        for (std::size_t i = 0; i < paths.paths.size(); ++i)
            row[i] = path_active(paths.paths[i], table.traces.back()) ? 1 : 0;
        table.active.push_back(std::move(row));
    }
    return table;
}

double path_output(const LayeredNetwork& net, std::span<const double> x, const PathSet& paths) {
    require_zero_bias(net, "path_output");
    if (paths.arch.layer_sizes != net.arch.layer_sizes) throw ShapeError("path set built for another architecture");
    const ForwardTrace trace = forward_trace(net, x);
    double y = 0.0;
    for (const auto& path : paths.paths)
        if (path_active(path, trace)) y += path_product(net, path, x, 0);
    return y;
}

double path_gradient(const LayeredNetwork& net, const Dataset& data, const WeightId& weight, const PathSet& paths,
                     bool halved) {
    require_zero_bias(net, "path_gradient");
    check_weight(net.arch, weight);
    data.check();
    if (paths.arch.layer_sizes != net.arch.layer_sizes) throw ShapeError("path set built for another architecture");
    const std::size_t p = weight.layer;
    double total = 0.0;
    for (std::size_t m = 0; m < data.size(); ++m) {
        const auto x = data.sample(m);
        const ForwardTrace trace = forward_trace(net, x);
        const double dy = data.targets[m] - trace.output();
        double s = 0.0;
        for (const auto& path : paths.paths)
            if (path[p - 1] == weight.from && path[p] == weight.to && path_active(path, trace))
                s += path_product(net, path, x, p);
        total += dy * s;
    }
    return -(halved ? 1.0 : 2.0) * total / static_cast<double>(data.size());
}

double PathFactors::theta(std::size_t layer, std::size_t node) const {
    const std::size_t H = trace.post.size() - 1;
    if (layer == 0 || layer == H) return 1.0;
    return node_active(trace.pre[layer - 1][node]) ? 1.0 : 0.0;
}

PathFactors path_factors(const LayeredNetwork& net, std::span<const double> x) {
    require_zero_bias(net, "path factors");
    PathFactors f;
    f.trace = forward_trace(net, x);
    const std::size_t H = net.arch.depth();
    f.sens.resize(H + 1);
    f.sens[H] = {1.0};
    for (std::size_t l = H; l-- > 0;) {
        const Matrix& w = net.weight(l + 1);
        f.sens[l].assign(w.rows(), 0.0);
        for (std::size_t j = 0; j < w.rows(); ++j) {
            if (f.theta(l, j) == 0.0) continue;
            double s = 0.0;
            for (std::size_t k = 0; k < w.cols(); ++k) s += w(j, k) * f.sens[l + 1][k];
            f.sens[l][j] = s;
        }
    }
    return f;
}

double window_sum(const LayeredNetwork& net, const PathFactors& f, std::size_t entry_layer, std::size_t entry_node,
                  std::span<const std::size_t> central, std::size_t exit_node) {
    const std::size_t exit_layer = entry_layer + central.size() + 1;
    if (exit_layer > net.arch.depth()) throw IndexError("path window extends past the output layer");
    check_node(net.arch, entry_layer, entry_node, "entry");
    check_node(net.arch, exit_layer, exit_node, "exit");
    // the entry node's post-activation already carries its own activity
    double v = f.post(entry_layer, entry_node);
    for (std::size_t k = 0; k < central.size(); ++k) {
        check_node(net.arch, entry_layer + 1 + k, central[k], "central");
        v *= f.theta(entry_layer + 1 + k, central[k]);
    }
    return v * f.sens[exit_layer][exit_node];
}

UTerm compute_U(const LayeredNetwork& net, std::span<const double> x, const WeightId& weight, std::size_t n,
                std::size_t n_prime) {
    require_zero_bias(net, "compute_U");
    check_weight(net.arch, weight);
    const std::size_t p = weight.layer;
    if (p < 2 || p + 1 > net.arch.depth())
        throw IndexError("U-term layer p=" + std::to_string(p) + " outside 2.." + std::to_string(net.arch.depth() - 1));
    const PathFactors f = path_factors(net, x);
    const std::size_t central[] = {weight.from, weight.to};
    UTerm u{p, weight.from, weight.to, n, n_prime, 0.0};
    u.value = window_sum(net, f, p - 2, n, central, n_prime);
    return u;
}

CouplingPair coupling_adjacent(const LayeredNetwork& net, std::span<const double> x, double delta_y,
                               const WeightId& first, const WeightId& second, double learning_rate) {
    require_zero_bias(net, "coupling_adjacent");
    check_weight(net.arch, first);
    check_weight(net.arch, second);
    if (second.layer != first.layer + 1 || second.from != first.to)
        throw ArgumentError("adjacent coupling needs weights (p,a,b) and (p+1,b,c) sharing node b");
    const std::size_t p = first.layer;
    const std::size_t H = net.arch.depth();
    if (p < 2) throw IndexError("adjacent coupling needs p >= 2");
    const std::size_t a = first.from, b = first.to, c = second.to;
    const PathFactors f = path_factors(net, x);
    const double scale = learning_rate * delta_y;

    CouplingPair pair;
    pair.forward = {first, second, CouplingKind::adjacent, 0.0};
    const std::size_t ab[] = {a, b};
    double s = 0.0;
    const Matrix& w_in = net.weight(p - 1);
    for (std::size_t n = 0; n < w_in.rows(); ++n) s += window_sum(net, f, p - 2, n, ab, c) * w_in(n, a);
    pair.forward.value = scale * s;

    if (p + 2 <= H) {
        const std::size_t bc[] = {b, c};
        const Matrix& w_out = net.weight(p + 2);
        double r = 0.0;
        for (std::size_t n = 0; n < w_out.cols(); ++n) r += window_sum(net, f, p - 1, a, bc, n) * w_out(c, n);
        pair.reverse = CouplingConstant{second, first, CouplingKind::adjacent, scale * r};
    }
    return pair;
}

CouplingPair coupling_separated(const LayeredNetwork& net, std::span<const double> x, double delta_y,
                                const WeightId& first, const WeightId& second, double learning_rate) {
    require_zero_bias(net, "coupling_separated");
    check_weight(net.arch, first);
    check_weight(net.arch, second);
    if (second.layer != first.layer + 2)
        throw ArgumentError("separated coupling needs weights (p,a,b) and (p+2,d,e)");
    const std::size_t p = first.layer;
    const std::size_t H = net.arch.depth();
    if (p < 2) throw IndexError("separated coupling needs p >= 2");
    const std::size_t a = first.from, b = first.to, d = second.from, e = second.to;
    const PathFactors f = path_factors(net, x);
    const double scale = learning_rate * delta_y;
    const double w_bd = net.weight(p + 1)(b, d);

    CouplingPair pair;
    pair.forward = {first, second, CouplingKind::separated, 0.0};
    const std::size_t abd[] = {a, b, d};
    double s = 0.0;
    const Matrix& w_in = net.weight(p - 1);
    for (std::size_t n = 0; n < w_in.rows(); ++n) s += window_sum(net, f, p - 2, n, abd, e) * w_in(n, a);
    pair.forward.value = scale * s * w_bd;

    if (p + 3 <= H) {
        const std::size_t bde[] = {b, d, e};
        const Matrix& w_out = net.weight(p + 3);
        double r = 0.0;
        for (std::size_t n = 0; n < w_out.cols(); ++n) r += window_sum(net, f, p - 1, a, bde, n) * w_out(e, n);
        pair.reverse = CouplingConstant{second, first, CouplingKind::separated, scale * r * w_bd};
    }
    return pair;
}

double coupling_ratio(const LayeredNetwork& net, std::span<const double> x, double delta_y, std::size_t p) {
    require_zero_bias(net, "coupling_ratio");
    const std::size_t H = net.arch.depth();
    if (p < 2 || p + 2 > H)
        throw PreconditionError("coupling ratio needs 2 <= p <= H-2, got p=" + std::to_string(p));
    if (delta_y == 0.0) throw PreconditionError("coupling ratio undefined for zero output error");
    for (std::size_t l = 2; l < H; ++l)
        if (net.arch.width(l) != net.arch.width(1)) throw PreconditionError("hidden layers differ in width");
    for (std::size_t l = 1; l <= H; ++l) {
        const auto& v = net.weight(l).values();
        for (double w : v)
            if (!(w > 0.0) || w != v.front())
                throw PreconditionError("weight layer " + std::to_string(l) + " is not uniform and positive");
    }
    const PathFactors f = path_factors(net, x);
    for (std::size_t l = 1; l < H; ++l)
        for (std::size_t j = 0; j < net.arch.width(l); ++j)
            if (f.theta(l, j) == 0.0)
                throw PreconditionError("node " + std::to_string(j) + " of layer " + std::to_string(l) +
                                        " is inactive");
    const double adjacent = coupling_adjacent(net, x, delta_y, {p, 0, 0}, {p + 1, 0, 0}, 1.0).forward.value;
    const double separated = coupling_separated(net, x, delta_y, {p, 0, 0}, {p + 2, 0, 0}, 1.0).forward.value;
    if (adjacent == 0.0) throw PreconditionError("adjacent coupling vanishes (zero input)");
    return separated / adjacent;
}

} // namespace wmorph
