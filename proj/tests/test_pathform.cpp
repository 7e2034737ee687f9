#include <doctest.h>

#include "wmorph/oracles.hpp"
#include "wmorph/pathform.hpp"

#include <cmath>
#include <random>

using namespace wmorph;

namespace {

LayeredNetwork uniform_net(std::size_t width, std::size_t hidden, double w) {
    NetworkArch arch;
    arch.layer_sizes.assign(hidden + 1, width);
    arch.layer_sizes.push_back(1);
    auto net = LayeredNetwork::zeros(arch);
    for (auto& m : net.weights)
        for (double& v : m.values()) v = w;
    return net;
}

Dataset inputs(std::size_t dim, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Dataset d;
    d.features = Matrix(count, dim);
    for (double& v : d.features.values()) v = u(rng);
    d.targets.resize(count);
    for (double& v : d.targets) v = u(rng);
    return d;
}

} // namespace

TEST_CASE("path counting and enumeration order") {
    NetworkArch arch{{2, 3, 4, 1}};
    CHECK(path_count(arch) == 24);
    const auto ps = enumerate_paths(arch);
    CHECK(ps.total == 24);
    CHECK(ps.gamma == 12);
    REQUIRE(ps.paths.size() == 24);
    CHECK(ps.paths[0] == std::vector<std::size_t>{0, 0, 0, 0});
    CHECK(ps.paths[1] == std::vector<std::size_t>{0, 0, 1, 0});
    CHECK(ps.paths[4] == std::vector<std::size_t>{0, 1, 0, 0});
    CHECK(ps.paths.back() == std::vector<std::size_t>{1, 2, 3, 0});
    CHECK_THROWS_AS(enumerate_paths(arch, 10), CapacityError);

    NetworkArch huge;
    huge.layer_sizes.assign(40, 1000);
    huge.layer_sizes.push_back(1);
    CHECK(path_count(huge) == std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("path output on a hand network") {
    NetworkArch arch{{2, 2, 1}};
    auto net = LayeredNetwork::zeros(arch);
    net.weight(1)(0, 0) = 1.0;
    net.weight(1)(0, 1) = -1.0;
    net.weight(1)(1, 0) = 2.0;
    net.weight(1)(1, 1) = 0.5;
    net.weight(2)(0, 0) = 1.0;
    net.weight(2)(1, 0) = -2.0;
    const auto ps = enumerate_paths(arch);
    const std::vector<double> x{1.0, 1.0};
    // active paths go through hidden node 0: 1*1*1 + 1*2*1
    CHECK(path_output(net, x, ps) == doctest::Approx(3.0));
    const auto table = activity_table(net, inputs(2, 3, 1), ps);
    CHECK(table.active.size() == 3);

    auto biased = net;
    biased.arch.bias_mode = BiasMode::trainable;
    CHECK_THROWS_AS(path_output(biased, x, enumerate_paths(biased.arch)), UnsupportedMode);
}

TEST_CASE("path sums agree with the forward pass and finite differences") {
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const auto arch = random_small_arch(seed, 1, 3);
        const auto net = random_network(arch, seed + 100);
        const auto data = inputs(arch.input_dim(), 4, seed + 200);
        const auto ps = enumerate_paths(arch);
        for (std::size_t m = 0; m < data.size(); ++m)
            CHECK(relative_error(path_output(net, data.sample(m), ps), forward(net, data.sample(m))) <= 1e-10);
        if (min_abs_preactivation(net, data) < 1e-3) continue;
        for (std::size_t l = 1; l <= arch.depth(); ++l) {
            const WeightId w{l, 0, 0};
            const double pg = path_gradient(net, data, w, ps);
            const double fd = finite_difference_gradient(net, data, w, 1e-5);
            CHECK(std::abs(pg - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

TEST_CASE("U-term equals explicit enumeration") {
    NetworkArch arch{{2, 3, 2, 3, 2, 1}};
    const auto net = random_network(arch, 77);
    const auto ps = enumerate_paths(arch);
    const auto data = inputs(2, 3, 78);
    for (std::size_t m = 0; m < data.size(); ++m)
        for (std::size_t p = 2; p <= 4; ++p) {
            const WeightId w{p, 1, 0};
            for (std::size_t n = 0; n < arch.width(p - 2); ++n)
                for (std::size_t np = 0; np < arch.width(p + 1); ++np) {
                    const auto u = compute_U(net, data.sample(m), w, n, np);
                    CHECK(u.value == doctest::Approx(brute_force_U(net, data.sample(m), w, n, np, ps)).epsilon(1e-12));
                }
        }
    CHECK_THROWS_AS(compute_U(net, data.sample(0), WeightId{1, 0, 0}, 0, 0), IndexError);
    CHECK_THROWS_AS(compute_U(net, data.sample(0), WeightId{5, 0, 0}, 0, 0), IndexError);
}

TEST_CASE("coupling constants match a frozen-activity linear probe") {
    NetworkArch arch{{1, 2, 3, 2, 2, 1}};
    const auto net = random_network(arch, 5);
    const auto ps = enumerate_paths(arch);
    const std::vector<double> x{0.8};
    const double dy = 0.3, eta = 0.01;

    const WeightId w1{2, 1, 2}, w2{3, 2, 0};
    const auto adj = coupling_adjacent(net, x, dy, w1, w2, eta);
    CHECK(adj.forward.value == doctest::Approx(linear_probe(net, x, dy, w1, w2, eta, 0.5, ps)).epsilon(1e-9));
    REQUIRE(adj.reverse);
    CHECK(adj.reverse->value == doctest::Approx(linear_probe(net, x, dy, w2, w1, eta, 0.5, ps)).epsilon(1e-9));

    const WeightId s1{2, 0, 1}, s2{4, 0, 1};
    const auto sep = coupling_separated(net, x, dy, s1, s2, eta);
    CHECK(sep.forward.kind == CouplingKind::separated);
    CHECK(sep.forward.value == doctest::Approx(linear_probe(net, x, dy, s1, s2, eta, 0.5, ps)).epsilon(1e-9));

    // weights that do not share a node
    CHECK_THROWS(coupling_adjacent(net, x, dy, WeightId{2, 0, 0}, WeightId{3, 1, 0}, eta));
}

TEST_CASE("coupling ratio law") {
    const std::vector<double> x{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    for (std::size_t n : {3u, 5u, 10u}) {
        const auto net = uniform_net(n, 5, 0.3);
        const std::span<const double> xs(x.data(), n);
        CHECK(std::abs(coupling_ratio(net, xs, 0.5, 2) - 1.0 / double(n)) <= 1e-12);
        // w^(p+1) / (n w^(p+2)) with the downstream layer doubled
        auto doubled = net;
        for (double& v : doubled.weight(4).values()) v = 0.6;
        CHECK(std::abs(coupling_ratio(doubled, xs, 0.5, 2) - 0.5 / double(n)) <= 1e-12);
    }
    auto bad = uniform_net(3, 5, 0.3);
    bad.weight(3)(0, 1) = 0.2;
    CHECK_THROWS_AS(coupling_ratio(bad, std::vector<double>{1, 1, 1}, 0.5, 2), PreconditionError);
    CHECK_THROWS_AS(coupling_ratio(uniform_net(3, 5, -0.3), std::vector<double>{1, 1, 1}, 0.5, 2), PreconditionError);
}

TEST_CASE("verification suite") {
    VerifyOptions o;
    o.nets = 10;
    o.inputs = 3;
    CHECK(run_verification(o).passed());
    o.inject_fault = true;
    const auto bad = run_verification(o);
    CHECK_FALSE(bad.passed());
    CHECK_FALSE(bad.checks.front().passed);
    CHECK(bad.to_json()["checks"][0].contains("max_error"));
}
