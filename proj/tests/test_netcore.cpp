#include <doctest.h>

#include "wmorph/netcore.hpp"
#include "wmorph/snapshot_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace wmorph;

namespace {

// 2 -> 2 -> 1 with hand-picked weights, zero bias.
LayeredNetwork hand_net() {
    NetworkArch arch{{2, 2, 1}};
    auto net = LayeredNetwork::zeros(arch);
    net.weight(1)(0, 0) = 1.0;
    net.weight(1)(0, 1) = -1.0;
    net.weight(1)(1, 0) = 2.0;
    net.weight(1)(1, 1) = 0.5;
    net.weight(2)(0, 0) = 1.0;
    net.weight(2)(1, 0) = -2.0;
    return net;
}

Dataset make_data(std::vector<std::vector<double>> rows, std::vector<double> targets) {
    Dataset d;
    d.features = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) d.features(i, j) = rows[i][j];
    d.targets = std::move(targets);
    return d;
}

} // namespace

TEST_CASE("architecture validation") {
    const NetworkArch ok{{3, 4, 1}}, no_hidden{{3, 1}}, two_outputs{{3, 4, 2}}, empty_layer{{3, 0, 1}};
    CHECK_NOTHROW(ok.validate());
    CHECK_THROWS_AS(no_hidden.validate(), ConfigError);
    CHECK_THROWS_AS(two_outputs.validate(), ConfigError);
    CHECK_THROWS_AS(empty_layer.validate(), ConfigError);
    const NetworkArch deep{{3, 4, 5, 1}};
    CHECK(deep.weight_count() == 12 + 20 + 5);
}

TEST_CASE("forward pass on a hand network") {
    const auto net = hand_net();
    const std::vector<double> a{1.0, 1.0}, b{1.0, -1.0};
    // z1 = (3, -0.5) -> h1 = (3, 0) -> y = 3
    CHECK(forward(net, a) == doctest::Approx(3.0));
    CHECK(forward(net, b) == doctest::Approx(0.0));
    const auto t = forward_trace(net, a);
    CHECK(t.pre[0][1] == doctest::Approx(-0.5));
    CHECK(t.post[1][1] == 0.0);
    CHECK(t.output() == doctest::Approx(3.0));
}

TEST_CASE("loss prefactor") {
    const std::vector<double> y{1.0, 2.0}, p{0.0, 0.0};
    CHECK(loss_mse(y, p, true) == doctest::Approx(1.25));
    CHECK(loss_mse(y, p, false) == doctest::Approx(2.5));
}

TEST_CASE("relu derivative at zero is one") {
    NetworkArch arch{{2, 1, 1}};
    auto net = LayeredNetwork::zeros(arch);
    net.weight(1)(0, 0) = 1.0;
    net.weight(1)(1, 0) = -1.0;
    net.weight(2)(0, 0) = 0.7;
    const auto data = make_data({{1.0, 1.0}}, {1.0});
    const auto g = backprop_gradient(net, data, true);
    // y = 0, dL/dy = -1; z1 = 0 exactly so the hidden node still passes gradient
    CHECK(g.weight(1)(0, 0) == doctest::Approx(-0.7));
    CHECK(g.weight(1)(1, 0) == doctest::Approx(-0.7));
    CHECK(g.weight(2)(0, 0) == 0.0);
}

TEST_CASE("backprop matches a hand derivative") {
    const auto net = hand_net();
    const auto data = make_data({{1.0, 1.0}}, {1.0});
    const auto g = backprop_gradient(net, data, false);
    // L = (y - 1)^2, y = 3 -> dL/dy = 4; dy/dw2(0,0) = h1_0 = 3
    CHECK(g.weight(2)(0, 0) == doctest::Approx(12.0));
    CHECK(g.weight(2)(1, 0) == doctest::Approx(0.0));
    CHECK(g.weight(1)(1, 0) == doctest::Approx(4.0 * 1.0 * 1.0));
    CHECK(g.weight(1)(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("optimizer steps") {
    auto net = hand_net();
    Gradients g = Gradients::zeros_like(net);
    g.weights[0](0, 0) = 0.5;
    g.weights[1](1, 0) = -2.0;
    TrainConfig c;
    c.learning_rate = 0.1;

    SUBCASE("sgd") {
        c.optimizer = OptimizerKind::sgd;
        OptimizerState s;
        optimizer_step(net, g, c, s);
        CHECK(net.weight(1)(0, 0) == doctest::Approx(1.0 - 0.05));
        CHECK(net.weight(2)(1, 0) == doctest::Approx(-2.0 + 0.2));
        CHECK(net.weight(1)(1, 1) == 0.5);
    }
    SUBCASE("adam first step moves by lr * g / (|g| + eps)") {
        c.optimizer = OptimizerKind::adam;
        OptimizerState s;
        optimizer_step(net, g, c, s);
        CHECK(net.weight(1)(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
        CHECK(net.weight(2)(1, 0) == doctest::Approx(-2.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
        CHECK(net.weight(1)(1, 1) == 0.5);
    }
}

TEST_CASE("initialization bounds and determinism") {
    NetworkArch arch{{5, 6, 6, 1}};
    TrainConfig c;
    c.seed = 42;
    const auto a = init_network(arch, c);
    const auto b = init_network(arch, c);
    CHECK(a == b);
    for (const auto& w : a.weights)
        for (double v : w.values()) CHECK((v >= -0.05 && v <= 0.05));
    for (const auto& bias : a.biases)
        for (double v : bias) CHECK(v == 0.0);
    c.seed = 43;
    CHECK_FALSE(init_network(arch, c) == a);
}

TEST_CASE("training") {
    const auto data = make_data({{0.1, 0.2}, {0.9, 0.8}, {0.2, 0.1}, {0.8, 0.9}}, {1.0, 2.0, 1.0, 2.0});
    NetworkArch arch{{2, 4, 4, 1}, Activation::relu, BiasMode::trainable};
    TrainConfig c;
    c.batch_size = 2;
    c.seed = 3;

    SUBCASE("zero epochs keeps only the initial network") {
        c.epochs = 0;
        const auto init = init_network(arch, c);
        const auto s = train(init, data, c);
        REQUIRE(s.snapshots.size() == 1);
        CHECK(s.snapshots[0] == init);
        CHECK(s.epoch_indices == std::vector<std::size_t>{0});
    }
    SUBCASE("snapshot cadence always keeps the last epoch") {
        c.epochs = 7;
        c.snapshot_every = 3;
        const auto s = train(init_network(arch, c), data, c);
        CHECK(s.epoch_indices == std::vector<std::size_t>{0, 3, 6, 7});
        CHECK(s.loss_history.size() == 8);
    }
    SUBCASE("loss decreases and runs are reproducible") {
        c.epochs = 300;
        c.snapshot_every = 300;
        const auto s = train(init_network(arch, c), data, c);
        CHECK(s.loss_history.back() < s.loss_history.front());
        CHECK(train(init_network(arch, c), data, c).final_network() == s.final_network());
    }
    SUBCASE("divergence is reported") {
        c.optimizer = OptimizerKind::sgd;
        c.learning_rate = 1e12;
        c.epochs = 50;
        c.init_low = -1.0;
        c.init_high = 1.0;
        CHECK_THROWS_AS(train(init_network(arch, c), data, c), DivergenceError);
    }
}

TEST_CASE("accuracy rounds predictions") {
    const auto net = hand_net();
    CHECK(accuracy(net, make_data({{1.0, 1.0}, {1.0, -1.0}}, {3.0, 0.0})) == 1.0);
    CHECK(accuracy(net, make_data({{1.0, 1.0}, {1.0, -1.0}}, {3.0, 1.0})) == 0.5);
}

TEST_CASE("snapshot round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "wmorph_snapshot_test";
    std::filesystem::remove_all(dir);
    const auto data = make_data({{0.1, 0.2}, {0.9, 0.8}}, {1.0, 2.0});
    NetworkArch arch{{2, 3, 1}, Activation::relu, BiasMode::trainable};
    TrainConfig c;
    c.epochs = 4;
    c.snapshot_every = 2;
    c.seed = 11;
    const auto s = train(init_network(arch, c), data, c);
    save_snapshots(s, dir);
    const auto back = load_snapshots(dir);
    CHECK(back.arch == s.arch);
    CHECK(back.epoch_indices == s.epoch_indices);
    CHECK(back.loss_history == s.loss_history);
    REQUIRE(back.snapshots.size() == s.snapshots.size());
    for (std::size_t i = 0; i < s.snapshots.size(); ++i) CHECK(back.snapshots[i] == s.snapshots[i]);

    // truncated weight file
    std::filesystem::resize_file(dir / "epoch_000000.bin", 8);
    CHECK_THROWS(load_snapshots(dir));
    std::filesystem::remove_all(dir);
    CHECK_THROWS(load_snapshots(dir));
}
