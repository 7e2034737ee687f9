#include <doctest.h>

#include "wmorph/dynamics.hpp"

#include <cmath>
#include <numeric>

using namespace wmorph;

namespace {

LayerStackState homogeneous_stack(std::size_t N, std::size_t L, double c) {
    LayerStackState s;
    for (std::size_t l = 0; l < L; ++l) {
        s.layers.push_back({std::vector<double>(N, 1.0 / double(N * N)), std::vector<double>(N, 2 * c)});
        s.cR.emplace_back(N, c);
        s.cL.emplace_back(N, c);
        s.c_next.emplace_back(N, N, 1.0);
        s.c_prev.emplace_back(N, N, 1.0);
    }
    return s;
}

} // namespace

TEST_CASE("intralayer right-hand side by hand") {
    // sqrt r = (0.4, 0.3)
    const LayerState s{{0.16, 0.09}, {1.0, 2.0}};
    const auto dr = intralayer_rhs(s);
    CHECK(dr[0] == doctest::Approx(0.16 * 0.6 * 1.0 - 0.16 * 0.3 * 2.0));
    CHECK(dr[1] == doctest::Approx(0.09 * 0.7 * 2.0 - 0.09 * 0.4 * 1.0));
    CHECK_THROWS(intralayer_rhs(LayerState{{-0.1, 0.2}, {1.0, 1.0}}));
    CHECK_THROWS(intralayer_rhs(LayerState{{0.1, 0.2}, {1.0}}));
}

TEST_CASE("homogeneous fixed points") {
    for (std::size_t N : {2u, 10u, 20u}) {
        const LayerState s{std::vector<double>(N, 1.0 / double(N * N)), std::vector<double>(N, 1.7)};
        for (double v : intralayer_rhs(s)) CHECK(std::abs(v) <= 1e-12);
        const auto stack = homogeneous_stack(N, 4, 0.8);
        for (std::size_t l = 1; l <= 4; ++l)
            for (double v : coupled_rhs(stack, l)) CHECK(std::abs(v) <= 1e-12);
        AmplitudeState a{std::vector<double>(5, 1.0 / double(N)), 1.2, 0.7, N};
        for (std::size_t l = 1; l <= 5; ++l) CHECK(amplitude_rhs(a, l) == 0.0);
    }
}

TEST_CASE("coupled right-hand side uses neighbouring layers") {
    auto s = homogeneous_stack(2, 2, 1.0);
    s.layers[1].r = {0.16, 0.09};
    // layer 1 sees only its right neighbour: g_j = sum_k sqrt(r_k) = 0.7
    const auto dr = coupled_rhs(s, 1);
    CHECK(dr[0] == doctest::Approx(0.25 * 0.5 * 0.7 - 0.25 * 0.5 * 0.7));
    // layer 2 sees only its left neighbour: g_j = 0.5 + 0.5
    const auto d2 = coupled_rhs(s, 2);
    CHECK(d2[0] == doctest::Approx(0.16 * 0.6 * 1.0 - 0.16 * 0.3 * 1.0));
    CHECK(d2[1] == doctest::Approx(0.09 * 0.7 * 1.0 - 0.09 * 0.4 * 1.0));
    CHECK_THROWS(coupled_rhs(s, 0));
    CHECK_THROWS(coupled_rhs(s, 3));
}

TEST_CASE("amplitude right-hand side by hand") {
    const AmplitudeState a{{0.5, 0.25, 1.0}, 1.0, 2.0, 4};
    // layer 1: R/(N sqrt N) (1 - sqrt(R N)) c_right sqrt(R_2)
    CHECK(amplitude_rhs(a, 1) == doctest::Approx(0.5 / 8.0 * (1.0 - std::sqrt(2.0)) * 2.0 * 0.5));
    CHECK(amplitude_rhs(a, 2) == 0.0);
    CHECK(amplitude_rhs(a, 3) == doctest::Approx(1.0 / 8.0 * (1.0 - 2.0) * 1.0 * 0.5));
    CHECK_THROWS(amplitude_rhs(AmplitudeState{{0.1, 0.5}, 1.0, 1.0, 4}, 1));
}

TEST_CASE("linearized perturbation") {
    const std::vector<double> dc{1.0, -1.0}, dr{0.1, 0.3};
    const auto v = linear_perturbation_rhs(dc, dr, 2.0, 2);
    CHECK(v[0] == doctest::Approx(0.25 - 0.2));
    CHECK(v[1] == doctest::Approx(-0.25 - 0.2));
}

TEST_CASE("growth criterion matches the sign of the rhs") {
    SimConfig c;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        c.seed = seed;
        const auto s = initial_layer_state(c, 6);
        const auto dr = intralayer_rhs(s);
        for (std::size_t j = 0; j < 6; ++j)
            if (std::abs(dr[j]) > 1e-12) CHECK(growth_criterion(s, j) == (dr[j] > 0));
    }
}

TEST_CASE("integrator") {
    auto exp_step = [](double dt) {
        RkWorkspace ws;
        std::vector<double> y{1.0};
        rk_step_inplace([](std::span<const double> v, std::span<double> d) { d[0] = v[0]; }, y, dt, ws);
        return std::abs(y[0] - std::exp(dt));
    };
    CHECK(exp_step(0.1) < 1e-8);
    const double order = std::log2(exp_step(0.2) / exp_step(0.1));
    CHECK(order == doctest::Approx(6.0).epsilon(0.1));

    RkWorkspace ws;
    std::vector<double> y{0.001, 0.5};
    const auto clamps = rk_step_inplace([](std::span<const double>, std::span<double> d) { d[0] = -1.0; d[1] = 0.0; },
                                        y, 1.0, ws);
    CHECK(clamps == 1);
    CHECK(y[0] == 0.0);
    CHECK(y[1] == 0.5);
    CHECK_THROWS_AS(rk_step_inplace([](std::span<const double>, std::span<double> d) { d[0] = INFINITY; d[1] = 0; }, y,
                                    1.0, ws),
                    DivergenceError);
    const auto z = rk_step([](std::span<const double> v) { return std::vector<double>{-v[0]}; }, std::vector<double>{2.0},
                           0.01);
    CHECK(z[0] == doctest::Approx(2.0 * std::exp(-0.01)).epsilon(1e-12));
}

TEST_CASE("initial states") {
    SimConfig c;
    c.seed = 4;
    const auto s = initial_layer_state(c, 20);
    double roots = 0;
    for (double v : s.r) roots += std::sqrt(v);
    CHECK(roots == doctest::Approx(1.0));
    for (double v : s.c) CHECK((v >= 0.5 && v <= 1.5));

    c.r_init = RInit::homogeneous;
    c.perturbation_scale = 0.1;
    const auto h = initial_layer_state(c, 10);
    for (double v : h.r) CHECK(std::abs(v * 100.0 - 1.0) <= 0.1 + 1e-12);
    for (double v : h.c) CHECK(std::abs(v - 1.0) <= 0.1 + 1e-12);

    const auto a = initial_amplitude_state(amplitude_preset(), 10, 12);
    CHECK(a.R.size() == 12);
    for (double v : a.R) CHECK((v >= 0.1 && v <= 0.2));

    const auto stack = initial_stack_state(c, 5, 3);
    CHECK_NOTHROW(stack.validate());
    CHECK(stack.depth() == 3);
    CHECK(parse_r_init("homogeneous") == RInit::homogeneous);
    CHECK_THROWS(parse_r_init("gaussian"));
}

TEST_CASE("simulation is deterministic and recorded on schedule") {
    SimConfig c = intralayer_preset();
    c.seed = 9;
    c.steps = 40;
    c.record_every = 10;
    const auto a = simulate_intralayer(c, 8);
    const auto b = simulate_intralayer(c, 8);
    CHECK(a.final_state.r == b.final_state.r);
    CHECK(a.recorded_steps == std::vector<std::size_t>{0, 10, 20, 30, 40});
    c.seed = 10;
    CHECK_FALSE(simulate_intralayer(c, 8).final_state.r == a.final_state.r);

    auto cc = c;
    cc.steps = 20;
    const auto coupled = simulate_coupled(cc, 4, 3);
    CHECK(coupled.final_state.depth() == 3);
    for (const auto& l : coupled.final_state.layers)
        for (double v : l.r) CHECK(v >= 0.0);

    auto ac = amplitude_preset();
    ac.steps = 200;
    const auto amp = simulate_amplitude(ac, 10, 6);
    for (double v : amp.final_state.R) CHECK((v >= 0.1 && v <= 1.0));
    CHECK(simulate_amplitude(ac, 10, 6).final_state.R == amp.final_state.R);
}

TEST_CASE("amplitude increments") {
    CHECK(amplitude_increments(std::vector<double>{1.0, 3.0, 2.0}) == std::vector<double>{2.0, -1.0});
}
