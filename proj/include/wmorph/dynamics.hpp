#ifndef WMORPH_DYNAMICS_HPP
#define WMORPH_DYNAMICS_HPP

#include "wmorph/common.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace wmorph {

struct LayerState {
    std::vector<double> r; // connectivities, >= 0
    std::vector<double> c; // growth constants, > 0

    std::size_t width() const { return r.size(); }
    void validate() const;
};

/// L layers of width N with nearest-neighbour couplings. For layer l,
/// c_next[l](j, k) couples node j to node k of layer l+1 and c_prev[l](i, j)
/// couples node i of layer l-1 to node j. Each layer's `c` holds c^R + c^L.
struct LayerStackState {
    std::vector<LayerState> layers;
    std::vector<std::vector<double>> cR;
    std::vector<std::vector<double>> cL;
    std::vector<Matrix> c_next;
    std::vector<Matrix> c_prev;

    std::size_t depth() const { return layers.size(); }
    std::size_t width() const { return layers.empty() ? 0 : layers.front().width(); }
    void validate() const;
};

struct AmplitudeState {
    std::vector<double> R; // per layer, within [1/N, 1]
    double c_left = 1.0;
    double c_right = 1.0;
    std::size_t N = 1;

    void validate() const;
};

enum class RInit { homogeneous, uniform_perturbed };
std::string to_string(RInit mode);
RInit parse_r_init(const std::string& text);

struct SimConfig {
    double dt = 0.004;
    std::size_t steps = 250;
    std::uint64_t seed = 0;
    RInit r_init = RInit::uniform_perturbed;
    double perturbation_scale = 0.1; // homogeneous mode only
    double c_init_low = 0.5;
    double c_init_high = 1.5;
    // Keep every k-th step in the trajectory; 0 keeps only the initial and final state.
    std::size_t record_every = 1;

    void validate() const;
};

// Ensemble presets: a single-layer run to t = 1 with a wide growth-constant
// range, and a 50000-step amplitude run that keeps only endpoints.
SimConfig intralayer_preset();
SimConfig amplitude_preset();

// Right-hand sides. The public versions check the state's domain first.
std::vector<double> intralayer_rhs(const LayerState& state);
std::vector<double> coupled_rhs(const LayerStackState& stack, std::size_t layer); // layer is 1-based
double amplitude_rhs(const AmplitudeState& state, std::size_t layer);              // layer is 1-based

/// Linearized intralayer dynamics around the homogeneous state r = 1/N^2, c.
std::vector<double> linear_perturbation_rhs(std::span<const double> delta_c, std::span<const double> delta_r,
                                            double c, std::size_t N);

/// c_j > sum_m sqrt(r_m) c_m with sqrt(r) normalized to sum to one.
bool growth_criterion(const LayerState& state, std::size_t j);

// ---------------------------------------------------------------------------
// Fixed-step Runge-Kutta-Fehlberg 5th-order stages
// ---------------------------------------------------------------------------

struct Rkf5Tableau {
    static constexpr std::array<double, 6> c{0.0, 1.0 / 4, 3.0 / 8, 12.0 / 13, 1.0, 1.0 / 2};
    static constexpr std::array<std::array<double, 5>, 6> a{{
        {0, 0, 0, 0, 0},
        {1.0 / 4, 0, 0, 0, 0},
        {3.0 / 32, 9.0 / 32, 0, 0, 0},
        {1932.0 / 2197, -7200.0 / 2197, 7296.0 / 2197, 0, 0},
        {439.0 / 216, -8.0, 3680.0 / 513, -845.0 / 4104, 0},
        {-8.0 / 27, 2.0, -3544.0 / 2565, 1859.0 / 4104, -11.0 / 40},
    }};
    static constexpr std::array<double, 6> b{16.0 / 135, 0.0, 6656.0 / 12825, 28561.0 / 56430, -9.0 / 50, 2.0 / 55};
};

struct RkWorkspace {
    std::array<std::vector<double>, 6> k;
    std::vector<double> stage;
};

/// One RKF5 step of dy/dt = f(y) in place, then clamps every component into
/// [lower, upper]. `f(y, dy)` writes the derivative. Returns the number of
/// clamped components; throws DivergenceError on a non-finite result.
template <class F>
std::size_t rk_step_inplace(F&& f, std::vector<double>& y, double dt, RkWorkspace& ws,
                            double lower = 0.0, double upper = std::numeric_limits<double>::infinity()) {
    using T = Rkf5Tableau;
    const std::size_t n = y.size();
    ws.stage.resize(n);
    for (auto& k : ws.k) k.resize(n);
    for (std::size_t s = 0; s < 6; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            double v = y[i];
            for (std::size_t q = 0; q < s; ++q) v += dt * T::a[s][q] * ws.k[q][i];
            ws.stage[i] = v;
        }
        f(std::span<const double>(ws.stage), std::span<double>(ws.k[s]));
    }
    std::size_t clamps = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = y[i];
        for (std::size_t s = 0; s < 6; ++s) v += dt * T::b[s] * ws.k[s][i];
        if (!std::isfinite(v)) throw DivergenceError("integration produced a non-finite value");
        if (v < lower) {
            v = lower;
            ++clamps;
        } else if (v > upper) {
            v = upper;
            ++clamps;
        }
        y[i] = v;
    }
    return clamps;
}

using RhsFn = std::function<std::vector<double>(std::span<const double>)>;

/// Convenience form of one step with clamping at `lower`.
std::vector<double> rk_step(const RhsFn& rhs, std::span<const double> y, double dt, double lower = 0.0);

// ---------------------------------------------------------------------------
// Simulations
// ---------------------------------------------------------------------------

struct IntralayerRun {
    LayerState initial;
    LayerState final_state;
    std::vector<std::size_t> recorded_steps;
    std::vector<std::vector<double>> r; // per recorded step
    std::size_t clamp_count = 0;
    std::uint64_t seed = 0;
};

struct CoupledRun {
    LayerStackState initial;
    LayerStackState final_state;
    std::vector<std::size_t> recorded_steps;
    std::vector<std::vector<std::vector<double>>> r; // [recorded step][layer][node]
    std::size_t clamp_count = 0;
    std::uint64_t seed = 0;
};

struct AmplitudeRun {
    AmplitudeState initial;
    AmplitudeState final_state;
    std::vector<std::size_t> recorded_steps;
    std::vector<std::vector<double>> R; // per recorded step
    std::size_t clamp_count = 0;
    std::uint64_t seed = 0;
};

LayerState initial_layer_state(const SimConfig& config, std::size_t N);
LayerStackState initial_stack_state(const SimConfig& config, std::size_t N, std::size_t L);
AmplitudeState initial_amplitude_state(const SimConfig& config, std::size_t N, std::size_t L);

IntralayerRun simulate_intralayer(const SimConfig& config, std::size_t N);
IntralayerRun simulate_intralayer(const SimConfig& config, const LayerState& initial);
CoupledRun simulate_coupled(const SimConfig& config, std::size_t N, std::size_t L);
CoupledRun simulate_coupled(const SimConfig& config, const LayerStackState& initial);
AmplitudeRun simulate_amplitude(const SimConfig& config, std::size_t N, std::size_t L);
AmplitudeRun simulate_amplitude(const SimConfig& config, const AmplitudeState& initial);

/// Increments R^(l+1) - R^(l) of one amplitude profile.
std::vector<double> amplitude_increments(std::span<const double> R);

} // namespace wmorph

#endif
