#include "wmorph/dynamics.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace wmorph {

namespace {

void check_connectivities(std::span<const double> r, const char* what) {
    for (double v : r) {
        if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite connectivity");
        if (v < 0.0) throw DomainError(std::string(what) + ": negative connectivity " + format_double(v));
    }
}

void check_positive(std::span<const double> c, const char* what) {
    for (double v : c)
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + ": growth constants must be positive");
}

double root(double r) { return std::sqrt(std::max(r, 0.0)); }

// dr_j = r_j (1 - sqrt r_j) g_j - r_j sum_{m != j} sqrt(r_m) g_m
void repression_rhs(std::span<const double> r, std::span<const double> g, std::span<double> out) {
    double total = 0.0;
    for (std::size_t m = 0; m < r.size(); ++m) total += root(r[m]) * g[m];
    for (std::size_t j = 0; j < r.size(); ++j) {
        const double s = root(r[j]);
        out[j] = r[j] * (1.0 - s) * g[j] - r[j] * (total - s * g[j]);
    }
}

// Effective growth rates of layer l (0-based) in a flat L*N state vector.
void coupled_growth(const LayerStackState& stack, std::span<const double> flat, std::size_t l,
                    std::span<double> g) {
    const std::size_t N = stack.width();
    const std::size_t L = stack.depth();
    for (std::size_t j = 0; j < N; ++j) {
        double right = 0.0, left = 0.0;
        if (l + 1 < L) {
            const auto next = flat.subspan((l + 1) * N, N);
            for (std::size_t k = 0; k < N; ++k) right += stack.c_next[l](j, k) * root(next[k]);
        }
        if (l > 0) {
            const auto prev = flat.subspan((l - 1) * N, N);
            for (std::size_t i = 0; i < N; ++i) left += stack.c_prev[l](i, j) * root(prev[i]);
        }
        g[j] = stack.cR[l][j] * right + stack.cL[l][j] * left;
    }
}

void coupled_rhs_flat(const LayerStackState& stack, std::span<const double> flat, std::span<double> out,
                      std::vector<double>& g) {
    const std::size_t N = stack.width();
    g.resize(N);
    for (std::size_t l = 0; l < stack.depth(); ++l) {
        coupled_growth(stack, flat, l, g);
        repression_rhs(flat.subspan(l * N, N), g, out.subspan(l * N, N));
    }
}

double amplitude_rhs_raw(std::span<const double> R, double c_left, double c_right, double N, std::size_t l) {
    double drive = 0.0;
    if (l + 1 < R.size()) drive += c_right * root(R[l + 1]);
    if (l > 0) drive += c_left * root(R[l - 1]);
    return R[l] / (N * std::sqrt(N)) * (1.0 - root(R[l] * N)) * drive;
}

bool record_step(const SimConfig& config, std::size_t step) {
    if (step == config.steps) return true;
    return config.record_every != 0 && step % config.record_every == 0;
}

} // namespace

void LayerState::validate() const {
    if (r.empty()) throw ShapeError("layer state is empty");
    if (c.size() != r.size()) throw ShapeError("r and c differ in length");
    check_connectivities(r, "layer state");
    check_positive(c, "layer state");
}

void LayerStackState::validate() const {
    const std::size_t L = depth();
    if (L == 0) throw ShapeError("layer stack is empty");
    const std::size_t N = width();
    if (cR.size() != L || cL.size() != L || c_next.size() != L || c_prev.size() != L)
        throw ShapeError("coupling tensors do not match the number of layers");
    for (std::size_t l = 0; l < L; ++l) {
        if (layers[l].width() != N) throw ShapeError("layers differ in width");
        check_connectivities(layers[l].r, "layer stack");
        if (cR[l].size() != N || cL[l].size() != N) throw ShapeError("coupling vector has the wrong width");
        if (c_next[l].rows() != N || c_next[l].cols() != N || c_prev[l].rows() != N || c_prev[l].cols() != N)
            throw ShapeError("coupling matrix has the wrong shape");
    }
}

void AmplitudeState::validate() const {
    if (R.empty()) throw ShapeError("amplitude state is empty");
    if (N == 0) throw ShapeError("layer width must be positive");
    const double lo = 1.0 / static_cast<double>(N);
    for (double v : R)
        if (!(v >= lo && v <= 1.0))
            throw DomainError("amplitude " + format_double(v) + " outside [1/N, 1] with N=" + std::to_string(N));
    if (!(c_left > 0.0) || !(c_right > 0.0)) throw DomainError("amplitude couplings must be positive");
}

std::string to_string(RInit mode) { return mode == RInit::homogeneous ? "homogeneous" : "uniform_perturbed"; }

RInit parse_r_init(const std::string& text) {
    if (text == "homogeneous") return RInit::homogeneous;
    if (text == "uniform_perturbed") return RInit::uniform_perturbed;
    throw ConfigError("unknown r_init '" + text + "' (expected homogeneous|uniform_perturbed)");
}

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
    if (!std::isfinite(dt * static_cast<double>(steps))) throw ConfigError("dt * steps is not finite");
    if (!(perturbation_scale >= 0.0)) throw ConfigError("perturbation_scale must be non-negative");
    if (!(c_init_low > 0.0)) throw ConfigError("c_init_low must be positive");
    if (!(c_init_low <= c_init_high)) throw ConfigError("c_init_low must not exceed c_init_high");
}

SimConfig intralayer_preset() {
    SimConfig c;
    c.dt = 0.004;
    c.steps = 250;
    c.c_init_low = 0.5;
    c.c_init_high = 5.0;
    c.record_every = 0;
    return c;
}

SimConfig amplitude_preset() {
    SimConfig c;
    c.dt = 0.004;
    c.steps = 50000;
    c.c_init_low = 0.5;
    c.c_init_high = 1.5;
    c.record_every = 0;
    return c;
}

std::vector<double> intralayer_rhs(const LayerState& state) {
    state.validate();
    std::vector<double> out(state.width());
    repression_rhs(state.r, state.c, out);
    return out;
}

std::vector<double> coupled_rhs(const LayerStackState& stack, std::size_t layer) {
    stack.validate();
    if (layer < 1 || layer > stack.depth())
        throw IndexError("layer " + std::to_string(layer) + " outside 1.." + std::to_string(stack.depth()));
    const std::size_t N = stack.width();
    std::vector<double> flat;
    for (const auto& s : stack.layers) flat.insert(flat.end(), s.r.begin(), s.r.end());
    std::vector<double> g(N), out(N);
    coupled_growth(stack, flat, layer - 1, g);
    repression_rhs(std::span<const double>(flat).subspan((layer - 1) * N, N), g, out);
    return out;
}

double amplitude_rhs(const AmplitudeState& state, std::size_t layer) {
    state.validate();
    if (layer < 1 || layer > state.R.size())
        throw IndexError("layer " + std::to_string(layer) + " outside 1.." + std::to_string(state.R.size()));
    return amplitude_rhs_raw(state.R, state.c_left, state.c_right, static_cast<double>(state.N), layer - 1);
}

std::vector<double> linear_perturbation_rhs(std::span<const double> delta_c, std::span<const double> delta_r,
                                            double c, std::size_t N) {
    if (delta_c.size() != delta_r.size()) throw ShapeError("perturbation vectors differ in length");
    if (delta_c.empty()) throw ArgumentError("empty perturbation");
    const double n = static_cast<double>(delta_c.size());
    const double mean_c = std::accumulate(delta_c.begin(), delta_c.end(), 0.0) / n;
    const double mean_r = std::accumulate(delta_r.begin(), delta_r.end(), 0.0) / n;
    const double inv_n2 = 1.0 / (static_cast<double>(N) * static_cast<double>(N));
    std::vector<double> out(delta_c.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = inv_n2 * (delta_c[j] - mean_c) - 0.5 * c * mean_r;
    return out;
}

bool growth_criterion(const LayerState& state, std::size_t j) {
    state.validate();
    if (j >= state.width()) throw IndexError("node index out of range");
    double norm = 0.0;
    for (double v : state.r) norm += std::sqrt(v);
    if (norm == 0.0) throw ArgumentError("growth criterion undefined for all-zero connectivities");
    double mean = 0.0;
    for (std::size_t m = 0; m < state.width(); ++m) mean += std::sqrt(state.r[m]) / norm * state.c[m];
    return state.c[j] > mean;
}

std::vector<double> rk_step(const RhsFn& rhs, std::span<const double> y, double dt, double lower) {
    if (!(dt > 0.0)) throw ArgumentError("rk_step needs dt > 0");
    std::vector<double> state(y.begin(), y.end());
    RkWorkspace ws;
    rk_step_inplace(
        [&](std::span<const double> in, std::span<double> out) {
            const auto d = rhs(in);
            if (d.size() != out.size()) throw ShapeError("rhs returned a vector of the wrong length");
            std::copy(d.begin(), d.end(), out.begin());
        },
        state, dt, ws, lower);
    return state;
}

LayerState initial_layer_state(const SimConfig& config, std::size_t N) {
    config.validate();
    if (N == 0) throw ConfigError("layer width must be positive");
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    LayerState s;
    s.r.resize(N);
    s.c.resize(N);
    if (config.r_init == RInit::homogeneous) {
        const double mean_c = 0.5 * (config.c_init_low + config.c_init_high);
        const double base = 1.0 / (static_cast<double>(N) * static_cast<double>(N));
        for (std::size_t j = 0; j < N; ++j) {
            s.r[j] = base * (1.0 + config.perturbation_scale * (2.0 * unit(rng) - 1.0));
            s.c[j] = mean_c * (1.0 + config.perturbation_scale * (2.0 * unit(rng) - 1.0));
        }
    } else {
        std::uniform_real_distribution<double> cdist(config.c_init_low, config.c_init_high);
        double norm = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            s.r[j] = unit(rng);
            norm += std::sqrt(s.r[j]);
        }
        for (double& v : s.r) v /= norm * norm; // now sum sqrt(r) = 1
        for (double& v : s.c) v = cdist(rng);
    }
    s.validate();
    return s;
}

LayerStackState initial_stack_state(const SimConfig& config, std::size_t N, std::size_t L) {
    if (L == 0) throw ConfigError("need at least one layer");
    LayerStackState stack;
    for (std::size_t l = 0; l < L; ++l) {
        SimConfig layer_config = config;
        layer_config.seed = derive_seed(config.seed, l);
        stack.layers.push_back(initial_layer_state(layer_config, N));
    }
    std::mt19937_64 rng(derive_seed(config.seed, L));
    std::uniform_real_distribution<double> cdist(config.c_init_low, config.c_init_high);
    const double mean_c = 0.5 * (config.c_init_low + config.c_init_high);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    auto draw = [&] {
        return config.r_init == RInit::homogeneous ? mean_c * (1.0 + config.perturbation_scale * jitter(rng))
                                                   : cdist(rng);
    };
    for (std::size_t l = 0; l < L; ++l) {
        std::vector<double> cr(N), cl(N);
        for (auto& v : cr) v = draw();
        for (auto& v : cl) v = draw();
        Matrix next(N, N), prev(N, N);
        for (double& v : next.values()) v = draw();
        for (double& v : prev.values()) v = draw();
        for (std::size_t j = 0; j < N; ++j) stack.layers[l].c[j] = cr[j] + cl[j];
        stack.cR.push_back(std::move(cr));
        stack.cL.push_back(std::move(cl));
        stack.c_next.push_back(std::move(next));
        stack.c_prev.push_back(std::move(prev));
    }
    stack.validate();
    return stack;
}

AmplitudeState initial_amplitude_state(const SimConfig& config, std::size_t N, std::size_t L) {
    config.validate();
    if (N == 0 || L == 0) throw ConfigError("amplitude model needs N >= 1 and L >= 1");
    std::mt19937_64 rng(config.seed);
    const double lo = 1.0 / static_cast<double>(N);
    AmplitudeState s;
    s.N = N;
    s.R.resize(L);
    if (config.r_init == RInit::homogeneous) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (double& v : s.R) v = std::min(1.0, lo * (1.0 + config.perturbation_scale * unit(rng)));
    } else {
        std::uniform_real_distribution<double> rdist(lo, std::min(1.0, 2.0 * lo));
        for (double& v : s.R) v = rdist(rng);
    }
    std::uniform_real_distribution<double> cdist(config.c_init_low, config.c_init_high);
    s.c_left = cdist(rng);
    s.c_right = cdist(rng);
    s.validate();
    return s;
}

IntralayerRun simulate_intralayer(const SimConfig& config, std::size_t N) {
    return simulate_intralayer(config, initial_layer_state(config, N));
}

IntralayerRun simulate_intralayer(const SimConfig& config, const LayerState& initial) {
    config.validate();
    initial.validate();
    IntralayerRun run;
    run.initial = initial;
    run.seed = config.seed;
    std::vector<double> r = initial.r;
    const std::vector<double>& c = initial.c;
    run.recorded_steps.push_back(0);
    run.r.push_back(r);
    RkWorkspace ws;
    auto f = [&](std::span<const double> y, std::span<double> dy) { repression_rhs(y, c, dy); };
    for (std::size_t step = 1; step <= config.steps; ++step) {
        run.clamp_count += rk_step_inplace(f, r, config.dt, ws);
        if (record_step(config, step)) {
            run.recorded_steps.push_back(step);
            run.r.push_back(r);
        }
    }
    run.final_state = {r, c};
    return run;
}

CoupledRun simulate_coupled(const SimConfig& config, std::size_t N, std::size_t L) {
    return simulate_coupled(config, initial_stack_state(config, N, L));
}

CoupledRun simulate_coupled(const SimConfig& config, const LayerStackState& initial) {
    config.validate();
    initial.validate();
    const std::size_t N = initial.width();
    const std::size_t L = initial.depth();
    CoupledRun run;
    run.initial = initial;
    run.seed = config.seed;
    std::vector<double> flat;
    for (const auto& s : initial.layers) flat.insert(flat.end(), s.r.begin(), s.r.end());
    auto unflatten = [&] {
        std::vector<std::vector<double>> out(L);
        for (std::size_t l = 0; l < L; ++l) out[l].assign(flat.begin() + l * N, flat.begin() + (l + 1) * N);
        return out;
    };
    run.recorded_steps.push_back(0);
    run.r.push_back(unflatten());
    RkWorkspace ws;
    std::vector<double> g;
    auto f = [&](std::span<const double> y, std::span<double> dy) { coupled_rhs_flat(initial, y, dy, g); };
    for (std::size_t step = 1; step <= config.steps; ++step) {
        run.clamp_count += rk_step_inplace(f, flat, config.dt, ws);
        if (record_step(config, step)) {
            run.recorded_steps.push_back(step);
            run.r.push_back(unflatten());
        }
    }
    run.final_state = initial;
    for (std::size_t l = 0; l < L; ++l)
        run.final_state.layers[l].r.assign(flat.begin() + l * N, flat.begin() + (l + 1) * N);
    return run;
}

AmplitudeRun simulate_amplitude(const SimConfig& config, std::size_t N, std::size_t L) {
    return simulate_amplitude(config, initial_amplitude_state(config, N, L));
}

AmplitudeRun simulate_amplitude(const SimConfig& config, const AmplitudeState& initial) {
    config.validate();
    initial.validate();
    AmplitudeRun run;
    run.initial = initial;
    run.seed = config.seed;
    std::vector<double> R = initial.R;
    const double N = static_cast<double>(initial.N);
    run.recorded_steps.push_back(0);
    run.R.push_back(R);
    RkWorkspace ws;
    auto f = [&](std::span<const double> y, std::span<double> dy) {
        for (std::size_t l = 0; l < y.size(); ++l)
            dy[l] = amplitude_rhs_raw(y, initial.c_left, initial.c_right, N, l);
    };
    for (std::size_t step = 1; step <= config.steps; ++step) {
        run.clamp_count += rk_step_inplace(f, R, config.dt, ws, 1.0 / N, 1.0);
        if (record_step(config, step)) {
            run.recorded_steps.push_back(step);
            run.R.push_back(R);
        }
    }
    run.final_state = initial;
    run.final_state.R = R;
    return run;
}

std::vector<double> amplitude_increments(std::span<const double> R) {
    std::vector<double> d;
    for (std::size_t l = 1; l < R.size(); ++l) d.push_back(R[l] - R[l - 1]);
    return d;
}

} // namespace wmorph
