#include "cli/cli.hpp"
#include "cli/outputs.hpp"
#include "cli/svg.hpp"

#include "wmorph/dynamics.hpp"
#include "wmorph/morpho.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace wmorph::cli {

namespace {

struct Resolved {
    SimConfig base;
    std::size_t N = 0;
    std::size_t L = 1;
};

Resolved resolve(const SimulateOptions& o) {
    Resolved r;
    if (o.model == "intralayer") {
        r.base = intralayer_preset();
        r.N = 20;
    } else if (o.model == "coupled") {
        r.base = SimConfig{};
        r.base.record_every = 0;
        r.N = 10;
        r.L = 6;
    } else if (o.model == "amplitude") {
        r.base = amplitude_preset();
        r.N = 10;
        r.L = 12;
    } else {
        throw ConfigError("unknown model '" + o.model + "' (expected intralayer|coupled|amplitude)");
    }
    if (o.N) r.N = o.N;
    if (o.L) r.L = o.L;
    if (o.dt > 0) r.base.dt = o.dt;
    if (o.steps) r.base.steps = o.steps;
    if (o.c_low > 0) r.base.c_init_low = o.c_low;
    if (o.c_high > 0) r.base.c_init_high = o.c_high;
    r.base.r_init = parse_r_init(o.r_init);
    r.base.perturbation_scale = o.perturbation_scale;
    if (o.runs == 0) throw ConfigError("--runs must be at least 1");
    if (o.model == "intralayer" && o.L > 1) throw ConfigError("the intralayer model has a single layer");
    r.base.validate();
    return r;
}

nlohmann::json config_json(const SimulateOptions& o, const Resolved& r) {
    return {{"model", o.model},
            {"runs", o.runs},
            {"N", r.N},
            {"L", r.L},
            {"dt", r.base.dt},
            {"steps", r.base.steps},
            {"r_init", to_string(r.base.r_init)},
            {"perturbation_scale", r.base.perturbation_scale},
            {"c_init_low", r.base.c_init_low},
            {"c_init_high", r.base.c_init_high},
            {"record_every", o.record_every},
            {"save_trajectories", o.save_trajectories},
            {"bins", o.bins},
            {"max_lag", o.max_lag},
            {"integrator", "fixed-step RKF5 with post-step clamping"},
            {"run_seed", "derive_seed(master_seed, run)"}};
}

SimConfig run_config(const SimulateOptions& o, const Resolved& r, std::size_t run) {
    SimConfig c = r.base;
    c.seed = derive_seed(o.seed, run);
    c.record_every = run < o.save_trajectories ? std::max<std::size_t>(o.record_every, 1) : 0;
    return c;
}

std::string trajectory_name(std::size_t run) { return "trajectory_run" + std::to_string(run) + ".csv"; }

struct LagSummary {
    std::size_t lag = 0;
    std::optional<double> mean;
    std::optional<double> ci_low, ci_high;
    std::size_t runs_used = 0;
};

// Mean over runs of per-run lag-k autocorrelations with a normal 95% interval.
LagSummary mean_lag(const std::vector<std::vector<double>>& increments, std::size_t lag) {
    std::vector<double> values;
    for (const auto& d : increments) {
        try {
            values.push_back(increment_autocorrelation(d, lag));
        } catch (const std::invalid_argument&) {
        } catch (const UndefinedCorrelation&) {
        }
    }
    LagSummary s;
    s.lag = lag;
    s.runs_used = values.size();
    if (values.empty()) return s;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    s.mean = mean;
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double half = 1.959963984540054 * std::sqrt(ss / (n - 1.0) / n);
        s.ci_low = mean - half;
        s.ci_high = mean + half;
    }
    return s;
}

nlohmann::json lag_json(const LagSummary& s) {
    return {{"lag", s.lag},
            {"mean", optional_json(s.mean)},
            {"ci95_low", optional_json(s.ci_low)},
            {"ci95_high", optional_json(s.ci_high)},
            {"runs_used", s.runs_used}};
}

void histogram(const std::vector<double>& values, std::size_t bins, const nlohmann::json& prov, const fs::path& file,
               std::vector<double>& centers, std::vector<double>& counts) {
    const double hi = values.empty() ? 1.0 : std::max(*std::max_element(values.begin(), values.end()), 1e-300);
    std::vector<std::size_t> c(bins, 0);
    for (double v : values) c[std::min(bins - 1, static_cast<std::size_t>(v / hi * double(bins)))]++;
    CsvWriter csv(prov, {"bin_low", "bin_high", "count"});
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = hi * double(b) / double(bins), up = hi * double(b + 1) / double(bins);
        csv.cell(lo).cell(up).cell(c[b]).end_row();
        centers.push_back(0.5 * (lo + up));
        counts.push_back(double(c[b]));
    }
    csv.save(file);
}

nlohmann::json distribution_json(const std::vector<double>& values) {
    nlohmann::json j;
    try {
        j["bimodality_coefficient"] = bimodality_coefficient(values);
    } catch (const std::invalid_argument&) {
        j["bimodality_coefficient"] = nullptr;
    }
    j["bimodality_threshold"] = kBimodalityThreshold;
    try {
        const ModeSplit m = split_modes(values);
        j["modes"] = {{"threshold", m.threshold}, {"mean_low", m.mean_low},   {"mean_high", m.mean_high},
                      {"within_sd", m.within_sd}, {"n_low", m.n_low},         {"n_high", m.n_high},
                      {"separation", m.separation()}};
    } catch (const std::invalid_argument&) {
        j["modes"] = nullptr;
    }
    return j;
}

} // namespace

void add_simulate(CLI::App& app, SimulateOptions& o) {
    auto* sub = app.add_subcommand("simulate", "Integrate the connectivity ODE models over an ensemble of seeds");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--model", o.model, "intralayer | coupled | amplitude")->capture_default_str();
    sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    sub->add_option("--runs", o.runs, "Ensemble size")->capture_default_str();
    sub->add_option("--N", o.N, "Layer width (0 = model preset)")->capture_default_str();
    sub->add_option("--L", o.L, "Number of layers (0 = model preset)")->capture_default_str();
    sub->add_option("--dt", o.dt, "Step size (0 = model preset)")->capture_default_str();
    sub->add_option("--steps", o.steps, "Number of steps (0 = model preset)")->capture_default_str();
    sub->add_option("--c-low", o.c_low, "Lower bound of growth constants (0 = preset)")->capture_default_str();
    sub->add_option("--c-high", o.c_high, "Upper bound of growth constants (0 = preset)")->capture_default_str();
    sub->add_option("--r-init", o.r_init, "homogeneous | uniform_perturbed")->capture_default_str();
    sub->add_option("--perturbation-scale", o.perturbation_scale)->capture_default_str();
    sub->add_option("--record-every", o.record_every, "Trajectory stride for saved runs")->capture_default_str();
    sub->add_option("--save-trajectories", o.save_trajectories, "Write trajectories of the first K runs")
        ->capture_default_str();
    sub->add_option("--bins", o.bins, "Histogram bins")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--max-lag", o.max_lag)->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (0 = hardware)")->capture_default_str();
    sub->add_flag("--svg", o.svg, "Also write SVG plots");
}

int cmd_simulate(const SimulateOptions& o) {
    const Resolved r = resolve(o);
    const auto prov = provenance("simulate", config_json(o, r), o.seed);
    const fs::path out(o.out);
    ensure_dir(out);
    const unsigned threads = o.threads ? o.threads : default_thread_count();
    nlohmann::json summary = {{"provenance", prov}};
    std::vector<std::uint64_t> seeds(o.runs);
    for (std::size_t i = 0; i < o.runs; ++i) seeds[i] = derive_seed(o.seed, i);

    if (o.model == "intralayer") {
        std::vector<IntralayerRun> runs(o.runs);
        parallel_for(o.runs, threads, [&](std::size_t i) { runs[i] = simulate_intralayer(run_config(o, r, i), r.N); });
        std::vector<double> pooled;
        std::size_t clamps = 0;
        CsvWriter finals(prov, {"run", "node", "r"});
        for (std::size_t i = 0; i < runs.size(); ++i) {
            clamps += runs[i].clamp_count;
            for (std::size_t j = 0; j < r.N; ++j) {
                pooled.push_back(runs[i].final_state.r[j]);
                finals.cell(i).cell(j).cell(runs[i].final_state.r[j]).end_row();
            }
            if (i < o.save_trajectories) {
                CsvWriter t(prov, {"step", "layer", "node", "value"});
                for (std::size_t s = 0; s < runs[i].recorded_steps.size(); ++s)
                    for (std::size_t j = 0; j < r.N; ++j)
                        t.cell(runs[i].recorded_steps[s]).cell(std::size_t{1}).cell(j).cell(runs[i].r[s][j]).end_row();
                t.save(out / trajectory_name(i));
            }
        }
        finals.save(out / "final_r.csv");
        std::vector<double> centers, counts;
        histogram(pooled, o.bins, prov, out / "histogram.csv", centers, counts);
        summary["final_r"] = distribution_json(pooled);
        summary["clamp_events"] = clamps;
        if (o.svg)
            write_text(out / "histogram.svg",
                       svg_plot("Final connectivities", "r", "count", {{"pooled final r", centers, counts, SeriesStyle::bars}}));
    } else if (o.model == "coupled") {
        std::vector<CoupledRun> runs(o.runs);
        parallel_for(o.runs, threads, [&](std::size_t i) { runs[i] = simulate_coupled(run_config(o, r, i), r.N, r.L); });
        std::vector<double> pooled;
        std::vector<std::vector<double>> entropy_increments;
        std::size_t clamps = 0;
        CsvWriter finals(prov, {"run", "layer", "node", "r"});
        for (std::size_t i = 0; i < runs.size(); ++i) {
            clamps += runs[i].clamp_count;
            std::vector<double> S;
            for (std::size_t l = 0; l < r.L; ++l) {
                const auto& rl = runs[i].final_state.layers[l].r;
                for (std::size_t j = 0; j < r.N; ++j) {
                    pooled.push_back(rl[j]);
                    finals.cell(i).cell(l + 1).cell(j).cell(rl[j]).end_row();
                }
                try {
                    S.push_back(layer_entropy(rl));
                } catch (const std::invalid_argument&) {
                    S.push_back(NAN);
                }
            }
            std::vector<double> dS;
            for (std::size_t l = 1; l < S.size(); ++l) dS.push_back(S[l] - S[l - 1]);
            if (std::all_of(dS.begin(), dS.end(), [](double v) { return std::isfinite(v); }))
                entropy_increments.push_back(dS);
            if (i < o.save_trajectories) {
                CsvWriter t(prov, {"step", "layer", "node", "value"});
                for (std::size_t s = 0; s < runs[i].recorded_steps.size(); ++s)
                    for (std::size_t l = 0; l < r.L; ++l)
                        for (std::size_t j = 0; j < r.N; ++j)
                            t.cell(runs[i].recorded_steps[s]).cell(l + 1).cell(j).cell(runs[i].r[s][l][j]).end_row();
                t.save(out / trajectory_name(i));
            }
        }
        finals.save(out / "final_r.csv");
        std::vector<double> centers, counts;
        histogram(pooled, o.bins, prov, out / "histogram.csv", centers, counts);
        summary["final_r"] = distribution_json(pooled);
        summary["clamp_events"] = clamps;
        nlohmann::json lags = nlohmann::json::array();
        CsvWriter lag_csv(prov, {"lag", "mean", "ci95_low", "ci95_high", "runs_used"});
        for (std::size_t k = 1; k <= o.max_lag; ++k) {
            const LagSummary s = mean_lag(entropy_increments, k);
            lags.push_back(lag_json(s));
            lag_csv.cell(k).cell(s.mean).cell(s.ci_low).cell(s.ci_high).cell(s.runs_used).end_row();
        }
        lag_csv.save(out / "entropy_autocorrelation.csv");
        summary["entropy_increment_autocorrelation"] = lags;
        if (o.svg) {
            write_text(out / "histogram.svg",
                       svg_plot("Final connectivities", "r", "count", {{"pooled final r", centers, counts, SeriesStyle::bars}}));
            std::vector<double> lx, ly;
            for (std::size_t k = 0; k < lags.size(); ++k) {
                lx.push_back(double(k + 1));
                ly.push_back(lags[k]["mean"].is_null() ? NAN : lags[k]["mean"].get<double>());
            }
            write_text(out / "entropy_autocorrelation.svg",
                       svg_plot("Entropy increment autocorrelation", "lag", "mean Pearson r",
                                {{"runs", lx, ly, SeriesStyle::line}}));
        }
    } else {
        std::vector<AmplitudeRun> runs(o.runs);
        parallel_for(o.runs, threads, [&](std::size_t i) { runs[i] = simulate_amplitude(run_config(o, r, i), r.N, r.L); });
        std::vector<std::vector<double>> increments;
        std::size_t clamps = 0;
        CsvWriter finals(prov, {"run", "layer", "R", "c_left", "c_right"});
        for (std::size_t i = 0; i < runs.size(); ++i) {
            clamps += runs[i].clamp_count;
            const auto& st = runs[i].final_state;
            for (std::size_t l = 0; l < r.L; ++l) finals.cell(i).cell(l + 1).cell(st.R[l]).cell(st.c_left).cell(st.c_right).end_row();
            increments.push_back(amplitude_increments(st.R));
            if (i < o.save_trajectories) {
                CsvWriter t(prov, {"step", "layer", "node", "value"});
                for (std::size_t s = 0; s < runs[i].recorded_steps.size(); ++s)
                    for (std::size_t l = 0; l < r.L; ++l)
                        t.cell(runs[i].recorded_steps[s]).cell(l + 1).cell(std::size_t{0}).cell(runs[i].R[s][l]).end_row();
                t.save(out / trajectory_name(i));
            }
        }
        finals.save(out / "final_R.csv");
        nlohmann::json lags = nlohmann::json::array();
        CsvWriter lag_csv(prov, {"lag", "mean", "ci95_low", "ci95_high", "runs_used"});
        std::vector<double> lx, ly;
        for (std::size_t k = 1; k <= o.max_lag; ++k) {
            const LagSummary s = mean_lag(increments, k);
            lags.push_back(lag_json(s));
            lag_csv.cell(k).cell(s.mean).cell(s.ci_low).cell(s.ci_high).cell(s.runs_used).end_row();
            lx.push_back(double(k));
            ly.push_back(s.mean.value_or(NAN));
        }
        lag_csv.save(out / "autocorrelation.csv");
        summary["amplitude_increment_autocorrelation"] = lags;
        summary["clamp_events"] = clamps;
        if (o.svg)
            write_text(out / "autocorrelation.svg", svg_plot("Amplitude increment autocorrelation", "lag", "mean Pearson r",
                                                             {{"mean over runs", lx, ly, SeriesStyle::line}}));
    }
    summary["run_seeds"] = seeds;
    write_json(out / "summary.json", summary);
    std::cout << "simulated " << o.runs << " " << o.model << " runs into " << out.string() << '\n';
    return kExitOk;
}

} // namespace wmorph::cli
