// Acceptance run: one PASS/FAIL line per criterion.
#include "cli/cli.hpp"

#include "wmorph/datagen.hpp"
#include "wmorph/dynamics.hpp"
#include "wmorph/morpho.hpp"
#include "wmorph/netcore.hpp"
#include "wmorph/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace wmorph;
namespace fs = std::filesystem;

namespace {

// Criteria that fail under the documented algorithm; see README "Known failures".
const std::set<std::string> kKnownFailures{"6", "7b"};

struct Line {
    std::string id;
    bool pass;
    std::string detail;
};
std::vector<Line> lines;

void report(const std::string& id, bool pass, const std::string& detail) {
    lines.push_back({id, pass, detail});
    std::printf("%s %s: %s%s\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str(),
                !pass && kKnownFailures.count(id) ? " [known failure]" : "");
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string series(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt(i ? ", %.2f" : "%.2f", v[i]);
    return s + "]";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const CheckResult& find_check(const VerifyReport& r, const std::string& name) {
    for (const auto& c : r.checks)
        if (c.name == name) return c;
    throw std::runtime_error("missing check " + name);
}

double fisher_oracle(long a, long b, long c, long d) {
    const long r1 = a + b, r2 = c + d, c1 = a + c, n = r1 + r2;
    auto lchoose = [](long n, long k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); };
    auto prob = [&](long x) { return std::exp(lchoose(r1, x) + lchoose(r2, c1 - x) - lchoose(n, c1)); };
    const double observed = prob(a);
    double p = 0.0;
    for (long x = std::max(0L, c1 - r2); x <= std::min(r1, c1); ++x)
        if (prob(x) <= observed * (1 + 1e-7)) p += prob(x);
    return p;
}

void path_criteria() {
    const auto t0 = std::chrono::steady_clock::now();
    VerifyOptions o; // 100 nets, 10 inputs, arch up to [4,4,4,4,1]
    const VerifyReport r = run_verification(o);
    const double t = seconds_since(t0);
    const auto& out = find_check(r, "path_output_vs_forward");
    report("1", out.passed && out.max_error <= 1e-10 && t < 10,
           fmt("path_output vs forward max rel err %.3g over %zu comparisons (%.2fs)", out.max_error, out.comparisons, t));
    const auto& pg = find_check(r, "path_gradient_vs_backprop");
    const auto& fd = find_check(r, "backprop_vs_finite_difference");
    report("2", pg.max_error <= 1e-10 && fd.max_error <= 1e-6 && t < 30,
           fmt("path_gradient vs backprop %.3g, backprop vs central FD %.3g", pg.max_error, fd.max_error));
    const auto& cr = find_check(r, "coupling_ratio_law");
    report("3", cr.passed && cr.max_error <= 1e-12,
           fmt("coupling_ratio vs 1/n_{p+2} for widths 3, 5, 10: max rel err %.3g", cr.max_error));
    const auto& fp = find_check(r, "homogeneous_fixed_points");
    report("4", fp.passed && fp.max_error <= 1e-12,
           fmt("max |rhs| at r = 1/N^2 for N in {2, 10, 20}: %.3g", fp.max_error));
}

void intralayer_bimodality() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t runs = 1000, N = 20;
    std::vector<IntralayerRun> out(runs);
    parallel_for(runs, default_thread_count(), [&](std::size_t i) {
        SimConfig c = intralayer_preset();
        c.seed = derive_seed(0, i);
        out[i] = simulate_intralayer(c, N);
    });
    std::vector<double> pooled;
    for (const auto& r : out) pooled.insert(pooled.end(), r.final_state.r.begin(), r.final_state.r.end());
    const double bc = bimodality_coefficient(pooled);
    const ModeSplit m = split_modes(pooled);
    const double t = seconds_since(t0);
    report("5", bc > kBimodalityThreshold && m.separation() > 3.0 && t < 60,
           fmt("bimodality coefficient %.3f (> 0.556), mode separation %.2f sd (> 3), %.1fs", bc, m.separation(), t));
}

void amplitude_oscillation() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t runs = 1000, N = 10, L = 12;
    std::vector<std::vector<double>> inc(runs);
    parallel_for(runs, default_thread_count(), [&](std::size_t i) {
        SimConfig c = amplitude_preset();
        c.seed = derive_seed(0, i);
        inc[i] = amplitude_increments(simulate_amplitude(c, N, L).final_state.R);
    });
    std::vector<double> per_run[3];
    for (const auto& d : inc)
        for (std::size_t k = 1; k <= 2; ++k) try {
                per_run[k].push_back(increment_autocorrelation(d, k));
            } catch (const UndefinedCorrelation&) {
            }
    double mean[3] = {0, 0, 0}, half[3] = {0, 0, 0};
    for (std::size_t k = 1; k <= 2; ++k) {
        const auto& v = per_run[k];
        const double n = double(v.size());
        mean[k] = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double ss = 0;
        for (double x : v) ss += (x - mean[k]) * (x - mean[k]);
        half[k] = 1.96 * std::sqrt(ss / (n - 1)) / std::sqrt(n);
    }
    const double t = seconds_since(t0);
    report("6", mean[1] <= -0.2 && mean[2] >= 0.05 && t < 300,
           fmt("mean lag-1 %.3f +- %.3f (<= -0.2), lag-2 %.3f +- %.3f (>= 0.05) over %zu runs, %.1fs", mean[1], half[1],
               mean[2], half[2], per_run[1].size(), t));
}

struct Ensemble {
    std::vector<LayeredNetwork> nets;
    std::vector<double> acc;
    TrainConfig config;
    NetworkArch arch;
};

Ensemble train_ensemble(const Dataset& train_set, const Dataset& test_set, double init_low, double init_high,
                        std::uint64_t master, std::size_t runs) {
    Ensemble e;
    e.arch.layer_sizes.assign(11, train_set.dim());
    e.arch.layer_sizes.push_back(1);
    e.arch.bias_mode = BiasMode::trainable;
    e.config.init_low = init_low;
    e.config.init_high = init_high;
    e.config.snapshot_every = e.config.epochs;
    e.nets.resize(runs);
    e.acc.assign(runs, NAN);
    parallel_for(runs, default_thread_count(), [&](std::size_t i) {
        TrainConfig c = e.config;
        c.seed = derive_seed(master, i);
        try {
            e.nets[i] = train(init_network(e.arch, c), train_set, c).final_network();
            e.acc[i] = accuracy(e.nets[i], test_set);
        } catch (const DivergenceError&) {
        }
    });
    return e;
}

void training_criteria() {
    const auto t0 = std::chrono::steady_clock::now();
    ClusterSpec spec;
    spec.seed = derive_seed(0, 0);
    const auto [train_set, test_set] = split(gen_clusters(spec), 0.8, 1);
    const std::size_t runs = 20;

    const Ensemble low = train_ensemble(train_set, test_set, -0.05, 0.05, 0, runs);
    std::vector<double> finite;
    for (double a : low.acc)
        if (std::isfinite(a)) finite.push_back(a);
    std::sort(finite.begin(), finite.end());
    const double median = finite.size() % 2 ? finite[finite.size() / 2]
                                             : 0.5 * (finite[finite.size() / 2 - 1] + finite[finite.size() / 2]);

    std::vector<double> oin, oout, dS, dED;
    std::vector<std::vector<double>> increments;
    std::vector<double> access;
    std::size_t selected = 0;
    for (std::size_t i = 0; i < runs; ++i) {
        if (!(low.acc[i] > median)) continue;
        ++selected;
        const auto rep = analyze_network(low.nets[i], &test_set);
        for (const auto& l : rep.field.layers) {
            oin.insert(oin.end(), l.omega_in.begin(), l.omega_in.end());
            oout.insert(oout.end(), l.omega_out.begin(), l.omega_out.end());
        }
        increments.push_back(rep.entropy.dS);
        for (std::size_t l = 0; l < rep.entropy.dS.size(); ++l) {
            dS.push_back(rep.entropy.dS[l]);
            dED.push_back(double(rep.embedding[l + 1]) - double(rep.embedding[l]));
        }
        if (access.empty()) access.assign(rep.accessible.size(), 0.0);
        for (std::size_t k = 0; k < access.size(); ++k) access[k] += double(rep.accessible[k]);
    }
    for (double& v : access) v /= double(selected);

    const Correlation omega = correlate(oin, oout);
    report("7a", omega.r >= 0.3,
           fmt("pooled pearson(omega_in, omega_out) %.3f over %zu nodes of %zu above-median nets (median acc %.3f)",
               omega.r, omega.n, selected, median));

    std::vector<double> control(access.size(), 0.0);
    const std::size_t controls = 20;
    for (std::size_t k = 0; k < controls; ++k) {
        TrainConfig c = low.config;
        c.seed = derive_seed(12345, k);
        const auto counts = accessible_nodes(init_network(low.arch, c));
        for (std::size_t i = 0; i < counts.size(); ++i) control[i] += double(counts[i]) / double(controls);
    }
    // least-squares slope against distance from the output
    auto slope = [](const std::vector<double>& y) {
        const double n = double(y.size()), mx = (n - 1) / 2;
        const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double sxy = 0, sxx = 0;
        for (std::size_t k = 0; k < y.size(); ++k) {
            sxy += (double(k) - mx) * (y[k] - my);
            sxx += (double(k) - mx) * (double(k) - mx);
        }
        return sxy / sxx;
    };
    const double trained_slope = slope(access);
    const double spread = *std::max_element(control.begin(), control.end()) - *std::min_element(control.begin(), control.end());
    report("7b", trained_slope < 0 && spread <= 2.0,
           fmt("trained accessible nodes output->input %s (slope %.3f, needs < 0); random controls %s (range %.2f, needs <= 2)",
               series(access).c_str(), trained_slope, series(control).c_str(), spread));

    const Correlation lag1 = pooled_increment_autocorrelation(increments, 1);
    report("7c", lag1.r <= -0.1 && lag1.ci_high && *lag1.ci_high < 0.0,
           fmt("pooled lag-1 entropy-increment autocorrelation %.3f, 95%% CI [%.3f, %.3f], n=%zu", lag1.r,
               lag1.ci_low.value_or(NAN), lag1.ci_high.value_or(NAN), lag1.n));

    const Correlation ed = correlate(dS, dED);
    report("10", ed.r > 0.3, fmt("pooled pearson(dS, d embedding dim) %.3f over %zu layer pairs", ed.r, ed.n));

    const Ensemble high = train_ensemble(train_set, test_set, -1.0, 1.0, 1, runs);
    std::size_t accurate = 0, without = 0;
    for (std::size_t i = 0; i < runs; ++i) {
        if (!(high.acc[i] > 0.9)) continue;
        ++accurate;
        const auto verdict = structure_classifier(analyze_network(high.nets[i], nullptr));
        if (verdict != StructureVerdict::formed) ++without;
    }
    const double t = seconds_since(t0);
    report("8", accurate > 0 && double(without) >= 0.9 * double(accurate) && t < 2400,
           fmt("%zu of %zu high-variance nets exceed 90%% accuracy; %zu of them classified without structure",
               accurate, runs, without));
    std::printf("   training criteria took %.1fs (limit 20 min each for 7 and 8)\n", t);
}

void fisher_criterion() {
    const ContingencyTable2x2 t{32, 0, 3, 16};
    const double p = fisher_exact(t), oracle = fisher_oracle(32, 0, 3, 16);
    const double rel = std::abs(p - oracle) / oracle;
    const double ratio = p / 1.4e-10;
    report("9", rel <= 1e-7 && ratio >= 0.5 && ratio <= 2.0,
           fmt("p = %.6g, hypergeometric oracle %.6g (rel err %.2g), ratio to reference 1.4e-10: %.3f", p, oracle, rel,
               ratio));
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension();
        if (ext != ".csv" && ext != ".json" && ext != ".bin") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = ss.str();
    }
    return files;
}

void determinism_criterion() {
    const fs::path root = fs::temp_directory_path() / "wmorph_acceptance_determinism";
    fs::remove_all(root);
    const std::string data = (root / "data").string();
    const std::string runs = (root / "runs").string();
    const std::vector<std::pair<std::string, std::vector<std::string>>> commands{
        {"gen-data", {"gen-data", "--out", data, "--samples", "400", "--seed", "7"}},
        {"simulate intralayer", {"simulate", "--model", "intralayer", "--runs", "20", "--out", (root / "si").string(),
                                 "--save-trajectories", "2", "--seed", "7"}},
        {"simulate coupled", {"simulate", "--model", "coupled", "--runs", "10", "--steps", "100", "--out",
                              (root / "sc").string(), "--save-trajectories", "1", "--seed", "7"}},
        {"simulate amplitude", {"simulate", "--model", "amplitude", "--runs", "10", "--steps", "2000", "--out",
                                (root / "sa").string(), "--save-trajectories", "1", "--record-every", "100"}},
        {"train", {"train", "--data", data + "/dataset.csv", "--out", runs, "--runs", "3", "--epochs", "20",
                   "--hidden-layers", "4", "--snapshot-every", "5", "--seed", "7"}},
        {"analyze", {"analyze", "--runs-dir", runs, "--out", (root / "an").string(), "--controls", "3", "--seed", "7"}},
        {"verify-paths", {"verify-paths", "--nets", "10", "--inputs", "3", "--out", (root / "verify/report.json").string()}},
    };
    std::vector<std::string> mismatched;
    std::size_t files = 0;
    std::ostringstream sink;
    auto* saved = std::cout.rdbuf(sink.rdbuf());
    for (const auto& [name, args] : commands) {
        std::string out_dir;
        for (std::size_t i = 0; i + 1 < args.size(); ++i)
            if (args[i] == "--out") out_dir = args[i + 1];
        if (name == "verify-paths") out_dir = (root / "verify").string();
        fs::create_directories(out_dir);
        if (cli::run(args) != 0) {
            mismatched.push_back(name + " (exit status)");
            continue;
        }
        const auto first = snapshot_tree(out_dir);
        fs::remove_all(out_dir);
        fs::create_directories(out_dir);
        cli::run(args);
        const auto second = snapshot_tree(out_dir);
        files += first.size();
        if (first != second || first.empty()) mismatched.push_back(name);
    }
    std::cout.rdbuf(saved);
    fs::remove_all(root);
    std::string detail = fmt("%zu output files compared across %zu subcommand runs", files, commands.size());
    for (const auto& m : mismatched) detail += "; differs: " + m;
    report("11", mismatched.empty(), detail);
}

} // namespace

int main() {
    using Step = std::function<void()>;
    for (const Step& step : std::vector<Step>{path_criteria, fisher_criterion, intralayer_bimodality,
                                              amplitude_oscillation, training_criteria, determinism_criterion}) {
        try {
            step();
        } catch (const std::exception& e) {
            report("?", false, std::string("exception: ") + e.what());
        }
    }
    std::size_t failed = 0, unexpected = 0;
    for (const auto& l : lines)
        if (!l.pass) {
            ++failed;
            if (!kKnownFailures.count(l.id)) ++unexpected;
        }
    std::printf("%zu criteria checked, %zu failed (%zu unexpected)\n", lines.size(), failed, unexpected);
    return unexpected ? 1 : 0;
}
