#include "cli/cli.hpp"
#include "cli/outputs.hpp"
#include "cli/svg.hpp"

#include "wmorph/datagen.hpp"
#include "wmorph/morpho.hpp"
#include "wmorph/snapshot_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <numeric>

namespace wmorph::cli {

namespace {

struct RunEntry {
    std::string dir;
    std::optional<double> accuracy;
    std::optional<LayeredNetwork> net;
    std::optional<MorphologyReport> report;
    StructureVerdict verdict = StructureVerdict::unclassifiable;
    bool selected = false;
    std::string status = "ok";
};

std::vector<RunEntry> discover(const fs::path& dir) {
    std::vector<RunEntry> runs;
    const fs::path summary = dir / "summary.json";
    if (fs::exists(summary)) {
        std::ifstream in(summary, std::ios::binary);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
            for (const auto& r : j.at("runs")) {
                RunEntry e;
                e.dir = r.at("dir").get<std::string>();
                if (r.at("status").get<std::string>() != "ok") e.status = r.at("status").get<std::string>();
                if (!r.at("test_accuracy").is_null()) e.accuracy = r.at("test_accuracy").get<double>();
                runs.push_back(std::move(e));
            }
        } catch (const nlohmann::json::exception& ex) {
            throw ParseError(summary.string() + ": " + ex.what());
        }
        return runs;
    }
    if (!fs::is_directory(dir)) throw IoError("runs directory " + dir.string() + " does not exist");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    for (auto& n : names) runs.push_back({n, std::nullopt, std::nullopt, std::nullopt});
    return runs;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json report_json(const MorphologyReport& r, StructureVerdict verdict) {
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l < r.field.layers.size(); ++l) {
        const auto& f = r.field.layers[l];
        layers.push_back({{"hidden_layer", l + 1},
                          {"omega_in", f.omega_in},
                          {"omega_out", f.omega_out},
                          {"r", f.r},
                          {"amplitude", f.amplitude()},
                          {"entropy", r.entropy.S[l]},
                          {"embedding_dimension", r.embedding.empty() ? nlohmann::json(nullptr)
                                                                      : nlohmann::json(r.embedding[l])}});
    }
    nlohmann::json lags = nlohmann::json::array();
    for (const auto& v : r.lag_autocorrelation) lags.push_back(optional_json(v));
    return {{"layers", layers},
            {"entropy_increments", r.entropy.dS},
            {"accessible_nodes_from_output", r.accessible},
            {"prune_rule", to_string(r.prune_rule)},
            {"omega_correlation", optional_json(r.omega_correlation)},
            {"entropy_increment_autocorrelation", lags},
            {"structure", to_string(verdict)}};
}

nlohmann::json correlation_json(const std::optional<Correlation>& c) {
    if (!c) return nullptr;
    return {{"r", c->r}, {"n", c->n}, {"ci95_low", optional_json(c->ci_low)}, {"ci95_high", optional_json(c->ci_high)}};
}

template <class F>
std::optional<Correlation> try_correlation(F&& f) {
    try {
        return f();
    } catch (const std::invalid_argument&) {
    } catch (const UndefinedCorrelation&) {
    }
    return std::nullopt;
}

} // namespace

void add_analyze(CLI::App& app, AnalyzeOptions& o) {
    auto* sub = app.add_subcommand("analyze", "Morphology statistics of a trained ensemble");
    sub->add_option("--runs-dir", o.runs_dir, "Output directory of `train`")->capture_default_str();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--data", o.data, "Dataset for embedding dimensions (default: <runs-dir>/test.csv)");
    sub->add_option("--filter", o.filter, "median | threshold | none")->capture_default_str();
    sub->add_option("--accuracy-threshold", o.accuracy_threshold, "Threshold filter and Fisher grouping")
        ->capture_default_str();
    sub->add_option("--prune-rule", o.prune_rule, "median | mean")->capture_default_str();
    sub->add_option("--rho-min", o.rho_min, "Classifier: minimum omega correlation")->capture_default_str();
    sub->add_option("--a-max", o.a_max, "Classifier: maximum lag-1 increment autocorrelation")->capture_default_str();
    sub->add_option("--max-lag", o.max_lag)->capture_default_str();
    sub->add_option("--controls", o.controls, "Untrained random control networks")->capture_default_str();
    sub->add_option("--seed", o.seed, "Seed for the random controls")->capture_default_str();
    sub->add_flag("--svg", o.svg, "Also write SVG plots");
}

int cmd_analyze(const AnalyzeOptions& o) {
    if (o.filter != "median" && o.filter != "threshold" && o.filter != "none")
        throw ConfigError("unknown filter '" + o.filter + "' (expected median|threshold|none)");
    const PruneRule rule = parse_prune_rule(o.prune_rule);
    const ClassifierThresholds thresholds{o.rho_min, o.a_max};
    const fs::path runs_dir(o.runs_dir);
    std::vector<RunEntry> runs = discover(runs_dir);

    std::optional<Dataset> data;
    std::string data_path = o.data;
    if (data_path.empty() && fs::exists(runs_dir / "test.csv")) data_path = (runs_dir / "test.csv").string();
    if (!data_path.empty()) data = load_csv(data_path);

    const nlohmann::json config = {{"runs_dir", o.runs_dir},
                                   {"data", data_path},
                                   {"filter", o.filter},
                                   {"accuracy_threshold", o.accuracy_threshold},
                                   {"prune_rule", o.prune_rule},
                                   {"classifier", {{"rho_min", o.rho_min}, {"a_max", o.a_max}}},
                                   {"max_lag", o.max_lag},
                                   {"controls", o.controls},
                                   {"control_seed", "derive_seed(master_seed, control)"}};
    const auto prov = provenance("analyze", config, o.seed);
    const fs::path out(o.out);
    ensure_dir(out);
    ensure_dir(out / "reports");

    std::vector<std::string> skipped;
    NetworkArch arch;
    TrainConfig train_config;
    for (auto& r : runs) {
        if (r.status != "ok") {
            skipped.push_back(r.dir + " (" + r.status + ")");
            continue;
        }
        try {
            const SnapshotSeries s = load_snapshots(runs_dir / r.dir);
            arch = s.arch;
            train_config = s.config;
            r.net = s.final_network();
        } catch (const std::exception& e) {
            r.status = "missing";
            skipped.push_back(r.dir + " (" + e.what() + ")");
            std::cerr << "skipping " << r.dir << ": " << e.what() << '\n';
            continue;
        }
        if (!r.accuracy && data) r.accuracy = accuracy(*r.net, *data);
        r.report = analyze_network(*r.net, data ? &*data : nullptr, rule, o.max_lag);
        r.verdict = structure_classifier(*r.report, thresholds);
        write_json(out / "reports" / (r.dir + ".json"),
                   {{"provenance", prov}, {"run", r.dir}, {"test_accuracy", optional_json(r.accuracy)},
                    {"report", report_json(*r.report, r.verdict)}});
    }

    std::vector<double> accs;
    for (const auto& r : runs)
        if (r.report && r.accuracy) accs.push_back(*r.accuracy);
    const std::optional<double> median = accs.empty() ? std::nullopt : std::optional<double>(median_of(accs));
    for (auto& r : runs) {
        if (!r.report) continue;
        if (o.filter == "none") r.selected = true;
        else if (!r.accuracy) r.selected = false;
        else if (o.filter == "median") r.selected = *r.accuracy > *median;
        else r.selected = *r.accuracy > o.accuracy_threshold;
    }

    // pooled statistics over the selected networks
    std::vector<double> omega_in, omega_out, dS_pairs, ded_pairs;
    std::vector<std::vector<double>> increments;
    std::vector<double> access_sum;
    std::size_t selected = 0;
    CsvWriter scatter(prov, {"run", "hidden_layer", "node", "omega_in", "omega_out"});
    CsvWriter layers_csv(prov, {"run", "hidden_layer", "entropy", "embedding_dimension", "amplitude"});
    for (const auto& r : runs) {
        if (!r.selected) continue;
        ++selected;
        const auto& rep = *r.report;
        for (std::size_t l = 0; l < rep.field.layers.size(); ++l) {
            const auto& f = rep.field.layers[l];
            for (std::size_t j = 0; j < f.omega_in.size(); ++j) {
                omega_in.push_back(f.omega_in[j]);
                omega_out.push_back(f.omega_out[j]);
                scatter.cell(r.dir).cell(l + 1).cell(j).cell(f.omega_in[j]).cell(f.omega_out[j]).end_row();
            }
            layers_csv.cell(r.dir).cell(l + 1).cell(rep.entropy.S[l]);
            if (rep.embedding.empty()) layers_csv.cell(std::string{});
            else layers_csv.cell(rep.embedding[l]);
            layers_csv.cell(f.amplitude()).end_row();
        }
        increments.push_back(rep.entropy.dS);
        if (!rep.embedding.empty())
            for (std::size_t l = 0; l < rep.entropy.dS.size(); ++l) {
                dS_pairs.push_back(rep.entropy.dS[l]);
                ded_pairs.push_back(double(rep.embedding[l + 1]) - double(rep.embedding[l]));
            }
        if (access_sum.empty()) access_sum.assign(rep.accessible.size(), 0.0);
        for (std::size_t k = 0; k < rep.accessible.size() && k < access_sum.size(); ++k) access_sum[k] += double(rep.accessible[k]);
    }
    scatter.save(out / "omega_scatter.csv");
    layers_csv.save(out / "layer_profiles.csv");

    std::vector<double> control_sum(access_sum.size(), 0.0);
    if (o.controls > 0 && !arch.layer_sizes.empty()) {
        for (std::size_t k = 0; k < o.controls; ++k) {
            TrainConfig c = train_config;
            c.seed = derive_seed(o.seed, k);
            const auto counts = accessible_nodes(init_network(arch, c), rule);
            for (std::size_t i = 0; i < counts.size() && i < control_sum.size(); ++i) control_sum[i] += double(counts[i]);
        }
    }
    CsvWriter access_csv(prov, {"layer_from_output", "mean_accessible_selected", "mean_accessible_control"});
    std::vector<double> ax, ay, cy;
    for (std::size_t k = 0; k < access_sum.size(); ++k) {
        const std::optional<double> t = selected ? std::optional<double>(access_sum[k] / double(selected)) : std::nullopt;
        const std::optional<double> c =
            o.controls ? std::optional<double>(control_sum[k] / double(o.controls)) : std::nullopt;
        access_csv.cell(k).cell(t).cell(c).end_row();
        ax.push_back(double(k));
        ay.push_back(t.value_or(NAN));
        cy.push_back(c.value_or(NAN));
    }
    access_csv.save(out / "accessibility.csv");

    nlohmann::json lags = nlohmann::json::array();
    CsvWriter lag_csv(prov, {"lag", "r", "n", "ci95_low", "ci95_high"});
    for (std::size_t k = 1; k <= o.max_lag; ++k) {
        const auto c = try_correlation([&] { return pooled_increment_autocorrelation(increments, k); });
        lags.push_back({{"lag", k}, {"correlation", correlation_json(c)}});
        if (c) lag_csv.cell(k).cell(c->r).cell(c->n).cell(c->ci_low).cell(c->ci_high).end_row();
        else lag_csv.cell(k).cell(std::string{}).cell(std::size_t{0}).cell(std::string{}).cell(std::string{}).end_row();
    }
    lag_csv.save(out / "entropy_autocorrelation.csv");

    // structure x accuracy contingency table over every classifiable network
    ContingencyTable2x2 table;
    CsvWriter cls(prov, {"run", "test_accuracy", "selected", "high_accuracy", "structure"});
    for (const auto& r : runs) {
        if (!r.report) continue;
        const bool high = r.accuracy && *r.accuracy > o.accuracy_threshold;
        cls.cell(r.dir).cell(r.accuracy).cell(std::string(r.selected ? "1" : "0")).cell(std::string(high ? "1" : "0"))
            .cell(to_string(r.verdict))
            .end_row();
        if (r.verdict == StructureVerdict::unclassifiable || !r.accuracy) continue;
        const bool formed = r.verdict == StructureVerdict::formed;
        (formed ? (high ? table.a : table.b) : (high ? table.c : table.d))++;
    }
    cls.save(out / "classification.csv");

    nlohmann::json summary = {{"provenance", prov},
                              {"networks_analyzed", accs.size()},
                              {"networks_selected", selected},
                              {"median_accuracy", optional_json(median)},
                              {"skipped", skipped}};
    summary["omega_correlation"] = correlation_json(try_correlation([&] { return correlate(omega_in, omega_out); }));
    summary["entropy_increment_autocorrelation"] = lags;
    summary["entropy_vs_embedding_increments"] =
        correlation_json(try_correlation([&] { return correlate(dS_pairs, ded_pairs); }));
    summary["fisher_exact"] = {
        {"table", {{"structure_high_accuracy", table.a}, {"structure_low_accuracy", table.b},
                   {"no_structure_high_accuracy", table.c}, {"no_structure_low_accuracy", table.d}}},
        {"p_value", table.total() ? nlohmann::json(fisher_exact(table)) : nlohmann::json(nullptr)}};
    write_json(out / "summary.json", summary);

    if (o.svg) {
        write_text(out / "omega_scatter.svg",
                   svg_plot("Weight fractions per hidden node", "omega_in", "omega_out",
                            {{"selected networks", omega_in, omega_out, SeriesStyle::points}}));
        std::vector<Series> acc_series{{"trained (selected)", ax, ay, SeriesStyle::line}};
        if (o.controls) acc_series.push_back({"random controls", ax, cy, SeriesStyle::line});
        write_text(out / "accessibility.svg",
                   svg_plot("Accessible nodes after pruning", "layer (0 = next to output)", "nodes", acc_series));
        std::vector<double> lx, ly;
        for (std::size_t k = 0; k < lags.size(); ++k) {
            lx.push_back(double(k + 1));
            const auto& c = lags[k]["correlation"];
            ly.push_back(c.is_null() ? NAN : c["r"].get<double>());
        }
        write_text(out / "entropy_autocorrelation.svg",
                   svg_plot("Entropy increment autocorrelation", "lag", "pooled Pearson r",
                            {{"selected networks", lx, ly, SeriesStyle::line}}));
    }
    std::cout << "analyzed " << accs.size() << " networks (" << selected << " selected) into " << out.string() << '\n';
    return kExitOk;
}

} // namespace wmorph::cli
