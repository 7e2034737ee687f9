#include "cli/cli.hpp"
#include "cli/outputs.hpp"

#include "wmorph/datagen.hpp"
#include "wmorph/snapshot_io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace wmorph::cli {

namespace {

std::string run_dir_name(std::size_t run) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%03zu", run);
    return buf;
}

struct RunOutcome {
    std::string status = "ok";
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double final_loss = 0.0;
    std::string message;
};

} // namespace

void add_train(CLI::App& app, TrainOptions& o) {
    auto* sub = app.add_subcommand("train", "Train an ensemble of networks and record weight snapshots");
    sub->add_option("--data", o.data, "Dataset CSV (features then a 'target' column)")->required();
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    sub->add_option("--split-seed", o.split_seed, "Seed of the train/test shuffle")->capture_default_str();
    sub->add_option("--train-fraction", o.train_fraction)->capture_default_str();
    sub->add_option("--runs", o.runs, "Ensemble size")->capture_default_str();
    sub->add_option("--hidden-layers", o.hidden_layers)->capture_default_str();
    sub->add_option("--width", o.width, "Hidden width (0 = input dimension)")->capture_default_str();
    sub->add_option("--bias-mode", o.bias_mode, "zero | trainable")->capture_default_str();
    sub->add_option("--lr", o.learning_rate)->capture_default_str();
    sub->add_option("--batch-size", o.batch_size)->capture_default_str();
    sub->add_option("--epochs", o.epochs)->capture_default_str();
    sub->add_option("--optimizer", o.optimizer, "sgd | adam")->capture_default_str();
    sub->add_option("--loss-halved", o.loss_halved, "Use the 1/(2M) loss prefactor")->capture_default_str();
    sub->add_option("--init-low", o.init_low)->capture_default_str();
    sub->add_option("--init-high", o.init_high)->capture_default_str();
    sub->add_flag("--high-variance", o.high_variance, "Initialize on [-1, 1]");
    sub->add_option("--snapshot-every", o.snapshot_every)->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (0 = hardware)")->capture_default_str();
}

int cmd_train(const TrainOptions& o) {
    if (o.runs == 0) throw ConfigError("--runs must be at least 1");
    const Dataset data = load_csv(o.data);
    const auto [train_set, test_set] = split(data, o.train_fraction, o.split_seed);

    NetworkArch arch;
    const std::size_t width = o.width ? o.width : data.dim();
    arch.layer_sizes.push_back(data.dim());
    for (std::size_t l = 0; l < o.hidden_layers; ++l) arch.layer_sizes.push_back(width);
    arch.layer_sizes.push_back(1);
    arch.bias_mode = parse_bias_mode(o.bias_mode);
    arch.validate();

    TrainConfig base;
    base.learning_rate = o.learning_rate;
    base.batch_size = o.batch_size;
    base.epochs = o.epochs;
    base.optimizer = parse_optimizer(o.optimizer);
    base.loss_halved = o.loss_halved;
    base.init_low = o.high_variance ? -1.0 : o.init_low;
    base.init_high = o.high_variance ? 1.0 : o.init_high;
    base.snapshot_every = o.snapshot_every;
    base.validate();

    nlohmann::json config = {{"data", o.data},
                             {"train_fraction", o.train_fraction},
                             {"split_seed", o.split_seed},
                             {"runs", o.runs},
                             {"arch", to_json(arch)},
                             {"train", to_json(base)},
                             {"run_seed", "derive_seed(master_seed, run)"}};
    config["train"].erase("seed");
    const auto prov = provenance("train", config, o.seed);
    const fs::path out(o.out);
    ensure_dir(out);
    save_csv(train_set, out / "train.csv", prov.dump());
    save_csv(test_set, out / "test.csv", prov.dump());

    std::vector<RunOutcome> outcomes(o.runs);
    parallel_for(o.runs, o.threads ? o.threads : default_thread_count(), [&](std::size_t i) {
        TrainConfig c = base;
        c.seed = derive_seed(o.seed, i);
        RunOutcome& r = outcomes[i];
        try {
            const SnapshotSeries series = train(init_network(arch, c), train_set, c);
            save_snapshots(series, out / run_dir_name(i));
            r.train_accuracy = accuracy(series.final_network(), train_set);
            r.test_accuracy = accuracy(series.final_network(), test_set);
            r.final_loss = series.loss_history.back();
        } catch (const DivergenceError& e) {
            r.status = "diverged";
            r.message = e.what();
        }
    });

    CsvWriter csv(prov, {"run", "seed", "status", "train_accuracy", "test_accuracy", "final_loss"});
    nlohmann::json runs = nlohmann::json::array();
    std::size_t diverged = 0;
    for (std::size_t i = 0; i < o.runs; ++i) {
        const auto& r = outcomes[i];
        csv.cell(i).cell(std::to_string(derive_seed(o.seed, i))).cell(r.status);
        if (r.status == "ok") {
            csv.cell(r.train_accuracy).cell(r.test_accuracy).cell(r.final_loss);
        } else {
            ++diverged;
            csv.cell(std::string{}).cell(std::string{}).cell(std::string{});
            std::cerr << "run " << i << " (seed " << derive_seed(o.seed, i) << ") diverged: " << r.message << '\n';
        }
        csv.end_row();
        runs.push_back({{"run", i},
                        {"dir", run_dir_name(i)},
                        {"seed", derive_seed(o.seed, i)},
                        {"status", r.status},
                        {"test_accuracy", r.status == "ok" ? nlohmann::json(r.test_accuracy) : nlohmann::json(nullptr)}});
    }
    csv.save(out / "accuracy.csv");
    write_json(out / "summary.json", {{"provenance", prov}, {"runs", runs}, {"diverged", diverged}});
    std::cout << "trained " << o.runs - diverged << "/" << o.runs << " networks into " << out.string() << '\n';
    return kExitOk;
}

} // namespace wmorph::cli
