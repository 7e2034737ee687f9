#ifndef WMORPH_CLI_CLI_HPP
#define WMORPH_CLI_CLI_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace wmorph::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;

/// Parses and runs one subcommand; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args); // args exclude the program name

struct GenDataOptions {
    std::string out = "data";
    std::uint64_t seed = 0;
    std::size_t samples = 5000;
    std::size_t clusters = 11;
    std::size_t features = 10;
    double std = 0.05;
    double center_low = 0.0;
    double center_high = 1.0;
    double train_fraction = 0.8;
};

struct SimulateOptions {
    std::string out = "sim";
    std::string model = "intralayer";
    std::uint64_t seed = 0;
    std::size_t runs = 1000;
    // Zero means "use the model's preset".
    std::size_t N = 0;
    std::size_t L = 0;
    double dt = 0.0;
    std::size_t steps = 0;
    double c_low = 0.0;
    double c_high = 0.0;
    std::string r_init = "uniform_perturbed";
    double perturbation_scale = 0.1;
    std::size_t record_every = 0;
    std::size_t save_trajectories = 0;
    std::size_t bins = 50;
    std::size_t max_lag = 4;
    unsigned threads = 0;
    bool svg = false;
};

struct TrainOptions {
    std::string out = "runs";
    std::string data;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 1;
    double train_fraction = 0.8;
    std::size_t runs = 20;
    std::size_t hidden_layers = 10;
    std::size_t width = 0; // 0 = input dimension
    std::string bias_mode = "trainable";
    double learning_rate = 0.01;
    std::size_t batch_size = 256;
    std::size_t epochs = 500;
    std::string optimizer = "adam";
    bool loss_halved = true;
    double init_low = -0.05;
    double init_high = 0.05;
    bool high_variance = false;
    std::size_t snapshot_every = 1;
    unsigned threads = 0;
};

struct AnalyzeOptions {
    std::string runs_dir = "runs";
    std::string out = "analysis";
    std::string data; // optional; embedding dimensions need it
    std::string filter = "median";
    double accuracy_threshold = 0.9;
    std::string prune_rule = "median";
    double rho_min = 0.5;
    double a_max = -0.2;
    std::size_t max_lag = 4;
    std::size_t controls = 0;
    std::uint64_t seed = 0;
    bool svg = false;
};

struct VerifyOptionsCli {
    std::string out; // empty = stdout only
    std::uint64_t seed = 0;
    std::size_t nets = 100;
    std::size_t inputs = 10;
    bool inject_fault = false;
};

int cmd_gen_data(const GenDataOptions& o);
int cmd_simulate(const SimulateOptions& o);
int cmd_train(const TrainOptions& o);
int cmd_analyze(const AnalyzeOptions& o);
int cmd_verify(const VerifyOptionsCli& o);

void add_gen_data(CLI::App& app, GenDataOptions& o);
void add_simulate(CLI::App& app, SimulateOptions& o);
void add_train(CLI::App& app, TrainOptions& o);
void add_analyze(CLI::App& app, AnalyzeOptions& o);
void add_verify(CLI::App& app, VerifyOptionsCli& o);

} // namespace wmorph::cli

#endif
