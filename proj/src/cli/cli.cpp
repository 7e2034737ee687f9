#include "cli/cli.hpp"

#include "wmorph/common.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace wmorph::cli {

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

int run(const std::vector<std::string>& args) {
    CLI::App app{"Weight-morphology laboratory: connectivity dynamics, path formalism and training statistics"};
    app.set_config("--config", "", "Read options from a TOML/INI file; [section] names match subcommands");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    GenDataOptions gen;
    SimulateOptions sim;
    TrainOptions train;
    AnalyzeOptions analyze;
    VerifyOptionsCli verify;
    add_gen_data(app, gen);
    add_simulate(app, sim);
    add_train(app, train);
    add_analyze(app, analyze);
    add_verify(app, verify);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (app.got_subcommand("gen-data")) return cmd_gen_data(gen);
        if (app.got_subcommand("simulate")) return cmd_simulate(sim);
        if (app.got_subcommand("train")) return cmd_train(train);
        if (app.got_subcommand("analyze")) return cmd_analyze(analyze);
        if (app.got_subcommand("verify-paths")) return cmd_verify(verify);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitCheckFailed;
    }
    return kExitUsage;
}

} // namespace wmorph::cli
