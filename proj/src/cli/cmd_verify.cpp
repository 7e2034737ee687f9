#include "cli/cli.hpp"
#include "cli/outputs.hpp"

#include "wmorph/oracles.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace wmorph::cli {

void add_verify(CLI::App& app, VerifyOptionsCli& o) {
    auto* sub = app.add_subcommand("verify-paths", "Check the path factorization against independent oracles");
    sub->add_option("--out", o.out, "Also write the JSON report to this file");
    sub->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    sub->add_option("--nets", o.nets, "Random networks per check")->capture_default_str();
    sub->add_option("--inputs", o.inputs, "Random inputs per network")->capture_default_str();
    sub->add_flag("--inject-fault", o.inject_fault)->group("");
}

int cmd_verify(const VerifyOptionsCli& o) {
    if (o.nets == 0 || o.inputs == 0) throw ConfigError("--nets and --inputs must be positive");
    VerifyOptions v;
    v.seed = o.seed;
    v.nets = o.nets;
    v.inputs = o.inputs;
    v.inject_fault = o.inject_fault;
    const VerifyReport report = run_verification(v);

    nlohmann::json j = report.to_json();
    j["provenance"] = provenance("verify-paths",
                                 {{"nets", o.nets}, {"inputs", o.inputs}, {"inject_fault", o.inject_fault}}, o.seed);
    std::cout << j.dump(2) << '\n';
    if (!o.out.empty()) write_json(o.out, j);
    return report.passed() ? kExitOk : kExitCheckFailed;
}

} // namespace wmorph::cli
