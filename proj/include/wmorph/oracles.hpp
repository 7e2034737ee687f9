#ifndef WMORPH_ORACLES_HPP
#define WMORPH_ORACLES_HPP

// Brute-force reference computations used to cross-check the factorized
// path formalism, and the verification suite behind `verify-paths`.

#include "wmorph/pathform.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace wmorph {

/// U-term by explicit enumeration of every path through n, a, b, n'.
double brute_force_U(const LayeredNetwork& net, std::span<const double> x, const WeightId& weight, std::size_t n,
                     std::size_t n_prime, const PathSet& paths);

/// Single-sample gradient-descent increment of `updated` with the path
/// activities frozen at their values for the unmodified network and the
/// output error held at `delta_y`, after setting `probed` to `value`.
double frozen_increment(const LayeredNetwork& net, std::span<const double> x, double delta_y,
                        const WeightId& updated, const WeightId& probed, double value, double learning_rate,
                        const PathSet& paths);

/// Slope of frozen_increment in the probed weight from a central difference
/// of half-width `step` around its current value.
double linear_probe(const LayeredNetwork& net, std::span<const double> x, double delta_y, const WeightId& updated,
                    const WeightId& probed, double learning_rate, double step, const PathSet& paths);

/// Central finite difference of the dataset loss in one weight.
double finite_difference_gradient(const LayeredNetwork& net, const Dataset& data, const WeightId& weight,
                                  double step, bool halved = true);

/// Number of enumerated paths through weight (p, a, b) that pass any node of
/// layer p-2 and any node of layer p+1, counted one (n, n') pair at a time.
std::uint64_t count_window_paths(const PathSet& paths, const WeightId& weight);

/// Smallest |pre-activation| over all hidden nodes and samples.
double min_abs_preactivation(const LayeredNetwork& net, const Dataset& data);

/// |a - b| / max(|a|, |b|); 0 when both vanish.
double relative_error(double a, double b);

struct CheckResult {
    std::string name;
    std::size_t comparisons = 0;
    double max_error = 0.0; // relative unless `metric` says otherwise
    double tolerance = 0.0;
    std::string metric = "relative";
    bool passed = true;
};

struct VerifyOptions {
    std::uint64_t seed = 0;
    std::size_t nets = 100;
    std::size_t inputs = 10;
    // Corrupt one weight of the network the path sum is evaluated on.
    bool inject_fault = false;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool passed() const;
    nlohmann::json to_json() const;
};

/// Random zero-bias architecture with min_hidden..max_hidden hidden layers and
/// every non-output width in 1..4.
NetworkArch random_small_arch(std::uint64_t seed, std::size_t min_hidden = 1, std::size_t max_hidden = 3);

/// Every weight drawn uniformly from [-1, 1].
LayeredNetwork random_network(const NetworkArch& arch, std::uint64_t seed);

VerifyReport run_verification(const VerifyOptions& options);

} // namespace wmorph

#endif
