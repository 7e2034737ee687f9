#ifndef WMORPH_PATHFORM_HPP
#define WMORPH_PATHFORM_HPP

#include "wmorph/netcore.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace wmorph {

inline constexpr std::uint64_t kDefaultPathCap = 1'000'000;

/// Every input-to-output node sequence of an architecture, one node index per
/// layer 0..H, in lexicographic order.
struct PathSet {
    NetworkArch arch;
    std::vector<std::vector<std::size_t>> paths;
    std::uint64_t gamma = 0; // product of n_1..n_H
    std::uint64_t total = 0; // n_0 * gamma
};

/// n_0 * n_1 * ... * n_H, saturating at UINT64_MAX.
std::uint64_t path_count(const NetworkArch& arch);

/// Throws CapacityError when the path count exceeds `cap`.
PathSet enumerate_paths(const NetworkArch& arch, std::uint64_t cap = kDefaultPathCap);

/// Binary path activities per sample. A path is active when every hidden node
/// on it has a non-negative pre-activation; input nodes and the linear output
/// node always count as active.
struct PathActivityTable {
    std::vector<std::vector<std::uint8_t>> active; // [sample][path]
    std::vector<ForwardTrace> traces;              // [sample]
};

PathActivityTable activity_table(const LayeredNetwork& net, const Dataset& data, const PathSet& paths);

/// Sum over active paths of x_{i_0} times the weight product along the path.
/// Requires a zero-bias network (UnsupportedMode otherwise).
double path_output(const LayeredNetwork& net, std::span<const double> x, const PathSet& paths);

/// Weight w^(layer)_{from,to}: `from` indexes layer-1, `to` indexes layer.
struct WeightId {
    std::size_t layer = 0;
    std::size_t from = 0;
    std::size_t to = 0;

    bool operator==(const WeightId&) const = default;
};

/// dL/dw for one weight, summed over paths through it.
double path_gradient(const LayeredNetwork& net, const Dataset& data, const WeightId& weight,
                     const PathSet& paths, bool halved = true);

/// Forward values and backward sensitivities of one sample. sens[l][j] is
/// the sum over active continuations from node j of layer l to the output of
/// the weight product, including node j's own activity (sens[H] = {1}).
struct PathFactors {
    ForwardTrace trace;
    std::vector<std::vector<double>> sens;

    double post(std::size_t layer, std::size_t node) const { return trace.post[layer][node]; }
    double theta(std::size_t layer, std::size_t node) const;
};

PathFactors path_factors(const LayeredNetwork& net, std::span<const double> x);

/// Sum over active paths that enter node `entry_node` of layer `entry_layer`,
/// pass through `central[k]` in layer entry_layer+1+k and leave through
/// `exit_node` of the following layer, of x times every weight outside the
/// window (the weights touching central nodes are excluded).
double window_sum(const LayeredNetwork& net, const PathFactors& f, std::size_t entry_layer,
                  std::size_t entry_node, std::span<const std::size_t> central, std::size_t exit_node);

struct UTerm {
    std::size_t p = 0;       // layer of the weight (p, a, b)
    std::size_t a = 0, b = 0;
    std::size_t n = 0;       // node in layer p-2
    std::size_t n_prime = 0; // node in layer p+1
    double value = 0.0;
};

/// U_n^{n'} for paths through weight (p, a, b): enters n^(p-2), passes a^(p-1)
/// and b^(p), exits through n'^(p+1). Requires 2 <= p <= H-1.
UTerm compute_U(const LayeredNetwork& net, std::span<const double> x, const WeightId& weight, std::size_t n,
                std::size_t n_prime);

enum class CouplingKind { adjacent, separated };

/// Coefficient with which the value of `coupled` enters the single-sample
/// gradient-descent increment of `updated` (learning rate folded in).
struct CouplingConstant {
    WeightId updated;
    WeightId coupled;
    CouplingKind kind = CouplingKind::adjacent;
    double value = 0.0;
};

/// Both directions of a pairwise coupling. The reverse direction needs one
/// more layer downstream and is absent when the network is too shallow.
struct CouplingPair {
    CouplingConstant forward; // lambda of the upstream weight's increment
    std::optional<CouplingConstant> reverse;
};

/// Weights (p, a, b) and (p+1, b, c). Requires 2 <= p and p+1 <= H.
CouplingPair coupling_adjacent(const LayeredNetwork& net, std::span<const double> x, double delta_y,
                               const WeightId& first, const WeightId& second, double learning_rate);

/// Weights (p, a, b) and (p+2, d, e). Requires 2 <= p and p+2 <= H.
CouplingPair coupling_separated(const LayeredNetwork& net, std::span<const double> x, double delta_y,
                                const WeightId& first, const WeightId& second, double learning_rate);

/// lambda_separated / lambda_adjacent for weights (p,0,0), (p+1,0,0) and
/// (p+2,0,0). Precondition (PreconditionError otherwise): equal hidden widths,
/// each weight layer uniform and positive, every hidden node active at x.
double coupling_ratio(const LayeredNetwork& net, std::span<const double> x, double delta_y, std::size_t p);

} // namespace wmorph

#endif
