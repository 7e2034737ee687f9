#ifndef WMORPH_MORPHO_HPP
#define WMORPH_MORPHO_HPP

#include "wmorph/netcore.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace wmorph {

// ---------------------------------------------------------------------------
// Connectivities and entropy
// ---------------------------------------------------------------------------

/// In/out weight fractions and connectivity r = omega_in * omega_out for the
/// nodes of one hidden layer.
struct LayerConnectivity {
    std::vector<double> omega_in;
    std::vector<double> omega_out;
    std::vector<double> r;

    double amplitude() const; // R = sum_j r_j
};

/// One entry per hidden layer; `layers[0]` is hidden layer 1 (the one fed by
/// the input).
struct ConnectivityField {
    std::vector<LayerConnectivity> layers;
};

ConnectivityField connectivities(const LayeredNetwork& net);

/// Shannon entropy (nats) of r normalized to a distribution; 0 ln 0 = 0.
double layer_entropy(std::span<const double> r);

struct EntropyProfile {
    std::vector<double> S;  // per hidden layer, input side first
    std::vector<double> dS; // S[l+1] - S[l]
};

EntropyProfile entropy_profile(const ConnectivityField& field);

// ---------------------------------------------------------------------------
// Correlation statistics
// ---------------------------------------------------------------------------

/// Sample Pearson coefficient; throws UndefinedCorrelation for constant input.
double pearson(std::span<const double> x, std::span<const double> y);

struct Correlation {
    double r = 0.0;
    std::size_t n = 0;
    // 95% Fisher-z interval; absent when n < 4 or |r| == 1.
    std::optional<double> ci_low;
    std::optional<double> ci_high;
};

/// Pearson correlation with a Fisher z-transform confidence interval.
Correlation correlate(std::span<const double> x, std::span<const double> y, double level = 0.95);

/// Pearson correlation of (dS_t, dS_{t+lag}) over all valid t.
double increment_autocorrelation(std::span<const double> dS, std::size_t lag);

/// Pools (dS_t, dS_{t+lag}) pairs from every series before correlating.
Correlation pooled_increment_autocorrelation(const std::vector<std::vector<double>>& series,
                                             std::size_t lag);

// ---------------------------------------------------------------------------
// Network structure measures
// ---------------------------------------------------------------------------

enum class PruneRule { median, mean };
PruneRule parse_prune_rule(const std::string& text);
std::string to_string(PruneRule rule);

/// Global magnitude threshold over every weight (biases excluded).
double prune_threshold(const LayeredNetwork& net, PruneRule rule);

// Accessible-node counts after removing every weight with |w| strictly below
// the threshold. Entry 0 is the last hidden layer (next to the output), the
// final entry is hidden layer 1.
std::vector<std::size_t> accessible_nodes(const LayeredNetwork& net, PruneRule rule = PruneRule::median);
std::vector<std::size_t> accessible_nodes_at(const LayeredNetwork& net, double threshold);

/// Per hidden layer (input side first): max over samples of the number of
/// nodes with strictly positive post-activation.
std::vector<std::size_t> embedding_dimension(const LayeredNetwork& net, const Dataset& data);

// ---------------------------------------------------------------------------
// Distribution shape
// ---------------------------------------------------------------------------

/// (skewness^2 + 1) / kurtosis from population moments; > 5/9 hints at
/// bimodality.
double bimodality_coefficient(std::span<const double> values);
inline constexpr double kBimodalityThreshold = 5.0 / 9.0;

/// Best two-group split of a sample (minimal within-group sum of squares).
struct ModeSplit {
    double threshold = 0.0; // values >= threshold form the upper mode
    double mean_low = 0.0;
    double mean_high = 0.0;
    double within_sd = 0.0; // pooled within-mode standard deviation
    std::size_t n_low = 0;
    std::size_t n_high = 0;

    double separation() const { return (mean_high - mean_low) / within_sd; }
};

ModeSplit split_modes(std::span<const double> values);

// ---------------------------------------------------------------------------
// Fisher's exact test
// ---------------------------------------------------------------------------

/// 2x2 table [[a, b], [c, d]].
struct ContingencyTable2x2 {
    std::uint64_t a = 0, b = 0, c = 0, d = 0;
    std::uint64_t total() const { return a + b + c + d; }
};

/// Two-sided p-value: total probability of all tables with the observed
/// margins that are no more likely than the observed one.
double fisher_exact(const ContingencyTable2x2& table);

// ---------------------------------------------------------------------------
// Reports and structure classification
// ---------------------------------------------------------------------------

struct ClassifierThresholds {
    double min_omega_correlation = 0.5;
    double max_increment_autocorrelation = -0.2;
};

enum class StructureVerdict { formed, absent, unclassifiable };
std::string to_string(StructureVerdict v);

struct MorphologyReport {
    ConnectivityField field;
    EntropyProfile entropy;
    std::vector<std::size_t> accessible;
    std::vector<std::size_t> embedding; // empty when no data was supplied
    std::optional<double> omega_correlation;
    // lag_autocorrelation[k-1] is the lag-k entropy-increment autocorrelation.
    std::vector<std::optional<double>> lag_autocorrelation;
    PruneRule prune_rule = PruneRule::median;
};

MorphologyReport analyze_network(const LayeredNetwork& net, const Dataset* data,
                                 PruneRule rule = PruneRule::median, std::size_t max_lag = 4);

/// formed iff pearson(omega_in, omega_out) over all hidden nodes reaches the
/// minimum and the lag-1 entropy-increment autocorrelation is at most the
/// maximum; unclassifiable when either correlation is undefined.
StructureVerdict structure_classifier(const MorphologyReport& report,
                                      const ClassifierThresholds& thresholds = {});

} // namespace wmorph

#endif
