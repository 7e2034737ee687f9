#include "wmorph/morpho.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wmorph {

double LayerConnectivity::amplitude() const { return std::accumulate(r.begin(), r.end(), 0.0); }

ConnectivityField connectivities(const LayeredNetwork& net) {
    net.check_shapes();
    const std::size_t H = net.arch.depth();
    ConnectivityField field;
    for (std::size_t l = 1; l < H; ++l) {
        const Matrix& in = net.weight(l);
        const Matrix& out = net.weight(l + 1);
        const double total_in = net.total_abs_weight(l);
        const double total_out = net.total_abs_weight(l + 1);
        if (total_in == 0.0 || total_out == 0.0)
            throw DomainError("degenerate layer: weight layer " +
                              std::to_string(total_in == 0.0 ? l : l + 1) + " has zero total weight");
        LayerConnectivity layer;
        const std::size_t N = net.arch.width(l);
        layer.omega_in.assign(N, 0.0);
        layer.omega_out.assign(N, 0.0);
        layer.r.assign(N, 0.0);
        for (std::size_t i = 0; i < in.rows(); ++i)
            for (std::size_t j = 0; j < N; ++j) layer.omega_in[j] += std::abs(in(i, j));
        for (std::size_t j = 0; j < N; ++j)
            for (std::size_t k = 0; k < out.cols(); ++k) layer.omega_out[j] += std::abs(out(j, k));
        for (std::size_t j = 0; j < N; ++j) {
            layer.omega_in[j] /= total_in;
            layer.omega_out[j] /= total_out;
            layer.r[j] = layer.omega_in[j] * layer.omega_out[j];
        }
        field.layers.push_back(std::move(layer));
    }
    return field;
}

double layer_entropy(std::span<const double> r) {
    double total = 0.0;
    for (double v : r) {
        if (v < 0.0 || !std::isfinite(v)) throw ArgumentError("layer_entropy: negative or non-finite connectivity");
        total += v;
    }
    if (total <= 0.0) throw ArgumentError("layer_entropy: connectivities sum to zero");
    double s = 0.0;
    for (double v : r) {
        if (v == 0.0) continue;
        const double p = v / total;
        s -= p * std::log(p);
    }
    return s;
}

EntropyProfile entropy_profile(const ConnectivityField& field) {
    EntropyProfile profile;
    for (const auto& layer : field.layers) profile.S.push_back(layer_entropy(layer.r));
    for (std::size_t l = 1; l < profile.S.size(); ++l) profile.dS.push_back(profile.S[l] - profile.S[l - 1]);
    return profile;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ShapeError("pearson: inputs differ in length");
    if (x.size() < 2) throw ArgumentError("pearson: need at least two points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw UndefinedCorrelation("pearson: constant input, correlation undefined");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation correlate(std::span<const double> x, std::span<const double> y, double level) {
    Correlation c;
    c.r = pearson(x, y);
    c.n = x.size();
    if (c.n >= 4 && std::abs(c.r) < 1.0) {
        // two-sided normal quantile; only the 95% level is tabulated exactly
        const double zq = level == 0.95 ? 1.959963984540054 : std::sqrt(2.0) * std::erfc(1.0 - level);
        const double z = std::atanh(c.r);
        const double se = 1.0 / std::sqrt(static_cast<double>(c.n) - 3.0);
        c.ci_low = std::tanh(z - zq * se);
        c.ci_high = std::tanh(z + zq * se);
    }
    return c;
}

double increment_autocorrelation(std::span<const double> dS, std::size_t lag) {
    if (lag == 0) throw ArgumentError("increment_autocorrelation: lag must be positive");
    if (dS.size() <= lag + 1)
        throw ArgumentError("increment_autocorrelation: series of length " + std::to_string(dS.size()) +
                            " too short for lag " + std::to_string(lag));
    return pearson(dS.first(dS.size() - lag), dS.subspan(lag));
}

Correlation pooled_increment_autocorrelation(const std::vector<std::vector<double>>& series,
                                             std::size_t lag) {
    if (lag == 0) throw ArgumentError("pooled_increment_autocorrelation: lag must be positive");
    std::vector<double> lead, follow;
    for (const auto& s : series)
        for (std::size_t t = 0; t + lag < s.size(); ++t) {
            lead.push_back(s[t]);
            follow.push_back(s[t + lag]);
        }
    if (lead.size() < 2) throw ArgumentError("pooled_increment_autocorrelation: fewer than two pairs");
    return correlate(lead, follow);
}

PruneRule parse_prune_rule(const std::string& text) {
    if (text == "median") return PruneRule::median;
    if (text == "mean") return PruneRule::mean;
    throw ConfigError("unknown prune rule '" + text + "' (expected median|mean)");
}

std::string to_string(PruneRule rule) { return rule == PruneRule::median ? "median" : "mean"; }

double prune_threshold(const LayeredNetwork& net, PruneRule rule) {
    std::vector<double> mags;
    mags.reserve(net.arch.weight_count());
    for (const Matrix& w : net.weights)
        for (double v : w.values()) mags.push_back(std::abs(v));
    if (mags.empty()) throw ArgumentError("prune_threshold: network has no weights");
    if (rule == PruneRule::mean)
        return std::accumulate(mags.begin(), mags.end(), 0.0) / static_cast<double>(mags.size());
    std::sort(mags.begin(), mags.end());
    const std::size_t n = mags.size();
    return n % 2 == 1 ? mags[n / 2] : 0.5 * (mags[n / 2 - 1] + mags[n / 2]);
}

std::vector<std::size_t> accessible_nodes_at(const LayeredNetwork& net, double threshold) {
    net.check_shapes();
    const std::size_t H = net.arch.depth();
    std::vector<char> reach(1, 1); // output node
    std::vector<std::size_t> counts;
    for (std::size_t l = H; l >= 2; --l) {
        const Matrix& w = net.weight(l);
        std::vector<char> prev(w.rows(), 0);
        for (std::size_t a = 0; a < w.rows(); ++a)
            for (std::size_t b = 0; b < w.cols(); ++b)
                if (reach[b] && !(std::abs(w(a, b)) < threshold)) {
                    prev[a] = 1;
                    break;
                }
        counts.push_back(static_cast<std::size_t>(std::count(prev.begin(), prev.end(), 1)));
        reach = std::move(prev);
    }
    return counts;
}

std::vector<std::size_t> accessible_nodes(const LayeredNetwork& net, PruneRule rule) {
    return accessible_nodes_at(net, prune_threshold(net, rule));
}

std::vector<std::size_t> embedding_dimension(const LayeredNetwork& net, const Dataset& data) {
    data.check();
    const std::size_t H = net.arch.depth();
    std::vector<std::size_t> dims(H - 1, 0);
    for (std::size_t m = 0; m < data.size(); ++m) {
        const ForwardTrace trace = forward_trace(net, data.sample(m));
        for (std::size_t l = 1; l < H; ++l) {
            const auto& h = trace.post[l];
            const auto active = static_cast<std::size_t>(
                std::count_if(h.begin(), h.end(), [](double v) { return v > 0.0; }));
            dims[l - 1] = std::max(dims[l - 1], active);
        }
    }
    return dims;
}

double bimodality_coefficient(std::span<const double> values) {
    if (values.size() < 4) throw ArgumentError("bimodality_coefficient: need at least 4 values");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw ArgumentError("bimodality_coefficient: zero variance");
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    return (skew * skew + 1.0) / kurt;
}

ModeSplit split_modes(std::span<const double> values) {
    if (values.size() < 2) throw ArgumentError("split_modes: need at least two values");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    if (v.front() == v.back()) throw ArgumentError("split_modes: all values identical");
    const std::size_t n = v.size();
    std::vector<double> s(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        s[i + 1] = s[i] + v[i];
        s2[i + 1] = s2[i] + v[i] * v[i];
    }
    ModeSplit best;
    double best_ss = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < n; ++k) {
        if (v[k] == v[k - 1]) continue; // equal values stay in one mode
        const double nl = static_cast<double>(k);
        const double nh = static_cast<double>(n - k);
        const double ml = s[k] / nl;
        const double mh = (s[n] - s[k]) / nh;
        const double ss = std::max(0.0, s2[k] - nl * ml * ml) + std::max(0.0, (s2[n] - s2[k]) - nh * mh * mh);
        if (ss < best_ss) {
            best_ss = ss;
            best.threshold = v[k];
            best.mean_low = ml;
            best.mean_high = mh;
            best.n_low = k;
            best.n_high = n - k;
        }
    }
    best.within_sd = std::sqrt(best_ss / static_cast<double>(n));
    return best;
}

namespace {

std::vector<double> log_factorials(std::uint64_t n) {
    std::vector<double> lf(n + 1, 0.0);
    for (std::uint64_t k = 2; k <= n; ++k) lf[k] = lf[k - 1] + std::log(static_cast<double>(k));
    return lf;
}

} // namespace

double fisher_exact(const ContingencyTable2x2& t) {
    const std::uint64_t n = t.total();
    if (n == 0) throw ArgumentError("fisher_exact: empty table");
    const std::uint64_t row1 = t.a + t.b;
    const std::uint64_t row2 = t.c + t.d;
    const std::uint64_t col1 = t.a + t.c;
    const auto lf = log_factorials(n);
    // log P(a = x) for the hypergeometric law with the observed margins
    auto log_p = [&](std::uint64_t x) {
        return lf[row1] - lf[x] - lf[row1 - x] + lf[row2] - lf[col1 - x] - lf[row2 - (col1 - x)] -
               (lf[n] - lf[col1] - lf[n - col1]);
    };
    const std::uint64_t lo = col1 > row2 ? col1 - row2 : 0;
    const std::uint64_t hi = std::min(row1, col1);
    const double observed = log_p(t.a);
    const double slack = std::log1p(1e-7);
    double p = 0.0;
    for (std::uint64_t x = lo; x <= hi; ++x) {
        const double lp = log_p(x);
        if (lp <= observed + slack) p += std::exp(lp);
    }
    return std::min(p, 1.0);
}

std::string to_string(StructureVerdict v) {
    switch (v) {
    case StructureVerdict::formed: return "formed";
    case StructureVerdict::absent: return "absent";
    default: return "unclassifiable";
    }
}

MorphologyReport analyze_network(const LayeredNetwork& net, const Dataset* data, PruneRule rule,
                                 std::size_t max_lag) {
    MorphologyReport report;
    report.prune_rule = rule;
    report.field = connectivities(net);
    report.entropy = entropy_profile(report.field);
    report.accessible = accessible_nodes(net, rule);
    if (data != nullptr) report.embedding = embedding_dimension(net, *data);

    std::vector<double> in, out;
    for (const auto& layer : report.field.layers) {
        in.insert(in.end(), layer.omega_in.begin(), layer.omega_in.end());
        out.insert(out.end(), layer.omega_out.begin(), layer.omega_out.end());
    }
    try {
        report.omega_correlation = pearson(in, out);
    } catch (const UndefinedCorrelation&) {
    }
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        std::optional<double> value;
        try {
            value = increment_autocorrelation(report.entropy.dS, lag);
        } catch (const std::invalid_argument&) {
        } catch (const UndefinedCorrelation&) {
        }
        report.lag_autocorrelation.push_back(value);
    }
    return report;
}

StructureVerdict structure_classifier(const MorphologyReport& report, const ClassifierThresholds& thresholds) {
    if (!report.omega_correlation || report.lag_autocorrelation.empty() || !report.lag_autocorrelation[0])
        return StructureVerdict::unclassifiable;
    const bool channel = *report.omega_correlation >= thresholds.min_omega_correlation;
    const bool alternating = *report.lag_autocorrelation[0] <= thresholds.max_increment_autocorrelation;
    return channel && alternating ? StructureVerdict::formed : StructureVerdict::absent;
}

} // namespace wmorph
