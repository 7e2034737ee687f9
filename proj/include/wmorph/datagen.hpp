#ifndef WMORPH_DATAGEN_HPP
#define WMORPH_DATAGEN_HPP

#include "wmorph/netcore.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>

namespace wmorph {

// Defaults reproduce the synthetic benchmark: 5000 points in 11 Gaussian
// clusters of width 0.05 in 10 dimensions.
struct ClusterSpec {
    std::size_t n_samples = 5000;
    std::size_t n_clusters = 11;
    std::size_t n_features = 10;
    double std = 0.05;
    double center_low = 0.0;
    double center_high = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Centers uniform in [center_low, center_high]^d, samples assigned to
/// clusters round-robin, isotropic Gaussian noise, targets are labels 1..k.
Dataset gen_clusters(const ClusterSpec& spec);

/// Seeded shuffle, then the first floor(fraction * M) rows form the training set.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

// CSV schema: header `f0,...,f{d-1},target`, one sample per row. Lines that
// start with '#' are comments.
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(const std::string& text, const std::string& name);
std::string to_csv(const Dataset& data);
void save_csv(const Dataset& data, const std::filesystem::path& path, const std::string& comment = {});

} // namespace wmorph

#endif
