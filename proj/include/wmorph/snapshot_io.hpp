#ifndef WMORPH_SNAPSHOT_IO_HPP
#define WMORPH_SNAPSHOT_IO_HPP

#include "wmorph/netcore.hpp"

#include <json.hpp>

#include <filesystem>

namespace wmorph {

nlohmann::json to_json(const NetworkArch& arch);
NetworkArch arch_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Directory layout: meta.json plus epoch_XXXXXX.bin per snapshot. Each .bin
// holds little-endian float64 weights, row-major, layers 1..H, then the biases
// of layers 1..H.
void save_snapshots(const SnapshotSeries& series, const std::filesystem::path& dir);
SnapshotSeries load_snapshots(const std::filesystem::path& dir);

void save_network(const LayeredNetwork& net, const std::filesystem::path& file);
LayeredNetwork load_network(const NetworkArch& arch, const std::filesystem::path& file);

} // namespace wmorph

#endif
