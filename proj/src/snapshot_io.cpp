#include "wmorph/snapshot_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace wmorph {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "wmorph-snapshots";
constexpr int kVersion = 1;

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

std::string epoch_file(std::size_t epoch) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%06zu.bin", epoch);
    return buf;
}

std::vector<double> flatten(const LayeredNetwork& net) {
    std::vector<double> out;
    for (const Matrix& w : net.weights) out.insert(out.end(), w.values().begin(), w.values().end());
    for (const auto& b : net.biases) out.insert(out.end(), b.begin(), b.end());
    return out;
}

} // namespace

nlohmann::json to_json(const NetworkArch& arch) {
    return {{"layer_sizes", arch.layer_sizes}, {"hidden_activation", "relu"}, {"bias_mode", to_string(arch.bias_mode)}};
}

NetworkArch arch_from_json(const nlohmann::json& j) {
    NetworkArch arch;
    try {
        arch.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        if (j.value("hidden_activation", std::string("relu")) != "relu")
            throw ConfigError("only relu hidden activations are supported");
        arch.bias_mode = parse_bias_mode(j.at("bias_mode").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed architecture: ") + e.what());
    }
    arch.validate();
    return arch;
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
            {"epochs", c.epochs},               {"optimizer", to_string(c.optimizer)},
            {"loss_halved", c.loss_halved},     {"init_low", c.init_low},
            {"init_high", c.init_high},         {"seed", c.seed},
            {"snapshot_every", c.snapshot_every}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        c.learning_rate = j.at("learning_rate").get<double>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.epochs = j.at("epochs").get<std::size_t>();
        c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
        c.loss_halved = j.at("loss_halved").get<bool>();
        c.init_low = j.at("init_low").get<double>();
        c.init_high = j.at("init_high").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.snapshot_every = j.value("snapshot_every", std::size_t{1});
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed training config: ") + e.what());
    }
    return c;
}

void save_network(const LayeredNetwork& net, const fs::path& file) {
    const auto values = flatten(net);
    std::vector<std::uint64_t> raw(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) raw[i] = to_little(std::bit_cast<std::uint64_t>(values[i]));
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
    if (!out) throw IoError("write failed for " + file.string());
}

LayeredNetwork load_network(const NetworkArch& arch, const fs::path& file) {
    LayeredNetwork net = LayeredNetwork::zeros(arch);
    std::size_t count = 0;
    for (const Matrix& w : net.weights) count += w.size();
    for (const auto& b : net.biases) count += b.size();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    std::vector<std::uint64_t> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 8));
    if (in.gcount() != static_cast<std::streamsize>(count * 8) || in.peek() != std::char_traits<char>::eof())
        throw ParseError(file.string() + ": expected exactly " + std::to_string(count) + " float64 values");
    std::size_t i = 0;
    auto next = [&] { return std::bit_cast<double>(to_little(raw[i++])); };
    for (Matrix& w : net.weights)
        for (double& v : w.values()) v = next();
    for (auto& b : net.biases)
        for (double& v : b) v = next();
    net.check_shapes();
    return net;
}

void save_snapshots(const SnapshotSeries& series, const fs::path& dir) {
    if (series.snapshots.size() != series.epoch_indices.size())
        throw ShapeError("snapshot and epoch-index counts differ");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < series.snapshots.size(); ++i) {
        const std::string name = epoch_file(series.epoch_indices[i]);
        save_network(series.snapshots[i], dir / name);
        files.push_back(name);
    }
    nlohmann::json meta = {{"format", kFormat},
                           {"version", kVersion},
                           {"arch", to_json(series.arch)},
                           {"config", to_json(series.config)},
                           {"seed", series.seed},
                           {"epoch_indices", series.epoch_indices},
                           {"loss_history", series.loss_history},
                           {"files", files}};
    std::ofstream out(dir / "meta.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + (dir / "meta.json").string());
}

SnapshotSeries load_snapshots(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    std::ifstream in(meta_path, std::ios::binary);
    if (!in) throw IoError("cannot open " + meta_path.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }
    if (meta.value("format", std::string{}) != kFormat) throw ParseError(meta_path.string() + ": not a snapshot directory");
    SnapshotSeries series;
    series.arch = arch_from_json(meta.at("arch"));
    series.config = train_config_from_json(meta.at("config"));
    try {
        series.seed = meta.at("seed").get<std::uint64_t>();
        series.epoch_indices = meta.at("epoch_indices").get<std::vector<std::size_t>>();
        series.loss_history = meta.at("loss_history").get<std::vector<double>>();
        const auto files = meta.at("files").get<std::vector<std::string>>();
        if (files.size() != series.epoch_indices.size()) throw ParseError(meta_path.string() + ": file list mismatch");
        for (const auto& f : files) series.snapshots.push_back(load_network(series.arch, dir / f));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(meta_path.string() + ": " + e.what());
    }
    for (std::size_t i = 1; i < series.epoch_indices.size(); ++i)
        if (series.epoch_indices[i] <= series.epoch_indices[i - 1])
            throw ParseError(meta_path.string() + ": epoch indices not strictly increasing");
    return series;
}

} // namespace wmorph
