#include "wmorph/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace wmorph {

void ClusterSpec::validate() const {
    if (n_clusters < 2) throw ConfigError("need at least two clusters");
    if (n_samples == 0 || n_features == 0) throw ConfigError("cluster spec has an empty dimension");
    if (!(std > 0.0)) throw ConfigError("cluster std must be positive");
    if (!(center_low <= center_high)) throw ConfigError("center_low must not exceed center_high");
}

Dataset gen_clusters(const ClusterSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> center_dist(spec.center_low, spec.center_high);
    Matrix centers(spec.n_clusters, spec.n_features);
    for (double& c : centers.values()) c = center_dist(rng);

    std::normal_distribution<double> noise(0.0, spec.std);
    Dataset data;
    data.name = "clusters";
    data.features = Matrix(spec.n_samples, spec.n_features);
    data.targets.resize(spec.n_samples);
    for (std::size_t m = 0; m < spec.n_samples; ++m) {
        const std::size_t label = m % spec.n_clusters;
        auto row = data.features.row(m);
        for (std::size_t f = 0; f < spec.n_features; ++f) row[f] = centers(label, f) + noise(rng);
        data.targets[m] = static_cast<double>(label + 1);
    }
    return data;
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
    data.check();
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ArgumentError("train fraction must lie strictly between 0 and 1");
    const auto n_train =
        static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(data.size())));
    if (n_train == 0 || n_train == data.size())
        throw ArgumentError("split of " + std::to_string(data.size()) + " samples at fraction " +
                            format_double(train_fraction) + " leaves an empty side");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::span<const std::size_t> all(order);
    Dataset train = data.subset(all.first(n_train));
    Dataset test = data.subset(all.subspan(n_train));
    train.name = data.name + ":train";
    test.name = data.name + ":test";
    return {std::move(train), std::move(test)};
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
            field.remove_suffix(1);
        out.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_cell(std::string_view cell, const std::string& name, std::size_t line, std::size_t col,
                  std::string_view header) {
    double v = 0.0;
    const char* first = cell.data();
    if (!cell.empty() && cell.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
        std::ostringstream msg;
        msg << name << ": line " << line << ", column " << col + 1 << " ('" << header
            << "'): cannot parse '" << cell << "' as a number";
        throw ParseError(msg.str());
    }
    return v;
}

} // namespace

Dataset parse_csv(const std::string& text, const std::string& name) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::size_t target_col = 0;
    std::vector<double> values;
    std::vector<double> targets;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_fields(line);
        if (header.empty()) {
            for (auto f : fields) header.emplace_back(f);
            const auto it = std::find(header.begin(), header.end(), "target");
            if (it == header.end())
                throw ParseError(name + ": line " + std::to_string(line_no) +
                                 ": header has no 'target' column");
            if (header.size() < 2) throw ParseError(name + ": header has no feature columns");
            target_col = static_cast<std::size_t>(it - header.begin());
            continue;
        }
        if (fields.size() != header.size())
            throw ParseError(name + ": line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, found " +
                             std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            const double v = parse_cell(fields[c], name, line_no, c, header[c]);
            if (c == target_col)
                targets.push_back(v);
            else
                values.push_back(v);
        }
    }
    if (header.empty()) throw ParseError(name + ": missing header row");
    if (targets.empty()) throw ParseError(name + ": no data rows");

    Dataset data;
    data.name = name;
    data.features = Matrix(targets.size(), header.size() - 1);
    std::copy(values.begin(), values.end(), data.features.values().begin());
    data.targets = std::move(targets);
    return data;
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

std::string to_csv(const Dataset& data) {
    std::string out;
    for (std::size_t f = 0; f < data.dim(); ++f) out += "f" + std::to_string(f) + ",";
    out += "target\n";
    for (std::size_t m = 0; m < data.size(); ++m) {
        for (double v : data.sample(m)) {
            out += format_double(v);
            out += ',';
        }
        out += format_double(data.targets[m]);
        out += '\n';
    }
    return out;
}

void save_csv(const Dataset& data, const std::filesystem::path& path, const std::string& comment) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset file " + path.string());
    if (!comment.empty()) out << "# " << comment << '\n';
    out << to_csv(data);
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace wmorph
