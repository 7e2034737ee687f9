#include "cli/outputs.hpp"

#include "wmorph/common.hpp"

#include <fstream>

namespace wmorph::cli {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << text;
    if (!out) throw IoError("write failed for " + file.string());
}

void write_json(const fs::path& file, const nlohmann::json& j) { write_text(file, j.dump(2) + "\n"); }

nlohmann::json provenance(const std::string& command, const nlohmann::json& config, std::uint64_t seed) {
    return {{"command", command}, {"master_seed", seed}, {"config", config}};
}

CsvWriter::CsvWriter(const nlohmann::json& provenance, std::initializer_list<std::string> header) {
    text_ = "# " + provenance.dump() + "\n";
    bool first = true;
    for (const auto& h : header) {
        if (!first) text_ += ',';
        text_ += h;
        first = false;
    }
    text_ += '\n';
}

void CsvWriter::sep() {
    if (row_open_) text_ += ',';
    row_open_ = true;
}

CsvWriter& CsvWriter::cell(double v) {
    sep();
    text_ += format_double(v);
    return *this;
}

CsvWriter& CsvWriter::cell(std::size_t v) {
    sep();
    text_ += std::to_string(v);
    return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
    sep();
    text_ += v;
    return *this;
}

CsvWriter& CsvWriter::cell(const std::optional<double>& v) {
    sep();
    if (v) text_ += format_double(*v);
    return *this;
}

void CsvWriter::end_row() {
    text_ += '\n';
    row_open_ = false;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

} // namespace wmorph::cli
