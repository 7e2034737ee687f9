#ifndef WMORPH_CLI_OUTPUTS_HPP
#define WMORPH_CLI_OUTPUTS_HPP

#include <json.hpp>

#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace wmorph::cli {

namespace fs = std::filesystem;

void ensure_dir(const fs::path& dir);
void write_text(const fs::path& file, const std::string& text);
void write_json(const fs::path& file, const nlohmann::json& j);

// Provenance block embedded into every output file.
nlohmann::json provenance(const std::string& command, const nlohmann::json& config, std::uint64_t seed);

/// CSV text whose first line is a '#' comment carrying the provenance JSON.
class CsvWriter {
public:
    CsvWriter(const nlohmann::json& provenance, std::initializer_list<std::string> header);

    CsvWriter& cell(double v);
    CsvWriter& cell(std::size_t v);
    CsvWriter& cell(const std::string& v);
    CsvWriter& cell(const std::optional<double>& v); // empty cell when absent
    void end_row();

    const std::string& text() const { return text_; }
    void save(const fs::path& file) const { write_text(file, text_); }

private:
    std::string text_;
    bool row_open_ = false;
    void sep();
};

nlohmann::json optional_json(const std::optional<double>& v);

} // namespace wmorph::cli

#endif
