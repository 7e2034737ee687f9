#ifndef WMORPH_CLI_SVG_HPP
#define WMORPH_CLI_SVG_HPP

#include <string>
#include <vector>

namespace wmorph::cli {

enum class SeriesStyle { line, points, bars };

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    SeriesStyle style = SeriesStyle::line;
};

// Minimal self-contained SVG chart with linear axes and no timestamps.
std::string svg_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series);

} // namespace wmorph::cli

#endif
