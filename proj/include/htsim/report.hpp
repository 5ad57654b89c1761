#pragma once

#include <nlohmann/json.hpp>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace htsim {

using nlohmann::json;

// RFC 4180 CSV: fields holding commas, quotes, or line breaks are quoted and
// embedded quotes doubled. Rows end in CRLF.
class CsvWriter {
  public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}
    void row(const std::vector<std::string>& fields);

  private:
    std::ostream& os_;
};

std::string csv_num(double v);

// A numeric quantity with provenance for the JSON reports.
json quantity(double value, const std::string& method);
json quantity(double value, double stderr_, const std::string& method);

// Minimal SVG scatter/heatmap plotter: filled grid cells, polylines, line
// series with markers, axes with tick labels. Coordinates are data-space;
// x may be log-scaled.
class SvgPlot {
  public:
    SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi, bool log_x = false);

    void set_title(std::string t) { title_ = std::move(t); }
    void set_labels(std::string x, std::string y) { x_label_ = std::move(x); y_label_ = std::move(y); }

    // Filled rectangle centered cell for heatmaps; value in [-1,1] mapped
    // blue (negative) -> white -> red (positive).
    void cell(double x0, double x1, double y0, double y1, double value);
    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& color, double width = 1.5);
    // Polyline plus circular markers; optional legend entry.
    void series(const std::vector<std::pair<double, double>>& pts,
                const std::string& color, const std::string& legend_label = "");
    void hline(double y, const std::string& color, double width = 1.0);

    void render(std::ostream& os) const;

  private:
    double to_px_x(double x) const;
    double to_px_y(double y) const;

    double x_lo_, x_hi_, y_lo_, y_hi_;
    bool log_x_;
    std::string title_, x_label_, y_label_;
    std::vector<std::string> shapes_;
    std::vector<std::pair<std::string, std::string>> legend_;  // label, color
};

}  // namespace htsim
