#include "htsim/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace htsim {

namespace {

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) os_ << ',';
        os_ << (needs_quoting(fields[i]) ? quoted(fields[i]) : fields[i]);
    }
    os_ << "\r\n";
}

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json quantity(double value, const std::string& method) {
    return json{{"value", value}, {"method", method}};
}

json quantity(double value, double stderr_, const std::string& method) {
    return json{{"value", value}, {"stderr", stderr_}, {"method", method}};
}

// ----- SvgPlot -----

namespace {
constexpr double kWidth = 720, kHeight = 480;
constexpr double kLeft = 70, kRight = 30, kTop = 40, kBottom = 55;
}  // namespace

SvgPlot::SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi, bool log_x)
    : x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi), log_x_(log_x) {}

double SvgPlot::to_px_x(double x) const {
    const double a = log_x_ ? std::log(x_lo_) : x_lo_;
    const double b = log_x_ ? std::log(x_hi_) : x_hi_;
    const double v = log_x_ ? std::log(x) : x;
    return kLeft + (v - a) / (b - a) * (kWidth - kLeft - kRight);
}

double SvgPlot::to_px_y(double y) const {
    return kHeight - kBottom - (y - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom);
}

void SvgPlot::cell(double x0, double x1, double y0, double y1, double value) {
    const double v = std::max(-1.0, std::min(1.0, value));
    int r = 255, g = 255, b = 255;
    if (v > 0) {
        g = b = int(255 * (1.0 - v));
    } else {
        r = g = int(255 * (1.0 + v));
    }
    const double px0 = to_px_x(x0), px1 = to_px_x(x1);
    const double py0 = to_px_y(y1), py1 = to_px_y(y0);
    std::ostringstream ss;
    ss << "<rect x=\"" << px0 << "\" y=\"" << py0 << "\" width=\"" << px1 - px0
       << "\" height=\"" << py1 - py0 << "\" fill=\"rgb(" << r << ',' << g << ',' << b
       << ")\"/>";
    shapes_.push_back(ss.str());
}

void SvgPlot::polyline(const std::vector<std::pair<double, double>>& pts,
                       const std::string& color, double width) {
    if (pts.empty()) return;
    std::ostringstream ss;
    ss << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
       << "\" points=\"";
    for (const auto& [x, y] : pts) ss << to_px_x(x) << ',' << to_px_y(y) << ' ';
    ss << "\"/>";
    shapes_.push_back(ss.str());
}

void SvgPlot::series(const std::vector<std::pair<double, double>>& pts,
                     const std::string& color, const std::string& legend_label) {
    polyline(pts, color);
    for (const auto& [x, y] : pts) {
        std::ostringstream ss;
        ss << "<circle cx=\"" << to_px_x(x) << "\" cy=\"" << to_px_y(y)
           << "\" r=\"3\" fill=\"" << color << "\"/>";
        shapes_.push_back(ss.str());
    }
    if (!legend_label.empty()) legend_.emplace_back(legend_label, color);
}

void SvgPlot::hline(double y, const std::string& color, double width) {
    std::ostringstream ss;
    ss << "<line x1=\"" << kLeft << "\" y1=\"" << to_px_y(y) << "\" x2=\""
       << kWidth - kRight << "\" y2=\"" << to_px_y(y) << "\" stroke=\"" << color
       << "\" stroke-width=\"" << width << "\" stroke-dasharray=\"5,4\"/>";
    shapes_.push_back(ss.str());
}

void SvgPlot::render(std::ostream& os) const {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
       << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& s : shapes_) os << s << '\n';
    // frame
    os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
       << kWidth - kLeft - kRight << "\" height=\"" << kHeight - kTop - kBottom
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    // ticks: 5 per axis
    for (int i = 0; i <= 5; ++i) {
        const double fx = double(i) / 5.0;
        double xv;
        if (log_x_) {
            xv = std::exp(std::log(x_lo_) + fx * (std::log(x_hi_) - std::log(x_lo_)));
        } else {
            xv = x_lo_ + fx * (x_hi_ - x_lo_);
        }
        const double yv = y_lo_ + fx * (y_hi_ - y_lo_);
        const double px = to_px_x(xv), py = to_px_y(yv);
        os << "<line x1=\"" << px << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << px
           << "\" y2=\"" << kHeight - kBottom + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << px << "\" y=\"" << kHeight - kBottom + 18
           << "\" font-size=\"11\" text-anchor=\"middle\">" << csv_num(std::round(xv * 1000) / 1000)
           << "</text>\n";
        os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py << "\" x2=\"" << kLeft
           << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << kLeft - 8 << "\" y=\"" << py + 4
           << "\" font-size=\"11\" text-anchor=\"end\">" << csv_num(std::round(yv * 1000) / 1000)
           << "</text>\n";
    }
    if (!title_.empty())
        os << "<text x=\"" << kWidth / 2 << "\" y=\"22\" font-size=\"15\" "
           << "text-anchor=\"middle\">" << title_ << "</text>\n";
    if (!x_label_.empty())
        os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
           << "\" font-size=\"13\" text-anchor=\"middle\">" << x_label_ << "</text>\n";
    if (!y_label_.empty())
        os << "<text x=\"16\" y=\"" << kHeight / 2
           << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
           << kHeight / 2 << ")\">" << y_label_ << "</text>\n";
    double ly = kTop + 16;
    for (const auto& [label, color] : legend_) {
        os << "<line x1=\"" << kWidth - kRight - 130 << "\" y1=\"" << ly - 4 << "\" x2=\""
           << kWidth - kRight - 105 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
           << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << kWidth - kRight - 100 << "\" y=\"" << ly
           << "\" font-size=\"12\">" << label << "</text>\n";
        ly += 16;
    }
    os << "</svg>\n";
}

}  // namespace htsim
