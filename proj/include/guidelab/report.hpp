#pragma once

// CSV tables and standalone SVG line/scatter plots.

#include "guidelab/core.hpp"
#include "guidelab/sampler.hpp"
#include "guidelab/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace guidelab {

/// First line of every CSV written by the tools; bump when columns change.
inline constexpr int kCsvSchemaVersion = 1;

class CsvTable {
 public:
  CsvTable(std::string name, std::vector<std::string> columns) : name_(std::move(name)), columns_(std::move(columns)) {}

  CsvTable& row(std::vector<std::string> cells) {
    require(cells.size() == columns_.size(), "csv " + name_ + ": row has the wrong number of cells");
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::string str() const {
    std::string out = "# guidelab " + name_ + " schema " + std::to_string(kCsvSchemaVersion) + '\n';
    out += join(columns_);
    for (const auto& r : rows_) out += join(r);
    return out;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  static std::string join(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) line += ',';
      line += cells[i];
    }
    return line + '\n';
  }

  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string cell(double v) { return text::format(v); }
inline std::string cell(long long v) { return text::format(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }

/// Rows (chain, step, t, alpha_bar, adjustment_norm, d_hat, d_theory). d_hat and
/// d_theory are empty on steps without a traced state.
inline CsvTable trajectory_table(const std::vector<TrajectoryLog>& logs,
                                 const std::vector<std::vector<DistanceRecord>>& distances = {}) {
  CsvTable table("trajectory", {"chain", "step", "t", "alpha_bar", "adjustment_norm", "d_hat", "d_theory"});
  for (std::size_t c = 0; c < logs.size(); ++c) {
    const auto& log = logs[c];
    const std::vector<DistanceRecord>* dist = c < distances.size() ? &distances[c] : nullptr;
    std::size_t next = 0;
    auto distance_at = [&](int step) -> const DistanceRecord* {
      if (!dist) return nullptr;
      while (next < dist->size() && (*dist)[next].step < step) ++next;
      return next < dist->size() && (*dist)[next].step == step ? &(*dist)[next] : nullptr;
    };
    for (const auto& r : log.records) {
      const DistanceRecord* d = distance_at(r.step);
      table.row({cell(log.chain), cell(r.step), cell(r.t), cell(r.alpha_bar), cell(r.adjustment_norm),
                 d ? cell(d->d_hat) : "", d ? cell(d->d_theory) : ""});
    }
    if (const DistanceRecord* d = distance_at(static_cast<int>(log.records.size()))) {
      table.row({cell(log.chain), cell(d->step), "0", "1", "", cell(d->d_hat), cell(d->d_theory)});
    }
  }
  return table;
}

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;
  bool line = true;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string short_number(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

}  // namespace detail

inline std::string render_svg(const PlotSpec& spec) {
  constexpr double W = 720, H = 440, left = 80, right = 190, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto ty = [&](double v) { return spec.log_y ? std::log10(std::max(v, 1e-300)) : v; };
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0.0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return top + (1.0 - (ty(v) - y0) / (y1 - y0)) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << detail::escape_xml(spec.title)
      << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double gx = px(fx);
    svg << "<line x1=\"" << gx << "\" y1=\"" << top + ph << "\" x2=\"" << gx << "\" y2=\"" << top + ph + 5
        << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << gx << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << detail::short_number(fx)
        << "</text>\n";
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double gy = top + (1.0 - i / 4.0) * ph;
    const double label = spec.log_y ? std::pow(10.0, fy) : fy;
    svg << "<line x1=\"" << left - 5 << "\" y1=\"" << gy << "\" x2=\"" << left << "\" y2=\"" << gy
        << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << left - 8 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">" << detail::short_number(label)
        << "</text>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
      << detail::escape_xml(spec.x_label) << "</text>\n";
  svg << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << detail::escape_xml(spec.y_label) << (spec.log_y ? " (log)" : "") << "</text>\n";
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const char* color = palette[si % 6];
    if (s.line) {
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0.0)) continue;
        svg << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      }
      svg << "\"/>\n";
    }
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0.0)) continue;
        svg << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(si);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 32 << "\" y2=\""
        << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << detail::escape_xml(s.label) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace guidelab
