#pragma once

// SVG rendering of learning curves: one median line with an interquartile
// band per labelled series.

#include <fstream>
#include <string>
#include <vector>

#include "lan/errors.hpp"
#include "lan/stats.hpp"

namespace lan {

struct CurveSeries {
  std::string label;
  std::vector<AggregateRow> rows;
};

inline void render_curves_svg(const std::vector<CurveSeries>& series, const std::string& title,
                              const std::string& y_label, const std::string& out_path) {
  if (series.empty()) throw ContractError("render_curves: no series");
  for (const CurveSeries& s : series)
    if (s.rows.empty()) throw ContractError("render_curves: empty series " + s.label);

  const double width = 860, height = 560;
  const double ml = 70, mr = 180, mt = 50, mb = 60;
  double t_max = 1, y_min = 0, y_max = 1;
  for (const CurveSeries& s : series)
    for (const AggregateRow& r : s.rows) {
      t_max = std::max(t_max, static_cast<double>(r.timestep));
      y_min = std::min({y_min, r.q1, r.median});
      y_max = std::max({y_max, r.q3, r.median});
    }
  if (y_max == y_min) y_max = y_min + 1;

  auto x_of = [&](double t) { return ml + (width - ml - mr) * (t / t_max); };
  auto y_of = [&](double v) { return height - mb - (height - mt - mb) * ((v - y_min) / (y_max - y_min)); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, "cannot write plot: " + out_path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\">" << title << "</text>\n";

  // axes
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    double t = t_max * i / 5.0;
    out << "<text x=\"" << x_of(t) << "\" y=\"" << height - mb + 22 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << static_cast<long>(t) << "</text>\n";
    double v = y_min + (y_max - y_min) * i / 5.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    out << "<text x=\"" << ml - 8 << "\" y=\"" << y_of(v) + 4 << "\" text-anchor=\"end\" font-size=\"12\">" << buf
        << "</text>\n";
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 14
      << "\" text-anchor=\"middle\" font-size=\"13\">environment steps</text>\n";
  out << "<text x=\"20\" y=\"" << (mt + height - mb) / 2 << "\" font-size=\"13\" transform=\"rotate(-90 20 "
      << (mt + height - mb) / 2 << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = palette[si % 6];
    const std::vector<AggregateRow>& rows = series[si].rows;
    // interquartile band: q1 forward, q3 backward
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (const AggregateRow& r : rows) out << x_of(r.timestep) << "," << y_of(r.q1) << " ";
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) out << x_of(it->timestep) << "," << y_of(it->q3) << " ";
    out << "\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const AggregateRow& r : rows) out << x_of(r.timestep) << "," << y_of(r.median) << " ";
    out << "\"/>\n";
    double ly = mt + 24.0 * si;
    out << "<rect x=\"" << width - mr + 16 << "\" y=\"" << ly << "\" width=\"22\" height=\"4\" fill=\"" << color
        << "\"/>\n";
    out << "<text x=\"" << width - mr + 44 << "\" y=\"" << ly + 6 << "\" font-size=\"13\">" << series[si].label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace lan
