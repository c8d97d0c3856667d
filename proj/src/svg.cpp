#include "neupol/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "neupol/constants.hpp"

namespace neupol::svg {

namespace {

constexpr double kW = 840.0, kH = 520.0;
constexpr double kLeft = 90.0, kRight = 30.0, kTop = 40.0, kBottom = 60.0;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double nice_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

void write_fringe_svg(const std::string& path,
                      const std::vector<double>& positions_mm,
                      const std::vector<double>& counts,
                      const analysis::FitResult& fit,
                      const std::vector<Marker>& markers,
                      const std::string& title) {
  if (positions_mm.size() != counts.size() || positions_mm.empty()) {
    throw std::invalid_argument("fringe plot needs matching nonempty data");
  }
  const double x_min = positions_mm.front();
  const double x_max = positions_mm.back();
  double y_max = *std::max_element(counts.begin(), counts.end());
  y_max = std::max(y_max, fit.offset + fit.amplitude);
  y_max *= 1.08;
  const double y_min = 0.0;

  const auto px = [&](double x) {
    return kLeft + (x - x_min) / (x_max - x_min) * (kW - kLeft - kRight);
  };
  const auto py = [&](double y) {
    return kH - kBottom - (y - y_min) / (y_max - y_min) * (kH - kTop - kBottom);
  };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n";
  out << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << num(kW / 2) << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";

  // axes
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kH - kBottom)
      << "\" x2=\"" << num(kW - kRight) << "\" y2=\"" << num(kH - kBottom)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
      << num(kLeft) << "\" y2=\"" << num(kH - kBottom) << "\" stroke=\"black\"/>\n";

  const double xstep = nice_step(x_max - x_min, 8);
  for (double t = std::floor(x_min / xstep) * xstep; t <= x_max + 1e-9; t += xstep) {
    if (t < x_min - 1e-9) continue;
    out << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kH - kBottom)
        << "\" x2=\"" << num(px(t)) << "\" y2=\"" << num(kH - kBottom + 6)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kH - kBottom + 22)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << tick_label(t) << "</text>\n";
  }
  const double ystep = nice_step(y_max - y_min, 6);
  for (double t = 0.0; t <= y_max + 1e-9; t += ystep) {
    out << "<line x1=\"" << num(kLeft - 6) << "\" y1=\"" << num(py(t))
        << "\" x2=\"" << num(kLeft) << "\" y2=\"" << num(py(t))
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << num(kLeft - 10) << "\" y=\"" << num(py(t) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
        << tick_label(t) << "</text>\n";
  }
  out << "<text x=\"" << num((kLeft + kW - kRight) / 2) << "\" y=\""
      << num(kH - 16)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
         "stage position (mm)</text>\n";
  out << "<text x=\"22\" y=\"" << num((kTop + kH - kBottom) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
         "transform=\"rotate(-90 22 "
      << num((kTop + kH - kBottom) / 2) << ")\">counts</text>\n";

  // dashed setting markers
  for (const auto& m : markers) {
    if (m.position_mm < x_min || m.position_mm > x_max) continue;
    out << "<line x1=\"" << num(px(m.position_mm)) << "\" y1=\"" << num(kTop)
        << "\" x2=\"" << num(px(m.position_mm)) << "\" y2=\""
        << num(kH - kBottom)
        << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
    out << "<text x=\"" << num(px(m.position_mm) + 4) << "\" y=\""
        << num(kTop + 14)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"gray\">"
        << m.label << "</text>\n";
  }

  // fitted curve
  out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
  const int samples = 240;
  for (int i = 0; i <= samples; ++i) {
    const double x = x_min + (x_max - x_min) * i / samples;
    const double y = fit.offset + fit.amplitude * std::cos(2.0 * kPi *
                         (x - fit.phase_zero_mm) / fit.period_mm);
    out << num(px(x)) << ',' << num(py(y));
    if (i != samples) out << ' ';
  }
  out << "\"/>\n";

  // data points
  for (std::size_t i = 0; i < positions_mm.size(); ++i) {
    out << "<circle cx=\"" << num(px(positions_mm[i])) << "\" cy=\""
        << num(py(counts[i])) << "\" r=\"3\" fill=\"#2c3e50\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace neupol::svg
