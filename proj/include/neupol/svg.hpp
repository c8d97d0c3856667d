#pragma once

#include <string>
#include <vector>

#include "neupol/analysis.hpp"

namespace neupol::svg {

struct Marker {
  double position_mm = 0.0;
  std::string label;
};

/// Fringe plot: sampled counts, fitted curve, dashed vertical markers.
/// Pure text output, byte-stable for identical inputs.
void write_fringe_svg(const std::string& path,
                      const std::vector<double>& positions_mm,
                      const std::vector<double>& counts,
                      const analysis::FitResult& fit,
                      const std::vector<Marker>& markers,
                      const std::string& title);

}  // namespace neupol::svg
