#pragma once

#include <cstdint>
#include <string>

#include "neupol/beamline.hpp"
#include "neupol/counting.hpp"
#include "neupol/ensemble.hpp"

namespace neupol::config {

/// Everything a run needs, parsed from an INI-style file with sections
/// [beamline], [source], [counting], [bell], [output]. Unknown sections or
/// keys are rejected; missing keys take the documented defaults.
struct RunConfig {
  beamline::BeamlineGeometry geometry;
  ensemble::VelocityDistribution source;
  counting::RateModel model;
  double detector_efficiency = 0.99;
  qstate::BellAngles angles;
  int repetitions = 3;
  counting::CountSource bell_source = counting::CountSource::model;
  std::uint64_t seed = 12345;
  std::string out_dir = ".";

  beamline::BeamlineConfig make_beamline(bool with_dc_pi = true) const;
  counting::BellOptions bell_options(bool noise) const;
  std::string digest() const;  // stable hash of the physical settings
};

RunConfig default_config();

/// Strict parse: unknown key/section or malformed value throws with
/// file:line context.
RunConfig load_run_config(const std::string& path);

/// Parse an angle given as radians ("0.5", "0.5rad") or degrees ("30deg").
double parse_angle(const std::string& text);

}  // namespace neupol::config
