#include "neupol/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace neupol::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

using Sections = std::map<std::string, std::map<std::string, Entry>>;

Sections parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  Sections out;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                 ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || section.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": key outside a section");
    }
    if (out[section].count(key)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": duplicate key '" + key + "'");
    }
    out[section][key] = Entry{value, lineno, false};
  }
  return out;
}

class Reader {
 public:
  Reader(Sections sections, std::string path)
      : sections_(std::move(sections)), path_(std::move(path)) {}

  double number(const std::string& sec, const std::string& key, double fallback) {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      fail(sec, key, *e, "not a number");
    }
  }

  long long integer(const std::string& sec, const std::string& key, long long fallback) {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      fail(sec, key, *e, "not an integer");
    }
  }

  std::uint64_t u64(const std::string& sec, const std::string& key,
                    std::uint64_t fallback) {
    const Entry* e = find(sec, key);
    if (!e) return fallback;
    try {
      std::size_t pos = 0;
      const std::uint64_t v = std::stoull(e->value, &pos);
      if (pos != e->value.size()) throw std::invalid_argument("trailing text");
      return v;
    } catch (const std::exception&) {
      fail(sec, key, *e, "not an unsigned integer");
    }
  }

  std::string text(const std::string& sec, const std::string& key,
                   const std::string& fallback) {
    const Entry* e = find(sec, key);
    return e ? e->value : fallback;
  }

  void reject_unknown() const {
    static const std::map<std::string, int> known = {
        {"beamline", 0}, {"source", 0}, {"counting", 0}, {"bell", 0}, {"output", 0}};
    for (const auto& [sec, entries] : sections_) {
      if (!known.count(sec)) {
        throw std::runtime_error(path_ + ": unknown section [" + sec + "]");
      }
      for (const auto& [key, e] : entries) {
        if (!e.used) {
          throw std::runtime_error(path_ + ":" + std::to_string(e.line) +
                                   ": unknown key '" + key + "' in [" + sec + "]");
        }
      }
    }
  }

 private:
  const Entry* find(const std::string& sec, const std::string& key) {
    auto s = sections_.find(sec);
    if (s == sections_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }

  [[noreturn]] void fail(const std::string& sec, const std::string& key,
                         const Entry& e, const std::string& why) {
    throw std::runtime_error(path_ + ":" + std::to_string(e.line) + ": [" + sec +
                             "] " + key + ": " + why);
  }

  Sections sections_;
  std::string path_;
};

void check_positive(double v, const std::string& what) {
  if (!(v > 0.0)) throw std::runtime_error(what + " must be positive");
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.source.mean_wavelength = c.geometry.wavelength;
  c.source.fractional_spread = 0.02;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  Reader r(parse_ini(path), path);
  RunConfig c;

  c.geometry.wavelength =
      r.number("beamline", "wavelength_angstrom", 1.99) * 1e-10;
  c.geometry.guide_field = r.number("beamline", "guide_field_mt", 1.1) * 1e-3;
  c.geometry.rf_omega =
      2.0 * kPi * r.number("beamline", "rf_frequency_khz", 32.0) * 1e3;
  c.geometry.coil_length = r.number("beamline", "coil_length_m", 0.02);
  c.geometry.flipper_separation =
      r.number("beamline", "flipper_separation_m", 0.18);
  c.geometry.analyzer_arm = r.number("beamline", "analyzer_arm_m", 0.12);
  c.geometry.stage_travel = r.number("beamline", "stage_travel_mm", 40.0) * 1e-3;
  c.geometry.flip_efficiency = r.number("beamline", "flip_efficiency", 1.0);

  c.source.mean_wavelength = c.geometry.wavelength;
  c.source.fractional_spread = r.number("source", "spread_fwhm", 0.02);
  c.source.sample_count = static_cast<int>(r.integer("source", "quadrature_points", 64));
  const long long mc = r.integer("source", "monte_carlo_samples", 0);
  if (mc > 0) {
    c.source.use_monte_carlo = true;
    c.source.sample_count = static_cast<int>(mc);
  }
  c.source.seed = r.u64("source", "seed", 711);
  const std::string shape = r.text("source", "shape", "gaussian");
  if (shape != "gaussian") {
    throw std::runtime_error(path + ": unsupported source shape '" + shape + "'");
  }

  c.model.peak_counts = r.number("counting", "peak_counts", 32000.0);
  c.model.contrast = r.number("counting", "contrast", 0.838);
  c.model.systematic_alpha_max =
      r.number("counting", "systematic_alpha_deg", 2.0) * kPi / 180.0;
  c.model.background = r.number("counting", "background", 0.0);
  c.detector_efficiency = r.number("counting", "detector_efficiency", 0.99);
  c.seed = r.u64("counting", "seed", 12345);

  c.angles.alpha1 = r.number("bell", "alpha1_rad", 0.0);
  c.angles.alpha2 = r.number("bell", "alpha2_rad", kPi / 2.0);
  c.angles.gamma1 = r.number("bell", "gamma1_rad", kPi / 4.0);
  c.angles.gamma2 = r.number("bell", "gamma2_rad", 3.0 * kPi / 4.0);
  c.repetitions = static_cast<int>(r.integer("bell", "repetitions", 3));
  const std::string src = r.text("bell", "source", "model");
  if (src == "model") {
    c.bell_source = counting::CountSource::model;
  } else if (src == "beamline") {
    c.bell_source = counting::CountSource::beamline;
  } else {
    throw std::runtime_error(path + ": [bell] source must be 'model' or 'beamline'");
  }

  c.out_dir = r.text("output", "dir", ".");

  r.reject_unknown();

  check_positive(c.geometry.wavelength, "wavelength");
  check_positive(c.geometry.guide_field, "guide field");
  check_positive(c.geometry.rf_omega, "rf frequency");
  check_positive(c.geometry.coil_length, "coil length");
  check_positive(c.geometry.flipper_separation, "flipper separation");
  check_positive(c.geometry.analyzer_arm, "analyzer arm");
  check_positive(c.geometry.stage_travel, "stage travel");
  if (c.repetitions < 1) throw std::runtime_error("repetitions must be >= 1");
  c.model.validate();
  c.source.validate();
  if (c.detector_efficiency < 0.0 || c.detector_efficiency > 1.0) {
    throw std::runtime_error("detector efficiency must lie in [0, 1]");
  }
  return c;
}

beamline::BeamlineConfig RunConfig::make_beamline(bool with_dc_pi) const {
  return beamline::make_standard_config(geometry, with_dc_pi);
}

counting::BellOptions RunConfig::bell_options(bool noise) const {
  counting::BellOptions o;
  o.repetitions = repetitions;
  o.noise = noise;
  o.source = bell_source;
  o.seed = seed;
  return o;
}

std::string RunConfig::digest() const {
  // FNV-1a over the physical settings; stable across runs for metadata.
  std::ostringstream ss;
  ss.precision(17);
  ss << geometry.wavelength << '|' << geometry.guide_field << '|'
     << geometry.rf_omega << '|' << geometry.coil_length << '|'
     << geometry.flipper_separation << '|' << geometry.analyzer_arm << '|'
     << geometry.flip_efficiency << '|' << source.fractional_spread << '|'
     << source.sample_count << '|' << model.peak_counts << '|' << model.contrast
     << '|' << model.background;
  const std::string s = ss.str();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

double parse_angle(const std::string& text) {
  std::string t = text;
  double factor = 1.0;
  if (t.size() > 3 && t.substr(t.size() - 3) == "deg") {
    factor = kPi / 180.0;
    t = t.substr(0, t.size() - 3);
  } else if (t.size() > 3 && t.substr(t.size() - 3) == "rad") {
    t = t.substr(0, t.size() - 3);
  }
  std::size_t pos = 0;
  const double v = std::stod(t, &pos);
  if (pos != t.size()) throw std::invalid_argument("malformed angle: " + text);
  return v * factor;
}

}  // namespace neupol::config
