#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "neupol/analysis.hpp"
#include "neupol/constants.hpp"
#include "neupol/report.hpp"

namespace fs = std::filesystem;
using namespace neupol;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "neupol_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NEUPOL_BIN) + " " + args + " > " +
                          (work_dir() / "stdout.log").string() + " 2> " +
                          (work_dir() / "stderr.log").string();
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

nlohmann::json load_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("bell runs are byte-deterministic per seed") {
  const fs::path a = work_dir() / "det_a";
  const fs::path b = work_dir() / "det_b";
  REQUIRE(run_cli("bell --seed 31415 --out " + a.string()) == 0);
  REQUIRE(run_cli("bell --seed 31415 --out " + b.string()) == 0);
  CHECK(slurp(a / "counts.csv") == slurp(b / "counts.csv"));
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));

  const fs::path c = work_dir() / "det_c";
  REQUIRE(run_cli("bell --seed 31416 --out " + c.string()) == 0);
  CHECK(slurp(a / "counts.csv") != slurp(c / "counts.csv"));

  const std::string csv = slurp(a / "counts.csv");
  CHECK(csv.rfind("alpha_rad,gamma_rad,repetition,counts\n", 0) == 0);
  // 3 repetitions x 16 settings
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 49);
}

TEST_CASE("analyze reproduces the bell report exactly") {
  const fs::path a = work_dir() / "round_a";
  REQUIRE(run_cli("bell --seed 90210 --out " + a.string()) == 0);
  const fs::path c = work_dir() / "round_c";
  REQUIRE(run_cli("analyze " + (a / "counts.csv").string() + " --out " + c.string()) ==
          0);
  const auto bell = load_json(a / "report.json");
  const auto ana = load_json(c / "analysis_report.json");
  CHECK(bell["S"].get<double>() == ana["S"].get<double>());
  CHECK(bell["sigma_S"].get<double>() == ana["sigma_S"].get<double>());
  for (int i = 0; i < 4; ++i) {
    CHECK(bell["E"][i].get<double>() == ana["E"][i].get<double>());
    CHECK(bell["sigma_E"][i].get<double>() == ana["sigma_E"][i].get<double>());
  }
}

TEST_CASE("expectation mode reports the contrast-scaled value") {
  const fs::path a = work_dir() / "nonoise";
  REQUIRE(run_cli("bell --no-noise --out " + a.string()) == 0);
  const auto rep = load_json(a / "report.json");
  const double s = rep["S"].get<double>();
  const double c = rep["contrast"].get<double>();
  CHECK(std::abs(s - c * 2.0 * std::sqrt(2.0)) < 1e-6);
  CHECK(std::abs(s - 2.371) < 0.005);
  CHECK(rep["thresholds"]["contrast_above_critical"].get<bool>());
  CHECK(rep["thresholds"]["efficiency_above_critical"].get<bool>());
}

TEST_CASE("low contrast produces no violation and exit code 2") {
  const fs::path ini = work_dir() / "low.ini";
  write_file(ini, "[counting]\ncontrast = 0.5\n");
  const fs::path out = work_dir() / "low_out";
  CHECK(run_cli("bell --config " + ini.string() + " --out " + out.string()) == 2);
  const auto rep = load_json(out / "report.json");
  CHECK(rep["S"].get<double>() < 2.0);
  CHECK_FALSE(rep["thresholds"]["contrast_above_critical"].get<bool>());
}

TEST_CASE("strict config parsing") {
  const fs::path bad = work_dir() / "bad.ini";
  write_file(bad, "[counting]\npeak_counts = 32000\nmystery_knob = 1\n");
  CHECK(run_cli("bell --config " + bad.string() + " --out " +
                (work_dir() / "bad_out").string()) == 1);

  const fs::path bad2 = work_dir() / "bad2.ini";
  write_file(bad2, "[telescope]\nzoom = 4\n");
  CHECK(run_cli("bell --config " + bad2.string() + " --out " +
                (work_dir() / "bad_out").string()) == 1);

  const fs::path dup = work_dir() / "dup.ini";
  write_file(dup, "[counting]\ncontrast = 0.8\ncontrast = 0.9\n");
  CHECK(run_cli("bell --config " + dup.string() + " --out " +
                (work_dir() / "bad_out").string()) == 1);

  const fs::path junk = work_dir() / "junk.ini";
  write_file(junk, "[counting]\ncontrast = high\n");
  CHECK(run_cli("bell --config " + junk.string() + " --out " +
                (work_dir() / "bad_out").string()) == 1);

  const fs::path good = work_dir() / "good.ini";
  write_file(good,
             "# full configuration\n"
             "[beamline]\n"
             "wavelength_angstrom = 1.99\n"
             "guide_field_mt = 1.1\n"
             "rf_frequency_khz = 32.0\n"
             "coil_length_m = 0.02\n"
             "flipper_separation_m = 0.18\n"
             "analyzer_arm_m = 0.12\n"
             "stage_travel_mm = 40\n"
             "flip_efficiency = 1.0\n"
             "[source]\n"
             "spread_fwhm = 0.02\n"
             "quadrature_points = 64\n"
             "monte_carlo_samples = 0\n"
             "seed = 711\n"
             "shape = gaussian\n"
             "[counting]\n"
             "peak_counts = 32000\n"
             "contrast = 0.838\n"
             "systematic_alpha_deg = 2.0\n"
             "background = 0\n"
             "detector_efficiency = 0.99\n"
             "seed = 12345\n"
             "[bell]\n"
             "alpha1_rad = 0\n"
             "alpha2_rad = 1.5707963267948966\n"
             "gamma1_rad = 0.7853981633974483\n"
             "gamma2_rad = 2.356194490192345\n"
             "repetitions = 3\n"
             "source = model\n"
             "[output]\n"
             "dir = .\n");
  CHECK(run_cli("bell --config " + good.string() + " --out " +
                (work_dir() / "good_out").string()) == 0);
}

TEST_CASE("external count tables can be analyzed") {
  // counts back-solved from four target expectation values with sigma 0.001
  const double e_target[4] = {0.594, 0.575, -0.571, 0.593};
  const double alphas[4] = {0.0, kPi / 2.0, 0.0, kPi / 2.0};
  const double gammas[4] = {kPi / 4.0, kPi / 4.0, 3.0 * kPi / 4.0, 3.0 * kPi / 4.0};
  std::vector<report::CountRow> rows;
  for (int q = 0; q < 4; ++q) {
    const double e = e_target[q];
    const double total = (1.0 - e * e) / 1e-6;
    const double ab = std::round(total * (1.0 + e) / 4.0);
    const double cd = std::round(total * (1.0 - e) / 4.0);
    rows.push_back({alphas[q], gammas[q], 0, ab});
    rows.push_back({alphas[q] + kPi, gammas[q] + kPi, 0, ab});
    rows.push_back({alphas[q], gammas[q] + kPi, 0, cd});
    rows.push_back({alphas[q] + kPi, gammas[q], 0, cd});
  }
  const fs::path csv = work_dir() / "table.csv";
  report::write_counts_csv(csv.string(), rows);

  const fs::path out = work_dir() / "table_out";
  REQUIRE(run_cli("analyze " + csv.string() + " --out " + out.string()) == 0);
  const auto rep = load_json(out / "analysis_report.json");
  CHECK(std::abs(rep["S"].get<double>() - 2.333) < 1e-3);
  CHECK(std::abs(rep["sigma_S"].get<double>() - 0.002) < 5e-5);
  CHECK(rep["significance"].get<double>() >= 166.0);

  // all-equal counts: every expectation vanishes
  std::vector<report::CountRow> flat = rows;
  for (auto& r : flat) r.counts = 1000.0;
  const fs::path flat_csv = work_dir() / "flat.csv";
  report::write_counts_csv(flat_csv.string(), flat);
  REQUIRE(run_cli("analyze " + flat_csv.string() + " --out " + out.string()) == 0);
  const auto flat_rep = load_json(out / "analysis_report.json");
  CHECK(flat_rep["S"].get<double>() == 0.0);
  for (int i = 0; i < 4; ++i) CHECK(flat_rep["E"][i].get<double>() == 0.0);

  // dropping one setting leaves an incomplete quad
  rows.pop_back();
  const fs::path broken = work_dir() / "broken.csv";
  report::write_counts_csv(broken.string(), rows);
  CHECK(run_cli("analyze " + broken.string() + " --out " + out.string()) == 1);
}

TEST_CASE("calibrate writes a usable config fragment") {
  CHECK(run_cli("calibrate --target 1.2 --out " + (work_dir() / "cal").string()) == 1);

  const fs::path out = work_dir() / "cal";
  REQUIRE(run_cli("calibrate --target 0.838 --out " + out.string()) == 0);
  const std::string frag = slurp(out / "calibrated.ini");
  CHECK(frag.rfind("[source]\n", 0) == 0);
  const auto eq = frag.find("spread_fwhm = ");
  REQUIRE(eq != std::string::npos);
  const double spread = std::stod(frag.substr(eq + 14));
  CHECK(spread > 0.015);
  CHECK(spread < 0.025);

  const fs::path full = work_dir() / "cal_full";
  REQUIRE(run_cli("calibrate --target 1.0 --out " + full.string()) == 0);
  const std::string frag_full = slurp(full / "calibrated.ini");
  const auto eq_full = frag_full.find("spread_fwhm = ");
  REQUIRE(eq_full != std::string::npos);
  CHECK(std::stod(frag_full.substr(eq_full + 14)) == 0.0);
}

TEST_CASE("scan outputs, determinism, and the quarter-period shift") {
  const fs::path a = work_dir() / "scan_a";
  REQUIRE(run_cli("scan --seed 5 --out " + a.string()) == 0);
  const fs::path b = work_dir() / "scan_b";
  REQUIRE(run_cli("scan --seed 5 --out " + b.string()) == 0);
  CHECK(slurp(a / "scan.csv") == slurp(b / "scan.csv"));
  CHECK(slurp(a / "scan.svg") == slurp(b / "scan.svg"));
  CHECK(slurp(a / "scan.svg").rfind("<svg", 0) == 0);
  CHECK(slurp(a / "scan.csv").rfind(
            "position_mm,gamma_rad,expected_counts,sampled_counts\n", 0) == 0);

  CHECK(run_cli("scan --points 0 --out " + (work_dir() / "scan_z").string()) == 1);

  // fit both quadrature scans: alpha = pi/2 shifts the fringe by a quarter
  const auto parse_scan = [](const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<double> xs, ys;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> cells;
      while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
      xs.push_back(cells[0]);
      ys.push_back(cells[3]);
    }
    return std::pair(xs, ys);
  };
  const fs::path q0 = work_dir() / "scan_q0";
  const fs::path q1 = work_dir() / "scan_q1";
  REQUIRE(run_cli("scan --alpha 0 --no-noise --out " + q0.string()) == 0);
  REQUIRE(run_cli("scan --alpha 90deg --no-noise --out " + q1.string()) == 0);
  const auto [x0, y0] = parse_scan(q0 / "scan.csv");
  const auto [x1, y1] = parse_scan(q1 / "scan.csv");
  const analysis::FitResult f0 = analysis::fit_sinusoid_samples(x0, y0);
  const analysis::FitResult f1 = analysis::fit_sinusoid_samples(x1, y1);
  const double delta =
      std::remainder(f1.phase_zero_mm - f0.phase_zero_mm - f0.period_mm / 4.0,
                     f0.period_mm);
  CHECK(std::abs(delta) < 0.1);
  CHECK(std::abs(f0.contrast - 0.838) < 0.01);
  CHECK(std::abs(f0.period_mm - 31.06) < 0.1);
}
