#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>

#include "neupol/config.hpp"
#include "neupol/report.hpp"
#include "neupol/svg.hpp"

namespace fs = std::filesystem;
using namespace neupol;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool no_noise = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "configuration file (INI)");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the count-sampling seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_flag("--no-noise", args.no_noise,
                "expected-counts mode: skip Poisson sampling");
}

config::RunConfig resolve(const CommonArgs& args) {
  config::RunConfig cfg = args.config_path.empty()
                              ? config::default_config()
                              : config::load_run_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::string out_path(const config::RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

int cmd_scan(const CommonArgs& common, const std::string& alpha_text,
             double range_mm, double start_mm, bool start_set, int points) {
  const config::RunConfig cfg = resolve(common);
  if (points < 8) {
    std::cerr << "scan: --points must be at least 8 (got " << points << ")\n";
    return 1;
  }
  const double alpha = config::parse_angle(alpha_text);
  const beamline::BeamlineConfig line = cfg.make_beamline();
  const double period = beamline::gamma_period_mm(line);
  const double span = range_mm > 0.0 ? range_mm : 1.5 * period;
  const double lo = start_set ? start_mm : -span / 6.0;
  if (span <= 0.0) {
    std::cerr << "scan: --range-mm must be positive\n";
    return 1;
  }

  std::vector<double> xs(points);
  for (int i = 0; i < points; ++i) {
    xs[i] = lo + span * static_cast<double>(i) / (points - 1);
  }
  const std::vector<double> intensity =
      ensemble::scan_intensity(line, cfg.source, alpha / 2.0, xs);

  Rng master(cfg.seed);
  std::vector<report::ScanRow> rows(points);
  std::vector<double> sampled(points);
  for (int i = 0; i < points; ++i) {
    const double mean = cfg.model.peak_counts * intensity[i] + cfg.model.background;
    double value = mean;
    if (!common.no_noise) {
      Rng rng = master.stream(0x7363616eull, i);
      value = static_cast<double>(counting::sample_counts(mean, rng));
    }
    sampled[i] = value;
    rows[i].position_mm = xs[i];
    rows[i].expected_counts = mean;
    rows[i].sampled_counts = value;
  }

  analysis::FitResult fit;
  if (common.no_noise) {
    fit = analysis::fit_sinusoid_samples(xs, sampled);
  } else {
    analysis::ScanData scan;
    scan.positions_mm = xs;
    scan.counts = sampled;
    scan.alpha_setting = alpha;
    scan.seed = cfg.seed;
    scan.config_digest = cfg.digest();
    fit = analysis::fit_sinusoid(scan);
  }
  for (int i = 0; i < points; ++i) {
    rows[i].gamma = analysis::mm_to_gamma(xs[i], fit);
  }
  report::write_scan_csv(out_path(cfg, "scan.csv"), rows);

  const std::vector<double> mark_gammas = {kPi / 4.0, 3.0 * kPi / 4.0,
                                           5.0 * kPi / 4.0, 7.0 * kPi / 4.0};
  const std::vector<std::string> mark_labels = {"γ=π/4", "γ=3π/4", "γ=5π/4",
                                                "γ=7π/4"};
  const std::vector<double> mark_pos =
      analysis::positions_for_bell_angles(fit, mark_gammas);
  std::vector<svg::Marker> markers;
  for (std::size_t i = 0; i < mark_pos.size(); ++i) {
    markers.push_back({mark_pos[i], mark_labels[i]});
  }
  char title[96];
  std::snprintf(title, sizeof title, "γ-scan at α = %.4f rad", alpha);
  svg::write_fringe_svg(out_path(cfg, "scan.svg"), xs, sampled, fit, markers, title);

  std::printf("scan: %d points over [%.3f, %.3f] mm\n", points, xs.front(), xs.back());
  std::printf("  contrast   %.4f +- %.4f\n", fit.contrast, fit.sigma_contrast);
  std::printf("  period     %.3f +- %.3f mm\n", fit.period_mm, fit.sigma_period);
  std::printf("  phase zero %.3f +- %.3f mm\n", fit.phase_zero_mm, fit.sigma_phase_zero);
  std::printf("  wrote %s and %s\n", out_path(cfg, "scan.csv").c_str(),
              out_path(cfg, "scan.svg").c_str());
  return 0;
}

int cmd_bell(const CommonArgs& common) {
  const config::RunConfig cfg = resolve(common);
  const beamline::BeamlineConfig line = cfg.make_beamline();
  counting::RateModel model = cfg.model;
  if (common.no_noise) model.systematic_alpha_max = 0.0;  // pure expectation mode
  const counting::BellRun run = counting::run_bell_experiment(
      line, cfg.source, model, cfg.angles, cfg.bell_options(!common.no_noise));
  const counting::ThresholdsReport thresholds =
      counting::thresholds_report(run.contrast, cfg.detector_efficiency);

  report::write_counts_csv(out_path(cfg, "counts.csv"), report::bell_rows(run));
  {
    std::ofstream out(out_path(cfg, "report.json"), std::ios::binary);
    out << report::bell_report_json(run, thresholds, cfg.seed);
  }

  static const char* labels[4] = {"E(a1,g1)", "E(a2,g1)", "E(a1,g2)", "E(a2,g2)"};
  for (int q = 0; q < 4; ++q) {
    std::printf("  %s = %+.4f +- %.4f\n", labels[q], run.expectation[q],
                run.sigma_expectation[q]);
  }
  std::printf("  S = %.4f +- %.4f  (ideal %.4f, contrast-scaled %.4f)\n",
              run.s_value, run.sigma_s, qstate::kTsirelsonBound,
              run.contrast * qstate::kTsirelsonBound);
  if (!thresholds.contrast_above) {
    std::printf("  warning: contrast %.3f is below the critical value %.4f\n",
                thresholds.contrast, thresholds.contrast_critical);
  }
  const bool violated = run.sigma_s > 0.0 ? (run.s_value - 2.0) > 3.0 * run.sigma_s
                                          : run.s_value > 2.0;
  if (violated) {
    std::printf("  violation demonstrated: significance %.1f\n", run.significance);
  } else {
    std::printf("  no violation at 3 sigma\n");
  }
  std::printf("  wrote %s and %s\n", out_path(cfg, "counts.csv").c_str(),
              out_path(cfg, "report.json").c_str());
  return violated ? 0 : 2;
}

int cmd_calibrate(const CommonArgs& common, double target) {
  const config::RunConfig cfg = resolve(common);
  if (!(target > 0.0 && target <= 1.0)) {
    std::cerr << "calibrate: --target must lie in (0, 1]\n";
    return 1;
  }
  const beamline::BeamlineConfig line = cfg.make_beamline();
  const double spread =
      ensemble::calibrate_spread_to_contrast(line, cfg.source, target);
  ensemble::VelocityDistribution check = cfg.source;
  check.fractional_spread = spread;
  const double achieved = spread == 0.0 ? 1.0 : ensemble::effective_contrast(line, check);

  const std::string frag = out_path(cfg, "calibrated.ini");
  {
    std::ofstream out(frag, std::ios::binary);
    out << "[source]\n";
    out << "spread_fwhm = " << report::format_double(spread) << "\n";
  }
  std::printf("calibrate: target contrast %.4f\n", target);
  std::printf("  spread_fwhm = %.6f (velocity FWHM / mean)\n", spread);
  std::printf("  achieved contrast %.4f\n", achieved);
  std::printf("  wrote %s\n", frag.c_str());
  return 0;
}

int cmd_analyze(const CommonArgs& common, const std::string& csv_path) {
  const config::RunConfig cfg = resolve(common);
  const counting::BellRun run = report::analyze_counts(report::read_counts_csv(csv_path));

  nlohmann::ordered_json j;
  j["input"] = csv_path;
  j["E"] = {run.expectation[0], run.expectation[1], run.expectation[2],
            run.expectation[3]};
  j["sigma_E"] = {run.sigma_expectation[0], run.sigma_expectation[1],
                  run.sigma_expectation[2], run.sigma_expectation[3]};
  j["E_order"] = {"(alpha1,gamma1)", "(alpha2,gamma1)", "(alpha1,gamma2)",
                  "(alpha2,gamma2)"};
  j["angles"] = {{"alpha1", run.angles.alpha1},
                 {"alpha2", run.angles.alpha2},
                 {"gamma1", run.angles.gamma1},
                 {"gamma2", run.angles.gamma2}};
  j["S"] = run.s_value;
  j["sigma_S"] = run.sigma_s;
  j["significance"] = run.significance;
  {
    std::ofstream out(out_path(cfg, "analysis_report.json"), std::ios::binary);
    out << j.dump(2) << "\n";
  }
  std::printf("analyze: %s\n", csv_path.c_str());
  for (int q = 0; q < 4; ++q) {
    std::printf("  E[%d] = %+.4f +- %.4f\n", q, run.expectation[q],
                run.sigma_expectation[q]);
  }
  std::printf("  S = %.4f +- %.4f (significance %.1f)\n", run.s_value, run.sigma_s,
              run.significance);
  std::printf("  wrote %s\n", out_path(cfg, "analysis_report.json").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-energy entanglement polarimetry: beamline simulator and "
               "CHSH statistics"};
  app.require_subcommand(1);

  CommonArgs scan_args, bell_args, cal_args, ana_args;
  std::string alpha_text = "0";
  double range_mm = 0.0, start_mm = 0.0, target = 0.838;
  bool start_set = false;
  int points = 24;
  std::string csv_path;

  CLI::App* scan = app.add_subcommand("scan", "gamma-scan: fringe CSV, fit, SVG");
  add_common(scan, scan_args);
  scan->add_option("--alpha", alpha_text, "spin phase (radians, or e.g. 45deg)");
  scan->add_option("--range-mm", range_mm, "scan span in mm (default 1.5 periods)");
  scan->add_option("--start-mm", start_mm, "scan start in mm")
      ->each([&](const std::string&) { start_set = true; });
  scan->add_option("--points", points, "number of scan points");

  CLI::App* bell = app.add_subcommand("bell", "run the correlation measurement");
  add_common(bell, bell_args);

  CLI::App* cal = app.add_subcommand("calibrate",
                                     "find the velocity spread for a target contrast");
  add_common(cal, cal_args);
  cal->add_option("--target", target, "target contrast in (0, 1]")->required();

  CLI::App* ana = app.add_subcommand("analyze", "compute E and S from a counts CSV");
  add_common(ana, ana_args);
  ana->add_option("csv", csv_path, "counts CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (scan->parsed()) {
      return cmd_scan(scan_args, alpha_text, range_mm, start_mm, start_set, points);
    }
    if (bell->parsed()) return cmd_bell(bell_args);
    if (cal->parsed()) return cmd_calibrate(cal_args, target);
    if (ana->parsed()) return cmd_analyze(ana_args, csv_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
