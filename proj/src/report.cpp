#include "neupol/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace neupol::report {

namespace {

double wrap_two_pi(double a) {
  const double tau = 2.0 * kPi;
  double w = std::fmod(a, tau);
  if (w < 0.0) w += tau;
  if (std::abs(w - tau) < 1e-12) w = 0.0;
  return w;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_cell(const std::string& cell, const std::string& path, int lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument("trailing text");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) +
                             ": malformed number '" + cell + "'");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_counts_csv(const std::string& path, const std::vector<CountRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "alpha_rad,gamma_rad,repetition,counts\n";
  for (const auto& r : rows) {
    out << format_double(r.alpha) << ',' << format_double(r.gamma) << ','
        << r.repetition << ',' << format_double(r.counts) << '\n';
  }
}

std::vector<CountRow> read_counts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool has_rep;
  if (line == "alpha_rad,gamma_rad,repetition,counts") {
    has_rep = true;
  } else if (line == "alpha_rad,gamma_rad,counts") {
    has_rep = false;
  } else {
    throw std::runtime_error(path + ": unexpected header '" + line + "'");
  }
  std::vector<CountRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != (has_rep ? 4u : 3u)) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": wrong column count");
    }
    CountRow r;
    r.alpha = parse_cell(cells[0], path, lineno);
    r.gamma = parse_cell(cells[1], path, lineno);
    r.repetition =
        has_rep ? static_cast<int>(parse_cell(cells[2], path, lineno)) : 0;
    r.counts = parse_cell(cells[has_rep ? 3 : 2], path, lineno);
    if (r.counts < 0.0) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": negative counts");
    }
    rows.push_back(r);
  }
  if (rows.empty()) throw std::runtime_error(path + ": no data rows");
  return rows;
}

void write_scan_csv(const std::string& path, const std::vector<ScanRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "position_mm,gamma_rad,expected_counts,sampled_counts\n";
  for (const auto& r : rows) {
    out << format_double(r.position_mm) << ',' << format_double(r.gamma) << ','
        << format_double(r.expected_counts) << ',' << format_double(r.sampled_counts)
        << '\n';
  }
}

std::vector<CountRow> bell_rows(const counting::BellRun& run) {
  const double alphas[4] = {run.quads[0].alpha, run.quads[1].alpha,
                            run.quads[2].alpha, run.quads[3].alpha};
  const double gammas[4] = {run.quads[0].gamma, run.quads[1].gamma,
                            run.quads[2].gamma, run.quads[3].gamma};
  std::vector<CountRow> rows;
  rows.reserve(run.per_rep_counts.size());
  for (int rep = 0; rep < run.repetitions; ++rep) {
    for (int q = 0; q < 4; ++q) {
      for (int k = 0; k < 4; ++k) {
        const bool alpha_perp = (k == 1 || k == 3);
        const bool gamma_perp = (k == 1 || k == 2);
        CountRow r;
        r.alpha = wrap_two_pi(alphas[q] + (alpha_perp ? kPi : 0.0));
        r.gamma = wrap_two_pi(gammas[q] + (gamma_perp ? kPi : 0.0));
        r.repetition = rep;
        r.counts = run.per_rep_counts[(static_cast<std::size_t>(rep) * 4 + q) * 4 + k];
        rows.push_back(r);
      }
    }
  }
  return rows;
}

counting::BellRun analyze_counts(const std::vector<CountRow>& rows) {
  // Aggregate repetitions per (alpha, gamma) setting.
  const auto key_of = [](double a) {
    return static_cast<long long>(std::llround(wrap_two_pi(a) * 1e9));
  };
  std::map<std::pair<long long, long long>, double> totals;
  for (const auto& r : rows) {
    totals[{key_of(r.alpha), key_of(r.gamma)}] += r.counts;
  }
  if (totals.size() != 16) {
    throw std::runtime_error("count data must contain exactly 16 distinct settings (" +
                             std::to_string(totals.size()) + " found)");
  }

  // Base directions: the distinct values folded mod pi.
  const auto fold = [](long long key) {
    const long long pi_key = static_cast<long long>(std::llround(kPi * 1e9));
    long long k = key % pi_key;
    if (k < 0) k += pi_key;
    return k;
  };
  std::map<long long, int> alpha_base, gamma_base;
  for (const auto& [k, v] : totals) {
    (void)v;
    alpha_base[fold(k.first)] = 0;
    gamma_base[fold(k.second)] = 0;
  }
  // Merge folded keys that differ only by rounding of pi.
  const auto merge_close = [](std::map<long long, int>& m) {
    std::vector<long long> keys;
    for (const auto& [k, v] : m) {
      (void)v;
      if (keys.empty() || k - keys.back() > 4) keys.push_back(k);
    }
    m.clear();
    int idx = 0;
    for (long long k : keys) m[k] = idx++;
  };
  merge_close(alpha_base);
  merge_close(gamma_base);
  if (alpha_base.size() != 2 || gamma_base.size() != 2) {
    throw std::runtime_error("settings do not form two alpha and two gamma directions");
  }

  const auto base_index = [](const std::map<long long, int>& m, long long folded) {
    for (const auto& [k, idx] : m) {
      if (std::llabs(k - folded) <= 4) return idx;
    }
    throw std::runtime_error("setting does not match any base direction");
  };

  counting::BellRun run;
  run.repetitions = 1;
  bool role_seen[4][4] = {};
  const long long pi_key = static_cast<long long>(std::llround(kPi * 1e9));
  for (const auto& [key, total] : totals) {
    const int i = base_index(alpha_base, fold(key.first));
    const int j = base_index(gamma_base, fold(key.second));
    const bool alpha_perp = key.first >= pi_key - 4;
    const bool gamma_perp = key.second >= pi_key - 4;
    const int q = 2 * j + i;  // (a1,g1) (a2,g1) (a1,g2) (a2,g2)
    const int role = alpha_perp ? (gamma_perp ? 1 : 3) : (gamma_perp ? 2 : 0);
    if (role_seen[q][role]) throw std::runtime_error("duplicate setting in a quad");
    role_seen[q][role] = true;
    run.quads[q].counts[role] = total;
    if (!alpha_perp) run.quads[q].alpha = key.first * 1e-9;
    if (!gamma_perp) run.quads[q].gamma = key.second * 1e-9;
  }
  for (int q = 0; q < 4; ++q) {
    for (int role = 0; role < 4; ++role) {
      if (!role_seen[q][role]) {
        throw std::runtime_error("incomplete quad: missing one of the 16 settings");
      }
    }
    const counting::Expectation e = counting::expectation_from_counts(run.quads[q]);
    run.expectation[q] = e.value;
    run.sigma_expectation[q] = e.sigma;
  }
  run.angles.alpha1 = run.quads[0].alpha;
  run.angles.alpha2 = run.quads[1].alpha;
  run.angles.gamma1 = run.quads[0].gamma;
  run.angles.gamma2 = run.quads[2].gamma;
  run.s_value = qstate::chsh_value(run.expectation[0], run.expectation[1],
                                   run.expectation[2], run.expectation[3]);
  double var = 0.0;
  for (double s : run.sigma_expectation) var += s * s;
  run.sigma_s = std::sqrt(var);
  run.significance = run.sigma_s > 0.0 ? (run.s_value - 2.0) / run.sigma_s : 0.0;
  return run;
}

std::string bell_report_json(const counting::BellRun& run,
                             const counting::ThresholdsReport& thresholds,
                             std::uint64_t seed) {
  nlohmann::ordered_json j;
  j["angles"] = {{"alpha1", run.angles.alpha1},
                 {"alpha2", run.angles.alpha2},
                 {"gamma1", run.angles.gamma1},
                 {"gamma2", run.angles.gamma2}};
  j["repetitions"] = run.repetitions;
  j["seed"] = seed;
  j["E"] = {run.expectation[0], run.expectation[1], run.expectation[2],
            run.expectation[3]};
  j["sigma_E"] = {run.sigma_expectation[0], run.sigma_expectation[1],
                  run.sigma_expectation[2], run.sigma_expectation[3]};
  j["E_order"] = {"(alpha1,gamma1)", "(alpha2,gamma1)", "(alpha1,gamma2)",
                  "(alpha2,gamma2)"};
  j["S"] = run.s_value;
  j["sigma_S"] = run.sigma_s;
  j["significance"] = run.significance;
  j["contrast"] = run.contrast;
  j["references"] = {{"ideal_S", qstate::kTsirelsonBound},
                     {"contrast_scaled_S", run.contrast * qstate::kTsirelsonBound},
                     {"classical_bound", 2.0}};
  j["thresholds"] = {{"contrast", thresholds.contrast},
                     {"contrast_critical", thresholds.contrast_critical},
                     {"contrast_margin", thresholds.contrast_margin},
                     {"contrast_above_critical", thresholds.contrast_above},
                     {"detector_efficiency", thresholds.efficiency},
                     {"efficiency_critical", thresholds.efficiency_critical},
                     {"efficiency_margin", thresholds.efficiency_margin},
                     {"efficiency_above_critical", thresholds.efficiency_above}};
  return j.dump(2) + "\n";
}

}  // namespace neupol::report
