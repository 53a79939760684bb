// boxctrl: scenario files in, CSV tables and reports out.
//
//   boxctrl transfer  --config scenarios/dilate-translate.toml --out run/
//   boxctrl resonance --config scenarios/resonance-default.toml --out run/
//   boxctrl stability --config scenarios/stability-default.toml --out run/
//   boxctrl operators dump --kind momentum --dim 8 --out run/
//
// Exit codes, transfer: 0 reached epsilon, 1 bad config, 2 budget exhausted or
// no improvement, 3 unsupported motion, 4 anything else. resonance: 0 or 1.
// stability: 0, 1, or 2 when a bound check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "boxctrl/boxctrl.h"
#include "config.hpp"
#include "output.hpp"

namespace fs = std::filesystem;
using boxctrl::cli::Config;
using boxctrl::cli::ConfigError;
using boxctrl::cli::CsvTable;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitBudget = 2;
constexpr int kExitUnsupported = 3;
constexpr int kExitOther = 4;

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

class ApiError : public std::runtime_error {
 public:
  explicit ApiError(boxctrl_status s)
      : std::runtime_error(std::string(boxctrl_status_name(s)) + ": " + boxctrl_last_error()),
        status(s) {}
  boxctrl_status status;
};

void check(boxctrl_status s) {
  if (s != BOXCTRL_OK) throw ApiError(s);
}

int resolve_threads(const Common& c, const Config& cfg) {
  if (c.threads) return *c.threads;
  if (const char* env = std::getenv("BOXCTRL_THREADS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw ConfigError("BOXCTRL_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return static_cast<int>(cfg.integer("synthesis.threads", 1));
}

std::string hex_hash(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

int to_int(std::int64_t v, const char* key) {
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(std::string(key) + " is out of range");
  return static_cast<int>(v);
}

// ---- transfer ---------------------------------------------------------------

// "ground", "excited-k", a 1-based index, or a coefficient array (with an
// optional *_imag companion). Returned interleaved and normalised.
std::vector<double> read_state(const Config& cfg, const std::string& key, int dim) {
  const boxctrl::cli::Value* v = cfg.find(key);
  if (v == nullptr) throw ConfigError("missing key '" + key + "'");
  std::vector<double> re(dim, 0.0), im(dim, 0.0);
  auto set_index = [&](std::int64_t j) {
    if (j < 1 || j > dim) {
      throw ConfigError("'" + key + "' selects mode " + std::to_string(j) +
                        " outside 1.." + std::to_string(dim));
    }
    re[j - 1] = 1.0;
  };
  if (const auto* s = std::get_if<std::string>(v)) {
    if (*s == "ground") {
      set_index(1);
    } else if (s->rfind("excited-", 0) == 0) {
      const std::string k = s->substr(8);
      if (k.empty() || k.find_first_not_of("0123456789") != std::string::npos) {
        throw ConfigError("'" + key + "': malformed state name '" + *s + "'");
      }
      set_index(std::stoll(k) + 1);
    } else {
      throw ConfigError("'" + key + "': unknown state name '" + *s + "'");
    }
    if (cfg.has(key + "_imag")) throw ConfigError("'" + key + "_imag' needs a coefficient array");
  } else if (std::holds_alternative<boxctrl::cli::Number>(*v)) {
    set_index(cfg.integer(key, 1));
    if (cfg.has(key + "_imag")) throw ConfigError("'" + key + "_imag' needs a coefficient array");
  } else {
    const std::vector<double> c = cfg.numbers(key, {});
    const std::vector<double> ci = cfg.numbers(key + "_imag", {});
    if (c.empty() || static_cast<int>(c.size()) > dim || static_cast<int>(ci.size()) > dim) {
      throw ConfigError("'" + key + "' needs between 1 and dim coefficients");
    }
    std::copy(c.begin(), c.end(), re.begin());
    std::copy(ci.begin(), ci.end(), im.begin());
  }
  double norm2 = 0.0;
  for (int j = 0; j < dim; ++j) norm2 += re[j] * re[j] + im[j] * im[j];
  if (!(norm2 > 0.0)) throw ConfigError("'" + key + "' is the zero state");
  const double s = 1.0 / std::sqrt(norm2);
  std::vector<double> out(2 * dim);
  for (int j = 0; j < dim; ++j) {
    out[2 * j] = re[j] * s;
    out[2 * j + 1] = im[j] * s;
  }
  return out;
}

const std::set<std::string> kTransferKeys = {
    "geometry.ell0",        "geometry.d0",          "geometry.ell1",
    "geometry.d1",          "states.initial",       "states.initial_imag",
    "states.target",        "states.target_imag",   "transfer.epsilon",
    "transfer.rate_bound",  "transfer.dim",         "transfer.step_fraction",
    "synthesis.segments",   "synthesis.horizons",   "synthesis.n_min",
    "synthesis.n_max",      "synthesis.multistarts", "synthesis.max_iterations",
    "synthesis.seed",       "synthesis.threads",    "output.trajectory_samples"};

int cmd_transfer(const Common& c) {
  Config cfg;
  boxctrl_transfer_config tc;
  boxctrl_transfer_config_init(&tc);
  std::vector<double> initial, target, horizons;
  std::vector<int> segments;
  int samples = 0;
  try {
    cfg = Config::load(c.config);
    cfg.reject_unknown(kTransferKeys);
    for (const char* k : {"geometry.ell0", "geometry.d0", "geometry.ell1", "geometry.d1"}) {
      if (!cfg.has(k)) throw ConfigError(std::string("missing key '") + k + "'");
    }
    tc.dim = to_int(cfg.integer("transfer.dim", tc.dim), "transfer.dim");
    if (tc.dim < 1 || tc.dim > 512) throw ConfigError("transfer.dim must be in 1..512");
    tc.ell0 = cfg.number("geometry.ell0", 0.0);
    tc.d0 = cfg.number("geometry.d0", 0.0);
    tc.ell1 = cfg.number("geometry.ell1", 0.0);
    tc.d1 = cfg.number("geometry.d1", 0.0);
    initial = read_state(cfg, "states.initial", tc.dim);
    target = read_state(cfg, "states.target", tc.dim);
    tc.initial = initial.data();
    tc.target = target.data();
    tc.epsilon = cfg.number("transfer.epsilon", tc.epsilon);
    tc.rate_bound = cfg.number("transfer.rate_bound", tc.rate_bound);
    tc.step_fraction =
        to_int(cfg.integer("transfer.step_fraction", tc.step_fraction), "transfer.step_fraction");
    for (std::int64_t s : cfg.integers("synthesis.segments", {})) {
      segments.push_back(to_int(s, "synthesis.segments"));
    }
    horizons = cfg.numbers("synthesis.horizons", {});
    tc.segment_schedule = segments.empty() ? nullptr : segments.data();
    tc.segment_schedule_len = static_cast<int>(segments.size());
    tc.horizon_schedule = horizons.empty() ? nullptr : horizons.data();
    tc.horizon_schedule_len = static_cast<int>(horizons.size());
    tc.n_min = to_int(cfg.integer("synthesis.n_min", tc.n_min), "synthesis.n_min");
    tc.n_max = to_int(cfg.integer("synthesis.n_max", tc.n_max), "synthesis.n_max");
    tc.multistarts =
        to_int(cfg.integer("synthesis.multistarts", tc.multistarts), "synthesis.multistarts");
    tc.max_iterations = to_int(cfg.integer("synthesis.max_iterations", tc.max_iterations),
                               "synthesis.max_iterations");
    const std::int64_t seed = cfg.integer("synthesis.seed", static_cast<std::int64_t>(tc.seed));
    if (seed < 0) throw ConfigError("synthesis.seed must be >= 0");
    tc.seed = c.seed.value_or(static_cast<std::uint64_t>(seed));
    tc.threads = resolve_threads(c, cfg);
    samples = to_int(cfg.integer("output.trajectory_samples", 201), "output.trajectory_samples");
    if (samples < 2) throw ConfigError("output.trajectory_samples must be >= 2");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const fs::path out = prepare_out(c.out);
  ordered_json report;
  report["command"] = "transfer";
  report["config"] = c.config;
  report["config_hash"] = hex_hash(cfg.hash());
  report["version"] = boxctrl_version();
  report["seed"] = tc.seed;

  const auto t0 = std::chrono::steady_clock::now();
  boxctrl_transfer_result* result = nullptr;
  const boxctrl_status status = boxctrl_transfer_solve(&tc, &result);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report["status"] = boxctrl_status_name(status);
  report["seconds"] = seconds;

  if (status != BOXCTRL_OK) {
    const std::string msg = boxctrl_last_error();
    report["message"] = msg;
    boxctrl::cli::write_atomic(out / "report.json", report.dump(2) + "\n");
    std::cerr << boxctrl_status_name(status) << ": " << msg << "\n";
    switch (status) {
      case BOXCTRL_ERR_INVALID_ARGUMENT:
      case BOXCTRL_ERR_INFEASIBLE_RAMP:
        return kExitConfig;
      case BOXCTRL_ERR_BUDGET_EXCEEDED:
      case BOXCTRL_ERR_NO_IMPROVEMENT:
        return kExitBudget;
      case BOXCTRL_ERR_UNSUPPORTED_MOTION:
        return kExitUnsupported;
      default:
        return kExitOther;
    }
  }

  std::unique_ptr<boxctrl_transfer_result, decltype(&boxctrl_transfer_result_free)> guard(
      result, &boxctrl_transfer_result_free);
  boxctrl_transfer_summary s;
  check(boxctrl_transfer_result_summary(result, &s));
  std::vector<double> bp(s.control_segments + 1);
  check(boxctrl_transfer_result_breakpoints(result, bp.data()));

  const double T = s.duration;
  std::vector<double> grid(samples);
  for (int i = 0; i < samples; ++i) grid[i] = i + 1 == samples ? T : T * i / (samples - 1);

  std::vector<double> control_times = grid;
  control_times.insert(control_times.end(), bp.begin(), bp.end());
  std::sort(control_times.begin(), control_times.end());
  control_times.erase(std::unique(control_times.begin(), control_times.end()),
                      control_times.end());
  CsvTable control(cfg.hash(), {"t", "v", "f", "ell", "d"});
  for (double t : control_times) {
    double v = 0, f = 0, ell = 0, d = 0;
    check(boxctrl_transfer_result_sample(result, t, &v, &f, &ell, &d));
    control.row({t, v, f, ell, d});
  }
  control.write(out / "control.csv");

  std::vector<double> pops(static_cast<std::size_t>(samples) * tc.dim);
  check(boxctrl_transfer_result_trajectory(result, grid.data(), samples, pops.data()));
  std::vector<std::string> header{"t"};
  for (int j = 1; j <= tc.dim; ++j) header.push_back("p" + std::to_string(j));
  CsvTable traj(cfg.hash(), header);
  for (int i = 0; i < samples; ++i) {
    std::vector<double> row{grid[i]};
    row.insert(row.end(), pops.begin() + static_cast<std::ptrdiff_t>(i) * tc.dim,
               pops.begin() + static_cast<std::ptrdiff_t>(i + 1) * tc.dim);
    traj.row(row);
  }
  traj.write(out / "trajectory.csv");

  const bool reached = s.achieved_error < tc.epsilon;
  report["achieved_error"] = s.achieved_error;
  report["epsilon"] = tc.epsilon;
  report["fidelity"] = s.fidelity;
  report["auxiliary_fidelity"] = s.auxiliary_fidelity;
  report["lifting_error"] = s.lifting_error;
  report["motion"] = {{"lambda", s.lambda}, {"delta", s.delta}, {"ell0", tc.ell0},
                      {"d0", tc.d0},        {"rate_bound", tc.rate_bound}};
  report["final_box"] = {{"length", s.final_length}, {"center", s.final_center}};
  report["control"] = {{"duration", T},
                       {"horizon", s.horizon},
                       {"segments", s.segments},
                       {"n_refine", s.n_refine},
                       {"ramp_start", s.ramp_start},
                       {"coast_duration", s.coast_duration},
                       {"ramp_duration", s.ramp_duration},
                       {"step", s.step}};
  report["checks"] = {{"starts_at_zero", s.starts_at_zero != 0},
                      {"reaches_final_value", s.reaches_final_value != 0},
                      {"within_f_limit", s.within_f_limit != 0},
                      {"rate_bounded", s.rate_bounded != 0},
                      {"no_collision", s.no_collision != 0}};
  report["outputs"] = {(out / "control.csv").string(), (out / "trajectory.csv").string(),
                       (out / "report.json").string()};
  boxctrl::cli::write_atomic(out / "report.json", report.dump(2) + "\n");

  std::printf("achieved_error %.6g (epsilon %.6g), fidelity %.6g, T %.6g, n %d, %.2fs\n",
              s.achieved_error, tc.epsilon, s.fidelity, T, s.n_refine, seconds);
  return reached ? kExitOk : kExitOther;
}

// ---- resonance --------------------------------------------------------------

const std::set<std::string> kResonanceKeys = {
    "motion.lambda",      "motion.delta",       "resonance.max_index", "spectrum.dim",
    "spectrum.eta_max",   "spectrum.grid",      "spectrum.tracked",    "spectrum.tail_modes",
    "scan.enabled",       "scan.eta_max",       "scan.grid",           "scan.max_index",
    "scan.tol",           "scan.dim"};

int cmd_resonance(const Common& c) {
  Config cfg;
  boxctrl_motion motion;
  boxctrl_motion_init(&motion);
  boxctrl_spectrum_options so;
  boxctrl_spectrum_options_init(&so);
  int max_index = 0, dim = 0, grid = 0, scan_grid = 0, scan_max_index = 0, scan_dim = 0;
  double eta_max = 0, scan_eta_max = 0, scan_tol = 0;
  bool scan = true;
  try {
    cfg = Config::load(c.config);
    cfg.reject_unknown(kResonanceKeys);
    motion.lambda = cfg.number("motion.lambda", 1.0);
    motion.delta = cfg.number("motion.delta", 1.0);
    max_index = to_int(cfg.integer("resonance.max_index", 221), "resonance.max_index");
    dim = to_int(cfg.integer("spectrum.dim", 64), "spectrum.dim");
    eta_max = cfg.number("spectrum.eta_max", 0.5);
    grid = to_int(cfg.integer("spectrum.grid", 51), "spectrum.grid");
    so.tracked = to_int(cfg.integer("spectrum.tracked", 0), "spectrum.tracked");
    so.tail_modes = to_int(cfg.integer("spectrum.tail_modes", so.tail_modes), "spectrum.tail_modes");
    scan = cfg.boolean("scan.enabled", true);
    scan_eta_max = cfg.number("scan.eta_max", 0.1);
    scan_grid = to_int(cfg.integer("scan.grid", 10), "scan.grid");
    scan_max_index = to_int(cfg.integer("scan.max_index", 30), "scan.max_index");
    scan_tol = cfg.number("scan.tol", 1e-8);
    scan_dim = to_int(cfg.integer("scan.dim", 64), "scan.dim");
    if (max_index < 2) throw ConfigError("resonance.max_index must be >= 2");
    if (grid < 2 || !(eta_max > 0.0)) throw ConfigError("spectrum needs grid >= 2, eta_max > 0");
    if (dim < 2) throw ConfigError("spectrum.dim must be >= 2");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const fs::path out = prepare_out(c.out);
  ordered_json report;
  report["command"] = "resonance";
  report["config"] = c.config;
  report["config_hash"] = hex_hash(cfg.hash());
  report["version"] = boxctrl_version();
  report["motion"] = {{"lambda", motion.lambda}, {"delta", motion.delta}};

  try {
    // Integer search on the unperturbed spectrum.
    int count = 0;
    check(boxctrl_resonances_at_zero(max_index, max_index, nullptr, 0, &count));
    std::vector<boxctrl_quadruple> quads(count);
    check(boxctrl_resonances_at_zero(max_index, max_index, quads.data(), count, &count));
    std::string text = "# resonant quadruples s1 s2 t1 t2 with (s2^2 - s1^2) = (t2^2 - t1^2), "
                       "indices <= " + std::to_string(max_index) + "\n";
    bool has_example = false;
    for (const auto& q : quads) {
      text += std::to_string(q.s1) + " " + std::to_string(q.s2) + " " + std::to_string(q.t1) +
              " " + std::to_string(q.t2) + "\n";
      has_example |= q.s1 == 220 && q.s2 == 221 && q.t1 == 20 && q.t2 == 29;
    }
    boxctrl::cli::write_atomic(out / "resonances.txt", text);
    report["resonances"] = {{"max_index", max_index},
                            {"count", count},
                            {"contains_220_221_20_29", has_example}};

    // Tracked spectrum along eta.
    const int tracked = so.tracked > 0 ? so.tracked : dim / 2;
    std::vector<double> etas(grid);
    for (int i = 0; i < grid; ++i) etas[i] = i + 1 == grid ? eta_max : eta_max * i / (grid - 1);
    std::vector<double> spec(static_cast<std::size_t>(grid) * tracked);
    check(boxctrl_spectrum(&motion, etas.data(), grid, dim, &so, spec.data()));
    std::vector<std::string> header{"eta"};
    for (int j = 1; j <= tracked; ++j) header.push_back("E" + std::to_string(j));
    CsvTable table(cfg.hash(), header);
    for (int i = 0; i < grid; ++i) {
      std::vector<double> row{etas[i]};
      row.insert(row.end(), spec.begin() + static_cast<std::ptrdiff_t>(i) * tracked,
                 spec.begin() + static_cast<std::ptrdiff_t>(i + 1) * tracked);
      table.row(row);
    }
    table.write(out / "spectrum.csv");

    // Uniform-shift diagnostic: how far each level is from j^2 pi^2 - delta^2 eta^2 / 4,
    // and how much the consecutive gaps move along the grid.
    const int shown = std::min(tracked, 5);
    double shift_dev = 0.0, gap_var = 0.0;
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j < shown; ++j) {
        const double e = spec[static_cast<std::size_t>(i) * tracked + j];
        const double ref = (j + 1) * (j + 1) * M_PI * M_PI -
                           motion.delta * motion.delta * etas[i] * etas[i] / 4.0;
        shift_dev = std::max(shift_dev, std::abs(e - ref));
        if (j + 1 < shown) {
          const double g = spec[static_cast<std::size_t>(i) * tracked + j + 1] - e;
          const double g0 = spec[j + 1] - spec[j];
          gap_var = std::max(gap_var, std::abs(g - g0));
        }
      }
    }
    report["spectrum"] = {{"dim", dim}, {"tracked", tracked}, {"eta_max", eta_max},
                          {"grid", grid}, {"gap_variation_first5", gap_var}};
    if (motion.lambda == 0.0) report["spectrum"]["uniform_shift_deviation_first5"] = shift_dev;

    std::string verdict;
    if (scan) {
      double eta = 0.0;
      const boxctrl_status s = boxctrl_scan_nonresonant(&motion, scan_eta_max, scan_grid,
                                                        scan_dim, scan_max_index, scan_tol, &so,
                                                        &eta);
      ordered_json sj = {{"eta_max", scan_eta_max}, {"grid", scan_grid},
                         {"max_index", scan_max_index}, {"dim", scan_dim}, {"tol", scan_tol}};
      if (s == BOXCTRL_OK) {
        sj["status"] = "Certified";
        sj["eta"] = eta;
        boxctrl_certificate cert;
        check(boxctrl_certify_chain(&motion, eta, scan_dim, scan_max_index, scan_tol, &so, &cert,
                                    nullptr, 0));
        sj["connected"] = cert.connected != 0;
        sj["weak_links"] = cert.weak_link_count;
        sj["violations"] = cert.violation_count;
        char buf[96];
        std::snprintf(buf, sizeof buf, "Certified at eta = %.17g", eta);
        verdict = buf;
      } else if (s == BOXCTRL_ERR_NOT_FOUND) {
        sj["status"] = "NotFound";
        verdict = "NotFound";
        if (motion.lambda == 0.0) {
          char buf[200];
          std::snprintf(buf, sizeof buf,
                        "NotFound: with lambda = 0 the spectrum shifts uniformly by "
                        "-delta^2 eta^2 / 4 (max deviation %.3g, gap variation %.3g), "
                        "so resonances cannot be removed",
                        shift_dev, gap_var);
          verdict = buf;
        }
      } else {
        throw ApiError(s);
      }
      report["scan"] = sj;
    } else {
      verdict = "scan disabled";
    }
    report["certificate"] = verdict;
    boxctrl::cli::write_atomic(out / "report.json", report.dump(2) + "\n");
    std::printf("%d resonant quadruples up to %d%s\n%s\n", count, max_index,
                has_example ? " (includes 220 221 20 29)" : "", verdict.c_str());
  } catch (const ApiError& e) {
    std::cerr << e.what() << "\n";
    return e.status == BOXCTRL_ERR_INVALID_ARGUMENT ? kExitConfig : kExitOther;
  }
  return kExitOk;
}

// ---- stability --------------------------------------------------------------

const std::set<std::string> kStabilityKeys = {
    "motion.lambda",     "motion.delta",       "motion.ell0",      "motion.d0",
    "motion.rate_bound", "control.horizon",    "control.values",   "state.index",
    "state.coefficients", "state.coefficients_imag", "stability.dim", "stability.n_list",
    "stability.epsilon", "stability.step"};

int cmd_stability(const Common& c) {
  Config cfg;
  boxctrl_motion motion;
  boxctrl_motion_init(&motion);
  std::vector<double> values, bp, psi;
  std::vector<int> n_list;
  double eps = 0.5, step = 0.0;
  int dim = 16;
  try {
    cfg = Config::load(c.config);
    cfg.reject_unknown(kStabilityKeys);
    motion.lambda = cfg.number("motion.lambda", 1.0);
    motion.delta = cfg.number("motion.delta", 1.0);
    motion.ell0 = cfg.number("motion.ell0", 1.0);
    motion.d0 = cfg.number("motion.d0", 0.0);
    motion.rate_bound = cfg.number("motion.rate_bound", 1.0);
    const double T = cfg.number("control.horizon", 2.0);
    values = cfg.numbers("control.values", {});
    if (values.empty()) throw ConfigError("control.values must not be empty");
    if (!(T > 0.0)) throw ConfigError("control.horizon must be > 0");
    const int segs = static_cast<int>(values.size());
    for (int k = 0; k <= segs; ++k) bp.push_back(k == segs ? T : T * k / segs);
    dim = to_int(cfg.integer("stability.dim", 16), "stability.dim");
    if (dim < 1 || dim > 512) throw ConfigError("stability.dim must be in 1..512");
    if (cfg.has("state.index") && cfg.has("state.coefficients")) {
      throw ConfigError("give state.index or state.coefficients, not both");
    }
    if (cfg.has("state.coefficients")) {
      psi = read_state(cfg, "state.coefficients", dim);
    } else {
      psi.assign(2 * dim, 0.0);
      const std::int64_t j = cfg.integer("state.index", 1);
      if (j < 1 || j > dim) throw ConfigError("state.index outside 1..dim");
      psi[2 * (j - 1)] = 1.0;
    }
    for (std::int64_t n : cfg.integers("stability.n_list", {8, 16, 32, 64})) {
      n_list.push_back(to_int(n, "stability.n_list"));
    }
    if (n_list.empty()) throw ConfigError("stability.n_list must not be empty");
    eps = cfg.number("stability.epsilon", 0.5);
    step = cfg.number("stability.step", 0.0);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const fs::path out = prepare_out(c.out);
  const int segs = static_cast<int>(values.size());
  ordered_json report;
  report["command"] = "stability";
  report["config"] = c.config;
  report["config_hash"] = hex_hash(cfg.hash());
  report["version"] = boxctrl_version();

  bool violated = false;
  try {
    std::vector<double> errors(n_list.size());
    double slope = 0.0;
    check(boxctrl_lifting_convergence(&motion, bp.data(), values.data(), segs, psi.data(), dim,
                                      n_list.data(), static_cast<int>(n_list.size()), step,
                                      errors.data(), &slope));
    CsvTable conv(cfg.hash(), {"n", "error"});
    for (std::size_t i = 0; i < n_list.size(); ++i) conv.row({double(n_list[i]), errors[i]});
    conv.write(out / "convergence.csv");

    boxctrl_stability_constants k;
    check(boxctrl_stability_constants_for(&motion, bp.data(), values.data(), segs, n_list.data(),
                                          static_cast<int>(n_list.size()), eps, &k));
    ordered_json constants = {{"M", k.M},     {"mu", k.mu},       {"epsilon", k.epsilon},
                              {"b_eps", k.b_eps}, {"m", k.m},     {"K", k.K},
                              {"c", k.c},     {"L", k.L},         {"derivative_l1", k.derivative_l1}};
    boxctrl::cli::write_atomic(out / "constants.json", constants.dump(2) + "\n");

    // Each lift against the auxiliary system, then consecutive lifts.
    std::vector<std::pair<int, int>> pairs;
    for (int n : n_list) pairs.emplace_back(n, 0);
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i) pairs.emplace_back(n_list[i], n_list[i + 1]);
    CsvTable bounds(cfg.hash(), {"n", "m", "t_from", "t_to", "lhs", "rhs", "L", "holds"});
    std::size_t rows = 0, failures = 0;
    for (const auto& [n, m] : pairs) {
      int count = 0;
      check(boxctrl_stability_bound(&motion, bp.data(), values.data(), segs, n, m, psi.data(),
                                    dim, eps, nullptr, 0, &count));
      std::vector<boxctrl_segment_bound> b(count);
      check(boxctrl_stability_bound(&motion, bp.data(), values.data(), segs, n, m, psi.data(),
                                    dim, eps, b.data(), count, &count));
      for (const auto& s : b) {
        const bool holds = s.lhs <= s.rhs;
        failures += holds ? 0 : 1;
        ++rows;
        bounds.row({double(n), double(m), s.t_from, s.t_to, s.lhs, s.rhs, s.L, holds ? 1.0 : 0.0});
      }
    }
    bounds.write(out / "bounds.csv");
    violated = failures > 0;

    report["n_list"] = n_list;
    report["errors"] = errors;
    report["slope"] = std::isfinite(slope) ? ordered_json(slope) : ordered_json(nullptr);
    report["bound_rows"] = rows;
    report["bound_violations"] = failures;
    boxctrl::cli::write_atomic(out / "report.json", report.dump(2) + "\n");

    std::printf("errors:");
    for (double e : errors) std::printf(" %.6g", e);
    if (std::isfinite(slope)) {
      std::printf("\nfitted slope %.6g\n", slope);
    } else {
      std::printf("\nfitted slope undefined (errors at round-off level)\n");
    }
    std::printf("stability bound: %zu of %zu segment checks hold\n", rows - failures, rows);
  } catch (const ApiError& e) {
    std::cerr << e.what() << "\n";
    return e.status == BOXCTRL_ERR_INVALID_ARGUMENT ? kExitConfig : kExitOther;
  }
  return violated ? 2 : kExitOk;
}

// ---- operators dump ---------------------------------------------------------

int cmd_operators_dump(const Common& c, const std::string& kind, int dim, double lambda,
                       double delta) {
  boxctrl_operator op;
  if (kind == "laplacian") {
    op = BOXCTRL_OP_LAPLACIAN;
  } else if (kind == "momentum") {
    op = BOXCTRL_OP_MOMENTUM;
  } else if (kind == "dilation") {
    op = BOXCTRL_OP_DILATION;
  } else if (kind == "interaction") {
    op = BOXCTRL_OP_INTERACTION;
  } else {
    std::cerr << "unknown operator kind '" << kind << "'\n";
    return kExitConfig;
  }
  boxctrl_motion motion;
  boxctrl_motion_init(&motion);
  motion.lambda = lambda;
  motion.delta = delta;
  std::vector<double> m(2 * static_cast<std::size_t>(std::max(dim, 0)) * std::max(dim, 0));
  const boxctrl_status s = boxctrl_operator_matrix(op, &motion, dim, m.data());
  if (s != BOXCTRL_OK) {
    std::cerr << boxctrl_status_name(s) << ": " << boxctrl_last_error() << "\n";
    return s == BOXCTRL_ERR_INVALID_ARGUMENT ? kExitConfig : kExitOther;
  }
  const std::string args = kind + " " + std::to_string(dim) + " " +
                           boxctrl::cli::format_number(lambda) + " " +
                           boxctrl::cli::format_number(delta);
  CsvTable table(boxctrl::cli::fnv1a(args), {"row", "col", "re", "im"});
  for (int r = 0; r < dim; ++r) {
    for (int col = 0; col < dim; ++col) {
      const std::size_t i = 2 * (static_cast<std::size_t>(r) * dim + col);
      table.row({double(r + 1), double(col + 1), m[i], m[i + 1]});
    }
  }
  const fs::path out = prepare_out(c.out);
  table.write(out / ("operator_" + kind + ".csv"));
  std::printf("wrote %s\n", (out / ("operator_" + kind + ".csv")).string().c_str());
  return kExitOk;
}

void add_common(CLI::App* app, Common& c, bool needs_config) {
  auto* opt = app->add_option("--config", c.config, "scenario file")->check(CLI::ExistingFile);
  if (needs_config) opt->required();
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--seed", c.seed, "RNG seed (overrides the config)");
  app->add_option("--threads", c.threads, "worker threads (falls back to BOXCTRL_THREADS)")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum particle in a moving box: control synthesis and analysis"};
  app.set_version_flag("--version", std::string(boxctrl_version()));
  app.require_subcommand(1);

  Common common;
  auto* transfer = app.add_subcommand("transfer", "synthesise a wall motion for a state transfer");
  add_common(transfer, common, true);
  auto* resonance = app.add_subcommand("resonance", "resonance search and spectrum continuation");
  add_common(resonance, common, true);
  auto* stability = app.add_subcommand("stability", "lifting convergence and stability bounds");
  add_common(stability, common, true);

  auto* operators = app.add_subcommand("operators", "operator matrices");
  operators->require_subcommand(1);
  auto* dump = operators->add_subcommand("dump", "write an operator matrix as CSV");
  std::string kind = "momentum";
  int dim = 8;
  double lambda = 1.0, delta = 1.0;
  dump->add_option("--kind", kind, "laplacian, momentum, dilation or interaction")
      ->capture_default_str();
  dump->add_option("--dim", dim, "truncation N")->capture_default_str();
  dump->add_option("--lambda", lambda, "interaction lambda")->capture_default_str();
  dump->add_option("--delta", delta, "interaction delta")->capture_default_str();
  add_common(dump, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*transfer) return cmd_transfer(common);
    if (*resonance) return cmd_resonance(common);
    if (*stability) return cmd_stability(common);
    if (*dump) return cmd_operators_dump(common, kind, dim, lambda, delta);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
