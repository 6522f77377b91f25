// Command-line front end: analyze covariance matrices, run loss sweeps,
// emit region grids, and drive the simulate -> reconstruct pipeline.
//
// Exit codes: 0 physical state, 2 unphysical state, 1 usage/parse error.

#include "cvmark/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cvmark;

namespace {

struct CmOptions {
  std::string input_path;
  std::optional<double> n, m, c1, c2;
};

void add_cm_options(CLI::App* cmd, CmOptions& opt) {
  cmd->add_option("--input,-i", opt.input_path, "covariance matrix JSON file");
  cmd->add_option("-n", opt.n, "standard-form n (inline input)");
  cmd->add_option("-m", opt.m, "standard-form m (inline input)");
  cmd->add_option("--c1", opt.c1, "standard-form c1 (inline input)");
  cmd->add_option("--c2", opt.c2, "standard-form c2 (inline input)");
}

CmInput load_cm(const CmOptions& opt) {
  if (!opt.input_path.empty()) {
    std::ifstream in(opt.input_path);
    if (!in) throw std::invalid_argument("cannot open input file: " + opt.input_path);
    return parse_cm(in);
  }
  if (opt.n && opt.m && opt.c1 && opt.c2) {
    CmInput cm;
    cm.standard = make_standard_form(*opt.n, *opt.m, *opt.c1, *opt.c2);
    cm.sigma = cm.standard->embed();
    return cm;
  }
  throw std::invalid_argument("provide --input FILE or all of -n -m --c1 --c2");
}

std::string default_out(const std::string& name) {
  if (const char* dir = std::getenv("CVMARK_OUT_DIR"); dir && *dir)
    return (fs::path(dir) / name).string();
  return name;
}

struct GridSpec {
  double min = 0.01, max = 1.0;
  int count = 100;
  bool log = false;
};

GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  std::istringstream is(text);
  std::string tok;
  std::vector<std::string> parts;
  while (std::getline(is, tok, ',')) parts.push_back(tok);
  if (parts.size() != 4) throw std::invalid_argument("grid spec must be min,max,count,lin|log");
  g.min = std::stod(parts[0]);
  g.max = std::stod(parts[1]);
  g.count = std::stoi(parts[2]);
  if (parts[3] == "log") g.log = true;
  else if (parts[3] == "lin" || parts[3] == "linear") g.log = false;
  else throw std::invalid_argument("grid spacing must be 'lin' or 'log'");
  if (!(g.min > 0.0 && g.max <= 1.0 && g.min <= g.max))
    throw std::invalid_argument("grid must lie in (0, 1]");
  if (g.count < 2) throw std::invalid_argument("grid needs at least two points");
  return g;
}

std::vector<double> expand_grid(const GridSpec& g) {
  std::vector<double> t(g.count);
  for (int i = 0; i < g.count; ++i) {
    const double f = static_cast<double>(i) / (g.count - 1);
    t[i] = g.log ? std::exp(std::log(g.max) + f * (std::log(g.min) - std::log(g.max)))
                 : g.max + f * (g.min - g.max);
  }
  return t;  // descending, least decohered first
}

void print_human_report(const MarkerReport& r, bool bits) {
  const double scale = bits ? 1.0 / std::log(2.0) : 1.0;
  const char* unit = bits ? "bits" : "nats";
  std::printf("state        : %s\n", r.physical ? "physical" : "UNPHYSICAL");
  std::printf("purity mu    : %.6f\n", r.mu);
  std::printf("entropy S    : %.6f %s\n", r.entropy * scale, unit);
  std::printf("w_PHS        : %+.6f  entangled: %s\n", r.w_phs, r.entangled_phs ? "yes" : "no");
  std::printf("w_DUAN       : %+.6f  sufficient: %s\n", r.w_duan,
              r.duan_sufficient ? "yes" : "no");
  std::printf("w_EPR 1<-2   : %+.6f  %s\n", r.w_epr_1to2, r.epr_1to2 ? "steering" : "-");
  std::printf("w_EPR 2<-1   : %+.6f  %s\n", r.w_epr_2to1, r.epr_2to1 ? "steering" : "-");
  std::printf("fidelity F   : %.6f  quantum: %s\n", r.fidelity,
              r.fidelity_quantum ? "yes (F > 1/2)" : "no");
  std::printf("mutual info  : %.6f %s\n", r.mutual_info * scale, unit);
  std::printf("discord (2)  : %.6f %s\n", r.discord_meas2 * scale, unit);
  std::printf("discord (1)  : %.6f %s\n", r.discord_meas1 * scale, unit);
  std::printf("d+ / d-      : %.6f / %.6f\n", r.d_plus, r.d_minus);
  std::printf("I1 I2 I3 I4  : %.6f %.6f %+.6f %.6f\n", r.I1, r.I2, r.I3, r.I4);
}

int run_analyze(const CmOptions& cm_opt, bool as_json, bool as_csv, bool bits) {
  const CmInput cm = load_cm(cm_opt);
  const MarkerReport report = cm.standard ? classify(*cm.standard) : classify(cm.sigma);
  if (as_json) {
    std::cout << marker_report_to_json(report, bits).dump(2) << "\n";
  } else if (as_csv) {
    std::cout << marker_report_csv_header() << "\n"
              << marker_report_csv_line(report, bits) << "\n";
  } else {
    print_human_report(report, bits);
  }
  return report.physical ? 0 : 2;
}

int run_sweep(const CmOptions& cm_opt, const std::string& grid_text, std::string out_path,
              bool bits) {
  const CmInput cm = load_cm(cm_opt);
  const StandardForm sf = cm.standard ? *cm.standard : project_standard_form(cm.sigma).sf;
  const TrajectoryTable table = marker_trajectory(sf, expand_grid(parse_grid(grid_text)));
  if (out_path.empty()) out_path = default_out("sweep.csv");
  std::ofstream os(out_path);
  if (!os) throw std::invalid_argument("cannot open output file: " + out_path);
  write_trajectory_csv(os, table, bits);
  std::cout << "wrote " << table.size() << " rows to " << out_path << "\n";
  return 0;
}

int run_region(double n, int resolution, std::string out_path) {
  if (out_path.empty()) out_path = default_out("region.csv");
  std::ofstream os(out_path);
  if (!os) throw std::invalid_argument("cannot open output file: " + out_path);
  write_region_csv(os, n, resolution);
  std::cout << "wrote " << resolution << "x" << resolution << " region grid to " << out_path
            << "\n";
  return 0;
}

int run_simulate(const CmOptions& cm_opt, std::string out_dir, std::size_t samples,
                 std::uint64_t seed, double visibility, double noise_db,
                 std::optional<double> transmission) {
  const CmInput cm = load_cm(cm_opt);
  Mat4 sigma = cm.sigma;
  if (transmission) sigma = evolve(sigma, *transmission);
  if (!is_bona_fide(sigma).physical)
    throw std::domain_error("simulate: input state is not physical");
  if (out_dir.empty()) out_dir = default_out("traces");
  fs::create_directories(out_dir);

  SimConfig cfg;
  cfg.samples_per_trace = samples;
  cfg.visibility = visibility;
  cfg.electronic_noise_db_below_shot = noise_db;
  cfg.seed = seed;

  const auto write_one = [&](const HomodyneTrace& tr, const std::string& name) {
    std::ofstream os(fs::path(out_dir) / name);
    if (!os) throw std::invalid_argument("cannot write trace file in " + out_dir);
    write_trace_csv(os, tr);
  };
  write_one(simulate_shot_noise(cfg), "shot.csv");
  for (Mode mo : kAllModes) {
    cfg.seed++;
    write_one(simulate_trace(sigma, mo, cfg), std::string("mode_") + mode_name(mo) + ".csv");
  }
  std::cout << "wrote shot + 6 mode traces (" << samples << " samples each) to " << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cvmark: two-mode Gaussian state markers, loss channels and "
               "homodyne reconstruction (SQL = 1/2, nats)"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file");
  app.get_config_formatter_base()->comment('#');

  bool bits = false;
  app.add_flag("--bits", bits, "display entropy-like quantities in bits");

  // analyze ---------------------------------------------------------------
  auto* analyze = app.add_subcommand("analyze", "compute all markers of one state");
  CmOptions an_cm;
  add_cm_options(analyze, an_cm);
  bool an_json = false, an_csv = false;
  analyze->add_flag("--json", an_json, "emit flat JSON instead of the table");
  analyze->add_flag("--csv", an_csv, "emit CSV header + line instead of the table");

  // sweep -----------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "marker trajectory over a transmission grid");
  CmOptions sw_cm;
  add_cm_options(sweep, sw_cm);
  std::string sw_grid = "0.01,1.0,100,linear";
  std::string sw_out;
  std::uint64_t sw_seed = 0;
  sweep->add_option("--grid", sw_grid, "T grid: min,max,count,lin|log");
  sweep->add_option("--out,-o", sw_out, "output CSV path");
  sweep->add_option("--seed", sw_seed, "reserved, kept for reproducible scripts");

  // region ----------------------------------------------------------------
  auto* region = app.add_subcommand("region", "witness region grid for balanced states");
  double rg_n = 1.0;
  int rg_res = 201;
  std::string rg_out;
  region->add_option("-n", rg_n, "balanced diagonal value n = m")->required();
  region->add_option("--resolution", rg_res, "grid resolution per axis (>= 8)");
  region->add_option("--out,-o", rg_out, "output CSV path");

  // simulate ----------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "write shot + six mode homodyne traces");
  CmOptions si_cm;
  add_cm_options(simulate, si_cm);
  std::string si_out;
  std::size_t si_samples = 1000000;
  std::uint64_t si_seed = 1;
  double si_vis = 0.98, si_noise_db = 16.0;
  std::optional<double> si_T;
  simulate->add_option("--out,-o", si_out, "output directory");
  simulate->add_option("--samples", si_samples, "samples per trace");
  simulate->add_option("--seed", si_seed, "base RNG seed (traces use seed, seed+1, ...)");
  simulate->add_option("--visibility", si_vis, "interferometer visibility in (0, 1]");
  simulate->add_option("--noise-db", si_noise_db, "electronic noise floor, dB below shot");
  simulate->add_option("--transmission,-T", si_T, "apply channel loss before simulating");

  // reconstruct -------------------------------------------------------------
  auto* reco = app.add_subcommand("reconstruct", "covariance matrix + markers from traces");
  std::string rc_in, rc_out;
  int rc_bins = 32, rc_resamples = 200;
  std::uint64_t rc_seed = 1;
  bool rc_infer = false;
  std::optional<double> rc_subtract;
  reco->add_option("--input,-i", rc_in, "directory with shot.csv and mode_*.csv")->required();
  reco->add_option("--out,-o", rc_out, "output JSON path");
  reco->add_option("--bins", rc_bins, "phase bins for the variance fit");
  reco->add_option("--resamples", rc_resamples, "bootstrap resamples");
  reco->add_option("--seed", rc_seed, "bootstrap RNG seed");
  reco->add_flag("--infer-T", rc_infer, "also infer the channel transmission");
  reco->add_option("--subtract-noise", rc_subtract,
                   "subtract this electronic-noise variance (calibrated units)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) return run_analyze(an_cm, an_json, an_csv, bits);
    if (*sweep) return run_sweep(sw_cm, sw_grid, sw_out, bits);
    if (*region) return run_region(rg_n, rg_res, rg_out);
    if (*simulate)
      return run_simulate(si_cm, si_out, si_samples, si_seed, si_vis, si_noise_db, si_T);
    if (*reco) {
      if (rc_out.empty()) rc_out = default_out("reconstruction.json");
      const auto read_one = [&](const std::string& name) {
        const fs::path p = fs::path(rc_in) / name;
        std::ifstream is(p);
        if (!is) throw std::invalid_argument("missing mode trace: " + p.string());
        return read_trace_csv(is);
      };
      const HomodyneTrace shot = read_one("shot.csv");
      std::vector<HomodyneTrace> modes;
      std::set<std::uint64_t> seeds{shot.seed};
      for (Mode mo : kAllModes) {
        modes.push_back(read_one(std::string("mode_") + mode_name(mo) + ".csv"));
        if (!seeds.insert(modes.back().seed).second)
          std::cerr << "warning: trace seed collision (seed " << modes.back().seed
                    << " reused); samples are correlated\n";
      }
      ReconstructionConfig cfg;
      cfg.phase_bins = rc_bins;
      cfg.resamples = rc_resamples;
      cfg.seed = rc_seed;
      // File-driven traces can be shorter than the simulator default.
      cfg.min_bin_count = 8;
      if (rc_subtract) {
        cfg.subtract_electronic_noise = true;
        cfg.electronic_noise_variance = *rc_subtract;
      }
      const BootstrapSummary bs = bootstrap_markers(shot, modes, cfg, rc_infer);
      std::ofstream os(rc_out);
      if (!os) throw std::invalid_argument("cannot open output file: " + rc_out);
      os << bootstrap_to_json(bs, bits).dump(2) << "\n";
      std::printf("reconstructed CM written to %s\n", rc_out.c_str());
      std::printf("c1 = %.6f +- %.6f   c2 = %.6f +- %.6f\n", bs.point.cm.cm(0, 2),
                  bs.cm_sd(0, 2), bs.point.cm.cm(1, 3), bs.cm_sd(1, 3));
      std::printf("w_PHS = %.6f +- %.6f   F = %.6f +- %.6f\n", bs.point.markers.w_phs,
                  bs.marker_sd[2], bs.point.markers.fidelity, bs.marker_sd[6]);
      if (rc_infer) {
        if (std::isfinite(bs.transmission_point))
          std::printf("inferred T = %.6f +- %.6f (%d failed resamples)\n",
                      bs.transmission_point, bs.transmission_sd, bs.transmission_failures);
        else
          std::printf("transmission inference failed: no pure-source preimage\n");
      }
      return bs.point.cm.physical ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
