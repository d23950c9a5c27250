#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rodspec/asymptotics.hpp"
#include "rodspec/cell_problem.hpp"
#include "rodspec/config.hpp"
#include "rodspec/direct.hpp"
#include "rodspec/effective.hpp"
#include "rodspec/svg.hpp"

namespace fs = std::filesystem;
using namespace rodspec;

namespace {

constexpr const char* kVersion = "rodspec 0.1.0";

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  int threads = 1;
  bool svg = false;
};

cli::Config load_config(const CommonArgs& args) {
  cli::Config cfg = cli::parse_config_file(args.config_path);
  if (!args.out_override.empty()) cfg.output_dir = args.out_override;
  if (args.svg) cfg.svg = true;
  if (const char* env_seed = std::getenv("RODSPEC_SEED")) {
    try {
      cfg.seed = std::stoull(env_seed);
    } catch (...) {
      throw ConfigError("RODSPEC_SEED must be an unsigned integer");
    }
  }
  return cfg;
}

// All file outputs go through a temp-file + rename so partial writes never
// appear under the final name.
void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

void write_manifest(const cli::Config& cfg, const std::string& command) {
  std::ostringstream os;
  os << kVersion << "\n";
  os << "command: " << command << "\n";
  os << "seed: " << cfg.seed << "\n";
  os << "config:\n" << cfg.raw_text;
  write_atomic(fs::path(cfg.output_dir) / "manifest.txt", os.str());
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

asym::SweepConfig sweep_config_from(const cli::Config& cfg, int threads) {
  asym::SweepConfig sc;
  sc.geometry = cfg.geometry;
  sc.coefficients = cfg.coefficients;
  sc.n_cells_ladder = cfg.n_cells_ladder;
  sc.beta = cfg.beta;
  sc.j_max = cfg.j_max;
  sc.h = cfg.h;
  sc.h_y = cfg.h_y;
  sc.tol = cfg.tol;
  sc.seed = cfg.seed;
  sc.threads = threads;
  sc.flatness_override = cfg.flatness_override;
  if (cfg.grid_n > 0) sc.sl_grid_n = cfg.grid_n;
  return sc;
}

geom::HypothesisReport validate_for_mode(const cli::Config& cfg) {
  geom::ValidateOptions vo;
  vo.require_positive_c = cfg.beta != 0;
  vo.require_cbar_minimum = cfg.beta == 1;
  return geom::validate_hypotheses(*cfg.geometry, cfg.coefficients, vo);
}

int require_hypotheses(const cli::Config& cfg) {
  geom::HypothesisReport report = validate_for_mode(cfg);
  if (!report.all_passed()) {
    std::cerr << "hypothesis violation:\n" << report.to_string();
    return 2;
  }
  return 0;
}

int cmd_validate(const CommonArgs& args) {
  cli::Config cfg = load_config(args);
  geom::HypothesisReport report = validate_for_mode(cfg);
  std::cout << report.to_string();
  write_manifest(cfg, "validate");
  write_atomic(fs::path(cfg.output_dir) / "validate.txt", report.to_string());
  return report.all_passed() ? 0 : 2;
}

int cmd_cell(const CommonArgs& args) {
  cli::Config cfg = load_config(args);
  if (int rc = require_hypotheses(cfg)) return rc;
  write_manifest(cfg, "cell");

  bool x1_dependent = (cfg.geometry->hole_present && cfg.geometry->level_set->references_x1()) ||
                      cfg.coefficients.a11->references_x1() ||
                      cfg.coefficients.a12->references_x1() ||
                      cfg.coefficients.a22->references_x1();
  int slices = x1_dependent ? cfg.cell_slices : 1;

  std::ostringstream csv;
  csv << "x1,a_eff,A11,A12,A21,A22,form_discrepancy,cell_area,cbar\n";
  for (int s = 0; s < slices; ++s) {
    double x1 = slices == 1 ? 0.0 : -0.5 + (s + 0.5) / slices;
    cell::CellSolution sol = cell::solve_cell(cfg.geometry, cfg.coefficients, x1, cfg.h);
    double cbar_x1 = geom::cbar(*cfg.geometry, cfg.coefficients, x1, 512);
    csv << num(x1) << "," << num(sol.effective.a_eff) << "," << num(sol.effective.A[0][0])
        << "," << num(sol.effective.A[0][1]) << "," << num(sol.effective.A[1][0]) << ","
        << num(sol.effective.A[1][1]) << "," << num(sol.effective.form_discrepancy) << ","
        << num(sol.effective.cell_area) << "," << num(cbar_x1) << "\n";

    std::ostringstream mesh_dump;
    mesh::dump_mesh(sol.cell_mesh, mesh_dump);
    write_atomic(fs::path(cfg.output_dir) / ("cell_mesh_" + std::to_string(s) + ".txt"),
                 mesh_dump.str());
    for (const cell::CorrectorField* field : {&sol.n1, &sol.n2}) {
      std::ostringstream fd;
      fd << "values " << field->vertex_values.size() << "\n";
      for (double v : field->vertex_values) fd << num(v) << "\n";
      write_atomic(fs::path(cfg.output_dir) / ("corrector_n" + std::to_string(field->axis) +
                                               "_" + std::to_string(s) + ".txt"),
                   fd.str());
    }
  }
  write_atomic(fs::path(cfg.output_dir) / "cell.csv", csv.str());
  std::cout << "cell.csv written to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_effective(const CommonArgs& args) {
  cli::Config cfg = load_config(args);
  if (int rc = require_hypotheses(cfg)) return rc;
  write_manifest(cfg, "effective");

  asym::EffectiveSummary side = asym::effective_pairs_for(sweep_config_from(cfg, 1));

  std::ostringstream nu_csv;
  nu_csv << "j,nu\n";
  for (std::size_t j = 0; j < side.pairs.size(); ++j)
    nu_csv << (j + 1) << "," << num(side.pairs[j].nu) << "\n";
  write_atomic(fs::path(cfg.output_dir) / "nu_table.csv", nu_csv.str());

  std::ostringstream v_csv;
  v_csv << "z";
  for (std::size_t j = 0; j < side.pairs.size(); ++j) v_csv << ",v" << (j + 1);
  v_csv << "\n";
  const auto& grid = side.pairs.front().grid_z;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    v_csv << num(grid[i]);
    for (const auto& p : side.pairs)
      v_csv << "," << num(i < p.values.size() && p.grid_z.size() == grid.size()
                              ? p.values[i]
                              : p.value_at(grid[i]));
    v_csv << "\n";
  }
  write_atomic(fs::path(cfg.output_dir) / "v_curves.csv", v_csv.str());

  if (cfg.svg) {
    std::vector<svg::Series> series;
    for (std::size_t j = 0; j < side.pairs.size(); ++j)
      series.push_back({"v" + std::to_string(j + 1), side.pairs[j].grid_z,
                        side.pairs[j].values});
    std::ostringstream os;
    svg::write_line_plot(os, "effective eigenfunctions", "z", "v_j(z)", series, false, false);
    write_atomic(fs::path(cfg.output_dir) / "v_curves.svg", os.str());
  }

  std::cout << "a_eff = " << side.a_eff << ", floor = " << side.floor_value << "\n";
  for (std::size_t j = 0; j < side.pairs.size(); ++j)
    std::cout << "nu_" << (j + 1) << " = " << side.pairs[j].nu << "\n";
  return 0;
}

int cmd_direct(const CommonArgs& args) {
  cli::Config cfg = load_config(args);
  if (cfg.n_cells_ladder.empty())
    throw ConfigError("direct needs n_cells or epsilon_ladder in [geometry]");
  if (int rc = require_hypotheses(cfg)) return rc;
  write_manifest(cfg, "direct");

  asym::EffectiveSummary side = asym::effective_pairs_for(sweep_config_from(cfg, 1));

  std::ostringstream csv;
  csv << "epsilon,beta,j,lambda,nu_eps,residual,h_y,seed\n";
  for (int n_cells : cfg.n_cells_ladder) {
    geom::RodGeometry rod(n_cells);
    direct::DirectOptions opts;
    opts.tol = cfg.tol;
    opts.seed = cfg.seed;
    opts.gamma = side.gamma;
    opts.cbar_min = cfg.beta == 0 ? 0.0 : side.floor_value;
    opts.align_to = &side.pairs;
    opts.x1_min = cfg.beta == 1 ? side.profile.x1_min : 0.0;
    direct::DirectSpectrum spec = direct::solve_direct(cfg.geometry, cfg.coefficients, rod,
                                                       cfg.beta, cfg.j_max, cfg.h_y, opts);
    for (std::size_t j = 0; j < spec.lambdas.size(); ++j) {
      double nu = asym::rescale_eigenvalue(spec.lambdas[j], rod.epsilon, side.floor_value,
                                           cfg.beta, side.flatness);
      csv << num(rod.epsilon) << "," << cfg.beta << "," << (j + 1) << ","
          << num(spec.lambdas[j]) << "," << num(nu) << "," << num(spec.residuals[j]) << ","
          << num(cfg.h_y) << "," << cfg.seed << "\n";
    }
  }
  write_atomic(fs::path(cfg.output_dir) / "direct.csv", csv.str());
  std::cout << "direct.csv written to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_example1d(const CommonArgs& args) {
  cli::Config cfg = load_config(args);
  write_manifest(cfg, "example1d");
  int n = cfg.grid_n > 0 ? cfg.grid_n : (1 << 14);

  std::ostringstream csv;
  csv << "epsilon,n,lambda1,mu1,sup_err\n";
  std::vector<svg::Series> series;
  for (double eps : cfg.example1d_epsilons) {
    direct::Example1d r = direct::solve_example_1d(eps, n, cfg.seed, cfg.tol);
    csv << num(eps) << "," << n << "," << num(r.lambda1) << "," << num(r.mu1) << ","
        << num(r.sup_err) << "\n";
    if (cfg.svg) {
      svg::Series s;
      s.label = "u1, eps=" + std::to_string(eps);
      for (std::size_t i = 0; i < r.grid_x.size(); i += 16) {
        s.x.push_back(r.grid_x[i]);
        s.y.push_back(r.u1[i]);
      }
      series.push_back(std::move(s));
    }
  }
  write_atomic(fs::path(cfg.output_dir) / "example1d.csv", csv.str());
  if (cfg.svg) {
    std::ostringstream os;
    svg::write_line_plot(os, "1D example ground states", "x", "u1(x)", series, false, false);
    write_atomic(fs::path(cfg.output_dir) / "example1d.svg", os.str());
  }
  std::cout << "example1d.csv written to " << cfg.output_dir << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  cli::Config cfg = load_config(args);
  if (cfg.n_cells_ladder.empty())
    throw ConfigError("sweep needs n_cells or epsilon_ladder in [geometry]");
  if (int rc = require_hypotheses(cfg)) return rc;
  write_manifest(cfg, "sweep");

  asym::SweepReport report = asym::run_sweep(sweep_config_from(cfg, args.threads));
  std::ostringstream csv;
  report.write_csv(csv);
  write_atomic(fs::path(cfg.output_dir) / "sweep.csv", csv.str());

  std::ostringstream summary;
  summary << "beta: " << report.beta << "\n";
  summary << "a_eff: " << num(report.a_eff) << "\n";
  summary << "floor: " << num(report.floor_value) << "\n";
  summary << "x1_min: " << num(report.profile.x1_min) << "\n";
  for (std::size_t j = 0; j < report.nu_eff.size(); ++j)
    summary << "nu_eff_" << (j + 1) << ": " << num(report.nu_eff[j]) << "\n";
  for (std::size_t j = 0; j < report.nu_err_fits.size(); ++j)
    summary << "nu_err_slope_j" << (j + 1) << ": " << num(report.nu_err_fits[j].slope)
            << "\n";
  summary << "floor_gap_slope: " << num(report.floor_gap_fit.slope) << "\n";
  summary << "max_two_route_mismatch: " << num(report.max_two_route_mismatch) << "\n";
  if (!report.notes.empty()) summary << "notes: " << report.notes << "\n";
  for (const auto& row : report.rows)
    if (!row.ok) summary << "row eps=" << row.epsilon << " failed: " << row.error << "\n";
  write_atomic(fs::path(cfg.output_dir) / "sweep_summary.txt", summary.str());
  std::cout << summary.str();

  if (cfg.svg) {
    std::vector<svg::Series> nu_series(static_cast<std::size_t>(cfg.j_max));
    std::vector<svg::Series> loc_series(static_cast<std::size_t>(cfg.j_max));
    for (int j = 1; j <= cfg.j_max; ++j) {
      nu_series[static_cast<std::size_t>(j - 1)].label = "|nu_eps-nu| j=" + std::to_string(j);
      loc_series[static_cast<std::size_t>(j - 1)].label = "E_j j=" + std::to_string(j);
    }
    for (const auto& row : report.rows) {
      if (!row.ok) continue;
      auto& ns = nu_series[static_cast<std::size_t>(row.j - 1)];
      ns.x.push_back(row.epsilon);
      ns.y.push_back(std::abs(row.nu_eps - row.nu_eff));
      auto& ls = loc_series[static_cast<std::size_t>(row.j - 1)];
      ls.x.push_back(row.epsilon);
      ls.y.push_back(row.loc_err);
    }
    std::ostringstream os1;
    svg::write_line_plot(os1, "eigenvalue convergence", "epsilon", "|nu_eps - nu|",
                         nu_series, true, true);
    write_atomic(fs::path(cfg.output_dir) / "nu_convergence.svg", os1.str());
    std::ostringstream os2;
    svg::write_line_plot(os2, "localization error", "epsilon", "E_j", loc_series, true,
                         true);
    write_atomic(fs::path(cfg.output_dir) / "loc_convergence.svg", os2.str());
  }

  for (const auto& row : report.rows)
    if (!row.ok) return 3;
  return 0;
}

int cmd_mvt_check(const CommonArgs& args) {
  cli::Config cfg = load_config(args);
  if (cfg.n_cells_ladder.empty())
    throw ConfigError("mvt-check needs n_cells or epsilon_ladder in [geometry]");
  write_manifest(cfg, "mvt-check");

  std::ostringstream csv;
  csv << "epsilon,residual,bound_ratio,norm_v,norm_grad_v\n";
  std::vector<std::pair<double, double>> points;
  double max_ratio = 0.0;
  for (int n_cells : cfg.n_cells_ladder) {
    geom::RodGeometry rod(n_cells);
    asym::MvtResult r =
        asym::mean_value_residual(cfg.geometry, *cfg.mvt_w, *cfg.mvt_v, rod, cfg.h_y);
    csv << num(rod.epsilon) << "," << num(r.residual) << "," << num(r.bound_ratio) << ","
        << num(r.norm_v) << "," << num(r.norm_grad_v) << "\n";
    if (r.residual > 0) points.emplace_back(rod.epsilon, r.residual);
    max_ratio = std::max(max_ratio, r.bound_ratio);
  }
  write_atomic(fs::path(cfg.output_dir) / "mvt.csv", csv.str());

  std::ostringstream summary;
  if (points.size() >= 3) {
    asym::RateFit fit = asym::fit_rate(points);
    summary << "residual_slope: " << num(fit.slope) << " (r2 " << num(fit.r_squared)
            << ")\n";
  }
  summary << "max_bound_ratio: " << num(max_ratio) << "\n";
  write_atomic(fs::path(cfg.output_dir) / "mvt_summary.txt", summary.str());
  std::cout << summary.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) +
               " - spectral homogenization laboratory for thin perforated rods"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub, bool needs_config = true) {
    auto* opt = sub->add_option("-c,--config", args.config_path, "configuration file");
    if (needs_config) opt->required();
    sub->add_option("--threads", args.threads, "worker threads for sweeps")
        ->check(CLI::Range(1, 64));
    sub->add_option("--out", args.out_override, "output directory override");
    sub->add_flag("--svg", args.svg, "emit SVG plots");
  };

  auto* validate = app.add_subcommand("validate", "check hypotheses on the configured fields");
  auto* cellcmd = app.add_subcommand("cell", "solve the cell problems and effective matrix");
  auto* effectivecmd =
      app.add_subcommand("effective", "solve the effective limit eigenproblem");
  auto* directcmd = app.add_subcommand("direct", "solve the eps-dependent rod problem");
  auto* example1d = app.add_subcommand("example1d", "run the explicit 1D example");
  auto* sweep = app.add_subcommand("sweep", "full asymptotics verification sweep");
  auto* mvt = app.add_subcommand("mvt-check", "mean-value estimate scaling check");
  for (CLI::App* sub : {validate, cellcmd, effectivecmd, directcmd, example1d, sweep, mvt})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (validate->parsed()) return cmd_validate(args);
    if (cellcmd->parsed()) return cmd_cell(args);
    if (effectivecmd->parsed()) return cmd_effective(args);
    if (directcmd->parsed()) return cmd_direct(args);
    if (example1d->parsed()) return cmd_example1d(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (mvt->parsed()) return cmd_mvt_check(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const HypothesisError& e) {
    std::cerr << "hypothesis violation: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
