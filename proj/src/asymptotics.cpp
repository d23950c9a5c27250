#include "rodspec/asymptotics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <thread>

#include "rodspec/errors.hpp"

namespace rodspec::asym {

namespace {

// Degree-5 Dunavant rule (7 points, weights sum to one).
struct QuadPoint {
  double b0, b1, b2, w;
};

const QuadPoint kTriQuad7[7] = {
    {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.225},
    {0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506},
    {0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506},
    {0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506},
    {0.101286507323456, 0.101286507323456, 0.797426985353088, 0.125939180544827},
    {0.101286507323456, 0.797426985353088, 0.101286507323456, 0.125939180544827},
    {0.797426985353088, 0.101286507323456, 0.101286507323456, 0.125939180544827},
};

double centroid_value(const mesh::TriMesh& m, int t, const std::vector<double>& values) {
  const auto& tri = m.triangles[static_cast<std::size_t>(t)];
  return (values[static_cast<std::size_t>(tri[0])] + values[static_cast<std::size_t>(tri[1])] +
          values[static_cast<std::size_t>(tri[2])]) /
         3.0;
}

// Integrates f(point) over the mesh with the degree-5 rule.
template <typename F>
double integrate_quad7(const mesh::TriMesh& m, F&& f) {
  double acc = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const mesh::Vec2& p0 = m.vertices[static_cast<std::size_t>(tri[0])];
    const mesh::Vec2& p1 = m.vertices[static_cast<std::size_t>(tri[1])];
    const mesh::Vec2& p2 = m.vertices[static_cast<std::size_t>(tri[2])];
    double area = m.triangle_area(static_cast<int>(t));
    double local = 0.0;
    for (const QuadPoint& q : kTriQuad7) {
      mesh::Vec2 p{q.b0 * p0.x + q.b1 * p1.x + q.b2 * p2.x,
                   q.b0 * p0.y + q.b1 * p1.y + q.b2 * p2.y};
      local += q.w * f(p);
    }
    acc += area * local;
  }
  return acc;
}

}  // namespace

double rescale_eigenvalue(double lambda, double epsilon, double floor_value, int beta,
                          int flatness_order) {
  if (beta == 0) return lambda;
  if (beta == 2) return epsilon * (lambda - floor_value / (epsilon * epsilon));
  double expo = 2.0 / (flatness_order + 2);
  return std::pow(epsilon, expo) * (lambda - floor_value / epsilon);
}

double localization_error(const mesh::TriMesh& rod_mesh, const std::vector<double>& u,
                          const effective::EffectiveEigenPair& v_eff, double epsilon,
                          double gamma, double x1_min, double q_measure) {
  const double scale = std::pow(epsilon, gamma);
  double acc = 0.0;
  for (std::size_t t = 0; t < rod_mesh.triangles.size(); ++t) {
    mesh::Vec2 c = rod_mesh.centroid(static_cast<int>(t));
    double diff = centroid_value(rod_mesh, static_cast<int>(t), u) -
                  v_eff.value_at((c.x - x1_min) / scale);
    acc += rod_mesh.triangle_area(static_cast<int>(t)) * diff * diff;
  }
  return acc / (scale * epsilon * q_measure);
}

double concentration_mass(const mesh::TriMesh& rod_mesh, const std::vector<double>& u,
                          double x1_min, double delta) {
  double outside = 0.0, total = 0.0;
  for (std::size_t t = 0; t < rod_mesh.triangles.size(); ++t) {
    mesh::Vec2 c = rod_mesh.centroid(static_cast<int>(t));
    double v = centroid_value(rod_mesh, static_cast<int>(t), u);
    double m = rod_mesh.triangle_area(static_cast<int>(t)) * v * v;
    total += m;
    if (std::abs(c.x - x1_min) >= delta) outside += m;
  }
  if (total <= 0.0) return 0.0;
  return std::sqrt(outside / total);
}

CellPointLocator::CellPointLocator(const mesh::TriMesh& cell_mesh,
                                   const std::vector<double>& vertex_values)
    : mesh_(cell_mesh), values_(vertex_values) {
  w_ = 0.5;
  for (const mesh::Vec2& v : mesh_.vertices) w_ = std::max(w_, std::abs(v.y));
  nb_ = std::max(8, static_cast<int>(std::lround(2.0 / std::max(mesh_.h, 1e-3))));
  bins_.assign(static_cast<std::size_t>(nb_) * nb_, {});
  auto bin_index = [&](double x, double lo, double hi) {
    int i = static_cast<int>((x - lo) / (hi - lo) * nb_);
    return std::clamp(i, 0, nb_ - 1);
  };
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const auto& tri = mesh_.triangles[t];
    double x0 = 1e30, x1 = -1e30, y0 = 1e30, y1 = -1e30;
    for (int v : tri) {
      const mesh::Vec2& p = mesh_.vertices[static_cast<std::size_t>(v)];
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    int i0 = bin_index(x0, -0.5, 0.5), i1 = bin_index(x1, -0.5, 0.5);
    int j0 = bin_index(y0, -w_, w_), j1 = bin_index(y1, -w_, w_);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        bins_[static_cast<std::size_t>(i) * nb_ + j].push_back(static_cast<int>(t));
  }
}

double CellPointLocator::value_at(double y1, double y2) const {
  double x = geom::reduce_periodic(y1);
  double y = y2;
  auto bin_of = [&](double v, double lo, double hi) {
    int i = static_cast<int>((v - lo) / (hi - lo) * nb_);
    return std::clamp(i, 0, nb_ - 1);
  };
  int bi = bin_of(x, -0.5, 0.5), bj = bin_of(y, -w_, w_);

  auto try_triangle = [&](int t) -> std::pair<bool, double> {
    const auto& tri = mesh_.triangles[static_cast<std::size_t>(t)];
    const mesh::Vec2& p0 = mesh_.vertices[static_cast<std::size_t>(tri[0])];
    const mesh::Vec2& p1 = mesh_.vertices[static_cast<std::size_t>(tri[1])];
    const mesh::Vec2& p2 = mesh_.vertices[static_cast<std::size_t>(tri[2])];
    double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    if (det == 0.0) return {false, 0.0};
    double l1 = ((x - p0.x) * (p2.y - p0.y) - (y - p0.y) * (p2.x - p0.x)) / det;
    double l2 = ((p1.x - p0.x) * (y - p0.y) - (p1.y - p0.y) * (x - p0.x)) / det;
    double l0 = 1.0 - l1 - l2;
    const double tol = -1e-10;
    if (l0 < tol || l1 < tol || l2 < tol) return {false, 0.0};
    double v = l0 * values_[static_cast<std::size_t>(tri[0])] +
               l1 * values_[static_cast<std::size_t>(tri[1])] +
               l2 * values_[static_cast<std::size_t>(tri[2])];
    return {true, v};
  };

  for (int ring = 0; ring < nb_; ++ring) {
    for (int i = std::max(0, bi - ring); i <= std::min(nb_ - 1, bi + ring); ++i) {
      for (int j = std::max(0, bj - ring); j <= std::min(nb_ - 1, bj + ring); ++j) {
        if (std::max(std::abs(i - bi), std::abs(j - bj)) != ring) continue;
        for (int t : bins_[static_cast<std::size_t>(i) * nb_ + j]) {
          auto [hit, v] = try_triangle(t);
          if (hit) return v;
        }
      }
    }
    if (ring > 2) break;  // points this far off the mesh use the fallback
  }

  // Nearest-centroid fallback (point inside the hole band); P1 value there.
  double best = std::numeric_limits<double>::infinity();
  double val = 0.0;
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    mesh::Vec2 c = mesh_.centroid(static_cast<int>(t));
    double d = (c.x - x) * (c.x - x) + (c.y - y) * (c.y - y);
    if (d < best) {
      best = d;
      val = centroid_value(mesh_, static_cast<int>(t), values_);
    }
  }
  return val;
}

double localization_error_beta2(const mesh::TriMesh& rod_mesh, const std::vector<double>& u,
                                const effective::EffectiveEigenPair& v_eff,
                                const CellPointLocator& p1, double epsilon, double x1_min,
                                double q_measure) {
  const double scale = std::sqrt(epsilon);
  double acc = 0.0;
  for (std::size_t t = 0; t < rod_mesh.triangles.size(); ++t) {
    mesh::Vec2 c = rod_mesh.centroid(static_cast<int>(t));
    double model = p1.value_at(c.x / epsilon, c.y / epsilon) *
                   v_eff.value_at((c.x - x1_min) / scale);
    double diff = centroid_value(rod_mesh, static_cast<int>(t), u) - model;
    acc += rod_mesh.triangle_area(static_cast<int>(t)) * diff * diff;
  }
  return acc / (scale * epsilon * q_measure);
}

MvtResult mean_value_residual(const std::shared_ptr<const geom::CellGeometry>& geometry,
                              const expr::Expr& w_field, const expr::Expr& v_profile,
                              const geom::RodGeometry& rod, double h_y) {
  const double eps = rod.epsilon;
  const double w_half = geometry->cross_section.half_width;
  const double box_measure = 2.0 * w_half;

  auto v_at = [&](double x1) {
    expr::Env env;
    env.x1 = x1;
    return v_profile.eval(env);
  };
  double v_scale = 1.0 + std::abs(v_at(0.0));
  if (std::abs(v_at(-0.5)) > 1e-8 * v_scale || std::abs(v_at(0.5)) > 1e-8 * v_scale)
    throw ConfigError("mvt profile v must vanish at the rod ends");

  mesh::TriMesh perforated = mesh::mesh_rod(geometry, rod, h_y);
  auto full_geometry = std::make_shared<geom::CellGeometry>(*geometry);
  full_geometry->hole_present = false;
  full_geometry->level_set = nullptr;
  mesh::TriMesh full = mesh::mesh_rod(full_geometry, rod, h_y);

  // Inner cell integrals per slice, on the same cut cell meshes the rod is
  // built from. The slow x1-dependence of w inside a cell enters through a
  // first-order Taylor term around the cell midpoint.
  std::vector<double> cell_integral(static_cast<std::size_t>(2 * rod.n_cells + 1));
  std::vector<double> cell_integral_dx(static_cast<std::size_t>(2 * rod.n_cells + 1));
  const double fd_x1 = 0.25 * eps;
  for (int j = -rod.n_cells; j <= rod.n_cells; ++j) {
    double x1_j = eps * j;
    mesh::TriMesh cell = mesh::mesh_cell(geometry, x1_j, h_y);
    auto w_int = [&](double x1) {
      return integrate_quad7(cell, [&](mesh::Vec2 p) {
        return w_field.eval(expr::Env::vars(x1, geom::reduce_periodic(p.x), p.y));
      });
    };
    cell_integral[static_cast<std::size_t>(j + rod.n_cells)] = w_int(x1_j);
    cell_integral_dx[static_cast<std::size_t>(j + rod.n_cells)] =
        (w_int(x1_j + fd_x1) - w_int(x1_j - fd_x1)) / (2.0 * fd_x1);
  }

  MvtResult out;
  out.lhs = integrate_quad7(perforated, [&](mesh::Vec2 p) {
    double w = w_field.eval(
        expr::Env::vars(p.x, geom::reduce_periodic(p.x / eps), p.y / eps));
    double v = v_at(p.x);
    return w * v * v;
  });
  out.rhs = integrate_quad7(full, [&](mesh::Vec2 p) {
    int j = static_cast<int>(std::lround(p.x / eps));
    j = std::clamp(j, -rod.n_cells, rod.n_cells);
    double v = v_at(p.x);
    double inner = cell_integral[static_cast<std::size_t>(j + rod.n_cells)] +
                   (p.x - eps * j) * cell_integral_dx[static_cast<std::size_t>(j + rod.n_cells)];
    return inner / box_measure * v * v;
  });
  out.residual = std::abs(out.lhs - out.rhs);

  const double fd = 1e-6;
  double norm_v_sq = integrate_quad7(full, [&](mesh::Vec2 p) {
    double v = v_at(p.x);
    return v * v;
  });
  double norm_g_sq = integrate_quad7(full, [&](mesh::Vec2 p) {
    double dv = (v_at(p.x + fd) - v_at(p.x - fd)) / (2.0 * fd);
    return dv * dv;
  });
  out.norm_v = std::sqrt(norm_v_sq);
  out.norm_grad_v = std::sqrt(norm_g_sq);
  out.bound_ratio = out.residual / std::max(eps * out.norm_v * out.norm_grad_v, 1e-300);
  return out;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw NumericalError("rate fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  const double n = static_cast<double>(points.size());
  for (const auto& [e, v] : points) {
    if (!(v > 0.0) || !(e > 0.0))
      throw NumericalError("rate fit needs positive values");
    double x = std::log(e), y = std::log(v);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
  }
  double varx = sxx - sx * sx / n;
  double vary = syy - sy * sy / n;
  double cov = sxy - sx * sy / n;
  RateFit fit;
  fit.slope = cov / varx;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.r_squared = vary > 0 ? cov * cov / (varx * vary) : 1.0;
  return fit;
}

EffectiveSummary effective_pairs_for(const SweepConfig& config) {
  EffectiveSummary side;
  const auto& g = config.geometry;
  const auto& coeffs = config.coefficients;

  if (config.beta == 0) {
    side.gamma = 0.0;
    // Profiles a_eff(x1) and cbar(x1); constant shortcut when nothing
    // references x1.
    bool x1_free = !(g->hole_present && g->level_set->references_x1()) &&
                   !coeffs.a11->references_x1() && !coeffs.a12->references_x1() &&
                   !coeffs.a22->references_x1();
    std::vector<double> xs, as;
    int slices = x1_free ? 1 : config.profile_slices;
    for (int s = 0; s < slices; ++s) {
      double x1 = slices == 1 ? 0.0 : -0.5 + (s + 0.5) / slices;
      xs.push_back(x1);
      as.push_back(cell::effective_matrix(g, coeffs, x1, config.h).a_eff);
    }
    auto a_fn = [xs, as](double x1) {
      if (as.size() == 1) return as[0];
      if (x1 <= xs.front()) return as.front();
      if (x1 >= xs.back()) return as.back();
      auto it = std::upper_bound(xs.begin(), xs.end(), x1);
      std::size_t hi = static_cast<std::size_t>(it - xs.begin());
      double t = (x1 - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
      return (1 - t) * as[hi - 1] + t * as[hi];
    };
    auto c_fn = [g, coeffs](double x1) { return geom::cbar(*g, coeffs, x1, 256); };
    side.a_eff = a_fn(0.0);
    side.pairs = effective::solve_sturm_liouville_beta0(a_fn, c_fn, config.j_max,
                                                        config.sl_grid_n, config.seed);
    side.floor_value = 0.0;
    return side;
  }

  if (config.beta == 2) {
    cell::SolverOptions so{config.tol, config.seed};
    cell::Beta2Effective b2 = cell::beta2_effective(g, coeffs, config.h, 1e-3, 0.05, so);
    side.a_eff = b2.a_eff_w;
    side.floor_value = b2.lambda1_0;
    side.gamma = 0.5;
    effective::EffectiveModel model;
    model.kind = effective::ModelKind::kOscBeta2;
    model.a_eff = b2.a_eff_w;
    model.curvature = b2.lambda1_curvature;
    model.c_eff = b2.c_eff;
    side.pairs = effective::solve_oscillator_fdm(model, config.j_max, config.seed);
    return side;
  }

  // beta = 1 family.
  side.profile = geom::minimize_cbar(*g, coeffs);
  int k = config.flatness_override > 0 ? config.flatness_override
                                       : side.profile.flatness_order;
  side.flatness = k;
  side.gamma = 1.0 / (k + 2);
  side.floor_value = side.profile.cbar_min;
  side.a_eff = cell::effective_matrix(g, coeffs, side.profile.x1_min, config.h).a_eff;

  if (side.profile.boundary_min) {
    effective::EffectiveModel model;
    model.kind = effective::ModelKind::kOscHalfline;
    model.a_eff = side.a_eff;
    model.curvature = side.profile.cbar_curvature;
    model.side = side.profile.x1_min > 0 ? 1 : -1;
    side.pairs = effective::solve_oscillator_fdm(model, config.j_max, config.seed);
    side.notes += "boundary minimum: half-line oscillator; ";
  } else if (k == 2) {
    side.pairs =
        effective::hermite_eigenpairs(side.a_eff, side.profile.cbar_curvature, config.j_max);
  } else {
    effective::EffectiveModel model;
    model.kind = effective::ModelKind::kOscFlatK;
    model.a_eff = side.a_eff;
    model.flatness_order = k;
    model.kth_derivative = side.profile.kth_derivative;
    side.pairs = effective::solve_oscillator_fdm(model, config.j_max, config.seed);
    side.notes += "flatness order " + std::to_string(k) + "; ";
  }
  return side;
}

namespace {

// Effective data shared by all sweep rows, plus the beta=2 cell eigenfunction
// for the localization comparison.
struct EffectiveSide {
  EffectiveSummary summary;
  std::unique_ptr<CellPointLocator> p1_locator;
  mesh::TriMesh p1_mesh;  // keeps the locator's mesh alive
  std::vector<double> p1_values;
};

EffectiveSide build_effective_side(const SweepConfig& config) {
  EffectiveSide side;
  side.summary = effective_pairs_for(config);
  if (config.beta == 2) {
    cell::SolverOptions so{config.tol, config.seed};
    cell::CellEigenData e0 =
        cell::solve_cell_eigen(config.geometry, config.coefficients, 0.0, config.h, so);
    side.p1_mesh = mesh::mesh_cell(config.geometry, 0.0, config.h);
    side.p1_values = e0.p1;
    side.p1_locator = std::make_unique<CellPointLocator>(side.p1_mesh, side.p1_values);
  }
  return side;
}

std::vector<SweepRow> sweep_one_epsilon(const SweepConfig& config,
                                        const EffectiveSide& side, int n_cells) {
  const EffectiveSummary& eff = side.summary;
  geom::RodGeometry rod(n_cells);
  const double eps = rod.epsilon;
  const double q_measure = 2.0 * config.geometry->cross_section.half_width;

  direct::DirectOptions opts;
  opts.tol = config.tol;
  opts.seed = config.seed;
  opts.gamma = eff.gamma;
  opts.cbar_min = config.beta == 2 ? eff.floor_value : eff.profile.cbar_min;
  if (config.beta == 0) opts.cbar_min = 0.0;
  opts.align_to = &eff.pairs;
  opts.x1_min = config.beta == 1 ? eff.profile.x1_min : 0.0;

  direct::DirectSpectrum spectrum =
      direct::solve_direct(config.geometry, config.coefficients, rod, config.beta,
                           config.j_max + 1, config.h_y, opts);

  std::vector<double> two_route;
  if (config.beta == 1 && eff.flatness == 2 && !eff.profile.boundary_min) {
    two_route = direct::solve_rescaled_nu(spectrum, config.coefficients, eff.floor_value,
                                          config.j_max, opts);
  }

  std::vector<SweepRow> rows;
  for (int j = 1; j <= config.j_max; ++j) {
    SweepRow row;
    row.epsilon = eps;
    row.j = j;
    row.h_y = config.h_y;
    row.seed = config.seed;
    row.lambda = spectrum.lambdas[static_cast<std::size_t>(j - 1)];
    row.nu_eps = rescale_eigenvalue(row.lambda, eps, eff.floor_value, config.beta,
                                    eff.flatness);
    row.nu_eff = eff.pairs[static_cast<std::size_t>(j - 1)].nu;
    row.gap = spectrum.lambdas[static_cast<std::size_t>(j)] - row.lambda;
    const std::vector<double>& u = spectrum.vertex_vectors[static_cast<std::size_t>(j - 1)];
    const auto& veff = eff.pairs[static_cast<std::size_t>(j - 1)];

    if (config.beta == 1) {
      row.loc_err = localization_error(spectrum.rod_mesh, u, veff, eps, eff.gamma,
                                       eff.profile.x1_min, q_measure);
    } else if (config.beta == 2) {
      row.loc_err = localization_error_beta2(spectrum.rod_mesh, u, veff,
                                             *side.p1_locator, eps, 0.0, q_measure);
    } else {
      // Scale-free misalignment 1 - cos^2 of the angle to v_j(x1).
      double uu = 0.0, vv = 0.0, uv = 0.0;
      for (std::size_t t = 0; t < spectrum.rod_mesh.triangles.size(); ++t) {
        mesh::Vec2 c = spectrum.rod_mesh.centroid(static_cast<int>(t));
        double area = spectrum.rod_mesh.triangle_area(static_cast<int>(t));
        double uc = centroid_value(spectrum.rod_mesh, static_cast<int>(t), u);
        double vc = veff.value_at(c.x);
        uu += area * uc * uc;
        vv += area * vc * vc;
        uv += area * uc * vc;
      }
      row.loc_err = uu > 0 && vv > 0 ? std::max(0.0, 1.0 - uv * uv / (uu * vv)) : 1.0;
    }

    double x1_min = config.beta == 1 ? eff.profile.x1_min : 0.0;
    row.mass_d01 = concentration_mass(spectrum.rod_mesh, u, x1_min, 0.1);
    row.mass_d02 = concentration_mass(spectrum.rod_mesh, u, x1_min, 0.2);
    row.nu_two_route =
        two_route.empty() ? row.nu_eps : two_route[static_cast<std::size_t>(j - 1)];
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void SweepReport::write_csv(std::ostream& os) const {
  os << "epsilon,j,lambda,nu_eps,nu_eff,loc_err,mass_d01,mass_d02,gap,h_y,seed\n";
  char buf[256];
  for (const SweepRow& row : rows) {
    if (!row.ok) continue;
    std::snprintf(buf, sizeof buf,
                  "%.12e,%d,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%llu\n",
                  row.epsilon, row.j, row.lambda, row.nu_eps, row.nu_eff, row.loc_err,
                  row.mass_d01, row.mass_d02, row.gap, row.h_y,
                  static_cast<unsigned long long>(row.seed));
    os << buf;
  }
}

SweepReport run_sweep(const SweepConfig& config) {
  if (config.n_cells_ladder.empty()) throw ConfigError("sweep needs an epsilon ladder");

  SweepReport report;
  report.beta = config.beta;
  EffectiveSide side = build_effective_side(config);
  report.profile = side.summary.profile;
  report.a_eff = side.summary.a_eff;
  report.floor_value = side.summary.floor_value;
  report.notes = side.summary.notes;
  for (const auto& p : side.summary.pairs) report.nu_eff.push_back(p.nu);

  const int n_eps = static_cast<int>(config.n_cells_ladder.size());
  std::vector<std::vector<SweepRow>> per_eps(static_cast<std::size_t>(n_eps));
  std::vector<std::string> errors(static_cast<std::size_t>(n_eps));

  auto work = [&](int i) {
    try {
      per_eps[static_cast<std::size_t>(i)] =
          sweep_one_epsilon(config, side, config.n_cells_ladder[static_cast<std::size_t>(i)]);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  };

  int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int i = 0; i < n_eps; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic_int next{0};
    for (int t = 0; t < std::min(threads, n_eps); ++t)
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n_eps; i = next.fetch_add(1)) work(i);
      });
    for (auto& th : pool) th.join();
  }

  // Rows ordered by (eps desc, j asc); the ladder is sorted by N ascending.
  std::vector<int> order(static_cast<std::size_t>(n_eps));
  for (int i = 0; i < n_eps; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return config.n_cells_ladder[static_cast<std::size_t>(a)] <
           config.n_cells_ladder[static_cast<std::size_t>(b)];
  });
  for (int i : order) {
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      SweepRow row;
      row.epsilon = 1.0 / (2.0 * config.n_cells_ladder[static_cast<std::size_t>(i)] + 1.0);
      row.ok = false;
      row.error = errors[static_cast<std::size_t>(i)];
      report.rows.push_back(std::move(row));
      continue;
    }
    for (SweepRow& row : per_eps[static_cast<std::size_t>(i)])
      report.rows.push_back(std::move(row));
  }

  // Trend fits over the successful rows.
  for (int j = 1; j <= config.j_max; ++j) {
    std::vector<std::pair<double, double>> err_points, gap_points;
    for (const SweepRow& row : report.rows) {
      if (!row.ok || row.j != j) continue;
      double err = std::abs(row.nu_eps - row.nu_eff);
      if (err > 0) err_points.emplace_back(row.epsilon, err);
      if (j == 1 && config.beta > 0) {
        double gap = std::abs(row.lambda -
                              report.floor_value /
                                  std::pow(row.epsilon, static_cast<double>(config.beta)));
        if (gap > 0) gap_points.emplace_back(row.epsilon, gap);
      }
      if (config.beta == 1)
        report.max_two_route_mismatch =
            std::max(report.max_two_route_mismatch,
                     std::abs(row.nu_two_route - row.nu_eps) /
                         std::max(std::abs(row.nu_eps), 1e-30));
    }
    if (err_points.size() >= 3) report.nu_err_fits.push_back(fit_rate(err_points));
    if (j == 1 && gap_points.size() >= 3) report.floor_gap_fit = fit_rate(gap_points);
  }
  return report;
}

}  // namespace rodspec::asym
