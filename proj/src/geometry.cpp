#include "rodspec/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rodspec::geom {

namespace {

std::string point_str(double x1, double y1, double y2) {
  std::ostringstream os;
  os << "(x1=" << x1 << ", y1=" << y1 << ", y2=" << y2 << ")";
  return os.str();
}

// Central difference of even order k (2, 4 or 6) with step h.
double central_difference(const std::vector<double>& stencil, int k, double h) {
  // stencil holds f(x - (k/2)h) ... f(x + (k/2)h), k+1 values.
  static const double w2[] = {1, -2, 1};
  static const double w4[] = {1, -4, 6, -4, 1};
  static const double w6[] = {1, -6, 15, -20, 15, -6, 1};
  const double* w = k == 2 ? w2 : (k == 4 ? w4 : w6);
  double acc = 0.0;
  for (int i = 0; i <= k; ++i) acc += w[i] * stencil[static_cast<std::size_t>(i)];
  return acc / std::pow(h, k);
}

}  // namespace

double CellGeometry::level_set_at(double x1, double y1, double y2) const {
  return level_set->eval(expr::Env::vars(x1, reduce_periodic(y1), y2));
}

RodGeometry::RodGeometry(int n) : n_cells(n), epsilon(1.0 / (2.0 * n + 1.0)) {
  if (n < 1) throw ConfigError("N_cells must be >= 1");
}

double CoefficientSet::Mat2::min_eigenvalue() const {
  double mean = 0.5 * (a11 + a22);
  double radius = std::sqrt(0.25 * (a11 - a22) * (a11 - a22) + a12 * a12);
  return mean - radius;
}

CoefficientSet::Mat2 CoefficientSet::a_at(double x1, double y1, double y2) const {
  expr::Env env = expr::Env::vars(x1, reduce_periodic(y1), y2);
  return {a11->eval(env), a12->eval(env), a22->eval(env)};
}

double CoefficientSet::c_at(double x1, double y1, double y2) const {
  return c->eval(expr::Env::vars(x1, reduce_periodic(y1), y2));
}

bool HypothesisReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const HypothesisCheck& c) { return c.passed; });
}

std::string HypothesisReport::to_string() const {
  std::ostringstream os;
  for (const HypothesisCheck& c : checks) {
    os << (c.passed ? "pass" : "FAIL") << "  " << c.name;
    if (!c.detail.empty()) os << "  [" << c.detail << "]";
    os << "\n";
  }
  return os.str();
}

int chi(const CellGeometry& geometry, double x1, double y1, double y2) {
  if (!geometry.hole_present) return 1;
  return geometry.level_set_at(x1, y1, y2) > 0.0 ? 1 : 0;
}

double cell_measure(const CellGeometry& geometry, double x1, int quad_n) {
  if (quad_n < 32) throw ConfigError("cell_measure needs quad_n >= 32");
  const double w = geometry.cross_section.half_width;
  if (!geometry.hole_present) return 2.0 * w;
  const double dy1 = 1.0 / quad_n;
  const double dy2 = 2.0 * w / quad_n;
  long long inside = 0;
  for (int i = 0; i < quad_n; ++i) {
    double y1 = -0.5 + (i + 0.5) * dy1;
    for (int j = 0; j < quad_n; ++j) {
      double y2 = -w + (j + 0.5) * dy2;
      inside += chi(geometry, x1, y1, y2);
    }
  }
  return static_cast<double>(inside) * dy1 * dy2;
}

double cbar(const CellGeometry& geometry, const CoefficientSet& coefficients,
            double x1, int quad_n) {
  if (quad_n < 32) throw ConfigError("cbar needs quad_n >= 32");
  const double w = geometry.cross_section.half_width;
  const double dy1 = 1.0 / quad_n;
  const double dy2 = 2.0 * w / quad_n;
  // Compensated summation: the quadrature averages ~10^5 terms and feeds
  // second-difference stencils downstream.
  double csum = 0.0, carry = 0.0;
  long long inside = 0;
  for (int i = 0; i < quad_n; ++i) {
    double y1 = -0.5 + (i + 0.5) * dy1;
    for (int j = 0; j < quad_n; ++j) {
      double y2 = -w + (j + 0.5) * dy2;
      if (chi(geometry, x1, y1, y2)) {
        double term = coefficients.c_at(x1, y1, y2) - carry;
        double next = csum + term;
        carry = (next - csum) - term;
        csum = next;
        ++inside;
      }
    }
  }
  if (inside == 0)
    throw HypothesisError("degenerate perforated cell: Y(x1) has zero sampled measure at x1=" +
                          std::to_string(x1));
  return csum / static_cast<double>(inside);
}

namespace {

// cbar as a cheap callable. When c does not reference y the cell average
// equals c(x1) exactly and the quadrature is skipped.
struct CbarFn {
  const CellGeometry& geometry;
  const CoefficientSet& coefficients;
  int quad_n;
  bool y_independent;

  double operator()(double x1) const {
    if (y_independent) return coefficients.c_at(x1, 0.0, 0.0);
    return cbar(geometry, coefficients, x1, quad_n);
  }
};

}  // namespace

PotentialProfile minimize_cbar(const CellGeometry& geometry,
                               const CoefficientSet& coefficients,
                               const MinimizeOptions& options) {
  CbarFn f{geometry, coefficients, options.quad_n, !coefficients.c->references_y()};

  const int n = options.scan_points;
  std::vector<double> values(static_cast<std::size_t>(n) + 1);
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i <= n; ++i) {
    double x = -0.5 + static_cast<double>(i) / n;
    values[static_cast<std::size_t>(i)] = f(x);
    if (values[static_cast<std::size_t>(i)] < best) {
      best = values[static_cast<std::size_t>(i)];
      best_i = i;
    }
  }

  // Uniqueness: samples within 1e-9 of the minimum must form one contiguous
  // run; a second separated run means a second global minimum.
  {
    bool in_run = false;
    int runs = 0;
    for (int i = 0; i <= n; ++i) {
      bool near = values[static_cast<std::size_t>(i)] <= best + 1e-9;
      if (near && !in_run) ++runs;
      in_run = near;
    }
    if (runs > 1)
      throw HypothesisError("cbar has a non-unique global minimum (" +
                            std::to_string(runs) + " separated minima sampled)");
  }

  // Golden-section refinement on the bracket around the best sample.
  double a = -0.5 + static_cast<double>(std::max(0, best_i - 1)) / n;
  double b = -0.5 + static_cast<double>(std::min(n, best_i + 1)) / n;
  const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c1 = b - inv_phi * (b - a);
  double c2 = a + inv_phi * (b - a);
  double f1 = f(c1), f2 = f(c2);
  while (b - a > options.x1_tol) {
    if (f1 < f2) {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - inv_phi * (b - a);
      f1 = f(c1);
    } else {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + inv_phi * (b - a);
      f2 = f(c2);
    }
  }

  PotentialProfile profile;
  profile.x1_min = 0.5 * (a + b);
  profile.boundary_min = std::abs(std::abs(profile.x1_min) - 0.5) <= 1e-6;
  if (profile.boundary_min) profile.x1_min = profile.x1_min > 0 ? 0.5 : -0.5;

  // Golden-section comparisons lose resolution once the bracket shrinks below
  // sqrt(machine eps); a parabolic fit with a wider stencil recovers the
  // vertex location.
  if (!profile.boundary_min) {
    const double dp = 1e-5;
    double fm = f(profile.x1_min - dp);
    double f0 = f(profile.x1_min);
    double fp = f(profile.x1_min + dp);
    double denom = fm - 2.0 * f0 + fp;
    if (denom > 0.0) {
      double step = 0.5 * dp * (fm - fp) / denom;
      if (std::abs(step) <= 2.0 * dp) profile.x1_min += step;
    }
  }
  profile.cbar_min = f(profile.x1_min);

  // Derivative stencils may reach slightly outside I; the fields are given by
  // expressions, so the evaluation is well defined there.
  auto stencil_value = [&](int k, double h) {
    std::vector<double> s(static_cast<std::size_t>(k) + 1);
    for (int i = 0; i <= k; ++i)
      s[static_cast<std::size_t>(i)] = f(profile.x1_min + (i - k / 2) * h);
    return central_difference(s, k, h);
  };

  const double h2 = std::max(1e-4, std::pow(std::numeric_limits<double>::epsilon(), 0.25));
  const double scale = std::max(1.0, std::abs(profile.cbar_min));
  const double vanish_tol = 1e-5 * scale;

  double d2 = stencil_value(2, h2);
  profile.cbar_curvature = d2;
  if (std::abs(d2) >= vanish_tol) {
    if (d2 < 0)
      throw HypothesisError("cbar has nonpositive curvature at its minimum x1=" +
                            std::to_string(profile.x1_min));
    profile.flatness_order = 2;
    profile.kth_derivative = d2;
    return profile;
  }

  double d4 = stencil_value(4, 5e-3);
  if (std::abs(d4) >= vanish_tol) {
    if (d4 < 0)
      throw HypothesisError("cbar has negative fourth derivative at its flat minimum");
    profile.flatness_order = 4;
    profile.kth_derivative = d4;
    return profile;
  }

  double d6 = stencil_value(6, 2e-2);
  if (std::abs(d6) >= vanish_tol) {
    if (d6 < 0)
      throw HypothesisError("cbar has negative sixth derivative at its flat minimum");
    profile.flatness_order = 6;
    profile.kth_derivative = d6;
    return profile;
  }
  throw HypothesisError("flatness of cbar at its minimum exceeds order 6; unsupported");
}

HypothesisReport validate_hypotheses(const CellGeometry& geometry,
                                     const CoefficientSet& coefficients,
                                     const ValidateOptions& options) {
  HypothesisReport report;
  const int n = options.grid_n;
  const double w = geometry.cross_section.half_width;

  auto sample = [&](int i, int count, double lo, double hi) {
    return lo + (hi - lo) * (i + 0.5) / count;
  };

  // (H1) boundedness of the fields and positivity of c.
  {
    bool finite = true;
    bool positive = true;
    std::string finite_witness, positive_witness;
    for (int i = 0; i < n && (finite || positive); ++i) {
      double x1 = sample(i, n, -0.5, 0.5);
      for (int j = 0; j < n; ++j) {
        double y1 = sample(j, n, -0.5, 0.5);
        for (int k = 0; k < n; ++k) {
          double y2 = sample(k, n, -w, w);
          auto a = coefficients.a_at(x1, y1, y2);
          double cv = coefficients.c_at(x1, y1, y2);
          if (finite && (!std::isfinite(a.a11) || !std::isfinite(a.a12) ||
                         !std::isfinite(a.a22) || !std::isfinite(cv))) {
            finite = false;
            finite_witness = point_str(x1, y1, y2);
          }
          if (positive && cv <= 0.0) {
            positive = false;
            positive_witness = point_str(x1, y1, y2) + " c=" + std::to_string(cv);
          }
        }
      }
    }
    report.checks.push_back({"H1: coefficients finite on sample grid", finite, finite_witness});
    if (options.require_positive_c)
      report.checks.push_back({"H1: potential c positive", positive, positive_witness});
    else if (!positive)
      report.checks.push_back(
          {"H1: potential c positive (informational for beta=0)", true, positive_witness});
  }

  // (H2) uniform ellipticity with floor Lambda_0.
  {
    bool ok = coefficients.ellipticity_floor > 0.0;
    std::string witness =
        ok ? "" : "Lambda_0 = " + std::to_string(coefficients.ellipticity_floor);
    for (int i = 0; i < n && ok; ++i) {
      double x1 = sample(i, n, -0.5, 0.5);
      for (int j = 0; j < n && ok; ++j) {
        double y1 = sample(j, n, -0.5, 0.5);
        for (int k = 0; k < n; ++k) {
          double y2 = sample(k, n, -w, w);
          double lam = coefficients.a_at(x1, y1, y2).min_eigenvalue();
          if (lam < coefficients.ellipticity_floor) {
            ok = false;
            witness = point_str(x1, y1, y2) + " min_eig=" + std::to_string(lam);
            break;
          }
        }
      }
    }
    report.checks.push_back({"H2: uniform ellipticity >= Lambda_0", ok, witness});
  }

  // Level-set conditions when a hole is present.
  if (geometry.hole_present) {
    bool center_inside = true;
    std::string witness_center;
    for (int i = 0; i < n; ++i) {
      double x1 = sample(i, n, -0.5, 0.5);
      if (geometry.level_set_at(x1, 0.0, 0.0) >= 0.0) {
        center_inside = false;
        witness_center = point_str(x1, 0, 0);
        break;
      }
    }
    report.checks.push_back({"F: hole interior contains y=0", center_inside, witness_center});

    bool faces_clear = true;
    std::string witness_face;
    for (int i = 0; i < n && faces_clear; ++i) {
      double x1 = sample(i, n, -0.5, 0.5);
      for (int k = 0; k < n; ++k) {
        double y2 = sample(k, n, -w, w);
        if (geometry.level_set_at(x1, -0.5, y2) <= 0.0 ||
            geometry.level_set_at(x1, 0.5 - 1e-12, y2) <= 0.0) {
          faces_clear = false;
          witness_face = point_str(x1, 0.5, y2);
          break;
        }
      }
    }
    report.checks.push_back({"F: hole away from y1 cell faces", faces_clear, witness_face});

    bool lateral_clear = true;
    std::string witness_lateral;
    for (int i = 0; i < n && lateral_clear; ++i) {
      double x1 = sample(i, n, -0.5, 0.5);
      for (int j = 0; j < n; ++j) {
        double y1 = sample(j, n, -0.5, 0.5);
        if (geometry.level_set_at(x1, y1, -w) <= 0.0 ||
            geometry.level_set_at(x1, y1, w) <= 0.0) {
          lateral_clear = false;
          witness_lateral = point_str(x1, y1, w);
          break;
        }
      }
    }
    report.checks.push_back(
        {"F: hole away from lateral boundary", lateral_clear, witness_lateral});
  }

  // (H3) unique interior minimum of cbar with positive curvature (or an even
  // flatness order / admissible boundary minimum).
  if (options.require_cbar_minimum) {
    try {
      MinimizeOptions mo;
      mo.quad_n = options.quad_n;
      PotentialProfile p = minimize_cbar(geometry, coefficients, mo);
      std::ostringstream os;
      os << "x1_min=" << p.x1_min << " cbar_min=" << p.cbar_min << " k=" << p.flatness_order
         << " d^k=" << p.kth_derivative << (p.boundary_min ? " (boundary)" : "");
      report.checks.push_back({"H3: unique minimum of cbar", true, os.str()});
    } catch (const HypothesisError& err) {
      report.checks.push_back({"H3: unique minimum of cbar", false, err.what()});
    }
  }

  return report;
}

}  // namespace rodspec::geom
