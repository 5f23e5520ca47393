#pragma once

/**
 * @file run.hpp
 * @brief Subcommands of the `cartan` tool.
 *
 * Every subcommand fills a Report with named rows {value, tolerance, pass}
 * and a list of artifacts (file name, contents). Files are written only
 * after all checks have finished, so the bytes do not depend on scheduling.
 */

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cartan/cartan.hpp"
#include "cartan/cli/config.hpp"
#include "cartan/cli/report.hpp"
#include "cartan/cli/rng.hpp"

namespace cartan::cli {

struct RunOptions {
  std::optional<std::string> out;
  std::optional<int> steps;
  std::optional<std::string> integrator;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

struct RunResult {
  Report report;
  std::vector<std::pair<std::string, std::string>> artifacts;
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"check-flat", "develop",   "develop-path", "holonomy-scan", "evolve",
                                              "group-law",  "variation", "tangent",      "verify-all"};
  return names;
}

/// Default bound for every named check; scenario files may override any of them.
inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"flatness", 1e-4},           {"basepoint", 1e-12},          {"constraint", 1e-8},
      {"round_trip", 1e-6},         {"log_derivative", 1e-4},      {"path_independence", 1e-6},
      {"holonomy_flat", 1e-7},      {"holonomy_slope", 0.2},       {"convergence_slope", 0.3},
      {"constraint_drift", 1e-10},  {"star", 1e-6},                {"inverse", 1e-6},
      {"bracket_oracle", 1e-4},     {"jacobi", 1e-4},              {"poincare_derivative", 1e-6},
      {"poincare_recovery", 1e-10}, {"variation_tangent", 1e-4},   {"variation_round_trip", 1e-5},
      {"sd_axioms", 1e-10},         {"diagram", 1e-7},             {"tangent_fd", 1e-4},
      {"tangent_develop_fd", 1e-4}, {"leibniz", 1e-6},             {"evol_left", 1e-10},
      {"evol_left_512", 1e-7},      {"reparam_law", 1e-7},         {"exp_constant", 1e-10},
      {"naturality", 1e-8},         {"reparam_naturality", 1e-9},
  };
  return t;
}

inline ScenarioConfig apply_overrides(ScenarioConfig c, const RunOptions& opt) {
  if (opt.out) c.output.dir = *opt.out;
  if (opt.steps) c.evol.steps = *opt.steps;
  if (opt.integrator) c.evol.integrator = *opt.integrator;
  if (opt.seed) c.seed = *opt.seed;
  validate(c);
  for (const auto& [k, v] : c.tolerances)
    if (!default_tolerances().count(k)) throw Error(ErrorKind::Config, "unknown tolerance '" + k + "'");
  return c;
}

// ---------------------------------------------------------------------------
// Scenario instantiation

struct Scenario {
  ScenarioConfig config;
  const LieGroupSpec* group = nullptr;
  Domain domain;
  Grid grid;
  EvolConfig evol;
  OneForm form;
  OneForm form2;
  std::vector<GFunction> functions;
  std::vector<AlgebraCurve> curves;

  double tol(const std::string& name) const {
    if (auto it = config.tolerances.find(name); it != config.tolerances.end()) return it->second;
    return default_tolerances().at(name);
  }

  /// A cheaper grid for nested checks: at most `per_axis` points per axis.
  Grid small_grid(int per_axis) const {
    Grid g = grid;
    for (auto& r : g.resolution) r = std::min(r, per_axis);
    return g;
  }

  const LieGroupSpec& g() const { return *group; }
};

namespace detail {

inline std::string default_form2(const LieGroupSpec& g, int dim, const std::string& form) {
  if (dim >= 2 && g.algebra_dim() >= 3) return "su2-zcc:0.8,1.1";
  return form;
}

inline std::vector<std::string> default_functions(const LieGroupSpec& g, int dim) {
  const auto a = basis_triple(g, 0);
  if (dim == 1) return {"poly:" + a[0] + ",0.5,-0.3,0.2", "poly:" + a[1] + ",-0.4,0.1,0.3", "poly:" + a[2] + ",0.2,0.6,-0.1"};
  return {"quad:" + a[0] + "," + a[1] + "," + a[2], "poly:" + a[1] + ",0.3,-0.5,0.2,0.4,0.1",
          "quad:" + a[2] + "," + a[0] + "," + a[1]};
}

inline std::vector<std::string> default_curves(const LieGroupSpec& g) {
  const auto a = basis_triple(g, 0);
  return {"trig:" + a[0] + "," + a[1] + "," + a[2], "poly:" + a[2] + "," + a[0] + "," + a[1]};
}

}  // namespace detail

inline Scenario build_scenario(const ScenarioConfig& c) {
  Scenario s;
  s.config = c;
  try {
    s.group = &group(c.group);
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  try {
    s.domain = Domain::box(c.grid.half_widths);
    s.grid.resolution = c.grid.resolution;
    s.grid.half_widths = c.grid.half_widths;
    s.evol = c.evol.to_config();
    const int d = s.domain.dim;
    s.form = make_form(*s.group, c.form, s.domain);
    s.form2 = make_form(*s.group, c.form2 ? *c.form2 : detail::default_form2(*s.group, d, c.form), s.domain);
    auto fns = c.functions.empty() ? detail::default_functions(*s.group, d) : c.functions;
    for (const auto& f : fns) s.functions.push_back(make_function(*s.group, f, s.domain));
    auto crv = detail::default_curves(*s.group);
    for (std::size_t k = 0; k < c.curves.size(); ++k) crv[k] = c.curves[k];
    for (const auto& f : crv) s.curves.push_back(make_curve(*s.group, f));
    for (const auto& p : c.path) {
      Point x(d);
      for (int i = 0; i < d; ++i) x(i) = p[i];
      if (!s.domain.contains(x)) throw Error(ErrorKind::Config, "path point outside the grid box");
    }
    for (double e : c.epsilons)
      for (int i = 0; i < std::min(d, 2); ++i)
        if (e > s.domain.half_widths[i]) throw Error(ErrorKind::Config, "holonomy loop larger than the grid box");
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    throw Error(ErrorKind::Config, e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Helpers

namespace detail {

inline double identity_distance(const GroupElement& g) {
  const auto& m = g.matrix();
  return (m - Mat::Identity(m.rows(), m.cols())).norm();
}

inline json matrix_json(const Mat& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(detail::number(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

/// Max of f over points, evaluated in parallel and reduced in order.
template <class Fn>
double max_over(const std::vector<Point>& pts, Fn&& f) {
  std::vector<double> v(pts.size(), 0.0);
  parallel_for(pts.size(), [&](std::size_t k) { v[k] = f(pts[k]); });
  double m = 0.0;
  for (double x : v) m = std::max(m, std::isnan(x) ? std::numeric_limits<double>::infinity() : x);
  return m;
}

inline std::optional<GMap> map_for_form(const LieGroupSpec& g, const std::string& id, const Domain& dom) {
  const PresetId p = PresetId::parse(id);
  if (p.name == "zero") return make_map(g, "identity", dom);
  if (p.name == "pullback-expxy" || p.name == "su2-zcc") return make_map(g, id, dom);
  return std::nullopt;
}

/// The form with a flatness certificate, or nullopt when the grid check fails.
inline std::optional<OneForm> certified(const Scenario& s, const OneForm& xi, double* residual = nullptr) {
  const auto rep = is_flat(xi, s.small_grid(9), s.tol("flatness"));
  if (residual) *residual = rep.max_residual;
  if (!rep.flat) return std::nullopt;
  OneForm out = xi;
  out.set_flatness({rep.max_residual, s.tol("flatness"), "grid"});
  return out;
}

inline std::vector<Point> random_points(Xoshiro256& rng, const Domain& dom, int count, double shrink = 0.95) {
  std::vector<Point> out;
  for (int k = 0; k < count; ++k) {
    Point x(dom.dim);
    for (int i = 0; i < dom.dim; ++i) x(i) = rng.uniform(-shrink, shrink) * dom.half_widths[i];
    out.push_back(x);
  }
  return out;
}

inline AlgebraElement random_element(Xoshiro256& rng, const LieGroupSpec& g, double scale = 1.0) {
  return AlgebraElement::from_coordinates(g, rng.uniform_vector(g.algebra_dim(), -scale, scale));
}

inline std::vector<Point> interior_sample(const Scenario& s, int per_axis) {
  return interior_points(s.domain, s.small_grid(per_axis));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sections

class Runner {
 public:
  Runner(Scenario s, std::string sub) : s_(std::move(s)), rng_(s_.config.seed) {
    result_.report.subcommand = std::move(sub);
    result_.report.scenario = to_json(s_.config);
  }

  RunResult finish() { return std::move(result_); }

  Report& report() { return result_.report; }

  void artifact(const std::string& name, std::string text) {
    if (s_.config.output.wants("csv")) result_.artifacts.emplace_back(name, std::move(text));
  }

  template <class Fn>
  void timed(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    result_.report.timings.emplace_back(name, dt.count());
  }

  void check(const std::string& row, double value, const std::string& tol_name) {
    result_.report.check(row, value, s_.tol(tol_name));
  }

  // -- forms -----------------------------------------------------------------

  void flatness() {
    const auto rep = is_flat(s_.form, s_.grid, s_.tol("flatness"));
    check("flatness_residual", rep.max_residual, "flatness");
    report().diagnostics["flat"] = rep.flat;
  }

  void leibniz_and_pullbacks() {
    const auto a = basis_triple(s_.g());
    std::vector<GMap> maps{make_map(s_.g(), "expxy:" + a[0] + "," + a[1], s_.domain)};
    if (s_.domain.dim < 2) {
      maps.clear();
      maps.push_back(exp_product(s_.g(), s_.domain, {coordinate_field(0), coordinate_field(0, 0.5)},
                                 {AlgebraElement::basis(s_.g(), 0),
                                  AlgebraElement::basis(s_.g(), (1 % s_.g().algebra_dim()))},
                                 "line"));
    } else if (s_.g().algebra_dim() >= 3) {
      maps.push_back(make_map(s_.g(), "su2-zcc:0.8,1.1", s_.domain));
    }
    const Grid grid = s_.small_grid(7);
    double leib = 0.0, flat = 0.0;
    for (std::size_t i = 0; i < maps.size(); ++i)
      for (std::size_t j = 0; j < maps.size(); ++j)
        leib = std::max(leib, leibniz_check(maps[i].without_partials(), maps[j].without_partials(), grid));
    for (const auto& m : maps) flat = std::max(flat, is_flat(pullback_form(m), grid, s_.tol("flatness")).max_residual);
    check("leibniz_deviation", leib, "leibniz");
    check("pullback_mc_residual", flat, "flatness");
  }

  // -- evolution -------------------------------------------------------------

  void evolve() {
    const AlgebraCurve& x = s_.curves[0];
    EvolConfig cfg = s_.evol;
    const std::vector<int> ns{32, 64, 128, 256};
    cfg.steps = 4096;
    const GroupElement ref = evol_right(x, 1.0, cfg);
    std::vector<double> lx, ly;
    std::vector<std::vector<double>> rows;
    double drift = 0.0;
    for (int n : ns) {
      cfg.steps = n;
      const GroupElement g = evol_right(x, 1.0, cfg);
      const double err = distance(g, ref);
      const double res = g.constraint_residual();
      drift = std::max(drift, res);
      rows.push_back({static_cast<double>(n), err, res});
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(err));
    }
    const double slope = -fit_slope(lx, ly);
    report().diagnostics["convergence_order"] = detail::number(slope);
    check("convergence_order_error", std::abs(slope - 4.0), "convergence_slope");
    if (s_.evol.integrator == Integrator::Rkmk4)
      check("constraint_drift", drift, "constraint_drift");
    else
      report().diagnostics["constraint_drift"] = detail::number(drift);
    EvolConfig amb{Integrator::Rk4Ambient, 32, s_.evol.dexpinv_order};
    report().diagnostics["rk4_ambient_drift_n32"] = detail::number(evol_right(x, 1.0, amb).constraint_residual());
    artifact("convergence.csv", table_csv({"steps", "error", "constraint_residual"}, rows));
  }

  void evolution_laws() {
    const AlgebraCurve& x = s_.curves[0];
    const EvolConfig cfg = s_.evol;
    check("evol_left_vs_right", distance(evol_left(x, 1.0, cfg), evol_left_via_right(x, 1.0, cfg)), "evol_left");
    EvolConfig fine = cfg;
    fine.steps = 512;
    check("evol_left_vs_right_n512", distance(evol_left(x, 1.0, fine), evol_left_via_right(x, 1.0, fine)),
          "evol_left_512");
    const AlgebraCurve r = reparam_rhs(x, [](double t) { return t * t; }, [](double t) { return 2.0 * t; });
    check("reparameterization_law", distance(evol_right(x, 1.0, fine), evol_right(r, 1.0, fine)), "reparam_law");
    const AlgebraElement a = s_.curves[0](0.3);
    check("exp_of_constant", distance(evol_right(AlgebraCurve::constant(a), 1.0, cfg), exp(a)), "exp_constant");
  }

  // -- development -----------------------------------------------------------

  void develop_grid() {
    const DevelopedMap m = develop(s_.form, s_.grid, s_.evol);
    check("basepoint_error", m.basepoint_error, "basepoint");
    if (s_.evol.integrator == Integrator::Rkmk4)
      check("max_constraint_residual", m.max_constraint_residual, "constraint");
    else
      report().diagnostics["max_constraint_residual"] = detail::number(m.max_constraint_residual);
    if (m.flatness_residual) report().diagnostics["flatness_residual"] = detail::number(*m.flatness_residual);
    report().diagnostics["warnings"] = m.warnings;
    if (auto f = detail::map_for_form(s_.g(), s_.config.form, s_.domain)) {
      const GroupElement f0inv = invert((*f)(s_.domain.origin()));
      double dev = 0.0;
      for (std::size_t k = 0; k < m.points.size(); ++k)
        dev = std::max(dev, distance(m.values[k], compose((*f)(m.points[k]), f0inv)));
      check("round_trip", dev, "round_trip");
    }
    // log derivative of the developed map against the form, FD in x
    const OneForm& xi = s_.form;
    const EvolConfig cfg = s_.evol;
    const GMap dev_map(s_.g(), s_.domain, [xi, cfg](const Point& x) { return develop_at(xi, x, cfg); }, {}, "Evol");
    const OneForm back = pullback_form(dev_map, FdOptions{1e-4});
    const auto pts = detail::interior_sample(s_, 5);
    const double ld = detail::max_over(pts, [&](const Point& x) {
      const Frame a = back.at(x), b = xi.at(x);
      double e = 0.0;
      for (int i = 0; i < xi.dim(); ++i) e = std::max(e, distance(a[i], b[i]));
      return e;
    });
    check("log_derivative_round_trip", ld, "log_derivative");
    path_independence(10);
    artifact("develop.csv", group_csv(s_.domain.dim, s_.g(), m.points, m.values));
  }

  void path_independence(int count) {
    const auto pts = detail::random_points(rng_, s_.domain, count);
    const double dev = detail::max_over(pts, [&](const Point& x) {
      return distance(develop_path(s_.form, PathCurve::radial(x), s_.evol),
                      develop_path(s_.form, PathCurve::axis_parallel(x), s_.evol));
    });
    check("path_independence_deviation", dev, "path_independence");
  }

  void develop_path_cmd() {
    const int d = s_.domain.dim;
    std::vector<Point> verts;
    if (s_.config.path.empty()) {
      Point corner(d);
      for (int i = 0; i < d; ++i) corner(i) = 0.5 * s_.domain.half_widths[i];
      verts = PathCurve::axis_parallel(corner).vertices;
    } else {
      for (const auto& p : s_.config.path) {
        Point x(d);
        for (int i = 0; i < d; ++i) x(i) = p[i];
        verts.push_back(x);
      }
    }
    const PathCurve path = PathCurve::polyline(verts);
    const GroupElement along = develop_path(s_.form, path, s_.evol);
    GroupElement direct = develop_at(s_.form, path.end(), s_.evol);
    if (path.start().norm() > 0.0) direct = compose(direct, invert(develop_at(s_.form, path.start(), s_.evol)));
    report().diagnostics["transport"] = detail::matrix_json(along.matrix());
    report().diagnostics["constraint_residual"] = detail::number(along.constraint_residual());
    check("path_vs_radial_deviation", distance(along, direct), "path_independence");
    std::vector<Point> ends{path.end()};
    artifact("transport.csv", group_csv(d, s_.g(), ends, {along}));
  }

  void holonomy_cmd() {
    if (s_.domain.dim < 2) {
      report().diagnostics["holonomy"] = "needs a domain of dimension >= 2";
      return;
    }
    std::vector<double> eps = s_.config.epsilons;
    if (eps.empty()) eps = {0.2, 0.1, 0.05, 0.025};
    const auto scan = holonomy_scan(s_.form, eps, 0, 1, s_.evol);
    const auto rep = is_flat(s_.form, s_.small_grid(9), s_.tol("flatness"));
    std::vector<std::vector<double>> rows;
    double worst = 0.0;
    for (std::size_t k = 0; k < eps.size(); ++k) {
      rows.push_back({eps[k], scan.deviation[k]});
      worst = std::max(worst, scan.deviation[k]);
    }
    report().diagnostics["holonomy_slope"] = detail::number(scan.slope);
    report().diagnostics["flat"] = rep.flat;
    if (rep.flat)
      check("holonomy_max_deviation", worst, "holonomy_flat");
    else
      check("holonomy_slope_error", std::abs(scan.slope - 2.0), "holonomy_slope");
    artifact("holonomy.csv", table_csv({"eps", "deviation"}, rows));
  }

  void naturality() {
    const Grid grid = s_.small_grid(5);
    check("naturality_det", naturality_check(s_.form, Homomorphism::Determinant, grid, s_.evol), "naturality");
    check("naturality_inclusion", naturality_check(s_.form, Homomorphism::InclusionGL, grid, s_.evol),
          "naturality");
    check("reparam_naturality", reparam_naturality_check(s_.form, 0.5, 5, s_.evol), "reparam_naturality");
  }

  // -- flat forms as a group ---------------------------------------------------

  void group_law() {
    double r1 = 0.0, r2 = 0.0;
    const auto xi = detail::certified(s_, s_.form, &r1);
    const auto eta = detail::certified(s_, s_.form2, &r2);
    check("star_inputs_flat", std::max(r1, r2), "flatness");
    if (xi && eta) {
      const OneForm prod = star(*xi, *eta, s_.evol);
      const OneForm inv = star(*xi, star_inverse(*xi, s_.evol), s_.evol);
      // corners: the longest rays
      const auto pts = s_.small_grid(2).points();
      check("star_residual", detail::max_over(pts, [&](const Point& x) {
              return distance(develop_at(prod, x, s_.evol),
                              compose(develop_at(*xi, x, s_.evol), develop_at(*eta, x, s_.evol)));
            }),
            "star");
      check("inverse_residual",
            detail::max_over(pts, [&](const Point& x) { return detail::identity_distance(develop_at(inv, x, s_.evol)); }),
            "inverse");
    }
    brackets();
  }

  void brackets() {
    std::vector<ClosedOneForm> b;
    for (const auto& h : s_.functions) b.push_back(ClosedOneForm::certify(exact_form(h), s_.small_grid(9), 1e-6));
    // brackets of pointed potentials vanish at the origin; sample away from it
    const auto pts = detail::interior_sample(s_, 4);
    double oracle = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t j = i + 1; j < b.size(); ++j) {
        const ClosedOneForm br = flat_bracket(b[i], b[j]);
        oracle = std::max(oracle, detail::max_over(pts, [&](const Point& x) {
          const Frame u = br.form().at(x);
          const Frame v = bracket_by_commutator(b[i].form(), b[j].form(), x);
          double e = 0.0;
          for (int k = 0; k < s_.domain.dim; ++k) e = std::max(e, distance(u[k], v[k]));
          return e;
        }));
      }
    check("bracket_vs_oracle", oracle, "bracket_oracle");
    if (b.size() == 3) {
      const int n = 5;
      const ClosedOneForm t1 = flat_bracket(b[0], flat_bracket(b[1], b[2], n), n);
      const ClosedOneForm t2 = flat_bracket(b[1], flat_bracket(b[2], b[0], n), n);
      const ClosedOneForm t3 = flat_bracket(b[2], flat_bracket(b[0], b[1], n), n);
      check("jacobi_residual", detail::max_over(pts, [&](const Point& x) {
              const Frame u = t1.form().at(x), v = t2.form().at(x), w = t3.form().at(x);
              double e = 0.0;
              for (int k = 0; k < s_.domain.dim; ++k) e = std::max(e, (u[k] + v[k] + w[k]).norm());
              return e;
            }),
            "jacobi");
    }
  }

  void poincare() {
    const auto pts = s_.small_grid(7).points();
    const auto inner = detail::interior_sample(s_, 7);
    double rec = 0.0, der = 0.0;
    for (const auto& h0 : s_.functions) {
      const ClosedOneForm beta = ClosedOneForm::certify(exact_form(h0), s_.small_grid(9), 1e-6);
      const GFunction h = poincare_inverse(beta).without_gradient();
      const AlgebraElement base = h0(s_.domain.origin());
      rec = std::max(rec, detail::max_over(pts, [&](const Point& x) { return distance(h(x), h0(x) - base); }));
      der = std::max(der, detail::max_over(inner, [&](const Point& x) {
        const Frame g = h.gradient(x), b = beta.form().at(x);
        double e = 0.0;
        for (int k = 0; k < s_.domain.dim; ++k) e = std::max(e, distance(g[k], b[k]));
        return e;
      }));
    }
    check("poincare_recovery", rec, "poincare_recovery");
    check("poincare_derivative", der, "poincare_derivative");
  }

  void variation() {
    double r = 0.0;
    const auto xi = detail::certified(s_, s_.form, &r);
    check("variation_input_flat", r, "flatness");
    if (!xi) return;
    const auto pts = s_.small_grid(5).points();
    const auto inner = detail::interior_sample(s_, 5);
    double tangent = 0.0, round = 0.0;
    for (const auto& h : s_.functions) {
      const OneForm eta = variation_form(*xi, h, s_.evol);
      tangent = std::max(tangent, max_pair_residual(inner, s_.domain.dim, [&](const Point& x, int i, int j) {
                           return linearized_mc_residual(*xi, eta, x, i, j).norm();
                         }));
      ReconstructOptions opt;
      opt.tangent_tolerance = s_.tol("variation_tangent");
      opt.check_grid = 5;
      const GFunction back = reconstruct_h(*xi, eta, s_.evol, opt);
      const AlgebraElement base = h(s_.domain.origin());
      round = std::max(round, detail::max_over(pts, [&](const Point& x) { return distance(back(x), h(x) - base); }));
    }
    check("variation_tangent_residual", tangent, "variation_tangent");
    check("variation_round_trip", round, "variation_round_trip");
  }

  // -- tangent group -----------------------------------------------------------

  void sd_axioms() {
    const LieGroupSpec& g = s_.g();
    auto elem = [&] { return SemidirectElement{detail::random_element(rng_, g), exp(detail::random_element(rng_, g))}; };
    auto alg = [&] { return SemidirectAlgebra{detail::random_element(rng_, g), detail::random_element(rng_, g)}; };
    double assoc = 0.0, hom = 0.0, jac = 0.0, unit = 0.0;
    for (int k = 0; k < 8; ++k) {
      const auto a = elem(), b = elem(), c = elem();
      const auto u = alg(), v = alg(), w = alg();
      assoc = std::max(assoc, distance(sd_multiply(sd_multiply(a, b), c), sd_multiply(a, sd_multiply(b, c))));
      unit = std::max(unit, distance(sd_multiply(a, sd_invert(a)), SemidirectElement::identity(g)));
      hom = std::max(hom, distance(sd_Ad(a, sd_bracket(u, v)), sd_bracket(sd_Ad(a, u), sd_Ad(a, v))));
      hom = std::max(hom, distance(sd_Ad(sd_multiply(a, b), u), sd_Ad(a, sd_Ad(b, u))));
      const SemidirectAlgebra j =
          sd_bracket(u, sd_bracket(v, w)) + sd_bracket(v, sd_bracket(w, u)) + sd_bracket(w, sd_bracket(u, v));
      jac = std::max(jac, j.norm());
    }
    check("sd_associativity", assoc, "sd_axioms");
    check("sd_inverse", unit, "sd_axioms");
    check("sd_ad_homomorphism", hom, "sd_axioms");
    check("sd_jacobi", jac, "sd_axioms");
  }

  void tangent() {
    sd_axioms();
    if (s_.evol.integrator != Integrator::Rkmk4) {
      report().diagnostics["tangent"] = "semidirect evolution needs rkmk4";
      return;
    }
    const AlgebraCurve& x = s_.curves[0];
    const AlgebraCurve& y = s_.curves[1];
    EvolConfig cfg = s_.evol;
    if (cfg.steps % 2) ++cfg.steps;
    const auto sd = evol_sd(y, x, cfg, std::numeric_limits<double>::infinity());
    check("diagram_deviation", sd.deviation, "diagram");
    const double s = 1e-5;
    const GroupElement base = evol_right(x, 1.0, cfg);
    const Mat fd = (evol_right(x + scaled(y, s), 1.0, cfg).matrix() - evol_right(x + scaled(y, -s), 1.0, cfg).matrix()) /
                   (2.0 * s);
    check("tangent_vs_fd", distance(tangent_evol(x, y, cfg), kappa_left(base, fd)), "tangent_fd");

    double r = 0.0;
    const auto xi = detail::certified(s_, s_.form, &r);
    check("tangent_input_flat", r, "flatness");
    if (!xi) return;
    const OneForm eta = variation_form(*xi, s_.functions[0], cfg);
    const Grid grid = s_.small_grid(5);
    const TangentDevelopment td = tangent_develop(*xi, eta, grid, cfg, s_.tol("variation_tangent"), 5);
    auto shifted = [&](double sign) {
      return OneForm(
          s_.g(), s_.domain,
          [xi = *xi, eta, sign, s, d = s_.domain.dim](const Point& p) {
            const Frame a = xi.frame_fn()(p), b = eta.frame_fn()(p);
            Frame out;
            for (int i = 0; i < d; ++i) out[i] = a[i] + (sign * s) * b[i];
            return out;
          },
          "shifted");
    };
    const OneForm plus = shifted(1.0), minus = shifted(-1.0);
    std::vector<double> fd_dev(td.points.size()), base_dev(td.points.size());
    parallel_for(td.points.size(), [&](std::size_t k) {
      const Point& p = td.points[k];
      const GroupElement f = develop_at(*xi, p, cfg);
      const Mat diff = (develop_at(plus, p, cfg).matrix() - develop_at(minus, p, cfg).matrix()) / (2.0 * s);
      fd_dev[k] = distance(td.values[k].x, kappa_right(f, diff));
      base_dev[k] = distance(td.values[k].g, f);
    });
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < fd_dev.size(); ++k) {
      m1 = std::max(m1, fd_dev[k]);
      m2 = std::max(m2, base_dev[k]);
    }
    check("tangent_develop_vs_fd", m1, "tangent_develop_fd");
    report().check("tangent_develop_base_identical", m2, 0.0);

    std::vector<Mat> fibre;
    std::vector<GroupElement> base_vals;
    for (const auto& v : td.values) {
      fibre.push_back(v.x.matrix());
      base_vals.push_back(v.g);
    }
    artifact("tangent_fibre.csv", matrix_csv(s_.domain.dim, s_.g().ambient_dim(), td.points, fibre));
    artifact("tangent_base.csv", group_csv(s_.domain.dim, s_.g(), td.points, base_vals));
  }

  // -- dispatch ---------------------------------------------------------------

  void run(const std::string& sub) {
    if (sub == "check-flat") {
      timed("check-flat", [&] { flatness(); });
    } else if (sub == "develop") {
      timed("develop", [&] { develop_grid(); });
    } else if (sub == "develop-path") {
      timed("develop-path", [&] { develop_path_cmd(); });
    } else if (sub == "holonomy-scan") {
      timed("holonomy-scan", [&] { holonomy_cmd(); });
    } else if (sub == "evolve") {
      timed("evolve", [&] { evolve(); });
    } else if (sub == "group-law") {
      timed("group-law", [&] { group_law(); });
    } else if (sub == "variation") {
      timed("variation", [&] { variation(); });
    } else if (sub == "tangent") {
      timed("tangent", [&] { tangent(); });
    } else if (sub == "verify-all") {
      verify_all();
    } else {
      throw Error(ErrorKind::Config, "unknown subcommand '" + sub + "'");
    }
  }

  void verify_all() {
    auto& cov = report().coverage;
    timed("leibniz-rule+maurer-cartan", [&] {
      leibniz_and_pullbacks();
      flatness();
    });
    cov.push_back("leibniz-rule+maurer-cartan");
    timed("evolution-laws", [&] {
      evolution_laws();
      evolve();
    });
    cov.push_back("evolution-laws");
    timed("development", [&] {
      develop_grid();
      holonomy_cmd();
      naturality();
    });
    cov.push_back("development");
    timed("flat-form-group", [&] { group_law(); });
    cov.push_back("flat-form-group");
    timed("poincare-operator", [&] { poincare(); });
    cov.push_back("poincare-operator");
    timed("variation", [&] { variation(); });
    cov.push_back("variation");
    timed("tangent-group", [&] { tangent(); });
    cov.push_back("tangent-group");
  }

 private:
  Scenario s_;
  Xoshiro256 rng_;
  RunResult result_;
};

/// Runs a subcommand. Errors in the configuration surface as ErrorKind::Config;
/// failures of a numerical precondition during a check surface as other kinds.
inline RunResult run(const std::string& sub, const ScenarioConfig& config, const RunOptions& opt = {}) {
  bool known = false;
  for (const auto& s : subcommands()) known = known || s == sub;
  if (!known) throw Error(ErrorKind::Config, "unknown subcommand '" + sub + "'");
  const ScenarioConfig c = apply_overrides(config, opt);
  Runner r(build_scenario(c), sub);
  r.run(sub);
  RunResult out = r.finish();
  if (c.output.wants("json")) out.artifacts.emplace_back("report.json", report_text(out.report));
  return out;
}

/// Writes every artifact under `dir`.
inline void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  for (const auto& [name, text] : r.artifacts) write_file(dir / name, text);
}

}  // namespace cartan::cli
