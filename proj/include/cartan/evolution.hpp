#pragma once

/**
 * @file evolution.hpp
 * @brief Evolution operators and the development of flat forms.
 *
 * Right evolution solves g' = X(t) g, g(0) = e; left evolution solves
 * g' = g X(t). A form xi on a star-shaped box is developed into
 * f(x) = evol_r(t -> xi_{t x}(x)) along the radial segment from the origin,
 * which is parallel transport for the flat connection built from xi.
 */

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cartan/forms.hpp"
#include "cartan/integrator.hpp"
#include "cartan/lie_group.hpp"
#include "cartan/parallel.hpp"

namespace cartan {

/// A smooth curve t -> X(t) in the Lie algebra.
struct AlgebraCurve {
  const LieGroupSpec* group = nullptr;
  std::function<AlgebraElement(double)> value;
  std::string label;

  AlgebraCurve() = default;
  AlgebraCurve(const LieGroupSpec& g, std::function<AlgebraElement(double)> fn, std::string l = {})
      : group(&g), value(std::move(fn)), label(std::move(l)) {}

  static AlgebraCurve constant(const AlgebraElement& a) {
    return AlgebraCurve(a.spec(), [a](double) { return a; }, "const");
  }

  AlgebraElement operator()(double t) const {
    AlgebraElement x = value(t);
    if (!x.matrix().allFinite()) throw Error(ErrorKind::NonFinite, "algebra curve sample at t=" + std::to_string(t));
    return x;
  }
};

inline AlgebraCurve operator-(const AlgebraCurve& c) {
  return AlgebraCurve(*c.group, [c](double t) { return -c(t); }, "-" + c.label);
}

inline AlgebraCurve operator+(const AlgebraCurve& a, const AlgebraCurve& b) {
  return AlgebraCurve(*a.group, [a, b](double t) { return a(t) + b(t); }, a.label + "+" + b.label);
}

inline AlgebraCurve scaled(const AlgebraCurve& c, double s) {
  return AlgebraCurve(*c.group, [c, s](double t) { return s * c(t); }, c.label);
}

namespace detail {

template <class Rhs, class Observer>
GroupElement evolve_dispatch(const LieGroupSpec& spec, Rhs&& rhs, double t0, double t1,
                             const EvolConfig& cfg, bool left, Observer&& observe) {
  cfg.validate();
  if (cfg.integrator == Integrator::Rk4Ambient)
    return rk4_ambient_evolve(spec, rhs, t0, t1, cfg.steps, left, observe);
  if (left)
    return rkmk4_evolve(OppositeOps<MatrixGroupOps>{MatrixGroupOps(spec)}, rhs, t0, t1, cfg.steps,
                        cfg.dexpinv_order, observe);
  return rkmk4_evolve(MatrixGroupOps(spec), rhs, t0, t1, cfg.steps, cfg.dexpinv_order, observe);
}

struct NoObserver {
  void operator()(int, double, const GroupElement&) const {}
};

}  // namespace detail

/// evol_r(X) on [0, T]: the value g(T) of g' = X(t) g, g(0) = e.
inline GroupElement evol_right(const AlgebraCurve& x, double horizon, const EvolConfig& cfg = {}) {
  return detail::evolve_dispatch(*x.group, x, 0.0, horizon, cfg, false, detail::NoObserver{});
}

/// The whole right evolution curve sampled at the step nodes t_k = k T / N.
inline std::vector<TimedGroupElement> Evol_right(const AlgebraCurve& x, double horizon,
                                                 const EvolConfig& cfg = {}) {
  std::vector<TimedGroupElement> out;
  out.reserve(cfg.steps + 1);
  detail::evolve_dispatch(*x.group, x, 0.0, horizon, cfg, false,
                          [&](int, double t, const GroupElement& g) { out.push_back({t, g}); });
  return out;
}

/// evol_l(X) on [0, T]: g' = g X(t), g(0) = e.
inline GroupElement evol_left(const AlgebraCurve& x, double horizon, const EvolConfig& cfg = {}) {
  return detail::evolve_dispatch(*x.group, x, 0.0, horizon, cfg, true, detail::NoObserver{});
}

inline std::vector<TimedGroupElement> Evol_left(const AlgebraCurve& x, double horizon,
                                                const EvolConfig& cfg = {}) {
  std::vector<TimedGroupElement> out;
  out.reserve(cfg.steps + 1);
  detail::evolve_dispatch(*x.group, x, 0.0, horizon, cfg, true,
                          [&](int, double t, const GroupElement& g) { out.push_back({t, g}); });
  return out;
}

/// Left evolution through the identity evol_l(X) = evol_r(-X)^-1.
inline GroupElement evol_left_via_right(const AlgebraCurve& x, double horizon,
                                        const EvolConfig& cfg = {}) {
  return invert(evol_right(-x, horizon, cfg));
}

/// t -> f'(t) X(f(t)), the right-hand side appearing in the reparameterization law
///   Evol_r(X)(f(t)) = Evol_r(f' (X o f))(t) Evol_r(X)(f(0)).
inline AlgebraCurve reparam_rhs(const AlgebraCurve& x, std::function<double(double)> f,
                                std::function<double(double)> fprime) {
  return AlgebraCurve(
      *x.group, [x, f, fprime](double t) { return fprime(t) * x(f(t)); },
      "reparam(" + x.label + ")");
}

// ---------------------------------------------------------------------------
// Paths and development

/// A polyline through the chart, or a smooth parameterized curve on [0, 1].
struct PathCurve {
  std::vector<Point> vertices;
  std::function<Point(double)> curve;
  std::function<Point(double)> velocity;

  static PathCurve polyline(std::vector<Point> pts) {
    if (pts.size() < 2) throw Error(ErrorKind::BadArgument, "a polyline needs at least two vertices");
    PathCurve p;
    p.vertices = std::move(pts);
    return p;
  }

  static PathCurve radial(const Point& x) { return polyline({Point::Zero(x.size()), x}); }

  /// Axis-parallel path 0 -> x_1 e_1 -> x_1 e_1 + x_2 e_2 -> ... -> x.
  static PathCurve axis_parallel(const Point& x) {
    std::vector<Point> pts{Point::Zero(x.size())};
    Point cur = Point::Zero(x.size());
    for (int i = 0; i < x.size(); ++i) {
      cur(i) = x(i);
      pts.push_back(cur);
    }
    return polyline(std::move(pts));
  }

  /// Counter-clockwise square of side eps in the (i, j) plane starting at the origin.
  static PathCurve square_loop(int dim, int i, int j, double eps) {
    Point p0 = Point::Zero(dim);
    Point p1 = p0, p2 = p0, p3 = p0;
    p1(i) = eps;
    p2(i) = eps;
    p2(j) = eps;
    p3(j) = eps;
    return polyline({p0, p1, p2, p3, p0});
  }

  static PathCurve smooth(std::function<Point(double)> c, std::function<Point(double)> dc) {
    PathCurve p;
    p.curve = std::move(c);
    p.velocity = std::move(dc);
    return p;
  }

  bool is_polyline() const { return !vertices.empty(); }
  Point start() const { return is_polyline() ? vertices.front() : curve(0.0); }
  Point end() const { return is_polyline() ? vertices.back() : curve(1.0); }
};

namespace detail {

inline void require_path_inside(const OneForm& xi, const PathCurve& path) {
  if (path.is_polyline()) {
    for (const auto& v : path.vertices)
      if (!xi.domain().contains(v)) throw Error(ErrorKind::OutOfDomain, "path vertex outside the chart");
  }
}

}  // namespace detail

/// Transport along the segment a -> b: evol_r of t -> xi_{a + t (b - a)}(b - a) over [0, 1].
inline GroupElement develop_segment(const OneForm& xi, const Point& a, const Point& b,
                                    const EvolConfig& cfg = {}) {
  const Point dir = b - a;
  const auto& frame = xi.frame_fn();
  const LieGroupSpec& g = xi.group();
  const int d = xi.dim();
  auto rhs = [&](double t) {
    AlgebraElement out = contract(frame(Point(a + t * dir)), dir, g, d);
    if (!out.matrix().allFinite()) throw Error(ErrorKind::NonFinite, "form value along path");
    return out;
  };
  return detail::evolve_dispatch(g, rhs, 0.0, 1.0, cfg, false, detail::NoObserver{});
}

/// Parallel transport from path.start() to path.end() starting at e. Each
/// polyline segment is integrated with cfg.steps steps.
inline GroupElement develop_path(const OneForm& xi, const PathCurve& path, const EvolConfig& cfg = {}) {
  detail::require_path_inside(xi, path);
  if (path.is_polyline()) {
    GroupElement g = GroupElement::identity(xi.group());
    for (std::size_t k = 0; k + 1 < path.vertices.size(); ++k)
      g = compose(develop_segment(xi, path.vertices[k], path.vertices[k + 1], cfg), g);
    return g;
  }
  const auto& frame = xi.frame_fn();
  const LieGroupSpec& g = xi.group();
  auto rhs = [&](double t) {
    const Point x = path.curve(t);
    xi.domain().require(x);
    return contract(frame(x), path.velocity(t), g, xi.dim());
  };
  return detail::evolve_dispatch(g, rhs, 0.0, 1.0, cfg, false, detail::NoObserver{});
}

/// f(x) = Evol(xi)(x) at a single point: transport along the radial segment.
inline GroupElement develop_at(const OneForm& xi, const Point& x, const EvolConfig& cfg = {}) {
  xi.domain().require(x);
  return develop_path(xi, PathCurve::radial(x), cfg);
}

struct DevelopOptions {
  bool check_flatness = true;
  double flat_tolerance = 1e-4;
  int flat_grid = 9;
};

struct DevelopedMap {
  Grid grid;
  std::vector<Point> points;
  std::vector<GroupElement> values;
  std::vector<double> constraint_residuals;
  double max_constraint_residual = 0.0;
  double basepoint_error = 0.0;
  std::optional<double> flatness_residual;
  std::vector<std::string> warnings;
};

/// Develops xi on every grid point (in parallel; results do not depend on the
/// worker count). Non-flat input is developed anyway and flagged in `warnings`.
inline DevelopedMap develop(const OneForm& xi, const Grid& grid, const EvolConfig& cfg = {},
                            const DevelopOptions& opt = {}) {
  cfg.validate();
  if (grid.dim() != xi.dim()) throw Error(ErrorKind::BadArgument, "grid and form dimensions differ");
  DevelopedMap out;
  out.grid = grid;
  out.points = grid.points();
  for (const auto& p : out.points) xi.domain().require(p);
  if (opt.check_flatness && !xi.flatness()) {
    const auto rep = is_flat(xi, Grid::uniform(xi.domain(), opt.flat_grid), opt.flat_tolerance);
    out.flatness_residual = rep.max_residual;
    if (!rep.flat)
      out.warnings.push_back("form '" + xi.label() + "' is not flat (residual " +
                             std::to_string(rep.max_residual) + "); development is path dependent");
  } else if (xi.flatness()) {
    out.flatness_residual = xi.flatness()->max_residual;
  }
  out.values.resize(out.points.size());
  out.constraint_residuals.resize(out.points.size());
  parallel_for(out.points.size(), [&](std::size_t k) {
    out.values[k] = develop_at(xi, out.points[k], cfg);
    out.constraint_residuals[k] = out.values[k].constraint_residual();
  });
  for (double r : out.constraint_residuals) out.max_constraint_residual = std::max(out.max_constraint_residual, r);
  const GroupElement base = develop_at(xi, xi.domain().origin(), cfg);
  out.basepoint_error = (base.matrix() - Mat::Identity(base.matrix().rows(), base.matrix().cols())).norm();
  return out;
}

/// Transport around a closed loop.
inline GroupElement holonomy(const OneForm& xi, const PathCurve& loop, const EvolConfig& cfg = {}) {
  if ((loop.end() - loop.start()).norm() > 1e-9) throw Error(ErrorKind::BadArgument, "loop is not closed");
  return develop_path(xi, loop, cfg);
}

struct HolonomyScan {
  std::vector<double> eps;
  /// |hol - e| in the Frobenius norm; equals |log hol| to leading order.
  std::vector<double> deviation;
  double slope = 0.0;
};

/// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Square loops of side eps in the (i, j) plane; slope of log|hol - e| vs log eps.
inline HolonomyScan holonomy_scan(const OneForm& xi, const std::vector<double>& eps, int i, int j,
                                  const EvolConfig& cfg = {}) {
  HolonomyScan s;
  s.eps = eps;
  std::vector<double> lx, ly;
  for (double e : eps) {
    const GroupElement h = holonomy(xi, PathCurve::square_loop(xi.dim(), i, j, e), cfg);
    const double dev = (h.matrix() - Mat::Identity(h.matrix().rows(), h.matrix().cols())).norm();
    s.deviation.push_back(dev);
    lx.push_back(std::log(e));
    ly.push_back(std::log(dev));
  }
  s.slope = fit_slope(lx, ly);
  return s;
}

/// omega^xi_(x, g)(Y, V) = kappa_l(g, V) - Ad(g^-1) xi_x(Y).
inline AlgebraElement connection_omega(const OneForm& xi, const Point& x, const GroupElement& g,
                                       const Point& y, const Mat& v) {
  return kappa_left(g, v) - Ad(invert(g), eval(xi, x, y));
}

// ---------------------------------------------------------------------------
// Naturality

enum class Homomorphism {
  /// det : G -> R+, with derivative trace.
  Determinant,
  /// G -> gl(n) inclusion, with derivative the identity.
  InclusionGL,
};

struct HomomorphismImage {
  const LieGroupSpec* target;
  std::function<GroupElement(const GroupElement&)> map;
  std::function<AlgebraElement(const AlgebraElement&)> derivative;
};

inline HomomorphismImage homomorphism(Homomorphism hom, const LieGroupSpec& source) {
  if (hom == Homomorphism::Determinant) {
    const LieGroupSpec& rp = group("rplus");
    return {&rp,
            [&rp](const GroupElement& g) {
              Mat m(1, 1);
              m(0, 0) = g.matrix().determinant();
              return GroupElement::from_matrix(rp, m);
            },
            [&rp](const AlgebraElement& x) {
              Mat m(1, 1);
              m(0, 0) = x.matrix().trace();
              return AlgebraElement::unchecked(rp, m);
            }};
  }
  const int n = source.ambient_dim();
  const LieGroupSpec& gl = group("gl" + std::to_string(n));
  return {&gl, [&gl](const GroupElement& g) { return GroupElement::unchecked(gl, g.matrix()); },
          [&gl](const AlgebraElement& x) { return AlgebraElement::unchecked(gl, x.matrix()); }};
}

/// phi' o xi as a form with values in the target algebra.
inline OneForm push_forward(const OneForm& xi, const HomomorphismImage& hom) {
  return OneForm(
      *hom.target, xi.domain(),
      [xi, d = hom.derivative](const Point& x) {
        const Frame f = xi.frame_fn()(x);
        Frame out;
        for (int i = 0; i < xi.dim(); ++i) out[i] = d(f[i]);
        return out;
      },
      "push(" + xi.label() + ")");
}

/// max over the grid of |phi(Evol_G(xi)(x)) - Evol_H(phi' o xi)(x)|.
inline double naturality_check(const OneForm& xi, Homomorphism hom, const Grid& grid,
                               const EvolConfig& cfg = {}) {
  const HomomorphismImage h = homomorphism(hom, xi.group());
  const OneForm pushed = push_forward(xi, h);
  const auto pts = grid.points();
  std::vector<double> dev(pts.size(), 0.0);
  parallel_for(pts.size(), [&](std::size_t k) {
    const GroupElement lhs = h.map(develop_at(xi, pts[k], cfg));
    const GroupElement rhs = develop_at(pushed, pts[k], cfg);
    dev[k] = distance(lhs, rhs);
  });
  double m = 0.0;
  for (double v : dev) m = std::max(m, v);
  return m;
}

/// max over y in the grid of |Evol(h^* xi)(y) - Evol(xi)(h(y))| for h(y) = lambda y.
/// The grid lives in the rescaled domain of h^* xi.
inline double reparam_naturality_check(const OneForm& xi, double lambda, int per_axis,
                                       const EvolConfig& cfg = {}) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::BadArgument, "scale must be positive");
  Domain small = xi.domain();
  for (int i = 0; i < small.dim; ++i) small.half_widths[i] /= lambda;
  const Eigen::MatrixXd lin = lambda * Eigen::MatrixXd::Identity(small.dim, small.dim);
  const OneForm pulled = pullback_linear(xi, lin, small);
  const auto pts = Grid::uniform(small, per_axis).points();
  std::vector<double> dev(pts.size(), 0.0);
  parallel_for(pts.size(), [&](std::size_t k) {
    const Point& y = pts[k];
    dev[k] = distance(develop_at(pulled, y, cfg), develop_at(xi, Point(lambda * y), cfg));
  });
  double m = 0.0;
  for (double v : dev) m = std::max(m, v);
  return m;
}

}  // namespace cartan
