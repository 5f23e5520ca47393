#pragma once

/**
 * @file semidirect.hpp
 * @brief The tangent group TG as the semidirect product g x| G.
 *
 * Right trivialization identifies T_g G with g, and TG with pairs (X, g):
 *   (X, g)(Y, h) = (X + Ad(g)Y, g h),   (X, g)^-1 = (-Ad(g^-1)X, g^-1).
 * Its Lie algebra g x| g has
 *   Ad((X, g))(Y, Z) = (Ad(g)Y - [Ad(g)Z, X], Ad(g)Z),
 *   [(X1, Y1), (X2, Y2)] = ([Y1, X2] - [Y2, X1], [Y1, Y2]).
 * Evolution in g x| G runs through the same RKMK code as in G, so the G part
 * of every semidirect evolution is bit-identical to the plain one.
 */

#include <string>
#include <vector>

#include "cartan/evolution.hpp"
#include "cartan/forms.hpp"
#include "cartan/integrator.hpp"
#include "cartan/quadrature.hpp"

namespace cartan {

/// (X, g) in g x| G; X is the right-trivialized tangent vector X g at g.
struct SemidirectElement {
  AlgebraElement x;
  GroupElement g;

  static SemidirectElement identity(const LieGroupSpec& spec) {
    return {AlgebraElement::zero(spec), GroupElement::identity(spec)};
  }

  const LieGroupSpec& spec() const { return g.spec(); }

  void check_same(const SemidirectElement& o) const {
    g.check_same(o.g);
    g.check_same(o.x);
  }
};

/// (X, Y) in g x| g: X is the fibre part, Y the base part.
struct SemidirectAlgebra {
  AlgebraElement x;
  AlgebraElement y;

  static SemidirectAlgebra zero(const LieGroupSpec& spec) {
    return {AlgebraElement::zero(spec), AlgebraElement::zero(spec)};
  }

  const LieGroupSpec& spec() const { return y.spec(); }

  friend SemidirectAlgebra operator+(const SemidirectAlgebra& a, const SemidirectAlgebra& b) {
    return {a.x + b.x, a.y + b.y};
  }
  friend SemidirectAlgebra operator-(const SemidirectAlgebra& a, const SemidirectAlgebra& b) {
    return {a.x - b.x, a.y - b.y};
  }
  friend SemidirectAlgebra operator*(double s, const SemidirectAlgebra& a) { return {s * a.x, s * a.y}; }
  friend SemidirectAlgebra operator-(const SemidirectAlgebra& a) { return {-a.x, -a.y}; }

  double norm() const { return std::hypot(x.norm(), y.norm()); }
};

inline double distance(const SemidirectElement& a, const SemidirectElement& b) {
  return std::max(distance(a.x, b.x), distance(a.g, b.g));
}

inline double distance(const SemidirectAlgebra& a, const SemidirectAlgebra& b) {
  return std::max(distance(a.x, b.x), distance(a.y, b.y));
}

inline SemidirectElement sd_multiply(const SemidirectElement& a, const SemidirectElement& b) {
  a.check_same(b);
  return {a.x + Ad(a.g, b.x), compose(a.g, b.g)};
}

inline SemidirectElement sd_invert(const SemidirectElement& a) {
  const GroupElement gi = invert(a.g);
  return {-Ad(gi, a.x), gi};
}

inline SemidirectAlgebra sd_Ad(const SemidirectElement& a, const SemidirectAlgebra& v) {
  a.g.check_same(v.x);
  const AlgebraElement adz = Ad(a.g, v.y);
  return {Ad(a.g, v.x) - bracket(adz, a.x), adz};
}

inline SemidirectAlgebra sd_bracket(const SemidirectAlgebra& u, const SemidirectAlgebra& v) {
  return {bracket(u.y, v.x) - bracket(v.y, u.x), bracket(u.y, v.y)};
}

/// exp(X, Y) = (int_0^1 Ad(exp(sY)) X ds, exp Y), Gauss-Legendre in s.
inline SemidirectElement sd_exp(const SemidirectAlgebra& v, int nodes = 24) {
  v.x.check_same(v.y);
  const GroupElement e = exp(v.y);
  if (v.x.matrix().isZero(0.0)) return {v.x, e};
  const QuadratureRule& rule = gauss_legendre_unit(nodes);
  AlgebraElement acc = AlgebraElement::zero(v.spec());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    acc += rule.weights[k] * Ad(exp(rule.nodes[k] * v.y), v.x);
  if (!acc.matrix().allFinite()) throw Error(ErrorKind::NonFinite, "semidirect exponential quadrature");
  return {acc, e};
}

/// Group policy for g x| G.
struct SemidirectOps {
  using Algebra = SemidirectAlgebra;
  using Element = SemidirectElement;

  const LieGroupSpec* spec;

  explicit SemidirectOps(const LieGroupSpec& s) : spec(&s) {}

  Element identity() const { return SemidirectElement::identity(*spec); }
  Element multiply(const Element& a, const Element& b) const { return sd_multiply(a, b); }
  Element exp(const Algebra& v) const { return sd_exp(v); }
  Algebra bracket(const Algebra& u, const Algebra& v) const { return sd_bracket(u, v); }
};

static_assert(GroupPolicy<SemidirectOps>);

namespace detail {

inline void require_rkmk(const EvolConfig& cfg, const char* what) {
  cfg.validate();
  if (cfg.integrator != Integrator::Rkmk4)
    throw Error(ErrorKind::BadArgument, std::string(what) + " runs on the semidirect group and needs rkmk4");
}

/// int_0^1 Ad(g(s)^-1) Y(s) ds by composite Simpson over the stored curve.
inline AlgebraElement transported_integral(const std::vector<TimedGroupElement>& curve, const AlgebraCurve& y) {
  const int n = static_cast<int>(curve.size()) - 1;
  const double h = (curve.back().t - curve.front().t) / n;
  const auto w = simpson_weights(n, h);
  AlgebraElement acc = AlgebraElement::zero(*y.group);
  for (int k = 0; k <= n; ++k) acc += w[k] * Ad(invert(curve[k].g), y(curve[k].t));
  return acc;
}

}  // namespace detail

/// D(X, Y) = int_0^1 Ad(Evol(X)(s)^-1) Y(s) ds, the left-trivialized derivative
/// of evol_r at X in direction Y: d/ds evol(X + sY) = evol(X) D. Needs an even
/// step count (composite Simpson over the step nodes).
inline AlgebraElement tangent_evol(const AlgebraCurve& x, const AlgebraCurve& y, const EvolConfig& cfg = {}) {
  if (x.group != y.group) throw Error(ErrorKind::SpecMismatch, "curves in different algebras");
  if (cfg.steps % 2 != 0) throw Error(ErrorKind::BadArgument, "tangent_evol needs an even step count");
  return detail::transported_integral(Evol_right(x, 1.0, cfg), y);
}

struct SemidirectEvolution {
  /// Closed formula with quadrature over the stored base curve.
  SemidirectElement formula;
  /// RKMK evolution on g x| G.
  SemidirectElement integrated;
  double deviation = 0.0;
};

/// evol_r on g x| G of t -> (Y(t), X(t)) over [0, 1], computed twice:
///   (Ad(evol X) int_0^1 Ad(Evol(X)(s)^-1) Y(s) ds, evol X)   and by RKMK.
/// Throws when the two disagree by more than `max_deviation`.
inline SemidirectEvolution evol_sd(const AlgebraCurve& y, const AlgebraCurve& x, const EvolConfig& cfg = {},
                                   double max_deviation = 1e-6) {
  detail::require_rkmk(cfg, "evol_sd");
  if (x.group != y.group) throw Error(ErrorKind::SpecMismatch, "curves in different algebras");
  if (cfg.steps % 2 != 0) throw Error(ErrorKind::BadArgument, "evol_sd needs an even step count");
  SemidirectEvolution out;
  const auto curve = Evol_right(x, 1.0, cfg);
  const GroupElement& end = curve.back().g;
  out.formula = {Ad(end, detail::transported_integral(curve, y)), end};
  auto rhs = [&](double t) { return SemidirectAlgebra{y(t), x(t)}; };
  out.integrated = rkmk4_evolve(SemidirectOps(*x.group), rhs, 0.0, 1.0, cfg.steps, cfg.dexpinv_order);
  out.deviation = distance(out.formula, out.integrated);
  if (!(out.deviation <= max_deviation))
    throw Error(ErrorKind::Precondition,
                "semidirect evolution routes disagree by " + std::to_string(out.deviation) + "; raise the step count");
  return out;
}

struct TangentDevelopment {
  Grid grid;
  std::vector<Point> points;
  /// (T_xi Evol . eta, Evol(xi)) per point, right-trivialized.
  std::vector<SemidirectElement> values;
  double tangent_residual = 0.0;
};

/// Develops the pair form (eta, xi) with values in g x| g at x along the
/// radial segment, mirroring develop_at step for step.
inline SemidirectElement tangent_develop_at(const OneForm& xi, const OneForm& eta, const Point& x,
                                            const EvolConfig& cfg = {}) {
  detail::require_rkmk(cfg, "tangent_develop");
  xi.domain().require(x);
  const LieGroupSpec& g = xi.group();
  const int d = xi.dim();
  const Point a = Point::Zero(x.size());
  const Point dir = x - a;
  const auto& fx = xi.frame_fn();
  const auto& fe = eta.frame_fn();
  auto rhs = [&](double t) {
    const Point p(a + t * dir);
    SemidirectAlgebra v{contract(fe(p), dir, g, d), contract(fx(p), dir, g, d)};
    if (!v.y.matrix().allFinite() || !v.x.matrix().allFinite())
      throw Error(ErrorKind::NonFinite, "form value along path");
    return v;
  };
  const SemidirectOps ops(g);
  const SemidirectElement seg = rkmk4_evolve(ops, rhs, 0.0, 1.0, cfg.steps, cfg.dexpinv_order);
  return ops.multiply(seg, ops.identity());
}

/// Development of the pair (eta, xi) over the grid. The base part equals
/// develop(xi) bit for bit; the fibre part is the right-trivialized derivative
/// of develop(xi + s eta) at s = 0. Requires eta tangent at xi.
inline TangentDevelopment tangent_develop(const OneForm& xi, const OneForm& eta, const Grid& grid,
                                          const EvolConfig& cfg = {}, double tangent_tolerance = 1e-4,
                                          int check_grid = 7) {
  detail::require_rkmk(cfg, "tangent_develop");
  if (&xi.group() != &eta.group()) throw Error(ErrorKind::SpecMismatch, "forms with values in different groups");
  if (xi.dim() != eta.dim() || grid.dim() != xi.dim())
    throw Error(ErrorKind::BadArgument, "form and grid dimensions differ");
  TangentDevelopment out;
  const auto check = interior_points(xi.domain(), Grid::uniform(xi.domain(), check_grid));
  out.tangent_residual = max_pair_residual(check, xi.dim(), [&](const Point& x, int i, int j) {
    return linearized_mc_residual(xi, eta, x, i, j).norm();
  });
  if (!(out.tangent_residual <= tangent_tolerance))
    throw Error(ErrorKind::Precondition,
                "eta is not tangent at xi: linearized residual " + std::to_string(out.tangent_residual));
  out.grid = grid;
  out.points = grid.points();
  for (const auto& p : out.points) xi.domain().require(p);
  out.values.resize(out.points.size());
  parallel_for(out.points.size(),
               [&](std::size_t k) { out.values[k] = tangent_develop_at(xi, eta, out.points[k], cfg); });
  return out;
}

}  // namespace cartan
