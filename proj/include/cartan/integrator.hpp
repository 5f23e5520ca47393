#pragma once

/**
 * @file integrator.hpp
 * @brief Lie group integrators for right-invariant linear equations g' = X(t) g.
 *
 * The integrators are generic over a group policy `Ops` exposing
 *
 *     using Algebra, Element;
 *     Element identity() const;
 *     Element multiply(const Element&, const Element&) const;
 *     Element exp(const Algebra&) const;
 *     Algebra bracket(const Algebra&, const Algebra&) const;
 *
 * with Algebra closed under + and scalar *. The same code path drives matrix
 * groups and the semidirect product g x| G, which keeps the base part of a
 * semidirect evolution bit-identical to the plain evolution.
 */

#include <concepts>
#include <string>
#include <string_view>
#include <utility>

#include "cartan/lie_group.hpp"

namespace cartan {

template <class Ops>
concept GroupPolicy = requires(const Ops& ops, const typename Ops::Algebra& a,
                               const typename Ops::Element& g, double s) {
  { ops.identity() } -> std::convertible_to<typename Ops::Element>;
  { ops.multiply(g, g) } -> std::convertible_to<typename Ops::Element>;
  { ops.exp(a) } -> std::convertible_to<typename Ops::Element>;
  { ops.bracket(a, a) } -> std::convertible_to<typename Ops::Algebra>;
  { a + a } -> std::convertible_to<typename Ops::Algebra>;
  { s * a } -> std::convertible_to<typename Ops::Algebra>;
};

/// Policy for a matrix group given by a LieGroupSpec.
struct MatrixGroupOps {
  using Algebra = AlgebraElement;
  using Element = GroupElement;

  const LieGroupSpec* spec;

  explicit MatrixGroupOps(const LieGroupSpec& s) : spec(&s) {}

  Element identity() const { return GroupElement::identity(*spec); }
  Element multiply(const Element& a, const Element& b) const { return compose(a, b); }
  Element exp(const Algebra& x) const { return cartan::exp(x); }
  Algebra bracket(const Algebra& x, const Algebra& y) const { return cartan::bracket(x, y); }
};

/// The opposite group: a *' b = b a, [x, y]' = [y, x]. Right evolution in the
/// opposite group is left evolution g' = g X(t) in the original one.
template <GroupPolicy Ops>
struct OppositeOps {
  using Algebra = typename Ops::Algebra;
  using Element = typename Ops::Element;

  Ops base;

  Element identity() const { return base.identity(); }
  Element multiply(const Element& a, const Element& b) const { return base.multiply(b, a); }
  Element exp(const Algebra& x) const { return base.exp(x); }
  Algebra bracket(const Algebra& x, const Algebra& y) const { return base.bracket(y, x); }
};

enum class Integrator { Rkmk4, Rk4Ambient };

inline std::string to_string(Integrator i) { return i == Integrator::Rkmk4 ? "rkmk4" : "rk4"; }

inline Integrator parse_integrator(std::string_view s) {
  if (s == "rkmk4") return Integrator::Rkmk4;
  if (s == "rk4" || s == "rk4_ambient") return Integrator::Rk4Ambient;
  throw Error(ErrorKind::BadArgument, "unknown integrator '" + std::string(s) + "'");
}

struct EvolConfig {
  Integrator integrator = Integrator::Rkmk4;
  int steps = 256;
  int dexpinv_order = 4;

  void validate() const {
    if (steps < 1) throw Error(ErrorKind::BadArgument, "steps must be >= 1");
    if (dexpinv_order < 1 || dexpinv_order > 16)
      throw Error(ErrorKind::BadArgument, "dexpinv order must be 1..16");
  }
};

/// One fourth-order Runge-Kutta-Munthe-Kaas step for g' = X(t) g given the
/// field at t, t + h/2 and t + h. The field does not depend on g, so only the
/// final exponential is needed.
template <GroupPolicy Ops>
typename Ops::Element rkmk4_step(const Ops& ops, const typename Ops::Element& g, double h,
                                 const typename Ops::Algebra& x0, const typename Ops::Algebra& xm,
                                 const typename Ops::Algebra& x1, int order) {
  using A = typename Ops::Algebra;
  auto br = [&ops](const A& a, const A& b) { return ops.bracket(a, b); };
  const A k1 = h * x0;
  const A k2 = h * dexpinv_series(A(0.5 * k1), xm, order, br);
  const A k3 = h * dexpinv_series(A(0.5 * k2), xm, order, br);
  const A k4 = h * dexpinv_series(k3, x1, order, br);
  const A omega = (1.0 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return ops.multiply(ops.exp(omega), g);
}

/// Integrates g' = X(t) g, g(t0) = e over [t0, t1] in `steps` uniform steps
/// with RKMK4. `observe(k, t_k, g_k)` is called for k = 0..steps.
template <GroupPolicy Ops, class Rhs, class Observer>
typename Ops::Element rkmk4_evolve(const Ops& ops, Rhs&& rhs, double t0, double t1, int steps,
                                   int order, Observer&& observe) {
  using A = typename Ops::Algebra;
  if (steps < 1) throw Error(ErrorKind::BadArgument, "steps must be >= 1");
  const double h = (t1 - t0) / steps;
  typename Ops::Element g = ops.identity();
  observe(0, t0, g);
  A x0 = rhs(t0);
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const double t_next = t0 + (k + 1) * h;
    const A xm = rhs(t + 0.5 * h);
    A x1 = rhs(t_next);
    g = rkmk4_step(ops, g, h, x0, xm, x1, order);
    x0 = std::move(x1);
    observe(k + 1, t_next, g);
  }
  return g;
}

template <GroupPolicy Ops, class Rhs>
typename Ops::Element rkmk4_evolve(const Ops& ops, Rhs&& rhs, double t0, double t1, int steps,
                                   int order) {
  return rkmk4_evolve(ops, std::forward<Rhs>(rhs), t0, t1, steps, order,
                      [](int, double, const typename Ops::Element&) {});
}

/// Classical RK4 on the ambient matrix equation, without any reprojection.
/// `left` selects g' = g X(t) instead of g' = X(t) g.
template <class Rhs, class Observer>
GroupElement rk4_ambient_evolve(const LieGroupSpec& spec, Rhs&& rhs, double t0, double t1,
                                int steps, bool left, Observer&& observe) {
  if (steps < 1) throw Error(ErrorKind::BadArgument, "steps must be >= 1");
  const double h = (t1 - t0) / steps;
  Mat y = Mat::Identity(spec.ambient_dim(), spec.ambient_dim());
  auto field = [&](const AlgebraElement& x, const Mat& state) -> Mat {
    return left ? Mat(state * x.matrix()) : Mat(x.matrix() * state);
  };
  observe(0, t0, GroupElement::unchecked(spec, y));
  AlgebraElement x0 = rhs(t0);
  for (int k = 0; k < steps; ++k) {
    const double t = t0 + k * h;
    const AlgebraElement xm = rhs(t + 0.5 * h);
    AlgebraElement x1 = rhs(t0 + (k + 1) * h);
    const Mat k1 = field(x0, y);
    const Mat k2 = field(xm, y + 0.5 * h * k1);
    const Mat k3 = field(xm, y + 0.5 * h * k2);
    const Mat k4 = field(x1, y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    x0 = std::move(x1);
    observe(k + 1, t0 + (k + 1) * h, GroupElement::unchecked(spec, y));
  }
  return GroupElement::unchecked(spec, y);
}

}  // namespace cartan
