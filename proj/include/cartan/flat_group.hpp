#pragma once

/**
 * @file flat_group.hpp
 * @brief Group structure on flat forms, the Poincare operator on closed forms,
 * and variations of developments.
 *
 * Flat forms multiply by
 *   (xi * eta)(x) = xi(x) + Ad(f_xi(x)) eta(x),    f_xi = Evol(xi),
 * so that Evol(xi * eta) = Evol(xi) Evol(eta). Closed forms carry the bracket
 *   [b1, b2](v) = [b1(v), h2(x)] + [h1(x), b2(v)],  h_i = d^-1 b_i.
 */

#include <array>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include "cartan/evolution.hpp"
#include "cartan/forms.hpp"
#include "cartan/quadrature.hpp"

namespace cartan {

// ---------------------------------------------------------------------------
// Memoized development

/// f_xi(x) computed on demand by radial development and cached per point.
/// Concurrent readers share a lock; concurrent fills of the same point compute
/// the same value, so the first insert wins without changing results.
class DevelopmentCache {
 public:
  DevelopmentCache(OneForm xi, EvolConfig cfg) : xi_(std::move(xi)), cfg_(cfg) { cfg_.validate(); }

  GroupElement operator()(const Point& x) const {
    const Key k = key(x);
    {
      std::shared_lock lock(mutex_);
      if (auto it = cache_.find(k); it != cache_.end()) return it->second;
    }
    GroupElement g = develop_at(xi_, x, cfg_);
    std::unique_lock lock(mutex_);
    return cache_.emplace(k, std::move(g)).first->second;
  }

  const OneForm& form() const noexcept { return xi_; }
  const EvolConfig& config() const noexcept { return cfg_; }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
  }

 private:
  using Key = std::array<double, kMaxDim>;

  static Key key(const Point& x) {
    Key k{0.0, 0.0, 0.0};
    for (int i = 0; i < x.size(); ++i) k[i] = x(i) == 0.0 ? 0.0 : x(i);  // fold -0 into 0
    return k;
  }

  OneForm xi_;
  EvolConfig cfg_;
  mutable std::shared_mutex mutex_;
  mutable std::map<Key, GroupElement> cache_;
};

namespace detail {

inline void require_flat(const OneForm& xi, const char* what) {
  if (!xi.flatness())
    throw Error(ErrorKind::NotFlat, std::string(what) + ": form '" + xi.label() +
                                        "' carries no flatness certificate");
}

inline FlatnessCertificate combine(const FlatnessCertificate& a, const FlatnessCertificate& b) {
  return {std::max(a.max_residual, b.max_residual), std::max(a.tolerance, b.tolerance), "group law"};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Group law

/// xi * eta. Both inputs must carry flatness certificates.
inline OneForm star(const OneForm& xi, const OneForm& eta, const EvolConfig& cfg = {}) {
  detail::require_flat(xi, "star");
  detail::require_flat(eta, "star");
  if (&xi.group() != &eta.group()) throw Error(ErrorKind::SpecMismatch, "forms with values in different groups");
  if (xi.dim() != eta.dim()) throw Error(ErrorKind::BadArgument, "forms on different domains");
  auto f = std::make_shared<const DevelopmentCache>(xi, cfg);
  OneForm out(
      xi.group(), xi.domain(),
      [xi, eta, f, d = xi.dim()](const Point& x) {
        const Frame a = xi.frame_fn()(x);
        const Frame b = eta.frame_fn()(x);
        const GroupElement fx = (*f)(x);
        Frame r;
        for (int i = 0; i < d; ++i) r[i] = a[i] + Ad(fx, b[i]);
        return r;
      },
      "(" + xi.label() + ")*(" + eta.label() + ")");
  out.set_flatness(detail::combine(*xi.flatness(), *eta.flatness()));
  return out;
}

/// The inverse for the group law: x -> -Ad(f_xi(x)^-1) xi(x).
inline OneForm star_inverse(const OneForm& xi, const EvolConfig& cfg = {}) {
  detail::require_flat(xi, "star_inverse");
  auto f = std::make_shared<const DevelopmentCache>(xi, cfg);
  OneForm out(
      xi.group(), xi.domain(),
      [xi, f, d = xi.dim()](const Point& x) {
        const Frame a = xi.frame_fn()(x);
        const GroupElement fi = invert((*f)(x));
        Frame r;
        for (int i = 0; i < d; ++i) r[i] = -Ad(fi, a[i]);
        return r;
      },
      "inv(" + xi.label() + ")");
  out.set_flatness({xi.flatness()->max_residual, xi.flatness()->tolerance, "group law"});
  return out;
}

// ---------------------------------------------------------------------------
// Closed forms

struct ClosednessReport {
  double max_residual = 0.0;
  bool closed = true;
};

/// max over interior grid points and axis pairs of |d beta(e_i, e_j)|.
inline ClosednessReport is_closed(const OneForm& beta, const Grid& grid, double tol,
                                  const FdOptions& opt = {}) {
  if (!(tol > 0.0)) throw Error(ErrorKind::BadArgument, "closedness tolerance must be positive");
  const auto pts = interior_points(beta.domain(), grid, opt);
  const double m = max_pair_residual(pts, beta.dim(), [&](const Point& x, int i, int j) {
    return exterior_derivative(beta, x, i, j, opt).norm();
  });
  return {m, m <= tol};
}

/// A 1-form with d beta = 0 certified on a grid.
class ClosedOneForm {
 public:
  static ClosedOneForm certify(const OneForm& beta, const Grid& grid, double tol, const FdOptions& opt = {}) {
    const auto rep = is_closed(beta, grid, tol, opt);
    if (!rep.closed)
      throw Error(ErrorKind::NotClosed, "'" + beta.label() + "' has |d beta| = " + std::to_string(rep.max_residual));
    return ClosedOneForm(beta, rep.max_residual, tol);
  }

  static ClosedOneForm certify(const OneForm& beta, int per_axis = 9, double tol = 1e-6,
                               const FdOptions& opt = {}) {
    return certify(beta, Grid::uniform(beta.domain(), per_axis), tol, opt);
  }

  const OneForm& form() const noexcept { return beta_; }
  double max_residual() const noexcept { return residual_; }
  double tolerance() const noexcept { return tol_; }

 private:
  ClosedOneForm(OneForm beta, double residual, double tol)
      : beta_(std::move(beta)), residual_(residual), tol_(tol) {}

  OneForm beta_;
  double residual_;
  double tol_;
};

/// a b1 + b b2 of closed forms; the certificate tolerance adds up.
inline ClosedOneForm linear_combination(double a, const ClosedOneForm& b1, double b, const ClosedOneForm& b2,
                                        int per_axis = 9) {
  const OneForm& f1 = b1.form();
  const OneForm& f2 = b2.form();
  if (&f1.group() != &f2.group()) throw Error(ErrorKind::SpecMismatch, "forms with values in different groups");
  OneForm sum(
      f1.group(), f1.domain(),
      [f1, f2, a, b, d = f1.dim()](const Point& x) {
        const Frame u = f1.frame_fn()(x), v = f2.frame_fn()(x);
        Frame r;
        for (int i = 0; i < d; ++i) r[i] = a * u[i] + b * v[i];
        return r;
      },
      "lin(" + f1.label() + "," + f2.label() + ")");
  const double tol = std::abs(a) * b1.tolerance() + std::abs(b) * b2.tolerance();
  return ClosedOneForm::certify(sum, per_axis, std::max(tol, 1e-12));
}

/// d^-1 beta: h(x) = int_0^1 beta_{t x}(x) dt by Gauss-Legendre quadrature,
/// pointed at h(0) = 0. The gradient is analytic when beta has partials.
inline GFunction poincare_inverse(const ClosedOneForm& closed, int nodes = 32) {
  const OneForm beta = closed.form();
  const QuadratureRule& rule = gauss_legendre_unit(nodes);
  const LieGroupSpec& g = beta.group();
  const int d = beta.dim();
  auto value = [beta, &rule, &g, d](const Point& x) {
    AlgebraElement h = AlgebraElement::zero(g);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k)
      h += rule.weights[k] * contract(beta.frame_fn()(Point(rule.nodes[k] * x)), x, g, d);
    if (!h.matrix().allFinite()) throw Error(ErrorKind::NonFinite, "Poincare quadrature");
    return h;
  };
  GFunction::GradientFn gradient;
  if (beta.has_partials()) {
    // d_j h(x) = int_0^1 beta_j(t x) + t sum_i x_i d_j beta_i(t x) dt
    gradient = [beta, &rule, &g, d](const Point& x) {
      Frame out;
      for (int j = 0; j < d; ++j) out[j] = AlgebraElement::zero(g);
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double t = rule.nodes[k];
        const Point y = t * x;
        const Frame f = beta.frame_fn()(y);
        const FrameJacobian jac = beta.partials_fn()(y);
        for (int j = 0; j < d; ++j)
          out[j] += rule.weights[k] * (f[j] + t * contract(jac[j], x, g, d));
      }
      return out;
    };
  }
  return GFunction(g, beta.domain(), value, gradient, "dinv(" + beta.label() + ")");
}

/// Bracket of closed forms. The result is certified closed on `per_axis`
/// points per axis with tolerance `tol`; failure signals a quadrature or FD
/// budget that is too small.
inline ClosedOneForm flat_bracket(const ClosedOneForm& b1, const ClosedOneForm& b2, int per_axis = 9,
                                  double tol = 1e-6, int nodes = 32) {
  const OneForm& f1 = b1.form();
  const OneForm& f2 = b2.form();
  if (&f1.group() != &f2.group()) throw Error(ErrorKind::SpecMismatch, "forms with values in different groups");
  if (f1.dim() != f2.dim()) throw Error(ErrorKind::BadArgument, "forms on different domains");
  const GFunction h1 = poincare_inverse(b1, nodes);
  const GFunction h2 = poincare_inverse(b2, nodes);
  OneForm out(
      f1.group(), f1.domain(),
      [f1, f2, h1, h2, d = f1.dim()](const Point& x) {
        const Frame u = f1.frame_fn()(x), v = f2.frame_fn()(x);
        const AlgebraElement p = h1(x), q = h2(x);
        Frame r;
        for (int i = 0; i < d; ++i) r[i] = bracket(u[i], q) + bracket(p, v[i]);
        return r;
      },
      "[" + f1.label() + "," + f2.label() + "]");
  try {
    return ClosedOneForm::certify(out, per_axis, tol);
  } catch (const Error& e) {
    throw Error(ErrorKind::NotClosed, std::string("bracket output failed closedness check (") + e.what() + ")");
  }
}

namespace detail {

/// Frames of a form sampled along the ray lambda -> lambda x on a uniform lambda grid.
using RaySamples = std::vector<Frame>;

/// lambda -> Evol(form)(lambda x) at the even nodes, by RKMK steps of two intervals.
inline std::vector<GroupElement> ray_development(const RaySamples& f, const Point& x, const LieGroupSpec& g,
                                                 int d, int order) {
  const int n = static_cast<int>(f.size()) - 1;
  const double h = 2.0 / n;
  const MatrixGroupOps ops(g);
  std::vector<GroupElement> out{ops.identity()};
  for (int k = 0; k + 2 <= n; k += 2)
    out.push_back(rkmk4_step(ops, out.back(), h, contract(f[k], x, g, d), contract(f[k + 1], x, g, d),
                             contract(f[k + 2], x, g, d), order));
  return out;
}

/// Pointwise group law on ray samples: a * b with f_a given at every node.
inline RaySamples ray_star(const RaySamples& a, const std::vector<GroupElement>& fa, const RaySamples& b,
                           int stride_a, int stride_b, int d) {
  RaySamples out(fa.size());
  for (std::size_t k = 0; k < fa.size(); ++k)
    for (int i = 0; i < d; ++i) out[k][i] = a[k * stride_a][i] + Ad(fa[k], b[k * stride_b][i]);
  return out;
}

inline RaySamples ray_inverse(const RaySamples& a, const std::vector<GroupElement>& fa, int stride, int d) {
  RaySamples out(fa.size());
  for (std::size_t k = 0; k < fa.size(); ++k) {
    const GroupElement fi = invert(fa[k]);
    for (int i = 0; i < d; ++i) out[k][i] = -Ad(fi, a[k * stride][i]);
  }
  return out;
}

/// ((a * b) * a^-1) * b^-1 at x for a = s b1, b = t b2, with radial developments.
inline Frame ray_commutator(const OneForm& b1, const OneForm& b2, const Point& x, double s, double t,
                            int intervals, int order) {
  const LieGroupSpec& g = b1.group();
  const int d = b1.dim();
  const int n0 = 8 * intervals;
  RaySamples a(n0 + 1), b(n0 + 1);
  for (int k = 0; k <= n0; ++k) {
    const Point y = (static_cast<double>(k) / n0) * x;
    const Frame u = b1.frame_fn()(y), v = b2.frame_fn()(y);
    for (int i = 0; i < d; ++i) {
      a[k][i] = s * u[i];
      b[k][i] = t * v[i];
    }
  }
  const auto fa = ray_development(a, x, g, d, order);        // 4M intervals
  const auto fb = ray_development(b, x, g, d, order);        // 4M intervals
  const RaySamples p1 = ray_star(a, fa, b, 2, 2, d);         // 4M intervals
  const RaySamples a_inv = ray_inverse(a, fa, 2, d);         // 4M intervals
  const auto f1 = ray_development(p1, x, g, d, order);       // 2M intervals
  const RaySamples p2 = ray_star(p1, f1, a_inv, 2, 2, d);    // 2M intervals
  const auto f2 = ray_development(p2, x, g, d, order);       // M intervals
  const RaySamples b_inv = ray_inverse(b, fb, 2, d);         // 4M intervals
  Frame out;
  const GroupElement& end = f2.back();
  for (int i = 0; i < d; ++i) out[i] = p2.back()[i] + Ad(end, b_inv.back()[i]);
  return out;
}

}  // namespace detail

/// Mixed second difference at s = t = 0 of the group commutator
/// (s b1) * (t b2) * (s b1)^-1 * (t b2)^-1, evaluated at x. For closed b1, b2
/// this approximates the bracket [b1, b2](x) to O(step^2).
inline Frame bracket_by_commutator(const OneForm& b1, const OneForm& b2, const Point& x, double step = 1e-3,
                                   int intervals = 32, int order = 4) {
  if (&b1.group() != &b2.group()) throw Error(ErrorKind::SpecMismatch, "forms with values in different groups");
  b1.domain().require(x);
  const int d = b1.dim();
  const Frame pp = detail::ray_commutator(b1, b2, x, step, step, intervals, order);
  const Frame pm = detail::ray_commutator(b1, b2, x, step, -step, intervals, order);
  const Frame mp = detail::ray_commutator(b1, b2, x, -step, step, intervals, order);
  const Frame mm = detail::ray_commutator(b1, b2, x, -step, -step, intervals, order);
  Frame out;
  const double scale = 1.0 / (4.0 * step * step);
  for (int i = 0; i < d; ++i) out[i] = scale * (pp[i] - pm[i] - mp[i] + mm[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Variations

/// eta = Ad(f_xi) dh, a tangent vector to the flat forms at xi.
inline OneForm variation_form(const OneForm& xi, const GFunction& h, const EvolConfig& cfg = {}) {
  detail::require_flat(xi, "variation_form");
  if (&xi.group() != &h.group()) throw Error(ErrorKind::SpecMismatch, "form and function in different groups");
  auto f = std::make_shared<const DevelopmentCache>(xi, cfg);
  return OneForm(
      xi.group(), xi.domain(),
      [f, h, d = xi.dim()](const Point& x) {
        const Frame grad = h.gradient(x);
        const GroupElement fx = (*f)(x);
        Frame r;
        for (int i = 0; i < d; ++i) r[i] = Ad(fx, grad[i]);
        return r;
      },
      "Ad(Evol(" + xi.label() + "))d(" + h.label() + ")");
}

struct ReconstructOptions {
  int check_grid = 7;
  /// Bound on the linearized Maurer-Cartan residual of (xi, eta).
  double tangent_tolerance = 1e-4;
  /// Bound on |d(Ad(f^-1) eta)|.
  double closed_tolerance = 1e-4;
  int nodes = 32;
};

/// The h with dh = Ad(f_xi^-1) eta and h(0) = 0.
inline GFunction reconstruct_h(const OneForm& xi, const OneForm& eta, const EvolConfig& cfg = {},
                               const ReconstructOptions& opt = {}) {
  detail::require_flat(xi, "reconstruct_h");
  if (&xi.group() != &eta.group()) throw Error(ErrorKind::SpecMismatch, "forms with values in different groups");
  const Grid grid = Grid::uniform(xi.domain(), opt.check_grid);
  const auto pts = interior_points(xi.domain(), grid);
  const double lin = max_pair_residual(pts, xi.dim(), [&](const Point& x, int i, int j) {
    return linearized_mc_residual(xi, eta, x, i, j).norm();
  });
  if (lin > opt.tangent_tolerance)
    throw Error(ErrorKind::Precondition,
                "eta is not tangent at xi: linearized residual " + std::to_string(lin));
  auto f = std::make_shared<const DevelopmentCache>(xi, cfg);
  const OneForm pulled(
      xi.group(), xi.domain(),
      [f, eta, d = xi.dim()](const Point& x) {
        const Frame e = eta.frame_fn()(x);
        const GroupElement fi = invert((*f)(x));
        Frame r;
        for (int i = 0; i < d; ++i) r[i] = Ad(fi, e[i]);
        return r;
      },
      "Ad(Evol(" + xi.label() + ")^-1)(" + eta.label() + ")");
  return poincare_inverse(ClosedOneForm::certify(pulled, grid, opt.closed_tolerance), opt.nodes);
}

}  // namespace cartan
