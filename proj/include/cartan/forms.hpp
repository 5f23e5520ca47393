#pragma once

/**
 * @file forms.hpp
 * @brief Lie-algebra valued 1-forms on a box chart around the origin.
 *
 * A 1-form xi is stored through its frame components xi_i(x) = xi_x(e_i) in
 * the coordinate basis of the box. Wedge brackets of 1-forms use
 *   [phi, psi]_wedge(u, v) = [phi(u), psi(v)] - [phi(v), psi(u)],
 * so that 1/2 [xi, xi]_wedge(u, v) = [xi(u), xi(v)].
 */

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cartan/core.hpp"
#include "cartan/lie_group.hpp"
#include "cartan/parallel.hpp"

namespace cartan {

/// Box [-w_1, w_1] x ... x [-w_d, w_d] with base point 0.
struct Domain {
  int dim = 2;
  std::array<double, kMaxDim> half_widths{1.0, 1.0, 1.0};

  static Domain box(int dim, double half_width) {
    if (dim < 1 || dim > kMaxDim) throw Error(ErrorKind::BadArgument, "domain dimension must be 1..3");
    if (!(half_width > 0.0)) throw Error(ErrorKind::BadArgument, "half width must be positive");
    Domain d;
    d.dim = dim;
    d.half_widths.fill(half_width);
    return d;
  }

  static Domain box(std::vector<double> widths) {
    if (widths.empty() || widths.size() > kMaxDim)
      throw Error(ErrorKind::BadArgument, "domain dimension must be 1..3");
    Domain d;
    d.dim = static_cast<int>(widths.size());
    for (int i = 0; i < d.dim; ++i) {
      if (!(widths[i] > 0.0)) throw Error(ErrorKind::BadArgument, "half width must be positive");
      d.half_widths[i] = widths[i];
    }
    return d;
  }

  /// True when every coordinate keeps at least `margin_i` away from the faces.
  bool contains(const Point& x, double slack = 1e-12) const {
    if (x.size() != dim) return false;
    for (int i = 0; i < dim; ++i)
      if (!(std::abs(x(i)) <= half_widths[i] * (1.0 + slack))) return false;
    return true;
  }

  void require(const Point& x) const {
    if (!contains(x)) throw Error(ErrorKind::OutOfDomain, "point outside the chart domain");
  }

  Point origin() const { return Point::Zero(dim); }
};

/// Tensor grid of evaluation points; the first axis varies slowest.
struct Grid {
  std::vector<int> resolution;
  std::vector<double> half_widths;

  static Grid uniform(const Domain& dom, int per_axis) {
    Grid g;
    g.resolution.assign(dom.dim, per_axis);
    g.half_widths.assign(dom.half_widths.begin(), dom.half_widths.begin() + dom.dim);
    return g;
  }

  int dim() const { return static_cast<int>(resolution.size()); }

  std::size_t size() const {
    if (resolution.empty()) return 0;
    std::size_t n = 1;
    for (int r : resolution) n *= static_cast<std::size_t>(std::max(r, 0));
    return n;
  }

  double coordinate(int axis, int k) const {
    const int r = resolution[axis];
    if (r == 1) return 0.0;
    return -half_widths[axis] + 2.0 * half_widths[axis] * k / (r - 1);
  }

  Point point(std::size_t flat) const {
    Point x(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      const auto r = static_cast<std::size_t>(resolution[a]);
      x(a) = coordinate(a, static_cast<int>(flat % r));
      flat /= r;
    }
    return x;
  }

  std::vector<Point> points() const {
    std::vector<Point> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
    return out;
  }
};

/// Frame components, entries [0, dim) are meaningful.
using Frame = std::array<AlgebraElement, kMaxDim>;
/// Partial derivatives: jac[j][i] = d_j xi_i.
using FrameJacobian = std::array<Frame, kMaxDim>;

struct FlatnessCertificate {
  double max_residual = 0.0;
  double tolerance = 0.0;
  std::string origin;
};

class OneForm {
 public:
  using FrameFn = std::function<Frame(const Point&)>;
  using PartialsFn = std::function<FrameJacobian(const Point&)>;

  OneForm() = default;
  OneForm(const LieGroupSpec& g, Domain dom, FrameFn frame, std::string label = {},
          PartialsFn partials = {})
      : group_(&g),
        domain_(dom),
        frame_(std::move(frame)),
        partials_(std::move(partials)),
        label_(std::move(label)) {}

  /// The zero form.
  static OneForm zero(const LieGroupSpec& g, Domain dom) {
    auto z = AlgebraElement::zero(g);
    return OneForm(
        g, dom, [z](const Point&) { return Frame{z, z, z}; }, "zero",
        [z](const Point&) {
          Frame f{z, z, z};
          return FrameJacobian{f, f, f};
        });
  }

  const LieGroupSpec& group() const { return *group_; }
  const Domain& domain() const noexcept { return domain_; }
  int dim() const noexcept { return domain_.dim; }
  const std::string& label() const noexcept { return label_; }
  bool has_partials() const noexcept { return static_cast<bool>(partials_); }
  const FrameFn& frame_fn() const noexcept { return frame_; }
  const PartialsFn& partials_fn() const noexcept { return partials_; }

  const std::optional<FlatnessCertificate>& flatness() const noexcept { return flat_; }
  OneForm& set_flatness(FlatnessCertificate c) {
    flat_ = std::move(c);
    return *this;
  }
  OneForm& set_label(std::string l) {
    label_ = std::move(l);
    return *this;
  }

  Frame at(const Point& x) const {
    domain_.require(x);
    return frame_(x);
  }

  AlgebraElement component(const Point& x, int i) const { return at(x)[i]; }

  FrameJacobian partials(const Point& x) const {
    domain_.require(x);
    return partials_(x);
  }

  OneForm without_partials() const {
    OneForm f = *this;
    f.partials_ = {};
    return f;
  }

 private:
  const LieGroupSpec* group_ = nullptr;
  Domain domain_;
  FrameFn frame_;
  PartialsFn partials_;
  std::string label_;
  std::optional<FlatnessCertificate> flat_;
};

/// A smooth algebra-valued function with optional analytic gradient.
class GFunction {
 public:
  using ValueFn = std::function<AlgebraElement(const Point&)>;
  using GradientFn = std::function<Frame(const Point&)>;

  GFunction() = default;
  GFunction(const LieGroupSpec& g, Domain dom, ValueFn value, GradientFn gradient = {},
            std::string label = {})
      : group_(&g),
        domain_(dom),
        value_(std::move(value)),
        gradient_(std::move(gradient)),
        label_(std::move(label)) {}

  const LieGroupSpec& group() const { return *group_; }
  const Domain& domain() const noexcept { return domain_; }
  const std::string& label() const noexcept { return label_; }
  bool has_gradient() const noexcept { return static_cast<bool>(gradient_); }

  AlgebraElement operator()(const Point& x) const {
    domain_.require(x);
    return value_(x);
  }

  /// Analytic gradient when available, otherwise central differences.
  Frame gradient(const Point& x, double rel_step = 1e-5) const {
    domain_.require(x);
    if (gradient_) return gradient_(x);
    Frame out;
    for (int i = 0; i < domain_.dim; ++i) {
      const double h = rel_step * domain_.half_widths[i];
      Point xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      if (!domain_.contains(xp) || !domain_.contains(xm))
        throw Error(ErrorKind::OutOfDomain, "finite difference stencil leaves the domain");
      out[i] = (1.0 / (2.0 * h)) * (value_(xp) - value_(xm));
    }
    return out;
  }

  GFunction without_gradient() const {
    GFunction f = *this;
    f.gradient_ = {};
    return f;
  }

 private:
  const LieGroupSpec* group_ = nullptr;
  Domain domain_;
  ValueFn value_;
  GradientFn gradient_;
  std::string label_;
};

/// A smooth group-valued map with optional analytic partials dF/dx_i.
class GMap {
 public:
  using ValueFn = std::function<GroupElement(const Point&)>;
  using PartialsFn = std::function<std::array<Mat, kMaxDim>(const Point&)>;

  GMap() = default;
  GMap(const LieGroupSpec& g, Domain dom, ValueFn value, PartialsFn partials = {},
       std::string label = {})
      : group_(&g),
        domain_(dom),
        value_(std::move(value)),
        partials_(std::move(partials)),
        label_(std::move(label)) {}

  const LieGroupSpec& group() const { return *group_; }
  const Domain& domain() const noexcept { return domain_; }
  const std::string& label() const noexcept { return label_; }
  bool has_partials() const noexcept { return static_cast<bool>(partials_); }

  GroupElement operator()(const Point& x) const {
    domain_.require(x);
    return value_(x);
  }

  std::array<Mat, kMaxDim> partials(const Point& x, double rel_step = 1e-5) const {
    domain_.require(x);
    if (partials_) return partials_(x);
    std::array<Mat, kMaxDim> out;
    for (int i = 0; i < domain_.dim; ++i) {
      const double h = rel_step * domain_.half_widths[i];
      Point xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      if (!domain_.contains(xp) || !domain_.contains(xm))
        throw Error(ErrorKind::OutOfDomain, "finite difference stencil leaves the domain");
      out[i] = (value_(xp).matrix() - value_(xm).matrix()) / (2.0 * h);
    }
    return out;
  }

  GMap without_partials() const {
    GMap f = *this;
    f.partials_ = {};
    return f;
  }

 private:
  const LieGroupSpec* group_ = nullptr;
  Domain domain_;
  ValueFn value_;
  PartialsFn partials_;
  std::string label_;
};

// ---------------------------------------------------------------------------
// Pointwise operations

/// sum_i v_i f_i; zero coefficients are skipped.
inline AlgebraElement contract(const Frame& f, const Point& v, const LieGroupSpec& g, int dim) {
  AlgebraElement out = AlgebraElement::zero(g);
  for (int i = 0; i < dim; ++i)
    if (v(i) != 0.0) out += v(i) * f[i];
  return out;
}

inline AlgebraElement eval(const OneForm& xi, const Point& x, const Point& v) {
  if (v.size() != xi.dim()) throw Error(ErrorKind::BadArgument, "direction has wrong dimension");
  return contract(xi.at(x), v, xi.group(), xi.dim());
}

struct FdOptions {
  /// Central-difference step relative to the domain half width.
  double rel_step = 1e-5;
};

namespace detail {

inline double fd_step(const Domain& d, int axis, const FdOptions& opt) {
  return opt.rel_step * d.half_widths[axis];
}

/// Ensures x +- h e_axis stays inside the domain for each listed axis.
inline void require_interior(const Domain& d, const Point& x, std::initializer_list<int> axes,
                             const FdOptions& opt) {
  d.require(x);
  for (int a : axes) {
    if (a < 0 || a >= d.dim) throw Error(ErrorKind::BadArgument, "axis out of range");
    if (std::abs(x(a)) + fd_step(d, a, opt) > d.half_widths[a])
      throw Error(ErrorKind::OutOfDomain, "point too close to the boundary for finite differences");
  }
}

/// d_axis xi_comp at x by central differences.
inline AlgebraElement fd_partial(const OneForm& xi, const Point& x, int axis, int comp,
                                 const FdOptions& opt) {
  const double h = fd_step(xi.domain(), axis, opt);
  Point xp = x, xm = x;
  xp(axis) += h;
  xm(axis) -= h;
  return (1.0 / (2.0 * h)) * (xi.frame_fn()(xp)[comp] - xi.frame_fn()(xm)[comp]);
}

}  // namespace detail

/// d xi(e_i, e_j) = d_i xi_j - d_j xi_i.
inline AlgebraElement exterior_derivative(const OneForm& xi, const Point& x, int i, int j,
                                          const FdOptions& opt = {}) {
  if (i == j) throw Error(ErrorKind::BadArgument, "exterior derivative needs distinct axes");
  if (xi.has_partials()) {
    xi.domain().require(x);
    if (i < 0 || j < 0 || i >= xi.dim() || j >= xi.dim())
      throw Error(ErrorKind::BadArgument, "axis out of range");
    const FrameJacobian jac = xi.partials(x);
    return jac[i][j] - jac[j][i];
  }
  detail::require_interior(xi.domain(), x, {i, j}, opt);
  return detail::fd_partial(xi, x, i, j, opt) - detail::fd_partial(xi, x, j, i, opt);
}

inline AlgebraElement wedge_bracket(const OneForm& phi, const OneForm& psi, const Point& x,
                                    const Point& u, const Point& v) {
  return bracket(eval(phi, x, u), eval(psi, x, v)) - bracket(eval(phi, x, v), eval(psi, x, u));
}

/// Maurer-Cartan residual d xi(e_i, e_j) - [xi_i, xi_j]; zero for flat forms.
inline AlgebraElement mc_residual(const OneForm& xi, const Point& x, int i, int j,
                                  const FdOptions& opt = {}) {
  const AlgebraElement dxi = exterior_derivative(xi, x, i, j, opt);
  const Frame f = xi.at(x);
  return dxi - bracket(f[i], f[j]);
}

/// Linearization of the Maurer-Cartan residual at xi in direction eta:
/// d eta(e_i, e_j) - ([xi_i, eta_j] - [xi_j, eta_i]).
inline AlgebraElement linearized_mc_residual(const OneForm& xi, const OneForm& eta, const Point& x,
                                             int i, int j, const FdOptions& opt = {}) {
  const AlgebraElement deta = exterior_derivative(eta, x, i, j, opt);
  const Frame a = xi.at(x);
  const Frame b = eta.at(x);
  return deta - (bracket(a[i], b[j]) - bracket(a[j], b[i]));
}

/// Grid points that keep a finite-difference margin from the boundary.
inline std::vector<Point> interior_points(const Domain& dom, const Grid& grid,
                                          const FdOptions& opt = {}) {
  std::vector<Point> out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Point x = grid.point(k);
    bool ok = dom.contains(x);
    for (int a = 0; ok && a < dom.dim; ++a)
      ok = std::abs(x(a)) + 2.0 * detail::fd_step(dom, a, opt) <= dom.half_widths[a];
    if (ok) out.push_back(std::move(x));
  }
  return out;
}

/// Max over points and axis pairs i < j of |residual(x, i, j)|. Evaluated in
/// parallel; the reduction runs in index order.
template <class ResidualFn>
double max_pair_residual(const std::vector<Point>& pts, int dim, ResidualFn&& residual) {
  std::vector<double> per_point(pts.size(), 0.0);
  parallel_for(pts.size(), [&](std::size_t k) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = i + 1; j < dim; ++j) m = std::max(m, residual(pts[k], i, j));
    per_point[k] = m;
  });
  double m = 0.0;
  for (double v : per_point) m = std::max(m, v);
  return m;
}

struct FlatnessReport {
  double max_residual = 0.0;
  bool flat = true;
};

inline FlatnessReport is_flat(const OneForm& xi, const Grid& grid, double tol,
                              const FdOptions& opt = {}) {
  if (!(tol > 0.0)) throw Error(ErrorKind::BadArgument, "flatness tolerance must be positive");
  const auto pts = interior_points(xi.domain(), grid, opt);
  const double m = max_pair_residual(pts, xi.dim(), [&](const Point& x, int i, int j) {
    return mc_residual(xi, x, i, j, opt).norm();
  });
  return {m, m <= tol};
}

inline FlatnessReport is_flat(const OneForm& xi, int per_axis, double tol, const FdOptions& opt = {}) {
  return is_flat(xi, Grid::uniform(xi.domain(), per_axis), tol, opt);
}

/// Returns a copy of xi carrying a flatness certificate; throws NotFlat otherwise.
inline OneForm certify_flat(const OneForm& xi, const Grid& grid, double tol, const FdOptions& opt = {}) {
  const auto rep = is_flat(xi, grid, tol, opt);
  if (!rep.flat)
    throw Error(ErrorKind::NotFlat, "'" + xi.label() + "' has Maurer-Cartan residual " +
                                        std::to_string(rep.max_residual));
  OneForm out = xi;
  out.set_flatness({rep.max_residual, tol, "grid"});
  return out;
}

// ---------------------------------------------------------------------------
// Maps to forms

/// Right logarithmic derivative of F: components (d_i F) F^-1.
inline OneForm pullback_form(const GMap& f, const FdOptions& opt = {}) {
  const LieGroupSpec& g = f.group();
  const Domain dom = f.domain();
  const double step = opt.rel_step;
  return OneForm(
      g, dom,
      [f, step, &g, d = dom.dim](const Point& x) {
        const GroupElement fx = f(x);
        const Mat inv = invert(fx).matrix();
        const auto parts = f.partials(x, step);
        Frame out;
        for (int i = 0; i < d; ++i) {
          Mat raw = parts[i] * inv;
          Mat p = g.project(raw);
          const double res = (raw - p).norm();
          if (res > 1e-6 * (1.0 + raw.norm()))
            throw Error(ErrorKind::NotInAlgebra,
                        "log derivative residual " + std::to_string(res) +
                            " (map not group valued or step too coarse)");
          out[i] = AlgebraElement::unchecked(g, std::move(p));
        }
        return out;
      },
      "pullback(" + f.label() + ")");
}

/// The exact form dh.
inline OneForm exact_form(const GFunction& h, const FdOptions& opt = {}) {
  const double step = opt.rel_step;
  return OneForm(
      h.group(), h.domain(), [h, step](const Point& x) { return h.gradient(x, step); },
      "d(" + h.label() + ")");
}

/// Pointwise product (F G)(x) = F(x) G(x); analytic partials when both factors have them.
inline GMap pointwise_product(const GMap& f, const GMap& g) {
  if (&f.group() != &g.group()) throw Error(ErrorKind::SpecMismatch, "maps into different groups");
  GMap::PartialsFn parts;
  if (f.has_partials() && g.has_partials()) {
    parts = [f, g, d = f.domain().dim](const Point& x) {
      const auto pf = f.partials(x);
      const auto pg = g.partials(x);
      const Mat fx = f(x).matrix();
      const Mat gx = g(x).matrix();
      std::array<Mat, kMaxDim> out;
      for (int i = 0; i < d; ++i) out[i] = pf[i] * gx + fx * pg[i];
      return out;
    };
  }
  return GMap(
      f.group(), f.domain(), [f, g](const Point& x) { return compose(f(x), g(x)); },
      std::move(parts), f.label() + "*" + g.label());
}

/// Pointwise inverse x -> F(x)^-1.
inline GMap pointwise_inverse(const GMap& f) {
  GMap::PartialsFn parts;
  if (f.has_partials()) {
    parts = [f, d = f.domain().dim](const Point& x) {
      const auto pf = f.partials(x);
      const Mat inv = invert(f(x)).matrix();
      std::array<Mat, kMaxDim> out;
      for (int i = 0; i < d; ++i) out[i] = -(inv * pf[i] * inv);
      return out;
    };
  }
  return GMap(
      f.group(), f.domain(), [f](const Point& x) { return invert(f(x)); }, std::move(parts),
      "inv(" + f.label() + ")");
}

/// Max over the grid of |d_r(F G) - d_r F - Ad(F) d_r G|.
inline double leibniz_check(const GMap& f, const GMap& g2, const Grid& grid, const FdOptions& opt = {}) {
  if (&f.group() != &g2.group()) throw Error(ErrorKind::SpecMismatch, "maps into different groups");
  const OneForm lhs = pullback_form(pointwise_product(f, g2), opt);
  const OneForm df = pullback_form(f, opt);
  const OneForm dg = pullback_form(g2, opt);
  const auto pts = interior_points(f.domain(), grid, opt);
  std::vector<double> dev(pts.size(), 0.0);
  parallel_for(pts.size(), [&](std::size_t k) {
    const Point& x = pts[k];
    const Frame a = lhs.at(x), b = df.at(x), c = dg.at(x);
    const GroupElement fx = f(x);
    double m = 0.0;
    for (int i = 0; i < f.domain().dim; ++i) m = std::max(m, (a[i] - b[i] - Ad(fx, c[i])).norm());
    dev[k] = m;
  });
  double m = 0.0;
  for (double v : dev) m = std::max(m, v);
  return m;
}

// ---------------------------------------------------------------------------
// Linear changes of chart

namespace detail {
inline void require_image_inside(const Eigen::MatrixXd& lin, const Domain& from, const Domain& to) {
  if (lin.rows() != to.dim || lin.cols() != from.dim)
    throw Error(ErrorKind::BadArgument, "linear map has wrong shape");
  for (int k = 0; k < to.dim; ++k) {
    double reach = 0.0;
    for (int i = 0; i < from.dim; ++i) reach += std::abs(lin(k, i)) * from.half_widths[i];
    if (reach > to.half_widths[k] * (1.0 + 1e-12))
      throw Error(ErrorKind::OutOfDomain, "linear map sends the new box outside the chart");
  }
}
}  // namespace detail

/// Pullback h^* xi along the linear map h(y) = L y from `new_domain` into xi's domain:
/// (h^* xi)_i(y) = sum_k L_ki xi_k(L y).
inline OneForm pullback_linear(const OneForm& xi, const Eigen::MatrixXd& lin, const Domain& new_domain) {
  detail::require_image_inside(lin, new_domain, xi.domain());
  const LieGroupSpec& g = xi.group();
  return OneForm(
      g, new_domain,
      [xi, lin, &g, d = new_domain.dim](const Point& y) {
        const Point x = lin * y;
        const Frame f = xi.frame_fn()(x);
        Frame out;
        for (int i = 0; i < d; ++i) {
          AlgebraElement acc = AlgebraElement::zero(g);
          for (int k = 0; k < xi.dim(); ++k)
            if (lin(k, i) != 0.0) acc += lin(k, i) * f[k];
          out[i] = acc;
        }
        return out;
      },
      "pullback_linear(" + xi.label() + ")");
}

/// F o h for the linear map h(y) = L y.
inline GMap compose_linear(const GMap& f, const Eigen::MatrixXd& lin, const Domain& new_domain) {
  detail::require_image_inside(lin, new_domain, f.domain());
  GMap::PartialsFn parts;
  if (f.has_partials()) {
    parts = [f, lin, d = new_domain.dim](const Point& y) {
      const auto pf = f.partials(Point(lin * y));
      std::array<Mat, kMaxDim> out;
      for (int i = 0; i < d; ++i) {
        out[i] = Mat::Zero(pf[0].rows(), pf[0].cols());
        for (int k = 0; k < f.domain().dim; ++k) out[i] += lin(k, i) * pf[k];
      }
      return out;
    };
  }
  return GMap(
      f.group(), new_domain, [f, lin](const Point& y) { return f(Point(lin * y)); }, std::move(parts),
      f.label() + "∘L");
}

}  // namespace cartan
