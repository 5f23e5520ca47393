#pragma once

/**
 * @file presets.hpp
 * @brief Named forms, maps and functions used by the CLI and the test suites.
 *
 * Preset ids have the shape `name[:p1,p2,...]`. Algebra-valued parameters are
 * linear combinations of basis names, e.g. `L1`, `0.5*L1-2*L3`, `H+E`.
 *
 * Forms:
 *   zero                      0
 *   const:A,B[,C]             A dx1 + B dx2 (+ C dx3)
 *   pullback-expxy:A,B        right log derivative of exp(x1 A) exp(x2 B)
 *   polynomial:A,c1,c2,...    d(p) A, p = c1 x1 + c2 x2 + c3 x1^2 + c4 x1 x2 + ...
 *                             (monomials of degree >= 1, graded lexicographic)
 *   su2-zcc:a,b               right log derivative of
 *                             exp(a x1 B1) exp(b x2 B2) exp(a b x1 x2 B3), with
 *                             B1..B3 the first three basis elements (so3, sl2, ...)
 * Maps: expxy:A,B and su2-zcc:a,b (the maps whose log derivatives give the forms above).
 * Functions: zero, const:A, poly:A,c1,..., quad:A,B,C (x1 A + x2^2 B + x1 x2 C).
 * Curves on [0, 1]: const:A, poly:A0,A1,A2 (A0 + t A1 + t^2 A2),
 *   trig:A,B,C (sin(3t) A + cos(2t) B + t^2 C).
 */

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cartan/evolution.hpp"
#include "cartan/forms.hpp"
#include "cartan/lie_group.hpp"

namespace cartan {

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = t.data() + t.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

inline double require_double(std::string_view s) {
  double v = 0.0;
  if (!parse_double(s, v)) throw Error(ErrorKind::Config, "expected a number, got '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

/// Parses `[c*]name (('+'|'-') [c*]name)*` over the basis names of `g`.
inline AlgebraElement parse_element(const LieGroupSpec& g, std::string_view text) {
  const std::string s = detail::trim(text);
  if (s.empty()) throw Error(ErrorKind::Config, "empty algebra element");
  AlgebraElement out = AlgebraElement::zero(g);
  std::size_t i = 0;
  while (i < s.size()) {
    double sign = 1.0;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1.0 : 1.0;
      ++i;
    }
    // a term ends at the next +/- unless it is the exponent sign of the coefficient
    auto exponent_sign = [&](std::size_t j) {
      return j >= i + 2 && (s[j - 1] == 'e' || s[j - 1] == 'E') &&
             (std::isdigit(static_cast<unsigned char>(s[j - 2])) || s[j - 2] == '.') &&
             s.find('*', i) != std::string::npos && s.find('*', i) > j;
    };
    std::size_t j = i;
    while (j < s.size() && !((s[j] == '+' || s[j] == '-') && j > i && !exponent_sign(j))) ++j;
    const std::string term = detail::trim(std::string_view(s).substr(i, j - i));
    double coef = 1.0;
    std::string name = term;
    if (auto star = term.find('*'); star != std::string::npos) {
      coef = detail::require_double(std::string_view(term).substr(0, star));
      name = detail::trim(std::string_view(term).substr(star + 1));
    }
    const auto& names = g.basis_names();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
      throw Error(ErrorKind::Config, "unknown basis element '" + name + "' for " + g.name());
    out += (sign * coef) * AlgebraElement::basis(g, static_cast<int>(it - names.begin()));
    i = j;
  }
  return out;
}

struct PresetId {
  std::string name;
  std::vector<std::string> params;

  static PresetId parse(std::string_view id) {
    PresetId p;
    const auto colon = id.find(':');
    p.name = detail::trim(id.substr(0, colon));
    if (colon != std::string_view::npos) p.params = detail::split(id.substr(colon + 1), ',');
    return p;
  }

  void require_count(std::size_t lo, std::size_t hi) const {
    if (params.size() < lo || params.size() > hi)
      throw Error(ErrorKind::Config, "preset '" + name + "' takes " + std::to_string(lo) +
                                         (lo == hi ? "" : ".." + std::to_string(hi)) + " parameters");
  }
};

// ---------------------------------------------------------------------------
// Scalar polynomials

/// p(x) = sum_k c_k x^alpha_k over monomials of degree >= 1 in graded lex order.
class Polynomial {
 public:
  Polynomial(int dim, std::vector<double> coeffs) : dim_(dim), coeffs_(std::move(coeffs)) {
    for (int deg = 1; exps_.size() < coeffs_.size(); ++deg) append_degree(deg, 0, std::vector<int>(dim_, 0));
    exps_.resize(coeffs_.size());
  }

  double operator()(const Point& x) const {
    double v = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) v += coeffs_[k] * monomial(x, exps_[k], -1);
    return v;
  }

  double partial(const Point& x, int axis) const {
    double v = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      const int e = exps_[k][axis];
      if (e > 0) v += coeffs_[k] * e * monomial(x, exps_[k], axis);
    }
    return v;
  }

  double second_partial(const Point& x, int a, int b) const {
    double v = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      std::vector<int> e = exps_[k];
      double c = coeffs_[k];
      if (e[a] == 0) continue;
      c *= e[a];
      e[a] -= 1;
      if (e[b] == 0) continue;
      c *= e[b];
      e[b] -= 1;
      v += c * monomial(x, e, -1);
    }
    return v;
  }

 private:
  void append_degree(int deg, int axis, std::vector<int> e) {
    if (axis == dim_ - 1) {
      e[axis] = deg;
      exps_.push_back(e);
      return;
    }
    for (int p = deg; p >= 0; --p) {
      e[axis] = p;
      append_degree(deg - p, axis + 1, e);
    }
  }

  /// x^e, or x^(e - e_skip) * 1 when skip >= 0 (derivative helper).
  double monomial(const Point& x, const std::vector<int>& e, int skip) const {
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) {
      const int p = (i == skip) ? e[i] - 1 : e[i];
      for (int k = 0; k < p; ++k) v *= x(i);
    }
    return v;
  }

  int dim_;
  std::vector<double> coeffs_;
  std::vector<std::vector<int>> exps_;
};

// ---------------------------------------------------------------------------
// Products of exponentials

/// Scalar function with gradient, used as an exponent weight.
struct ScalarField {
  std::function<double(const Point&)> value;
  std::function<double(const Point&, int)> partial;
};

inline ScalarField coordinate_field(int axis, double scale = 1.0) {
  return {[axis, scale](const Point& x) { return scale * x(axis); },
          [axis, scale](const Point&, int i) { return i == axis ? scale : 0.0; }};
}

inline ScalarField product_field(int a, int b, double scale) {
  return {[a, b, scale](const Point& x) { return scale * x(a) * x(b); },
          [a, b, scale](const Point& x, int i) {
            return scale * ((i == a ? x(b) : 0.0) + (i == b ? x(a) : 0.0));
          }};
}

/// F(x) = exp(phi_1(x) A_1) ... exp(phi_K(x) A_K) with analytic partials.
inline GMap exp_product(const LieGroupSpec& g, const Domain& dom, std::vector<ScalarField> phis,
                        std::vector<AlgebraElement> gens, std::string label) {
  if (phis.size() != gens.size()) throw Error(ErrorKind::BadArgument, "exp_product arity mismatch");
  auto factors = [phis, gens](const Point& x) {
    std::vector<GroupElement> e;
    e.reserve(gens.size());
    for (std::size_t k = 0; k < gens.size(); ++k) e.push_back(exp(phis[k].value(x) * gens[k]));
    return e;
  };
  auto value = [factors, &g](const Point& x) {
    GroupElement out = GroupElement::identity(g);
    for (const auto& e : factors(x)) out = compose(out, e);
    return out;
  };
  auto partials = [factors, phis, gens, &g, d = dom.dim](const Point& x) {
    const auto e = factors(x);
    const std::size_t K = e.size();
    const int n = g.ambient_dim();
    // suffix[k] = E_k ... E_K, prefix before k = E_1 ... E_{k-1}
    std::vector<Mat> suffix(K + 1, Mat::Identity(n, n));
    for (std::size_t k = K; k-- > 0;) suffix[k] = e[k].matrix() * suffix[k + 1];
    std::array<Mat, kMaxDim> out;
    for (int i = 0; i < d; ++i) out[i] = Mat::Zero(n, n);
    Mat prefix = Mat::Identity(n, n);
    for (std::size_t k = 0; k < K; ++k) {
      const Mat term = prefix * gens[k].matrix() * suffix[k];
      for (int i = 0; i < d; ++i) {
        const double w = phis[k].partial(x, i);
        if (w != 0.0) out[i] += w * term;
      }
      prefix = prefix * e[k].matrix();
    }
    return out;
  };
  return GMap(g, dom, value, partials, std::move(label));
}

// ---------------------------------------------------------------------------
// Registries

inline GMap make_map(const LieGroupSpec& g, std::string_view id, const Domain& dom) {
  const PresetId p = PresetId::parse(id);
  if (p.name == "identity") {
    return GMap(
        g, dom, [&g](const Point&) { return GroupElement::identity(g); },
        [&g, d = dom.dim](const Point&) {
          std::array<Mat, kMaxDim> out;
          for (int i = 0; i < d; ++i) out[i] = Mat::Zero(g.ambient_dim(), g.ambient_dim());
          return out;
        },
        "identity");
  }
  if (p.name == "expxy" || p.name == "pullback-expxy") {
    p.require_count(2, 2);
    if (dom.dim < 2) throw Error(ErrorKind::Config, "expxy needs a domain of dimension >= 2");
    return exp_product(g, dom, {coordinate_field(0), coordinate_field(1)},
                       {parse_element(g, p.params[0]), parse_element(g, p.params[1])},
                       "expxy:" + p.params[0] + "," + p.params[1]);
  }
  if (p.name == "su2-zcc") {
    p.require_count(2, 2);
    if (dom.dim < 2) throw Error(ErrorKind::Config, "su2-zcc needs a domain of dimension >= 2");
    if (g.algebra_dim() < 3) throw Error(ErrorKind::Config, "su2-zcc needs at least three basis elements");
    const double a = detail::require_double(p.params[0]);
    const double b = detail::require_double(p.params[1]);
    return exp_product(g, dom, {coordinate_field(0, a), coordinate_field(1, b), product_field(0, 1, a * b)},
                       {AlgebraElement::basis(g, 0), AlgebraElement::basis(g, 1), AlgebraElement::basis(g, 2)},
                       "su2-zcc:" + p.params[0] + "," + p.params[1]);
  }
  throw Error(ErrorKind::Config, "unknown map preset '" + p.name + "'");
}

inline GFunction make_function(const LieGroupSpec& g, std::string_view id, const Domain& dom) {
  const PresetId p = PresetId::parse(id);
  const int d = dom.dim;
  if (p.name == "zero") {
    const auto z = AlgebraElement::zero(g);
    return GFunction(
        g, dom, [z](const Point&) { return z; }, [z](const Point&) { return Frame{z, z, z}; }, "zero");
  }
  if (p.name == "const") {
    p.require_count(1, 1);
    const auto a = parse_element(g, p.params[0]);
    const auto z = AlgebraElement::zero(g);
    return GFunction(
        g, dom, [a](const Point&) { return a; }, [z](const Point&) { return Frame{z, z, z}; },
        "const:" + p.params[0]);
  }
  if (p.name == "poly" || p.name == "polynomial") {
    if (p.params.size() < 2) throw Error(ErrorKind::Config, "poly needs an element and coefficients");
    const auto a = parse_element(g, p.params[0]);
    std::vector<double> c;
    for (std::size_t k = 1; k < p.params.size(); ++k) c.push_back(detail::require_double(p.params[k]));
    const Polynomial poly(d, c);
    return GFunction(
        g, dom, [a, poly](const Point& x) { return poly(x) * a; },
        [a, poly, d](const Point& x) {
          Frame f;
          for (int i = 0; i < d; ++i) f[i] = poly.partial(x, i) * a;
          return f;
        },
        std::string(id));
  }
  if (p.name == "quad") {
    p.require_count(3, 3);
    if (d < 2) throw Error(ErrorKind::Config, "quad needs a domain of dimension >= 2");
    const auto a = parse_element(g, p.params[0]);
    const auto b = parse_element(g, p.params[1]);
    const auto c = parse_element(g, p.params[2]);
    const auto z = AlgebraElement::zero(g);
    return GFunction(
        g, dom, [a, b, c](const Point& x) { return x(0) * a + (x(1) * x(1)) * b + (x(0) * x(1)) * c; },
        [a, b, c, z, d](const Point& x) {
          Frame f{z, z, z};
          f[0] = a + x(1) * c;
          f[1] = (2.0 * x(1)) * b + x(0) * c;
          return f;
        },
        std::string(id));
  }
  throw Error(ErrorKind::Config, "unknown function preset '" + p.name + "'");
}

inline OneForm make_form(const LieGroupSpec& g, std::string_view id, const Domain& dom) {
  const PresetId p = PresetId::parse(id);
  const int d = dom.dim;
  if (p.name == "zero") return OneForm::zero(g, dom);
  if (p.name == "const") {
    p.require_count(1, static_cast<std::size_t>(d));
    const auto z = AlgebraElement::zero(g);
    Frame f{z, z, z};
    for (std::size_t i = 0; i < p.params.size(); ++i) f[i] = parse_element(g, p.params[i]);
    return OneForm(
        g, dom, [f](const Point&) { return f; }, std::string(id),
        [z](const Point&) {
          Frame zf{z, z, z};
          return FrameJacobian{zf, zf, zf};
        });
  }
  if (p.name == "pullback-expxy" || p.name == "su2-zcc") {
    return pullback_form(make_map(g, id, dom)).set_label(std::string(id));
  }
  if (p.name == "polynomial") {
    if (p.params.size() < 2) throw Error(ErrorKind::Config, "polynomial needs an element and coefficients");
    const auto a = parse_element(g, p.params[0]);
    std::vector<double> c;
    for (std::size_t k = 1; k < p.params.size(); ++k) c.push_back(detail::require_double(p.params[k]));
    const Polynomial poly(d, c);
    return OneForm(
        g, dom,
        [a, poly, d](const Point& x) {
          Frame f;
          for (int i = 0; i < d; ++i) f[i] = poly.partial(x, i) * a;
          return f;
        },
        std::string(id),
        [a, poly, d](const Point& x) {
          FrameJacobian j;
          for (int r = 0; r < d; ++r)
            for (int i = 0; i < d; ++i) j[r][i] = poly.second_partial(x, i, r) * a;
          return j;
        });
  }
  throw Error(ErrorKind::Config, "unknown form preset '" + p.name + "'");
}

inline AlgebraCurve make_curve(const LieGroupSpec& g, std::string_view id) {
  const PresetId p = PresetId::parse(id);
  std::vector<AlgebraElement> e;
  for (const auto& s : p.params) e.push_back(parse_element(g, s));
  if (p.name == "const") {
    p.require_count(1, 1);
    return AlgebraCurve(g, [a = e[0]](double) { return a; }, std::string(id));
  }
  if (p.name == "poly") {
    p.require_count(1, 3);
    while (e.size() < 3) e.push_back(AlgebraElement::zero(g));
    return AlgebraCurve(
        g, [e](double t) { return e[0] + t * e[1] + (t * t) * e[2]; }, std::string(id));
  }
  if (p.name == "trig") {
    p.require_count(3, 3);
    return AlgebraCurve(
        g, [e](double t) { return std::sin(3.0 * t) * e[0] + std::cos(2.0 * t) * e[1] + (t * t) * e[2]; },
        std::string(id));
  }
  throw Error(ErrorKind::Config, "unknown curve preset '" + p.name + "'");
}

/// Names of basis elements k, k+1, k+2 (cyclically); gives a valid parameter
/// triple for every group, including one-dimensional ones.
inline std::array<std::string, 3> basis_triple(const LieGroupSpec& g, int k = 0) {
  const auto& n = g.basis_names();
  const int m = static_cast<int>(n.size());
  return {n[k % m], n[(k + 1) % m], n[(k + 2) % m]};
}

}  // namespace cartan
