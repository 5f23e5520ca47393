#pragma once

/**
 * @file lie_group.hpp
 * @brief Matrix Lie groups and their Lie algebras.
 *
 * A group is described at runtime by a LieGroupSpec (ambient size, algebra
 * basis, constraint rule). Group and algebra elements are plain ambient
 * matrices tagged with a pointer to their spec. Specs are owned by a static
 * registry and outlive every element, so the tag is a raw pointer.
 *
 * Conventions:
 *  - Ad(g)X = g X g^-1, ad(X)Y = [X, Y] = XY - YX.
 *  - Right trivialization kappa_r(g, v) = v g^-1, left kappa_l(g, v) = g^-1 v.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cartan/core.hpp"

namespace cartan {

enum class GroupKind { SO3, SE3, SL2, Heisenberg3, GL, RPlus };

struct Tolerances {
  static constexpr double construction = 1e-8;
  static constexpr double projection = 1e-10;
  static constexpr double closure = 1e-10;
  static constexpr double tangent = 1e-8;
};

class LieGroupSpec {
 public:
  LieGroupSpec(GroupKind kind, std::string name, int n, std::vector<Mat> basis,
               std::vector<std::string> basis_names)
      : kind_(kind),
        name_(std::move(name)),
        n_(n),
        basis_(std::move(basis)),
        basis_names_(std::move(basis_names)) {
    const int m = static_cast<int>(basis_.size());
    vec_basis_.resize(n_ * n_, m);
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < n_; ++j)
        for (int i = 0; i < n_; ++i) vec_basis_(j * n_ + i, k) = basis_[k](i, j);
    }
    gram_ = vec_basis_.transpose() * vec_basis_;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram_);
    if (lu.rank() != m) throw Error(ErrorKind::BadArgument, name_ + ": basis is linearly dependent");
    coord_map_ = lu.solve(vec_basis_.transpose());
    full_ = (m == n_ * n_);
    // The closed-form projection applies when the basis spans exactly the
    // subspace the group kind names.
    closed_form_ = !full_ && m == kind_dimension();
    for (int k = 0; closed_form_ && k < m; ++k)
      closed_form_ = n_ == kind_ambient() && (closed_form_project(basis_[k]) - basis_[k]).norm() == 0.0;
  }

  GroupKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  /// Ambient matrix size n.
  int ambient_dim() const noexcept { return n_; }
  /// Algebra dimension m.
  int algebra_dim() const noexcept { return static_cast<int>(basis_.size()); }
  const std::vector<Mat>& basis() const noexcept { return basis_; }
  const std::vector<std::string>& basis_names() const noexcept { return basis_names_; }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }

  /// Least-squares coordinates of an ambient matrix in the algebra basis.
  Eigen::VectorXd coordinates(const Mat& x) const {
    Eigen::VectorXd v(n_ * n_);
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < n_; ++i) v(j * n_ + i) = x(i, j);
    return coord_map_ * v;
  }

  Mat from_coordinates(const Eigen::VectorXd& c) const {
    Mat out = Mat::Zero(n_, n_);
    for (int k = 0; k < algebra_dim(); ++k) out += c(k) * basis_[k];
    return out;
  }

  /// Orthogonal projection onto span(basis).
  Mat project(const Mat& x) const {
    if (full_) return x;
    if (closed_form_) return closed_form_project(x);
    return from_coordinates(coordinates(x));
  }

  /// Distance from x to span(basis).
  double projection_residual(const Mat& x) const {
    if (full_) return 0.0;
    return (x - project(x)).norm();
  }

  /// Residual of the group constraint; 0 for an exact group element.
  double constraint_residual(const Mat& g) const {
    if (g.rows() != n_ || g.cols() != n_) return std::numeric_limits<double>::infinity();
    if (!g.allFinite()) return std::numeric_limits<double>::infinity();
    switch (kind_) {
      case GroupKind::SO3:
        return rotation_residual(g);
      case GroupKind::SE3: {
        Mat r = g.topLeftCorner(3, 3);
        Eigen::Vector4d last(g(3, 0), g(3, 1), g(3, 2), g(3, 3) - 1.0);
        return rotation_residual(r) + last.norm();
      }
      case GroupKind::SL2:
        return std::abs(g.determinant() - 1.0);
      case GroupKind::Heisenberg3: {
        double r = 0.0;
        for (int i = 0; i < 3; ++i) {
          r += std::abs(g(i, i) - 1.0);
          for (int j = 0; j < i; ++j) r += std::abs(g(i, j));
        }
        return r;
      }
      case GroupKind::GL: {
        const double scale = std::pow(std::max(1.0, g.norm()), n_);
        return std::abs(g.determinant()) > 1e-12 * scale ? 0.0 : 1.0;
      }
      case GroupKind::RPlus:
        return g(0, 0) > 0.0 ? 0.0 : 1.0 + std::abs(g(0, 0));
    }
    return 0.0;
  }

 private:
  int kind_dimension() const {
    switch (kind_) {
      case GroupKind::SO3:
      case GroupKind::SL2:
      case GroupKind::Heisenberg3:
        return 3;
      case GroupKind::SE3:
        return 6;
      default:
        return -1;
    }
  }

  int kind_ambient() const {
    switch (kind_) {
      case GroupKind::SO3:
      case GroupKind::Heisenberg3:
        return 3;
      case GroupKind::SE3:
        return 4;
      case GroupKind::SL2:
        return 2;
      default:
        return -1;
    }
  }

  /// Orthogonal projections onto so(3), se(3), sl(2) and the strictly upper
  /// triangular 3x3 matrices.
  Mat closed_form_project(const Mat& x) const {
    switch (kind_) {
      case GroupKind::SO3:
        return 0.5 * (x - x.transpose());
      case GroupKind::SE3: {
        Mat p = Mat::Zero(4, 4);
        p.topLeftCorner(3, 3) = 0.5 * (x.topLeftCorner(3, 3) - x.topLeftCorner(3, 3).transpose());
        p.topRightCorner(3, 1) = x.topRightCorner(3, 1);
        return p;
      }
      case GroupKind::SL2: {
        Mat p = x;
        const double half_trace = 0.5 * (x(0, 0) + x(1, 1));
        p(0, 0) -= half_trace;
        p(1, 1) -= half_trace;
        return p;
      }
      case GroupKind::Heisenberg3:
        return x.triangularView<Eigen::StrictlyUpper>();
      default:
        return x;
    }
  }

  static double rotation_residual(const Mat& r) {
    Mat rtr = r.transpose() * r;
    rtr -= Mat::Identity(3, 3);
    return rtr.norm() + std::abs(r.determinant() - 1.0);
  }

  GroupKind kind_;
  std::string name_;
  int n_;
  std::vector<Mat> basis_;
  std::vector<std::string> basis_names_;
  bool closed_form_ = false;
  Eigen::MatrixXd vec_basis_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd coord_map_;
  bool full_ = false;
};

namespace detail {

inline Mat unit(int n, int i, int j) {
  Mat m = Mat::Zero(n, n);
  m(i, j) = 1.0;
  return m;
}

inline std::array<Mat, 3> so3_generators() {
  Mat l1 = Mat::Zero(3, 3), l2 = Mat::Zero(3, 3), l3 = Mat::Zero(3, 3);
  l1(2, 1) = 1.0;
  l1(1, 2) = -1.0;
  l2(0, 2) = 1.0;
  l2(2, 0) = -1.0;
  l3(1, 0) = 1.0;
  l3(0, 1) = -1.0;
  return {l1, l2, l3};
}

inline std::unique_ptr<LieGroupSpec> build_group(std::string_view id) {
  if (id == "so3") {
    auto l = so3_generators();
    return std::make_unique<LieGroupSpec>(GroupKind::SO3, "so3", 3,
                                          std::vector<Mat>{l[0], l[1], l[2]},
                                          std::vector<std::string>{"L1", "L2", "L3"});
  }
  if (id == "se3") {
    auto l = so3_generators();
    std::vector<Mat> basis;
    for (const auto& li : l) {
      Mat b = Mat::Zero(4, 4);
      b.topLeftCorner(3, 3) = li;
      basis.push_back(b);
    }
    for (int i = 0; i < 3; ++i) basis.push_back(unit(4, i, 3));
    return std::make_unique<LieGroupSpec>(
        GroupKind::SE3, "se3", 4, std::move(basis),
        std::vector<std::string>{"R1", "R2", "R3", "P1", "P2", "P3"});
  }
  if (id == "sl2") {
    Mat h = Mat::Zero(2, 2);
    h(0, 0) = 1.0;
    h(1, 1) = -1.0;
    return std::make_unique<LieGroupSpec>(GroupKind::SL2, "sl2", 2,
                                          std::vector<Mat>{h, unit(2, 0, 1), unit(2, 1, 0)},
                                          std::vector<std::string>{"H", "E", "F"});
  }
  if (id == "heisenberg3") {
    return std::make_unique<LieGroupSpec>(
        GroupKind::Heisenberg3, "heisenberg3", 3,
        std::vector<Mat>{unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)},
        std::vector<std::string>{"X", "Y", "Z"});
  }
  if (id == "rplus") {
    return std::make_unique<LieGroupSpec>(GroupKind::RPlus, "rplus", 1,
                                          std::vector<Mat>{Mat::Identity(1, 1)},
                                          std::vector<std::string>{"U"});
  }
  if (id.size() == 3 && id.substr(0, 2) == "gl" && id[2] >= '1' && id[2] <= '4') {
    const int n = id[2] - '0';
    std::vector<Mat> basis;
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        basis.push_back(unit(n, i, j));
        names.push_back("E" + std::to_string(i + 1) + std::to_string(j + 1));
      }
    return std::make_unique<LieGroupSpec>(GroupKind::GL, std::string(id), n, std::move(basis),
                                          std::move(names));
  }
  return nullptr;
}

}  // namespace detail

/// Group specs by string id: "so3", "se3", "sl2", "heisenberg3", "gl1".."gl4", "rplus".
inline const LieGroupSpec& group(std::string_view id) {
  static std::mutex mutex;
  static std::map<std::string, std::unique_ptr<LieGroupSpec>, std::less<>> registry;
  std::lock_guard lock(mutex);
  if (auto it = registry.find(id); it != registry.end()) return *it->second;
  auto spec = detail::build_group(id);
  if (!spec) throw Error(ErrorKind::BadArgument, "unknown group '" + std::string(id) + "'");
  auto& slot = registry[std::string(id)];
  slot = std::move(spec);
  return *slot;
}

inline std::vector<std::string> known_groups() {
  return {"so3", "se3", "sl2", "heisenberg3", "gl3", "rplus"};
}

// ---------------------------------------------------------------------------
// Algebra elements

class AlgebraElement {
 public:
  AlgebraElement() = default;

  /// Checked: the matrix must lie in span(basis) up to 1e-10 (1 + |m|).
  static AlgebraElement from_matrix(const LieGroupSpec& spec, const Mat& m) {
    if (m.rows() != spec.ambient_dim() || m.cols() != spec.ambient_dim())
      throw Error(ErrorKind::SpecMismatch, "matrix size does not match " + spec.name());
    if (!m.allFinite()) throw Error(ErrorKind::NonFinite, "algebra element");
    const double res = spec.projection_residual(m);
    if (res > Tolerances::projection * (1.0 + m.norm()))
      throw Error(ErrorKind::NotInAlgebra,
                  "distance " + std::to_string(res) + " to " + spec.name() + " algebra");
    return AlgebraElement(spec, m);
  }

  /// Unchecked; the caller guarantees membership.
  static AlgebraElement unchecked(const LieGroupSpec& spec, Mat m) {
    return AlgebraElement(spec, std::move(m));
  }

  static AlgebraElement zero(const LieGroupSpec& spec) {
    return AlgebraElement(spec, Mat::Zero(spec.ambient_dim(), spec.ambient_dim()));
  }

  static AlgebraElement from_coordinates(const LieGroupSpec& spec, const Eigen::VectorXd& c) {
    if (c.size() != spec.algebra_dim())
      throw Error(ErrorKind::SpecMismatch, "coordinate count for " + spec.name());
    return AlgebraElement(spec, spec.from_coordinates(c));
  }

  static AlgebraElement basis(const LieGroupSpec& spec, int k) {
    return AlgebraElement(spec, spec.basis().at(k));
  }

  const LieGroupSpec& spec() const { return *spec_; }
  const LieGroupSpec* spec_ptr() const noexcept { return spec_; }
  const Mat& matrix() const noexcept { return m_; }
  Eigen::VectorXd coordinates() const { return spec_->coordinates(m_); }
  double norm() const { return m_.norm(); }

  AlgebraElement& operator+=(const AlgebraElement& o) {
    check_same(o);
    m_ += o.m_;
    return *this;
  }
  AlgebraElement& operator-=(const AlgebraElement& o) {
    check_same(o);
    m_ -= o.m_;
    return *this;
  }
  AlgebraElement& operator*=(double s) {
    m_ *= s;
    return *this;
  }
  friend AlgebraElement operator+(AlgebraElement a, const AlgebraElement& b) { return a += b; }
  friend AlgebraElement operator-(AlgebraElement a, const AlgebraElement& b) { return a -= b; }
  friend AlgebraElement operator*(double s, AlgebraElement a) { return a *= s; }
  friend AlgebraElement operator-(AlgebraElement a) { return a *= -1.0; }

  void check_same(const AlgebraElement& o) const {
    if (spec_ != o.spec_) throw Error(ErrorKind::SpecMismatch, "algebra elements of different groups");
  }

 private:
  AlgebraElement(const LieGroupSpec& spec, Mat m) : spec_(&spec), m_(std::move(m)) {}

  const LieGroupSpec* spec_ = nullptr;
  Mat m_;
};

/// Frobenius distance between two algebra elements.
inline double distance(const AlgebraElement& a, const AlgebraElement& b) {
  a.check_same(b);
  return (a.matrix() - b.matrix()).norm();
}

// ---------------------------------------------------------------------------
// Group elements

class GroupElement {
 public:
  GroupElement() = default;

  static GroupElement from_matrix(const LieGroupSpec& spec, const Mat& m,
                                  double tol = Tolerances::construction) {
    const double r = spec.constraint_residual(m);
    if (!(r <= tol))
      throw Error(ErrorKind::ConstraintViolation,
                  spec.name() + " constraint residual " + std::to_string(r));
    return GroupElement(spec, m);
  }

  static GroupElement unchecked(const LieGroupSpec& spec, Mat m) {
    return GroupElement(spec, std::move(m));
  }

  static GroupElement identity(const LieGroupSpec& spec) {
    return GroupElement(spec, Mat::Identity(spec.ambient_dim(), spec.ambient_dim()));
  }

  const LieGroupSpec& spec() const { return *spec_; }
  const LieGroupSpec* spec_ptr() const noexcept { return spec_; }
  const Mat& matrix() const noexcept { return m_; }
  double constraint_residual() const { return spec_->constraint_residual(m_); }

  void check_same(const GroupElement& o) const {
    if (spec_ != o.spec_) throw Error(ErrorKind::SpecMismatch, "group elements of different groups");
  }
  void check_same(const AlgebraElement& o) const {
    if (spec_ != o.spec_ptr())
      throw Error(ErrorKind::SpecMismatch, "group/algebra elements of different groups");
  }

 private:
  GroupElement(const LieGroupSpec& spec, Mat m) : spec_(&spec), m_(std::move(m)) {}

  const LieGroupSpec* spec_ = nullptr;
  Mat m_;
};

inline double distance(const GroupElement& a, const GroupElement& b) {
  a.check_same(b);
  return (a.matrix() - b.matrix()).norm();
}

inline GroupElement compose(const GroupElement& g, const GroupElement& h) {
  g.check_same(h);
  return GroupElement::unchecked(g.spec(), g.matrix() * h.matrix());
}

inline GroupElement operator*(const GroupElement& g, const GroupElement& h) { return compose(g, h); }

inline GroupElement invert(const GroupElement& g) {
  const auto& spec = g.spec();
  const Mat& m = g.matrix();
  const double r = spec.constraint_residual(m);
  if (!(r <= 1e-6)) throw Error(ErrorKind::Singular, "cannot invert, constraint residual " + std::to_string(r));
  switch (spec.kind()) {
    case GroupKind::SO3:
      return GroupElement::unchecked(spec, m.transpose());
    case GroupKind::SE3: {
      Mat out = Mat::Identity(4, 4);
      out.topLeftCorner(3, 3) = m.topLeftCorner(3, 3).transpose();
      out.topRightCorner(3, 1) = -(m.topLeftCorner(3, 3).transpose() * m.topRightCorner(3, 1));
      return GroupElement::unchecked(spec, std::move(out));
    }
    case GroupKind::SL2: {
      Mat out(2, 2);
      const double det = m.determinant();
      out << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
      return GroupElement::unchecked(spec, out / det);
    }
    case GroupKind::Heisenberg3: {
      Mat nil = m - Mat::Identity(3, 3);
      Mat out = Mat::Identity(3, 3) - nil + nil * nil;
      return GroupElement::unchecked(spec, std::move(out));
    }
    case GroupKind::RPlus: {
      Mat out(1, 1);
      out(0, 0) = 1.0 / m(0, 0);
      return GroupElement::unchecked(spec, std::move(out));
    }
    case GroupKind::GL:
      break;
  }
  Eigen::PartialPivLU<Mat> lu(m);
  return GroupElement::unchecked(spec, lu.inverse());
}

// ---------------------------------------------------------------------------
// Brackets and adjoint actions

namespace detail {

inline AlgebraElement reproject(const LieGroupSpec& spec, const Mat& raw) {
  Mat p = spec.project(raw);
  const double res = (raw - p).norm();
  if (res > Tolerances::closure * (1.0 + raw.norm()))
    throw Error(ErrorKind::NotInAlgebra,
                spec.name() + " closure violated by " + std::to_string(res));
  return AlgebraElement::unchecked(spec, std::move(p));
}

}  // namespace detail

inline AlgebraElement bracket(const AlgebraElement& x, const AlgebraElement& y) {
  x.check_same(y);
  return detail::reproject(x.spec(), x.matrix() * y.matrix() - y.matrix() * x.matrix());
}

/// ad(X)Y; same contract as bracket.
inline AlgebraElement ad(const AlgebraElement& x, const AlgebraElement& y) { return bracket(x, y); }

inline AlgebraElement Ad(const GroupElement& g, const AlgebraElement& x) {
  g.check_same(x);
  const GroupElement gi = invert(g);
  return detail::reproject(x.spec(), g.matrix() * x.matrix() * gi.matrix());
}

// ---------------------------------------------------------------------------
// Exponential

namespace detail {

/// Scaling and squaring with a diagonal (6,6) Pade approximant.
inline Mat expm_pade(const Mat& x) {
  const int n = static_cast<int>(x.rows());
  const double norm1 = x.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / 0.5))));
  const Mat a = x / std::ldexp(1.0, squarings);
  // c_k = (2q-k)! q! / ((2q)! k! (q-k)!), q = 6
  static constexpr std::array<double, 7> c = {1.0,
                                              1.0 / 2.0,
                                              5.0 / 44.0,
                                              1.0 / 66.0,
                                              1.0 / 792.0,
                                              1.0 / 15840.0,
                                              1.0 / 665280.0};
  const Mat id = Mat::Identity(n, n);
  Mat a2 = a * a;
  Mat a4 = a2 * a2;
  Mat a6 = a4 * a2;
  Mat even = c[0] * id + c[2] * a2 + c[4] * a4 + c[6] * a6;
  Mat odd = a * (c[1] * id + c[3] * a2 + c[5] * a4);
  Mat num = even + odd;
  Mat den = even - odd;
  Mat r = den.partialPivLu().solve(num);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

inline Mat rodrigues(const Mat& w) {
  const double theta2 = 0.5 * w.squaredNorm();  // |omega|^2 for a skew 3x3 matrix
  const double theta = std::sqrt(theta2);
  double a, b;
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat::Identity(3, 3) + a * w + b * (w * w);
}

}  // namespace detail

inline GroupElement exp(const AlgebraElement& x) {
  const auto& spec = x.spec();
  const Mat& m = x.matrix();
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, "exp of non-finite algebra element");
  switch (spec.kind()) {
    case GroupKind::SO3:
      return GroupElement::unchecked(spec, detail::rodrigues(m));
    case GroupKind::Heisenberg3:
      return GroupElement::unchecked(spec, Mat::Identity(3, 3) + m + 0.5 * (m * m));
    case GroupKind::RPlus: {
      Mat out(1, 1);
      out(0, 0) = std::exp(m(0, 0));
      return GroupElement::unchecked(spec, std::move(out));
    }
    default:
      return GroupElement::unchecked(spec, detail::expm_pade(m));
  }
}

// ---------------------------------------------------------------------------
// dexp^-1

namespace detail {

/// B_k / k! for k = 0..16.
inline constexpr std::array<double, 17> kBernoulliOverFactorial = {
    1.0,
    -1.0 / 2.0,
    1.0 / 12.0,
    0.0,
    -1.0 / 720.0,
    0.0,
    1.0 / 30240.0,
    0.0,
    -1.0 / 1209600.0,
    0.0,
    1.0 / 47900160.0,
    0.0,
    -691.0 / 1307674368000.0,
    0.0,
    1.0 / 74724249600.0,
    0.0,
    -3617.0 / 10670622842880000.0,
};

}  // namespace detail

/// Truncated series sum_{k<=order} B_k/k! ad_x^k y, generic over any algebra
/// type with +, scalar *, and the supplied bracket.
template <class A, class Bracket>
A dexpinv_series(const A& x, const A& y, int order, Bracket&& br) {
  if (order < 1 || order >= static_cast<int>(detail::kBernoulliOverFactorial.size()))
    throw Error(ErrorKind::BadArgument, "dexpinv order must be in [1, 16]");
  A result = y;
  A term = y;
  for (int k = 1; k <= order; ++k) {
    term = br(x, term);
    const double c = detail::kBernoulliOverFactorial[k];
    if (c != 0.0) result = result + c * term;
  }
  return result;
}

inline AlgebraElement dexpinv(const AlgebraElement& x, const AlgebraElement& y, int order = 4) {
  x.check_same(y);
  return dexpinv_series(x, y, order, [](const AlgebraElement& a, const AlgebraElement& b) {
    return bracket(a, b);
  });
}

// ---------------------------------------------------------------------------
// Maurer-Cartan trivializations

namespace detail {

inline AlgebraElement checked_tangent(const LieGroupSpec& spec, const Mat& raw) {
  if (!raw.allFinite()) throw Error(ErrorKind::NonFinite, "tangent vector");
  Mat p = spec.project(raw);
  const double res = (raw - p).norm();
  if (res > Tolerances::tangent * (1.0 + raw.norm()))
    throw Error(ErrorKind::NotInAlgebra, "vector is not tangent, residual " + std::to_string(res));
  return AlgebraElement::unchecked(spec, std::move(p));
}

}  // namespace detail

/// Right Maurer-Cartan form: v g^-1 for v tangent at g.
inline AlgebraElement kappa_right(const GroupElement& g, const Mat& v) {
  return detail::checked_tangent(g.spec(), v * invert(g).matrix());
}

/// Left Maurer-Cartan form: g^-1 v.
inline AlgebraElement kappa_left(const GroupElement& g, const Mat& v) {
  return detail::checked_tangent(g.spec(), invert(g).matrix() * v);
}

enum class Side { Right, Left };

struct TimedGroupElement {
  double t;
  GroupElement g;
};

struct TimedAlgebraElement {
  double t;
  AlgebraElement x;
};

/// Discrete logarithmic derivative of a sampled curve. Second-order
/// three-point differences on a possibly non-uniform grid; one-sided at the
/// two endpoints.
inline std::vector<TimedAlgebraElement> log_derivative_sampled(
    const std::vector<TimedGroupElement>& samples, Side side) {
  const std::size_t n = samples.size();
  if (n < 3) throw Error(ErrorKind::BadArgument, "log derivative needs at least 3 samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(samples[i].t > samples[i - 1].t))
      throw Error(ErrorKind::BadArgument, "sample times must be strictly increasing");
    samples[i].g.check_same(samples[0].g);
  }
  // Three-point Lagrange derivative weights at node `at` of nodes t0 < t1 < t2.
  auto weights = [](double t0, double t1, double t2, double at) {
    return std::array<double, 3>{(2 * at - t1 - t2) / ((t0 - t1) * (t0 - t2)),
                                 (2 * at - t0 - t2) / ((t1 - t0) * (t1 - t2)),
                                 (2 * at - t0 - t1) / ((t2 - t0) * (t2 - t1))};
  };
  std::vector<TimedAlgebraElement> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = std::clamp<std::size_t>(i, 1, n - 2);
    const auto& a = samples[c - 1];
    const auto& b = samples[c];
    const auto& d = samples[c + 1];
    const auto w = weights(a.t, b.t, d.t, samples[i].t);
    Mat deriv = w[0] * a.g.matrix() + w[1] * b.g.matrix() + w[2] * d.g.matrix();
    const auto& gi = samples[i].g;
    Mat raw = side == Side::Right ? Mat(deriv * invert(gi).matrix())
                                  : Mat(invert(gi).matrix() * deriv);
    out.push_back({samples[i].t, AlgebraElement::unchecked(gi.spec(), gi.spec().project(raw))});
  }
  return out;
}

}  // namespace cartan
