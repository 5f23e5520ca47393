#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "cartan/cli/rng.hpp"
#include "cartan/presets.hpp"
#include "oracles.hpp"

using namespace cartan;

namespace {

Point pt(std::initializer_list<double> v) {
  Point p(static_cast<Eigen::Index>(v.size()));
  int k = 0;
  for (double c : v) p(k++) = c;
  return p;
}

AlgebraElement el(const LieGroupSpec& g, std::string_view s) { return parse_element(g, s); }

EvolConfig steps(int n, Integrator i = Integrator::Rkmk4) {
  EvolConfig c;
  c.steps = n;
  c.integrator = i;
  return c;
}

Mat identity(const LieGroupSpec& g) { return Mat::Identity(g.ambient_dim(), g.ambient_dim()); }

/// Smooth so3 curve used for order and law checks.
AlgebraCurve wiggle(const LieGroupSpec& g) { return make_curve(g, "trig:" + basis_triple(g)[0] + "," + basis_triple(g)[1] + "," + basis_triple(g)[2]); }

Mat oracle_right(const AlgebraCurve& x, double horizon, bool left = false) {
  return oracle::rk4_solve([&](double s) { return Mat(horizon * x(horizon * s).matrix()); }, x.group->ambient_dim(),
                           20000, left);
}

}  // namespace

TEST(EvolRight, ZeroAndConstant) {
  for (const char* id : {"so3", "se3", "sl2", "gl3"}) {
    const auto& g = group(id);
    EXPECT_EQ(evol_right(AlgebraCurve::constant(AlgebraElement::zero(g)), 1.7).matrix(), identity(g));
    const auto a = AlgebraElement::from_coordinates(g, Eigen::VectorXd::LinSpaced(g.algebra_dim(), -0.7, 0.9));
    for (double horizon : {0.5, 2.0}) {
      const Mat ref = oracle::exp_taylor(horizon * a.matrix());
      EXPECT_LE((evol_right(AlgebraCurve::constant(a), horizon, steps(64)).matrix() - ref).norm(), 1e-12 * ref.norm())
          << id;
      EXPECT_LE((evol_right(AlgebraCurve::constant(a), horizon, steps(64, Integrator::Rk4Ambient)).matrix() - ref)
                    .norm(),
                1e-6 * ref.norm())
          << id;
    }
  }
}

TEST(EvolRight, ScalarMatchesQuadrature) {
  const auto& g = group("rplus");
  const auto u = AlgebraElement::basis(g, 0);
  const AlgebraCurve x(g, [u](double t) { return (std::cos(3 * t) + t * t) * u; });
  const double horizon = 1.5;
  const double integral = std::sin(3 * horizon) / 3 + std::pow(horizon, 3) / 3;
  EXPECT_NEAR(evol_right(x, horizon, steps(256)).matrix()(0, 0), std::exp(integral), 1e-10);
}

TEST(EvolRight, MatchesFineAmbientOracle) {
  for (const char* id : {"so3", "se3", "sl2"}) {
    const auto& g = group(id);
    const auto x = wiggle(g);
    const Mat ref = oracle_right(x, 1.0);
    EXPECT_LE((evol_right(x, 1.0, steps(256)).matrix() - ref).norm(), 1e-9) << id;
    EXPECT_LE((evol_right(x, 1.0, steps(256, Integrator::Rk4Ambient)).matrix() - ref).norm(), 1e-9) << id;
  }
}

TEST(EvolRight, SampledCurveHasStepNodes) {
  const auto& g = group("so3");
  const auto curve = Evol_right(wiggle(g), 2.0, steps(8));
  ASSERT_EQ(curve.size(), 9u);
  EXPECT_EQ(curve.front().g.matrix(), identity(g));
  EXPECT_DOUBLE_EQ(curve[4].t, 1.0);
  EXPECT_EQ(curve.back().g.matrix(), evol_right(wiggle(g), 2.0, steps(8)).matrix());
}

TEST(EvolRight, NonFiniteSampleFails) {
  const auto& g = group("so3");
  const auto a = AlgebraElement::basis(g, 0);
  const AlgebraCurve x(g, [a](double t) { return (1.0 / (t - 0.5)) * a; });
  EXPECT_THROW(evol_right(x, 1.0, steps(2)), Error);
  EXPECT_THROW(evol_right(wiggle(g), 1.0, steps(0)), Error);
}

TEST(EvolLeft, ZeroConstantAndIdentity) {
  const auto& g = group("so3");
  EXPECT_EQ(evol_left(AlgebraCurve::constant(AlgebraElement::zero(g)), 1.0).matrix(), identity(g));
  const auto a = el(g, "L1-0.3*L2");
  EXPECT_LE(distance(evol_left(AlgebraCurve::constant(a), 1.0), evol_right(AlgebraCurve::constant(a), 1.0)), 1e-14);
  for (const char* id : {"so3", "sl2", "gl3"}) {
    const auto& h = group(id);
    const auto x = wiggle(h);
    EXPECT_LE(distance(evol_left(x, 1.0, steps(256)), evol_left_via_right(x, 1.0, steps(256))), 1e-10) << id;
    EXPECT_LE((evol_left(x, 1.0, steps(256)).matrix() - oracle_right(x, 1.0, true)).norm(), 1e-9) << id;
  }
}

TEST(Reparam, IdentityAndDoubling) {
  const auto& g = group("so3");
  const auto x = wiggle(g);
  const auto same = reparam_rhs(x, [](double t) { return t; }, [](double) { return 1.0; });
  for (double t : {0.0, 0.3, 0.9}) EXPECT_EQ(same(t).matrix(), x(t).matrix());
  const auto a = el(g, "L3");
  const auto dbl = reparam_rhs(AlgebraCurve::constant(a), [](double t) { return 2 * t; }, [](double) { return 2.0; });
  EXPECT_EQ(dbl(0.4).matrix(), (2.0 * a).matrix());
  EXPECT_LE(distance(evol_right(dbl, 0.5, steps(64)), exp(a)), 1e-13);
}

TEST(Reparam, QuadraticLaw) {
  // Evol(X)(f(t)) = Evol(f' X o f)(t) Evol(X)(f(0)) with f(t) = t^2, f(0) = 0
  const auto& g = group("so3");
  const auto x = wiggle(g);
  const auto y = reparam_rhs(x, [](double t) { return t * t; }, [](double t) { return 2 * t; });
  for (double t : {0.6, 1.0}) {
    const auto lhs = evol_right(x, t * t, steps(512));
    const auto rhs = evol_right(y, t, steps(512));
    EXPECT_LE(distance(lhs, rhs), 1e-7);
  }
  // f(t) = t + 0.25 has f(0) != 0: Evol(X)(t + 1/4) = Evol(X(. + 1/4))(t) Evol(X)(1/4)
  const auto shifted = reparam_rhs(x, [](double t) { return t + 0.25; }, [](double) { return 1.0; });
  const auto lhs = evol_right(x, 1.25, steps(1280));
  const auto rhs = compose(evol_right(shifted, 1.0, steps(1024)), evol_right(x, 0.25, steps(256)));
  EXPECT_LE(distance(lhs, rhs), 1e-12);
}

TEST(Evolution, DeterministicAndConvergent) {
  const auto& g = group("so3");
  const auto x = wiggle(g);
  EXPECT_EQ(evol_right(x, 1.0, steps(128)).matrix(), evol_right(x, 1.0, steps(128)).matrix());
  for (auto integ : {Integrator::Rkmk4, Integrator::Rk4Ambient}) {
    const Mat ref = evol_right(x, 1.0, steps(4096, integ)).matrix();
    std::vector<double> ln, le;
    for (int n : {32, 64, 128, 256}) {
      ln.push_back(std::log(n));
      le.push_back(std::log((evol_right(x, 1.0, steps(n, integ)).matrix() - ref).norm()));
    }
    EXPECT_NEAR(-fit_slope(ln, le), 4.0, 0.3) << to_string(integ);
  }
}

TEST(Evolution, ConstraintPreservation) {
  for (const char* id : {"so3", "se3", "sl2"}) {
    const auto& g = group(id);
    const auto x = wiggle(g);
    double worst = 0.0;
    for (const auto& s : Evol_right(x, 4.0, steps(64))) worst = std::max(worst, s.g.constraint_residual());
    EXPECT_LE(worst, 1e-10) << id;
  }
  // ambient RK4 leaves the group at coarse steps; measured, not bounded
  const auto& g = group("so3");
  const double drift = evol_right(wiggle(g), 4.0, steps(32, Integrator::Rk4Ambient)).constraint_residual();
  EXPECT_GT(drift, 1e-12);
  RecordProperty("rk4_ambient_drift", std::to_string(drift));
}

TEST(Develop, ZeroFormAndBasepoint) {
  const auto& g = group("so3");
  const auto dom = Domain::box(2, 1.0);
  const auto map = develop(OneForm::zero(g, dom), Grid::uniform(dom, 5), steps(16));
  for (const auto& v : map.values) EXPECT_EQ(v.matrix(), identity(g));
  EXPECT_EQ(map.basepoint_error, 0.0);
  const auto f = develop(make_form(g, "su2-zcc:0.8,1.1", dom), Grid::uniform(dom, 5), steps(64));
  EXPECT_EQ(f.basepoint_error, 0.0);
  EXPECT_LE(f.max_constraint_residual, 1e-10);
  EXPECT_TRUE(f.warnings.empty());
}

TEST(Develop, CommutingConstants) {
  const auto& g = group("se3");
  const auto dom = Domain::box(2, 1.0);
  const auto a = el(g, "R3+P3"), b = el(g, "2*R3-0.5*P3");
  ASSERT_EQ(bracket(a, b).norm(), 0.0);
  const auto xi = make_form(g, "const:R3+P3,2*R3-0.5*P3", dom);
  const auto map = develop(xi, Grid::uniform(dom, 5), steps(32));
  for (std::size_t k = 0; k < map.points.size(); ++k) {
    const Point& x = map.points[k];
    const Mat ref = oracle::exp_taylor(x(0) * a.matrix() + x(1) * b.matrix());
    EXPECT_LE((map.values[k].matrix() - ref).norm(), 1e-13);
  }
}

TEST(Develop, RecoversPointedMapsAtFourthOrder) {
  for (const char* id : {"so3", "sl2", "se3"}) {
    const auto& g = group(id);
    const auto dom = Domain::box(2, 1.0);
    const auto f = make_map(g, "su2-zcc:0.8,1.1", dom);
    const auto xi = pullback_form(f);
    const Point x = pt({0.9, -0.8});
    std::vector<double> ln, le;
    for (int n : {16, 32, 64}) {
      ln.push_back(std::log(n));
      le.push_back(std::log(distance(develop_at(xi, x, steps(n)), f(x))));
    }
    EXPECT_NEAR(-fit_slope(ln, le), 4.0, 0.3) << id;
    EXPECT_LE(distance(develop_at(xi, x, steps(256)), f(x)), 1e-9) << id;
  }
}

TEST(Develop, MatchesAmbientOracleOnAGeneralFlatForm) {
  const auto& g = group("sl2");
  const auto dom = Domain::box(3, 1.0);
  const auto f = make_map(g, "su2-zcc:0.6,-0.9", dom);
  const auto xi = pullback_form(f);
  const auto frame = [&](const Eigen::VectorXd& p) {
    const Frame v = xi.frame_fn()(Point(p));
    return std::vector<Eigen::MatrixXd>{v[0].matrix(), v[1].matrix(), v[2].matrix()};
  };
  const Point x = pt({0.5, 0.7, -0.4});
  EXPECT_LE((develop_at(xi, x, steps(128)).matrix() - oracle::develop_rk4(frame, x, 2, 4000)).norm(), 1e-10);
}

TEST(Develop, NonFlatFormWarns) {
  const auto& g = group("so3");
  const auto dom = Domain::box(2, 1.0);
  const auto map = develop(make_form(g, "const:L1,L2", dom), Grid::uniform(dom, 3), steps(16));
  EXPECT_FALSE(map.warnings.empty());
  ASSERT_TRUE(map.flatness_residual.has_value());
  EXPECT_NEAR(*map.flatness_residual, std::sqrt(2.0), 1e-12);
}

TEST(Develop, RoundTripThroughLogDerivative) {
  for (const char* id : {"so3", "sl2", "se3"}) {
    const auto& g = group(id);
    const auto dom = Domain::box(2, 1.0);
    const auto xi = make_form(g, "su2-zcc:0.8,1.1", dom);
    double worst = 0.0;
    for (int axis : {0, 1}) {
      for (double c : {-0.5, 0.0, 0.7}) {
        std::vector<TimedGroupElement> line;
        for (int k = 0; k <= 100; ++k) {
          const double s = -1.0 + 0.02 * k;
          Point x = axis == 0 ? pt({s, c}) : pt({c, s});
          line.push_back({s, develop_at(xi, x, steps(128))});
        }
        const auto d = log_derivative_sampled(line, Side::Right);
        for (std::size_t k = 1; k + 1 < d.size(); ++k) {
          Point x = axis == 0 ? pt({d[k].t, c}) : pt({c, d[k].t});
          worst = std::max(worst, distance(d[k].x, xi.at(x)[axis]));
        }
      }
    }
    EXPECT_LE(worst, 1e-3) << id;
  }
}

TEST(Develop, ThreadCountDoesNotChangeResults) {
  const auto& g = group("so3");
  const auto dom = Domain::box(2, 1.0);
  const auto xi = make_form(g, "su2-zcc:0.8,1.1", dom);
  set_thread_count(1);
  const auto one = develop(xi, Grid::uniform(dom, 9), steps(32));
  set_thread_count(4);
  const auto four = develop(xi, Grid::uniform(dom, 9), steps(32));
  set_thread_count(0);
  for (std::size_t k = 0; k < one.values.size(); ++k) EXPECT_EQ(one.values[k].matrix(), four.values[k].matrix());
}

TEST(DevelopPath, ConstantRadialAndIndependence) {
  const auto& g = group("so3");
  const auto dom = Domain::box(2, 1.0);
  const auto xi = make_form(g, "su2-zcc:0.8,1.1", dom);
  const Point x = pt({0.6, -0.9});
  EXPECT_EQ(develop_path(xi, PathCurve::polyline({x, x}), steps(16)).matrix(), identity(g));
  const auto grid = Grid::uniform(dom, 3);
  const auto map = develop(xi, grid, steps(64));
  for (std::size_t k = 0; k < map.points.size(); ++k)
    EXPECT_EQ(develop_path(xi, PathCurve::radial(map.points[k]), steps(64)).matrix(), map.values[k].matrix());
  EXPECT_LE(distance(develop_path(xi, PathCurve::radial(x), steps(256)),
                     develop_path(xi, PathCurve::axis_parallel(x), steps(256))),
            1e-6);
  const auto arc = PathCurve::smooth([x](double t) { return Point(x * t + pt({0.3, 0.1}) * std::sin(std::numbers::pi * t)); },
                                     [x](double t) {
                                       return Point(x + pt({0.3, 0.1}) * (std::numbers::pi * std::cos(std::numbers::pi * t)));
                                     });
  EXPECT_LE(distance(develop_path(xi, arc, steps(256)), develop_at(xi, x, steps(256))), 1e-6);
  EXPECT_THROW(develop_path(xi, PathCurve::polyline({pt({0, 0}), pt({1.5, 0})}), steps(16)), Error);
}

TEST(Holonomy, FlatZeroAndNonFlat) {
  const auto& g = group("so3");
  const auto dom = Domain::box(2, 1.0);
  const auto loop = PathCurve::square_loop(2, 0, 1, 0.5);
  const auto flat = make_form(g, "su2-zcc:0.8,1.1", dom);
  EXPECT_LE((holonomy(flat, loop, steps(256)).matrix() - identity(g)).norm(), 1e-7);
  EXPECT_EQ(holonomy(OneForm::zero(g, dom), loop, steps(16)).matrix(), identity(g));
  const auto scan = holonomy_scan(make_form(g, "const:L1,L2", dom), {0.2, 0.1, 0.05, 0.025}, 0, 1, steps(256));
  EXPECT_NEAR(scan.slope, 2.0, 0.2);
  // leading term: hol ~ exp(eps^2 [L1, L2]) up to sign
  EXPECT_NEAR(scan.deviation.back() / (0.025 * 0.025), std::sqrt(2.0), 0.05);
  EXPECT_THROW(holonomy(flat, PathCurve::polyline({pt({0, 0}), pt({0.1, 0})}), steps(8)), Error);
}

TEST(ConnectionForm, VerticalHorizontalEquivariant) {
  const auto& g = group("so3");
  const auto dom = Domain::box(2, 1.0);
  const auto xi = make_form(g, "su2-zcc:0.8,1.1", dom);
  const Point x = pt({0.3, -0.4}), y = pt({0.7, 0.2});
  const auto h = exp(el(g, "0.4*L1-L3")), k = exp(el(g, "L2+0.2*L1"));
  const auto a = el(g, "L1+2*L2");
  EXPECT_LE(distance(connection_omega(xi, x, h, pt({0, 0}), h.matrix() * a.matrix()), a), 1e-14);
  const Mat horizontal = h.matrix() * Ad(invert(h), eval(xi, x, y)).matrix();
  EXPECT_LE(connection_omega(xi, x, h, y, horizontal).norm(), 1e-14);
  const Mat v = h.matrix() * el(g, "L3-L2").matrix() + eval(xi, x, y).matrix() * h.matrix();
  const auto at_h = connection_omega(xi, x, h, y, v);
  const auto at_hk = connection_omega(xi, x, compose(h, k), y, v * k.matrix());
  EXPECT_LE(distance(at_hk, Ad(invert(k), at_h)), 1e-13);
}

TEST(Naturality, HomomorphismsAndReparameterization) {
  const auto& gl = group("gl3");
  const auto dom = Domain::box(2, 1.0);
  const auto grid = Grid::uniform(dom, 5);
  EXPECT_EQ(naturality_check(OneForm::zero(gl, dom), Homomorphism::Determinant, grid, steps(32)), 0.0);
  const auto xi = make_form(gl, "su2-zcc:0.8,1.1", dom);
  EXPECT_LE(naturality_check(xi, Homomorphism::Determinant, grid, steps(256)), 1e-8);
  const auto so = make_form(group("so3"), "su2-zcc:0.8,1.1", dom);
  EXPECT_LE(naturality_check(so, Homomorphism::InclusionGL, grid, steps(256)), 1e-8);
  EXPECT_LE(reparam_naturality_check(so, 0.5, 5, steps(256)), 1e-9);
  EXPECT_LE(reparam_naturality_check(so, 2.0, 5, steps(256)), 1e-9);
}
