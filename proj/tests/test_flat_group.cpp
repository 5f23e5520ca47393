#include <cmath>
#include <thread>

#include <gtest/gtest.h>

#include "cartan/flat_group.hpp"
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

EvolConfig steps(int n) {
  EvolConfig c;
  c.steps = n;
  return c;
}

const Domain kSquare = Domain::box(2, 1.0);

OneForm flat(const LieGroupSpec& g, const std::string& id) {
  return certify_flat(make_form(g, id, kSquare), Grid::uniform(kSquare, 7), 1e-4);
}

double frame_distance(const Frame& a, const Frame& b, int d) {
  double m = 0.0;
  for (int i = 0; i < d; ++i) m = std::max(m, distance(a[i], b[i]));
  return m;
}

std::vector<Point> probes() { return {pt({0.0, 0.0}), pt({0.5, -0.3}), pt({-0.8, 0.9}), pt({0.95, 0.1})}; }

ClosedOneForm closed_exact(const GFunction& h) { return ClosedOneForm::certify(exact_form(h), 9, 1e-6); }

/// Pointwise group commutator of exp(s h1) and exp(t h2), differenced.
Frame commutator_oracle(const GFunction& h1, const GFunction& h2, const Point& x, double step) {
  const auto m = oracle::commutator_bracket([&](const Eigen::VectorXd& y) -> Mat { return h1(y).matrix(); },
                                            [&](const Eigen::VectorXd& y) -> Mat { return h2(y).matrix(); }, x, step);
  Frame out;
  for (int i = 0; i < h1.domain().dim; ++i) out[i] = AlgebraElement::unchecked(h1.group(), m[i]);
  return out;
}

}  // namespace

TEST(Star, Identities) {
  const auto& g = group("so3");
  const auto xi = flat(g, "su2-zcc:0.8,1.1");
  const auto zero = certify_flat(OneForm::zero(g, kSquare), Grid::uniform(kSquare, 3), 1e-12);
  const auto a = star(xi, zero, steps(64)), b = star(zero, xi, steps(64));
  for (const auto& x : probes()) {
    EXPECT_LE(frame_distance(a.at(x), xi.at(x), 2), 1e-15);
    EXPECT_LE(frame_distance(b.at(x), xi.at(x), 2), 1e-15);
  }
  ASSERT_TRUE(a.flatness().has_value());
  EXPECT_EQ(a.flatness()->origin, "group law");
}

TEST(Star, DevelopmentIsAHomomorphism) {
  for (const char* id : {"so3", "sl2", "se3"}) {
    const auto& g = group(id);
    const auto n = basis_triple(g);
    const auto xi = flat(g, "su2-zcc:0.8,1.1");
    const auto eta = flat(g, "pullback-expxy:" + n[1] + "," + n[2] + "-" + n[0]);
    const auto prod = star(xi, eta, steps(128));
    for (const auto& x : probes()) {
      const auto lhs = develop_at(prod, x, steps(128));
      const auto rhs = compose(develop_at(xi, x, steps(128)), develop_at(eta, x, steps(128)));
      EXPECT_LE(distance(lhs, rhs), 1e-6) << id;
    }
  }
}

TEST(Star, Associativity) {
  const auto& g = group("so3");
  const auto cfg = steps(48);
  const auto a = flat(g, "su2-zcc:0.8,1.1"), b = flat(g, "pullback-expxy:L2,L3"), c = flat(g, "su2-zcc:-0.5,0.7");
  const auto left = star(star(a, b, cfg), c, cfg);
  const auto right = star(a, star(b, c, cfg), cfg);
  for (const auto& x : {pt({0.6, -0.4}), pt({-0.7, 0.8})})
    EXPECT_LE(distance(develop_at(left, x, cfg), develop_at(right, x, cfg)), 1e-5);
}

TEST(Star, NonFlatInputsRejected) {
  const auto& g = group("so3");
  const auto xi = flat(g, "su2-zcc:0.8,1.1");
  const auto raw = make_form(g, "const:L1,L2", kSquare);
  try {
    star(xi, raw);
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotFlat);
  }
  EXPECT_THROW(star_inverse(raw), Error);
  EXPECT_THROW(certify_flat(raw, Grid::uniform(kSquare, 5), 1e-4), Error);
  // an uncertified but actually flat form is also refused
  EXPECT_THROW(star(xi, make_form(g, "su2-zcc:0.8,1.1", kSquare)), Error);
}

TEST(StarInverse, Axioms) {
  for (const char* id : {"so3", "sl2"}) {
    const auto& g = group(id);
    const auto xi = flat(g, "su2-zcc:0.8,1.1");
    const auto zero = certify_flat(OneForm::zero(g, kSquare), Grid::uniform(kSquare, 3), 1e-12);
    for (const auto& x : probes()) EXPECT_EQ(star_inverse(zero).at(x)[0].norm(), 0.0);
    const auto inv = star_inverse(xi, steps(128));
    const auto prod = star(xi, inv, steps(128));
    for (const auto& x : probes()) {
      const Frame v = prod.at(x);
      EXPECT_LE(std::max(v[0].norm(), v[1].norm()), 1e-6) << id;
      EXPECT_LE(distance(develop_at(inv, x, steps(128)), invert(develop_at(xi, x, steps(128)))), 1e-6) << id;
    }
  }
}

TEST(DevelopmentCache, ConcurrentFillsAgree) {
  const auto& g = group("so3");
  const DevelopmentCache cache(make_form(g, "su2-zcc:0.8,1.1", kSquare), steps(32));
  const auto pts = Grid::uniform(kSquare, 5).points();
  std::vector<std::vector<Mat>> seen(4);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t k = 0; k < pts.size(); ++k) seen[w].push_back(cache(pts[(k + 7 * w) % pts.size()]).matrix());
    });
  for (auto& t : pool) t.join();
  EXPECT_EQ(cache.size(), pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const Mat ref = develop_at(cache.form(), pts[k], steps(32)).matrix();
    for (int w = 0; w < 4; ++w) EXPECT_EQ(seen[w][(k + pts.size() * 4 - 7 * w) % pts.size()], ref);
  }
}

TEST(Closed, CertificationAndRejection) {
  const auto& g = group("so3");
  const auto c = ClosedOneForm::certify(make_form(g, "const:L1,L2", kSquare));
  EXPECT_EQ(c.max_residual(), 0.0);
  EXPECT_EQ(c.tolerance(), 1e-6);
  const auto z = AlgebraElement::zero(g);
  const auto a = el(g, "L3");
  const OneForm twisted(g, kSquare, [a, z](const Point& x) { return Frame{x(1) * a, z, z}; }, "twisted");
  try {
    ClosedOneForm::certify(twisted);
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotClosed);
  }
}

TEST(Poincare, RecoversPointedPotentials) {
  for (const char* gid : {"so3", "gl3", "sl2"}) {
    const auto& g = group(gid);
    const auto n = basis_triple(g);
    for (const std::string id : {"quad:" + n[0] + "," + n[1] + "," + n[2], "poly:" + n[1] + ",0.5,-1,2,0.3,1.5,-0.7"}) {
      const auto h0 = make_function(g, id, kSquare);
      const auto h = poincare_inverse(closed_exact(h0));
      EXPECT_EQ(h(pt({0, 0})).norm(), 0.0);
      for (const auto& x : probes()) EXPECT_LE(distance(h(x), h0(x)), 1e-10) << gid << " " << id;
    }
  }
}

TEST(Poincare, ConstantForm) {
  const auto& g = group("so3");
  const auto a = el(g, "2*L1-L3");
  const auto h = poincare_inverse(ClosedOneForm::certify(make_form(g, "const:2*L1-L3", kSquare)));
  for (const auto& x : probes()) EXPECT_LE(distance(h(x), x(0) * a), 1e-14);
}

TEST(Poincare, DerivativeReproducesForm) {
  const auto& g = group("se3");
  const auto beta = closed_exact(make_function(g, "quad:R1+P2,P3,R2-R3", kSquare));
  const auto h = poincare_inverse(beta);
  const auto fd = h.without_gradient();
  for (const auto& x : probes()) {
    if (std::abs(x(0)) > 0.9 || std::abs(x(1)) > 0.9) continue;
    EXPECT_LE(frame_distance(fd.gradient(x), beta.form().at(x), 2), 1e-6);
  }
  // the partials-based gradient path
  const auto poly = ClosedOneForm::certify(make_form(g, "polynomial:R2-P1,1,-0.5,2,0.3,1.5", kSquare));
  const auto hp = poincare_inverse(poly);
  for (const auto& x : probes()) EXPECT_LE(frame_distance(hp.gradient(x), poly.form().at(x), 2), 1e-12);
}

TEST(Poincare, LinearAndBounded) {
  const auto& g = group("so3");
  const auto b1 = closed_exact(make_function(g, "quad:L1,L2,L3", kSquare));
  const auto b2 = ClosedOneForm::certify(make_form(g, "polynomial:L2-L3,1,0.5,-1,2,0.25", kSquare));
  const auto h1 = poincare_inverse(b1), h2 = poincare_inverse(b2);
  const auto hs = poincare_inverse(linear_combination(0.75, b1, -2.0, b2));
  double sup_beta = 0.0, sup_h = 0.0;
  for (const auto& x : Grid::uniform(kSquare, 9).points()) {
    EXPECT_LE(distance(hs(x), 0.75 * h1(x) - 2.0 * h2(x)), 1e-14);
    const Frame f = b1.form().at(x);
    sup_beta = std::max(sup_beta, std::hypot(f[0].norm(), f[1].norm()));
    sup_h = std::max(sup_h, h1(x).norm());
  }
  EXPECT_LE(sup_h, 2.0 * std::sqrt(2.0) * sup_beta);
}

TEST(FlatBracket, TrivialCases) {
  const auto& g = group("so3");
  const auto b = closed_exact(make_function(g, "quad:L1,L2,L3", kSquare));
  const auto self = flat_bracket(b, b);
  for (const auto& x : probes()) EXPECT_LE(std::max(self.form().at(x)[0].norm(), self.form().at(x)[1].norm()), 1e-15);
  const auto& r = group("rplus");
  const auto p = closed_exact(make_function(r, "poly:U,1,2,3", kSquare));
  const auto q = ClosedOneForm::certify(make_form(r, "const:U,-2*U", kSquare));
  const auto ab = flat_bracket(p, q);
  for (const auto& x : probes()) EXPECT_EQ(ab.form().at(x)[1].norm(), 0.0);
}

TEST(FlatBracket, Antisymmetric) {
  const auto& g = group("sl2");
  const auto b1 = closed_exact(make_function(g, "quad:H,E,F", kSquare));
  const auto b2 = ClosedOneForm::certify(make_form(g, "polynomial:E-F,1,0.5,-1,2,0.25", kSquare));
  const auto ab = flat_bracket(b1, b2), ba = flat_bracket(b2, b1);
  for (const auto& x : probes())
    for (int i = 0; i < 2; ++i) EXPECT_LE((ab.form().at(x)[i] + ba.form().at(x)[i]).norm(), 1e-15);
}

TEST(FlatBracket, MatchesPointwiseCommutatorOracle) {
  for (const char* gid : {"so3", "sl2"}) {
    const auto& g = group(gid);
    const auto n = basis_triple(g);
    const auto h1 = make_function(g, "quad:" + n[0] + "," + n[1] + "," + n[2], kSquare);
    const auto h2 = make_function(g, "poly:" + n[1] + "-" + n[2] + ",0.5,-1,2,0.3,1.5", kSquare);
    const auto b1 = closed_exact(h1), b2 = closed_exact(h2);
    const auto br = flat_bracket(b1, b2);
    for (const auto& x : {pt({0.3, -0.4}), pt({-0.6, 0.5})}) {
      const Frame ref = commutator_oracle(h1, h2, x, 1e-3);
      EXPECT_LE(frame_distance(br.form().at(x), ref, 2), 1e-4) << gid;
      // the library's own commutator route, through star chains along rays
      EXPECT_LE(frame_distance(br.form().at(x), bracket_by_commutator(b1.form(), b2.form(), x), 2), 1e-4) << gid;
    }
  }
}

TEST(FlatBracket, Jacobi) {
  const auto& g = group("so3");
  const auto a = closed_exact(make_function(g, "quad:L1,L2,L3", kSquare));
  const auto b = ClosedOneForm::certify(make_form(g, "polynomial:L2-L3,1,0.5,-1,2,0.25", kSquare));
  const auto c = ClosedOneForm::certify(make_form(g, "const:L3,L1+L2", kSquare));
  const auto j1 = flat_bracket(a, flat_bracket(b, c), 9, 1e-5);
  const auto j2 = flat_bracket(b, flat_bracket(c, a), 9, 1e-5);
  const auto j3 = flat_bracket(c, flat_bracket(a, b), 9, 1e-5);
  for (const auto& x : probes())
    for (int i = 0; i < 2; ++i)
      EXPECT_LE((j1.form().at(x)[i] + j2.form().at(x)[i] + j3.form().at(x)[i]).norm(), 1e-4);
}

TEST(Variation, TrivialCasesAndTangency) {
  const auto& g = group("so3");
  const auto xi = flat(g, "su2-zcc:0.8,1.1");
  const auto zero = certify_flat(OneForm::zero(g, kSquare), Grid::uniform(kSquare, 3), 1e-12);
  const auto c = variation_form(xi, make_function(g, "const:L1", kSquare), steps(64));
  for (const auto& x : probes()) EXPECT_EQ(c.at(x)[0].norm() + c.at(x)[1].norm(), 0.0);
  const auto h = make_function(g, "quad:L1,L2,L3", kSquare);
  const auto dh = variation_form(zero, h, steps(64));
  for (const auto& x : probes()) EXPECT_LE(frame_distance(dh.at(x), h.gradient(x), 2), 1e-15);
  const auto eta = variation_form(xi, h, steps(128));
  double worst = 0.0;
  for (const auto& x : interior_points(kSquare, Grid::uniform(kSquare, 7)))
    worst = std::max(worst, linearized_mc_residual(xi, eta, x, 0, 1).norm());
  EXPECT_LE(worst, 1e-4);
  EXPECT_THROW(variation_form(make_form(g, "su2-zcc:0.8,1.1", kSquare), h), Error);
}

TEST(Reconstruct, RoundTripAndTrivialCases) {
  for (const char* gid : {"so3", "sl2", "se3"}) {
    const auto& g = group(gid);
    const auto n = basis_triple(g);
    const auto xi = flat(g, "su2-zcc:0.8,1.1");
    const auto h0 = make_function(g, "quad:" + n[0] + "," + n[1] + "," + n[2], kSquare);
    const auto h = reconstruct_h(xi, variation_form(xi, h0, steps(128)), steps(128));
    for (const auto& x : probes()) EXPECT_LE(distance(h(x), h0(x)), 1e-5) << gid;
  }
  const auto& g = group("so3");
  const auto xi = flat(g, "su2-zcc:0.8,1.1");
  const auto z = reconstruct_h(xi, OneForm::zero(g, kSquare), steps(64));
  for (const auto& x : probes()) EXPECT_EQ(z(x).norm(), 0.0);
  const auto zero = certify_flat(OneForm::zero(g, kSquare), Grid::uniform(kSquare, 3), 1e-12);
  const auto h0 = make_function(g, "poly:L3,0.5,-1,2,0.3,1.5", kSquare);
  const auto h = reconstruct_h(zero, exact_form(h0), steps(64));
  for (const auto& x : probes()) EXPECT_LE(distance(h(x), h0(x)), 1e-10);
}

TEST(Reconstruct, NonTangentDirectionRejected) {
  const auto& g = group("so3");
  const auto xi = flat(g, "su2-zcc:0.8,1.1");
  try {
    reconstruct_h(xi, make_form(g, "const:L1,L2", kSquare), steps(32));
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}
