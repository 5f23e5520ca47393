// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "cartan/cartan.hpp"
#include "cartan/cli/rng.hpp"
#include "cartan/cli/run.hpp"
#include "oracles.hpp"

using namespace cartan;

namespace {

const Domain kSquare = Domain::box(2, 1.0);

EvolConfig steps(int n) {
  EvolConfig c;
  c.steps = n;
  return c;
}

double frame_distance(const Frame& a, const Frame& b, int d) {
  double m = 0.0;
  for (int i = 0; i < d; ++i) m = std::max(m, distance(a[i], b[i]));
  return m;
}

OneForm flat(const LieGroupSpec& g, const std::string& id) {
  return certify_flat(make_form(g, id, kSquare), Grid::uniform(kSquare, 7), 1e-4);
}

/// Collects the measured quantities of one criterion against their bounds.
class Criterion {
 public:
  Criterion(int id, std::string title) : id_(id), title_(std::move(title)), t0_(std::chrono::steady_clock::now()) {}

  void bound(const std::string& what, double value, double limit) {
    const bool ok = std::isfinite(value) && value <= limit;
    pass_ = pass_ && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.3e <= %.1e", what.c_str(), value, limit);
    parts_.push_back(buf);
    if (!ok) parts_.back() += " (violated)";
  }

  void within(const std::string& what, double value, double centre, double radius) {
    const bool ok = std::isfinite(value) && std::abs(value - centre) <= radius;
    pass_ = pass_ && ok;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.4f in %g +- %g", what.c_str(), value, centre, radius);
    parts_.push_back(buf);
    if (!ok) parts_.back() += " (violated)";
  }

  void note(const std::string& what, double value) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s %.3e", what.c_str(), value);
    parts_.push_back(buf);
  }

  void require(const std::string& what, bool ok) {
    pass_ = pass_ && ok;
    parts_.push_back(what + (ok ? " yes" : " no (violated)"));
  }

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

  bool finish() const {
    std::printf("%s %d %s:", pass_ ? "PASS" : "FAIL", id_, title_.c_str());
    for (std::size_t k = 0; k < parts_.size(); ++k) std::printf("%s %s", k ? ";" : "", parts_[k].c_str());
    std::printf(" [%.1fs]\n", seconds());
    std::fflush(stdout);
    return pass_;
  }

  void fail(const std::string& why) {
    pass_ = false;
    parts_.push_back("error: " + why);
  }

 private:
  int id_;
  std::string title_;
  std::chrono::steady_clock::time_point t0_;
  std::vector<std::string> parts_;
  bool pass_ = true;
};

template <class Body>
bool criterion(int id, const std::string& title, Body&& body) {
  Criterion c(id, title);
  try {
    body(c);
  } catch (const std::exception& e) {
    c.fail(e.what());
  }
  return c.finish();
}

// -- 1 ---------------------------------------------------------------------------

void round_trip(Criterion& c) {
  struct Case {
    const char* group;
    const char* map;
  };
  const std::vector<Case> cases{{"so3", "pullback-expxy:L1,L2"},
                                {"so3", "su2-zcc:0.8,1.1"},
                                {"se3", "pullback-expxy:R3,P1+0.5*P2"},
                                {"se3", "su2-zcc:0.6,-0.9"},
                                {"sl2", "su2-zcc:0.8,1.1"}};
  const Grid grid = Grid::uniform(kSquare, 33);
  set_thread_count(1);
  double worst = 0.0;
  for (const auto& k : cases) {
    const auto& g = group(k.group);
    const GMap f = make_map(g, k.map, kSquare);
    const DevelopedMap m = develop(pullback_form(f), grid, steps(256));
    const GroupElement f0inv = invert(f(kSquare.origin()));
    for (std::size_t p = 0; p < m.points.size(); ++p)
      worst = std::max(worst, distance(m.values[p], compose(f(m.points[p]), f0inv)));
  }
  set_thread_count(0);
  c.bound("max distance over 5 presets x 1089 points", worst, 1e-6);
  c.bound("seconds, one thread", c.seconds(), 30.0);
}

// -- 2 ---------------------------------------------------------------------------

void path_independence(Criterion& c) {
  Xoshiro256 rng(2024);
  double worst = 0.0;
  for (const auto& [gid, id] : std::vector<std::pair<const char*, const char*>>{
           {"so3", "pullback-expxy:L1,L2"}, {"sl2", "su2-zcc:0.8,1.1"}, {"se3", "su2-zcc:0.6,-0.9"}}) {
    const OneForm xi = flat(group(gid), id);
    for (int k = 0; k < 50; ++k) {
      Point x(2);
      x << rng.uniform(-0.95, 0.95), rng.uniform(-0.95, 0.95);
      worst = std::max(worst, distance(develop_path(xi, PathCurve::radial(x), steps(256)),
                                       develop_path(xi, PathCurve::axis_parallel(x), steps(256))));
    }
  }
  c.bound("radial vs axis-parallel, 3 flat presets x 50 endpoints", worst, 1e-6);
  const OneForm control = make_form(group("so3"), "const:L1,L2", kSquare);
  const auto scan = holonomy_scan(control, {0.2, 0.1, 0.05, 0.025}, 0, 1, steps(256));
  c.within("non-flat square-loop holonomy slope", scan.slope, 2.0, 0.2);
}

// -- 3 ---------------------------------------------------------------------------

void convergence(Criterion& c) {
  const auto& g = group("so3");
  const std::vector<std::string> curves{"trig:L1,L2,L3", "poly:0.3*L1,L2-L3,0.5*L3", "trig:L3,0.8*L1,L2"};
  const std::vector<int> ns{32, 64, 128, 256};
  double worst_slope_gap = 0.0, worst_slope = 4.0, drift = 0.0, amb = 0.0;
  for (const auto& id : curves) {
    const AlgebraCurve x = make_curve(g, id);
    const GroupElement ref = evol_right(x, 1.0, steps(4096));
    std::vector<double> lx, ly;
    for (int n : ns) {
      const GroupElement e = evol_right(x, 1.0, steps(n));
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(distance(e, ref)));
      drift = std::max(drift, e.constraint_residual());
    }
    const double slope = -fit_slope(lx, ly);
    if (std::abs(slope - 4.0) >= worst_slope_gap) {
      worst_slope_gap = std::abs(slope - 4.0);
      worst_slope = slope;
    }
    EvolConfig rk{Integrator::Rk4Ambient, 32, 4};
    amb = std::max(amb, evol_right(x, 1.0, rk).constraint_residual());
  }
  c.within("worst error slope over 3 curves", worst_slope, 4.0, 0.3);
  c.bound("rkmk4 constraint drift", drift, 1e-10);
  c.note("rk4 ambient drift at N=32 (reported)", amb);
}

// -- 4 ---------------------------------------------------------------------------

void group_structure(Criterion& c) {
  const auto& g = group("so3");
  const OneForm xi = flat(g, "pullback-expxy:L1,L2");
  const OneForm eta = flat(g, "su2-zcc:0.8,1.1");
  const EvolConfig cfg = steps(256);
  const OneForm prod = star(xi, eta, cfg);
  const OneForm inv = star(xi, star_inverse(xi, cfg), cfg);
  double st = 0.0, iv = 0.0;
  for (const auto& x : Grid::uniform(kSquare, 3).points()) {
    st = std::max(st, distance(develop_at(prod, x, cfg), compose(develop_at(xi, x, cfg), develop_at(eta, x, cfg))));
    const Mat m = develop_at(inv, x, cfg).matrix();
    iv = std::max(iv, (m - Mat::Identity(m.rows(), m.cols())).norm());
  }
  c.bound("Evol(xi*eta) vs Evol(xi)Evol(eta)", st, 1e-6);
  c.bound("xi*xi^-1 vs identity", iv, 1e-6);

  struct Pair {
    const char* group;
    const char* h1;
    const char* h2;
  };
  const std::vector<Pair> pairs{{"so3", "quad:L1,L2,L3", "poly:L2-L3,0.5,-1,2,0.3,1.5"},
                                {"sl2", "quad:H,E,F", "poly:E-F,0.5,-1,2,0.3,1.5"},
                                {"se3", "quad:R1,P2,R3", "poly:R2+P3,1,0.5,-0.7,0.2,0.4"}};
  double br = 0.0;
  for (const auto& p : pairs) {
    const auto& gp = group(p.group);
    const GFunction h1 = make_function(gp, p.h1, kSquare), h2 = make_function(gp, p.h2, kSquare);
    const ClosedOneForm b = flat_bracket(ClosedOneForm::certify(exact_form(h1)), ClosedOneForm::certify(exact_form(h2)));
    for (const auto& x : {Point{{0.3, -0.4}}, Point{{-0.6, 0.5}}, Point{{0.7, 0.8}}}) {
      const auto ref = oracle::commutator_bracket([&](const Eigen::VectorXd& y) -> Mat { return h1(y).matrix(); },
                                                  [&](const Eigen::VectorXd& y) -> Mat { return h2(y).matrix(); },
                                                  x, 1e-3);
      const Frame got = b.form().at(x);
      for (int i = 0; i < 2; ++i) br = std::max(br, (got[i].matrix() - ref[i]).norm());
    }
  }
  c.bound("bracket vs pointwise commutator, 3 pairs", br, 1e-4);
}

// -- 5 ---------------------------------------------------------------------------

void poincare(Criterion& c) {
  const auto& g = group("so3");
  const auto l = [&](int k) { return AlgebraElement::basis(g, k); };
  const GFunction smooth(g, kSquare, [&](const Point& x) {
    return std::sin(x(0)) * std::cos(2 * x(1)) * l(0) + std::exp(0.5 * x(0) * x(1)) * l(1) +
           (x(0) * x(0) * x(1) - x(1)) * l(2);
  });
  double der = 0.0;
  const auto inner = interior_points(kSquare, Grid::uniform(kSquare, 9));
  for (const GFunction& h0 : {smooth, make_function(g, "quad:L1,L2,L3", kSquare)}) {
    const ClosedOneForm beta = ClosedOneForm::certify(exact_form(h0));
    const GFunction h = poincare_inverse(beta).without_gradient();
    for (const auto& x : inner) der = std::max(der, frame_distance(h.gradient(x), beta.form().at(x), 2));
  }
  c.bound("d(d^-1 beta) vs beta on interior grid", der, 1e-6);

  double rec = 0.0;
  for (const char* id : {"quad:L1,L2,L3", "poly:L2-L3,0.5,-1,2,0.3,1.5", "poly:L1,1,2,3,4,5,6,7,8,9"}) {
    const GFunction h0 = make_function(g, id, kSquare);
    const GFunction h = poincare_inverse(ClosedOneForm::certify(exact_form(h0)));
    const AlgebraElement base = h0(kSquare.origin());
    for (const auto& x : Grid::uniform(kSquare, 9).points()) rec = std::max(rec, distance(h(x), h0(x) - base));
  }
  c.bound("d^-1(d h0) vs pointed polynomial h0", rec, 1e-10);
}

// -- 6 ---------------------------------------------------------------------------

void variation(Criterion& c) {
  struct Case {
    const char* group;
    const char* form;
    const char* h;
  };
  const std::vector<Case> cases{{"so3", "su2-zcc:0.8,1.1", "quad:L1,L2,L3"},
                                {"sl2", "pullback-expxy:E,F", "quad:H,E,F"},
                                {"se3", "su2-zcc:0.6,-0.9", "quad:R1,P2,R3"}};
  double worst = 0.0;
  for (const auto& k : cases) {
    const auto& g = group(k.group);
    const OneForm xi = flat(g, k.form);
    const GFunction h = make_function(g, k.h, kSquare);
    const OneForm eta = variation_form(xi, h, steps(256));
    ReconstructOptions opt;
    opt.check_grid = 5;
    const GFunction back = reconstruct_h(xi, eta, steps(256), opt);
    const AlgebraElement base = h(kSquare.origin());
    for (const auto& x : Grid::uniform(kSquare, 5).points()) worst = std::max(worst, distance(back(x), h(x) - base));
  }
  c.bound("reconstruct(variation(h)) vs pointed h, 3 presets", worst, 1e-5);
}

// -- 7 ---------------------------------------------------------------------------

void tangent(Criterion& c) {
  const auto& g = group("so3");
  const AlgebraCurve x = make_curve(g, "trig:L1,L2,L3");
  const AlgebraCurve y = make_curve(g, "poly:L2,0.5*L3-L1,L1+L2");
  const EvolConfig cfg = steps(256);
  const auto sd = evol_sd(y, x, cfg, std::numeric_limits<double>::infinity());
  c.bound("semidirect evolution, formula vs integrator", sd.deviation, 1e-7);

  const double s = 1e-5;
  const GroupElement base = evol_right(x, 1.0, cfg);
  const Mat fd =
      (evol_right(x + scaled(y, s), 1.0, cfg).matrix() - evol_right(x + scaled(y, -s), 1.0, cfg).matrix()) / (2 * s);
  c.bound("tangent of evol vs central difference", distance(tangent_evol(x, y, cfg), kappa_left(base, fd)), 1e-4);

  Xoshiro256 rng(77);
  auto alg = [&] { return AlgebraElement::from_coordinates(g, rng.uniform_vector(3, -1.0, 1.0)); };
  double assoc = 0.0, hom = 0.0, jac = 0.0;
  for (int k = 0; k < 20; ++k) {
    const SemidirectElement a{alg(), exp(alg())}, b{alg(), exp(alg())}, d{alg(), exp(alg())};
    const SemidirectAlgebra u{alg(), alg()}, v{alg(), alg()}, w{alg(), alg()};
    assoc = std::max(assoc, distance(sd_multiply(sd_multiply(a, b), d), sd_multiply(a, sd_multiply(b, d))));
    hom = std::max(hom, distance(sd_Ad(a, sd_bracket(u, v)), sd_bracket(sd_Ad(a, u), sd_Ad(a, v))));
    jac = std::max(jac, (sd_bracket(u, sd_bracket(v, w)) + sd_bracket(v, sd_bracket(w, u)) +
                         sd_bracket(w, sd_bracket(u, v)))
                            .norm());
  }
  c.bound("semidirect associativity", assoc, 1e-10);
  c.bound("semidirect Ad homomorphism", hom, 1e-10);
  c.bound("semidirect Jacobi", jac, 1e-10);

  const OneForm xi = flat(g, "su2-zcc:0.8,1.1");
  const OneForm eta = variation_form(xi, make_function(g, "quad:L1,L2,L3", kSquare), cfg);
  const TangentDevelopment td = tangent_develop(xi, eta, Grid::uniform(kSquare, 3), cfg, 1e-4, 5);
  auto shifted = [&](double sign) {
    return OneForm(g, kSquare, [&, sign](const Point& p) {
      const Frame a = xi.frame_fn()(p), b = eta.frame_fn()(p);
      return Frame{a[0] + (sign * s) * b[0], a[1] + (sign * s) * b[1], a[2]};
    });
  };
  const OneForm plus = shifted(1.0), minus = shifted(-1.0);
  double tdv = 0.0;
  for (std::size_t k = 0; k < td.points.size(); ++k) {
    const Point& p = td.points[k];
    const GroupElement f = develop_at(xi, p, cfg);
    const Mat diff = (develop_at(plus, p, cfg).matrix() - develop_at(minus, p, cfg).matrix()) / (2 * s);
    tdv = std::max(tdv, distance(td.values[k].x, kappa_right(f, diff)));
  }
  c.bound("tangent development vs central difference", tdv, 1e-4);
}

// -- 8 ---------------------------------------------------------------------------

void naturality(Criterion& c) {
  const auto& g = group("so3");
  const OneForm xi = flat(g, "su2-zcc:0.8,1.1");
  const Grid grid = Grid::uniform(kSquare, 5);
  c.bound("determinant", naturality_check(xi, Homomorphism::Determinant, grid, steps(256)), 1e-8);
  c.bound("inclusion into gl", naturality_check(xi, Homomorphism::InclusionGL, grid, steps(256)), 1e-8);
  c.bound("domain reparameterization", reparam_naturality_check(xi, 0.5, 5, steps(256)), 1e-9);
  const AlgebraCurve x = make_curve(g, "trig:L1,L2,L3");
  c.bound("left vs inverted right of negated curve, N=512",
          distance(evol_left(x, 1.0, steps(512)), evol_left_via_right(x, 1.0, steps(512))), 1e-7);
  const AlgebraCurve r = reparam_rhs(x, [](double t) { return t * t; }, [](double t) { return 2 * t; });
  c.bound("time reparameterization, N=512",
          distance(evol_right(x, 1.0, steps(512)), evol_right(r, 1.0, steps(512))), 1e-7);
}

// -- 9 ---------------------------------------------------------------------------

void determinism(Criterion& c) {
  const auto config = cli::load_config((std::filesystem::path(CARTAN_SOURCE_DIR) / "configs/so3_expxy.json").string());
  auto once = [&](int threads) {
    set_thread_count(threads);
    auto r = cli::run("verify-all", config);
    set_thread_count(0);
    return r.artifacts;
  };
  const auto a = once(1), b = once(1), d = once(4);
  c.require("artifacts emitted", !a.empty());
  c.require("same seed, byte-identical", a == b);
  c.require("1 vs 4 threads, byte-identical", a == d);
}

}  // namespace

int main() {
  bool ok = true;
  ok &= criterion(1, "round trip", round_trip);
  ok &= criterion(2, "path independence", path_independence);
  ok &= criterion(3, "convergence order", convergence);
  ok &= criterion(4, "group structure", group_structure);
  ok &= criterion(5, "poincare operator", poincare);
  ok &= criterion(6, "variation", variation);
  ok &= criterion(7, "tangent group", tangent);
  ok &= criterion(8, "naturality and evolution laws", naturality);
  ok &= criterion(9, "determinism", determinism);
  return ok ? 0 : 1;
}
