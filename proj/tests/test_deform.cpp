#include "carnotkit/deform.hpp"

#include <cmath>
#include <random>

#include "carnotkit/coords.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace carnotkit;
using namespace carnotkit::testutil;

namespace {

VectorField perturbed_model_field() {
  // q_c z_c d/dz_c + z^2 d/dz on the fully marked Heisenberg chart.
  auto chart = heisenberg_point_chart();
  VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
  Poly z = Poly::variable(3, 2);
  e.comp[2] += z * z;
  return e;
}

}  // namespace

TEST_CASE("rees membership and multiplication") {
  auto chart = heisenberg_plane_chart();
  Poly z = Poly::variable(3, 2);

  ReesElement zt2 = ReesElement::term(2, z);
  CHECK(rees_validate(chart, zt2).pass());

  // z vanishes to order exactly 2 on the plane, so z t^-3 is not a member.
  CHECK(!rees_validate(chart, ReesElement::term(3, z)).pass());

  ReesElement sq = rees_multiply(chart, zt2, zt2);
  REQUIRE(sq.coeff.size() == 1);
  CHECK(sq.coeff.at(4) == z * z);
  CHECK(vanishes_to_h_order(chart, z * z, Locus::on_marked(), 4));

  ReesElement unit = ReesElement::unit(3);
  ReesElement prod = rees_multiply(chart, zt2, unit);
  CHECK(prod.coeff == zt2.coeff);

  // t * (z t^-2) = z t^-1, a member since 2 >= 1.
  ReesElement t = ReesElement::term(-1, Poly::constant(3, Rat(1)));
  ReesElement mixed = rees_multiply(chart, t, zt2);
  REQUIRE(mixed.coeff.size() == 1);
  CHECK(mixed.coeff.at(1) == z);
  CHECK(rees_validate(chart, mixed).pass());
}

TEST_CASE("rees evaluation along the deformation chart") {
  auto chart = heisenberg_plane_chart();
  Poly z = Poly::variable(3, 2);
  ReesElement zt2 = ReesElement::term(2, z);

  // No negative lambda powers: the zero-fiber limit exists.
  Poly dp = rees_deformation_polynomial(chart, zt2);
  CHECK(dp == Poly::variable(4, 3));  // exactly the ztilde coordinate

  // At lambda != 0 the value of z t^-2 is z / lambda^2 = ztilde.
  DeformPoint p{0.25, {1.5, -2.0, 0.75}};
  CHECK(rees_evaluate(chart, zt2, p) == doctest::Approx(0.75));
  DeformPoint p0{0.0, {1.5, -2.0, 0.75}};
  CHECK(rees_evaluate(chart, zt2, p0) == doctest::Approx(0.75));

  // f = t vanishes on the zero fiber.
  ReesElement t = ReesElement::term(-1, Poly::constant(3, Rat(1)));
  CHECK(rees_evaluate(chart, t, p0) == doctest::Approx(0.0));
  CHECK(rees_evaluate(chart, t, p) == doctest::Approx(0.25));

  // x y does not vanish on the plane, so x y t^-1 is rejected; on the fully
  // marked chart the degree-1 element x t^-1 works.
  Poly xy = Poly::variable(3, 0) * Poly::variable(3, 1);
  CHECK(!rees_validate(chart, ReesElement::term(1, xy)).pass());
  CHECK_THROWS_AS(rees_deformation_polynomial(chart, ReesElement::term(1, xy)), Error);

  auto point_chart = heisenberg_point_chart();
  Poly x = Poly::variable(3, 0);
  ReesElement xt1 = ReesElement::term(1, x);
  CHECK(rees_validate(point_chart, xt1).pass());
  DeformPoint q{0.5, {3.0, 1.0, 1.0}};
  // Value x / lambda with x = lambda * xtilde: equals xtilde = 3.
  CHECK(rees_evaluate(point_chart, xt1, q) == doctest::Approx(3.0));
}

TEST_CASE("laurent evaluation agrees with the deformation polynomial") {
  auto chart = heisenberg_plane_chart();
  Poly z = Poly::variable(3, 2), x = Poly::variable(3, 0);
  ReesElement f;
  f.coeff[2] = z * x;        // order 2 on M
  f.coeff[0] = x * x;        // free coefficient
  f.coeff[-1] = x + z;       // positive power of t
  REQUIRE(rees_validate(chart, f).pass());
  Poly dp = rees_deformation_polynomial(chart, f);
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    DeformPoint p{0.5 + 0.4 * u(rng), {u(rng), u(rng), u(rng)}};
    std::vector<double> full(4);
    full[0] = p.lambda;
    std::copy(p.coords.begin(), p.coords.end(), full.begin() + 1);
    double via_poly = dp.eval<double>(std::span<const double>(full));
    CHECK(rees_evaluate(chart, f, p) == doctest::Approx(via_poly).epsilon(1e-12));
  }
}

TEST_CASE("zoom and unzoom") {
  auto chart = heisenberg_point_chart();
  RatVec p = {Rat(1), Rat(1), Rat(1)};
  auto fiber = zoom(chart, Rat(1, 2), p);
  CHECK(fiber == RatVec{Rat(2), Rat(2), Rat(4)});
  CHECK(zoom(chart, Rat(1), p) == p);
  CHECK(unzoom(chart, Rat(1, 2), fiber) == p);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    RatVec q = random_rat_vec(rng, 3);
    Rat lam = random_rat(rng);
    if (lam == 0) lam = Rat(3, 7);
    CHECK(unzoom(chart, lam, zoom(chart, lam, q)) == q);
  }
  CHECK_THROWS_AS(unzoom(chart, Rat(0), p), Error);
}

TEST_CASE("euler-like discrimination") {
  // Model field passes on every marked chart in its own coordinates.
  for (const auto& chart : {flat_chart(2, true), heisenberg_point_chart(), heisenberg_plane_chart()}) {
    VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
    CHECK(euler_like_check(chart, e, chart.step()).pass());
  }

  // Doubling the coefficients fails at q = 1 with a weight-1 witness.
  {
    auto chart = heisenberg_point_chart();
    VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
    for (auto& comp : e.comp) comp = comp.scale(Rat(2));
    auto rep = euler_like_check(chart, e, 2);
    CHECK(!rep.pass());
    CHECK(rep.violations.front().where == "q=1");
    bool witnesses_x = false;
    for (const auto& v : rep.violations)
      if (v.where == "q=1" && v.message.find("1*u1 ") != std::string::npos) witnesses_x = true;
    CHECK(witnesses_x);
  }

  // An order-raising perturbation passes: z^2 dz has weighted degree 4 >= 3.
  {
    auto chart = heisenberg_point_chart();
    CHECK(euler_like_check(chart, perturbed_model_field(), 2).pass());
  }

  // A tangential shear that does not vanish on M is caught by the mixed
  // generators.
  {
    auto chart = heisenberg_plane_chart();
    VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
    e.comp[0] += Poly::variable(3, 0);  // + x d/dx
    auto rep = euler_like_check(chart, e, 2);
    CHECK(!rep.pass());
  }
}

TEST_CASE("t-field of the model is pure lambda translation") {
  for (const auto& chart : {flat_chart(2, true), heisenberg_point_chart(), heisenberg_plane_chart()}) {
    VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
    TField tf = TField::build(chart, e);
    CHECK(tf.t.comp[0] == Poly::constant(chart.dim() + 1, Rat(1)));
    for (int i = 1; i <= chart.dim(); ++i) CHECK(tf.t.comp[i].is_zero());
  }
}

TEST_CASE("t-field of the perturbed model") {
  auto chart = heisenberg_point_chart();
  TField tf = TField::build(chart, perturbed_model_field());
  int m = 4;
  Poly lam = Poly::variable(m, 0), zt = Poly::variable(m, 3);
  CHECK(tf.t.comp[1].is_zero());
  CHECK(tf.t.comp[2].is_zero());
  CHECK(tf.t.comp[3] == lam * zt * zt);  // lambda ztilde^2

  // Refuses non-Euler-like input.
  VectorField doubled = model_euler_field(chart.weights(), chart.normal_vars());
  for (auto& comp : doubled.comp) comp = comp.scale(Rat(2));
  CHECK_THROWS_AS(TField::build(chart, doubled), Error);
}

TEST_CASE("symbolic relations of T, C, E") {
  for (const auto& chart : {flat_chart(2, true), heisenberg_point_chart(), heisenberg_plane_chart()}) {
    std::vector<VectorField> fields;
    fields.push_back(model_euler_field(chart.weights(), chart.normal_vars()));
    if (chart.dim() == 3 && chart.normal_vars().size() == 3) fields.push_back(perturbed_model_field());
    for (const auto& e : fields) {
      TField tf = TField::build(chart, e);
      int m = chart.dim() + 1;
      Poly lam = Poly::variable(m, 0);
      for (int i = 0; i < m; ++i) CHECK(lam * tf.t.comp[i] == tf.c.comp[i] + tf.e.comp[i]);
      CHECK(lie_bracket(tf.t, tf.c) == tf.t);
      CHECK(lie_bracket(tf.t, tf.e) == VectorField::zero(m));
    }
  }
}

TEST_CASE("model flow is the identity on fiber coordinates") {
  auto chart = heisenberg_point_chart();
  VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
  TField tf = TField::build(chart, e);
  DeformPoint start{0.0, {0.3, -0.7, 1.1}};
  auto res = integrate_tube(tf, start, 1.0);
  CHECK(!res.domain_exit);
  for (int i = 0; i < 3; ++i) CHECK(res.endpoint.coords[i] == start.coords[i]);
  CHECK(res.self_check_error == 0.0);
}

TEST_CASE("perturbed flow matches the closed-form solution") {
  auto chart = heisenberg_point_chart();
  TField tf = TField::build(chart, perturbed_model_field());

  // dz/ds = s z^2 gives z(s) = z0 / (1 - z0 s^2 / 2).
  DeformPoint start{0.0, {0.0, 0.0, 1.0}};
  auto res = integrate_tube(tf, start, 1.0);
  CHECK(!res.domain_exit);
  CHECK(res.endpoint.coords[2] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(res.endpoint.coords[0] == 0.0);
  CHECK(res.endpoint.coords[1] == 0.0);
  CHECK(res.self_check_error < 1e-9);

  // The zero section is stationary.
  DeformPoint zero{0.0, {0.0, 0.0, 0.0}};
  auto rz = integrate_tube(tf, zero, 1.0);
  for (int i = 0; i < 3; ++i) CHECK(rz.endpoint.coords[i] == 0.0);

  // Blow-up beyond the chart box is reported, not crashed.
  DeformPoint far{0.0, {0.0, 0.0, 4.0}};
  auto rf = integrate_tube(tf, far, 1.0);
  CHECK(rf.domain_exit);
}

TEST_CASE("rescale-restart reproduces the direct flow") {
  auto chart = heisenberg_point_chart();
  TField tf = TField::build(chart, perturbed_model_field());
  DeformPoint start{0.0, {0.2, -0.4, 0.9}};
  auto direct = integrate_tube(tf, start, 1.0);
  IntegrateOptions opts;
  opts.rescale = 0.5;
  auto rescaled = integrate_tube(tf, start, 1.0, opts);
  REQUIRE(!direct.domain_exit);
  REQUIRE(!rescaled.domain_exit);
  for (int i = 0; i < 3; ++i)
    CHECK(rescaled.endpoint.coords[i] == doctest::Approx(direct.endpoint.coords[i]).epsilon(1e-8));
}

TEST_CASE("tube verification") {
  auto chart = heisenberg_point_chart();

  // Model field: everything exact.
  {
    VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
    auto rep = verify_tube(chart, e, 8);
    CHECK(rep.report.pass());
    CHECK(rep.brackets_exact);
    CHECK(rep.translation_identity_exact);
    CHECK(rep.differential_residual == 0.0);
    CHECK(rep.scaling_residual == 0.0);
  }

  // Perturbed field: brackets exact, numerics within tolerance.
  {
    auto rep = verify_tube(chart, perturbed_model_field(), 20);
    CHECK(rep.report.pass());
    CHECK(rep.brackets_exact);
    CHECK(rep.differential_residual < 1e-6);
    CHECK(rep.scaling_residual < 1e-6);
  }

  // Non-Euler-like input refuses before verification.
  {
    VectorField bad = model_euler_field(chart.weights(), chart.normal_vars());
    for (auto& comp : bad.comp) comp = comp.scale(Rat(2));
    CHECK_THROWS_AS(verify_tube(chart, bad, 4), Error);
  }
}

TEST_CASE("1-step flat charts reduce to the classical picture") {
  auto chart = flat_chart(2, true);
  VectorField e = model_euler_field(chart.weights(), chart.normal_vars());
  auto rep = verify_tube(chart, e, 6);
  CHECK(rep.report.pass());
  CHECK(rep.differential_residual == 0.0);
  CHECK(rep.scaling_residual == 0.0);

  TField tf = TField::build(chart, e);
  DeformPoint start{0.0, {0.6, -0.2}};
  auto res = integrate_tube(tf, start, 1.0);
  // Tubular map at lambda = 1 is the identity in these coordinates.
  CHECK(res.manifold_point[0] == start.coords[0]);
  CHECK(res.manifold_point[1] == start.coords[1]);
}

TEST_CASE("rees membership is preserved by random products") {
  auto chart = heisenberg_plane_chart();
  Poly z = Poly::variable(3, 2);
  std::mt19937_64 rng(2025);
  // Random members: coefficients of t^-q built as z^ceil(q/2) * (random poly),
  // which vanish to order >= q on the plane since z has order 2 there.
  auto random_member = [&](int max_q) {
    ReesElement f;
    int terms = 1 + static_cast<int>(rng() % 3);
    for (int t = 0; t < terms; ++t) {
      int q = static_cast<int>(rng() % (max_q + 2)) - 1;  // -1..max_q
      Poly coeff = random_poly(rng, 3, 2, 2);
      if (coeff.is_zero()) continue;
      for (int k = 0; k < (q + 1) / 2; ++k) coeff = coeff * z;
      auto [it, fresh] = f.coeff.try_emplace(q, coeff);
      if (!fresh) it->second += coeff;
    }
    return f;
  };
  for (int trial = 0; trial < 25; ++trial) {
    ReesElement f = random_member(3), g = random_member(3);
    REQUIRE(rees_validate(chart, f).pass());
    REQUIRE(rees_validate(chart, g).pass());
    ReesElement prod = rees_multiply(chart, f, g);  // re-verifies internally
    CHECK(rees_validate(chart, prod).pass());
    // The zero-fiber limit exists for members.
    CHECK_NOTHROW(rees_deformation_polynomial(chart, prod));
  }
}
