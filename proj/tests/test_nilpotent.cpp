#include "carnotkit/nilpotent.hpp"

#include <random>

#include "doctest.h"
#include "test_util.hpp"

using namespace carnotkit;
using namespace carnotkit::testutil;

namespace {

// Free associative algebra on two letters, truncated beyond word length
// `depth`. Independent expansion oracle for the group-law series.
struct FreeSeries {
  int depth;
  std::map<std::vector<int>, Rat> coeff;  // word -> coefficient

  static FreeSeries zero(int depth) { return {depth, {}}; }
  static FreeSeries one(int depth) { return {depth, {{{}, Rat(1)}}}; }
  static FreeSeries letter(int depth, int l) { return {depth, {{{l}, Rat(1)}}}; }

  void add(const std::vector<int>& w, const Rat& c) {
    if (c == 0 || static_cast<int>(w.size()) > depth) return;
    Rat& slot = coeff[w];
    slot += c;
    if (slot == 0) coeff.erase(w);
  }
  FreeSeries operator+(const FreeSeries& o) const {
    FreeSeries r = *this;
    for (const auto& [w, c] : o.coeff) r.add(w, c);
    return r;
  }
  FreeSeries operator-(const FreeSeries& o) const {
    FreeSeries r = *this;
    for (const auto& [w, c] : o.coeff) r.add(w, -c);
    return r;
  }
  FreeSeries operator*(const FreeSeries& o) const {
    FreeSeries r = zero(depth);
    for (const auto& [w1, c1] : coeff)
      for (const auto& [w2, c2] : o.coeff) {
        if (static_cast<int>(w1.size() + w2.size()) > depth) continue;
        std::vector<int> w = w1;
        w.insert(w.end(), w2.begin(), w2.end());
        r.add(w, c1 * c2);
      }
    return r;
  }
  FreeSeries scale(const Rat& c) const {
    FreeSeries r = zero(depth);
    for (const auto& [w, k] : coeff) r.add(w, k * c);
    return r;
  }
  bool operator==(const FreeSeries& o) const { return coeff == o.coeff; }
};

FreeSeries free_exp(const FreeSeries& a) {
  FreeSeries r = FreeSeries::one(a.depth);
  FreeSeries inc = FreeSeries::one(a.depth);
  for (int i = 1; i <= a.depth; ++i) {
    inc = inc * a;
    inc = inc.scale(Rat(1, i));
    if (inc.coeff.empty()) break;
    r = r + inc;
  }
  return r;
}

FreeSeries free_comm(const FreeSeries& a, const FreeSeries& b) { return a * b - b * a; }

// The series sum evaluated with free-algebra commutators.
FreeSeries dynkin_in_free_algebra(int depth) {
  FreeSeries x = FreeSeries::letter(depth, 0);
  FreeSeries y = FreeSeries::letter(depth, 1);
  FreeSeries acc = FreeSeries::zero(depth);
  for (const auto& term : dynkin_terms(depth)) {
    FreeSeries cur = term.word.back() == 0 ? x : y;
    for (int i = static_cast<int>(term.word.size()) - 2; i >= 0; --i)
      cur = free_comm(term.word[i] == 0 ? x : y, cur);
    acc = acc + cur.scale(term.coeff);
  }
  return acc;
}

GradedNilpotentLieAlgebra heisenberg_algebra() {
  return GradedNilpotentLieAlgebra({1, 1, 2}, {{{0, 1}, {{2, Rat(1)}}}});
}

GradedNilpotentLieAlgebra engel_algebra() {
  // [e1,e2] = e3, [e3,e2] = e4.
  return GradedNilpotentLieAlgebra({1, 1, 2, 3},
                                   {{{0, 1}, {{2, Rat(1)}}}, {{2, 1}, {{3, Rat(1)}}}});
}

}  // namespace

TEST_CASE("group-law series against full exponential expansion") {
  // exp(x) exp(y) = exp(series(x,y)) in the truncated free algebra, exactly.
  for (int depth = 1; depth <= 6; ++depth) {
    FreeSeries x = FreeSeries::letter(depth, 0);
    FreeSeries y = FreeSeries::letter(depth, 1);
    FreeSeries lhs = free_exp(x) * free_exp(y);
    FreeSeries rhs = free_exp(dynkin_in_free_algebra(depth));
    CHECK(lhs == rhs);
  }
}

TEST_CASE("algebra validation") {
  CHECK(heisenberg_algebra().check().pass());
  CHECK(engel_algebra().check().pass());

  // Grading violation: weight-1 target of a (1,1) bracket.
  GradedNilpotentLieAlgebra bad({1, 1, 2}, {{{0, 1}, {{0, Rat(1)}}}});
  CHECK(!bad.check().pass());
}

TEST_CASE("Heisenberg closed form, sign frozen") {
  auto l = heisenberg_algebra();
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    GroupElement a = random_rat_vec(rng, 3), b = random_rat_vec(rng, 3);
    GroupElement p = bch_multiply(l, a, b);
    CHECK(p[0] == a[0] + b[0]);
    CHECK(p[1] == a[1] + b[1]);
    CHECK(p[2] == a[2] + b[2] + Rat(1, 2) * (a[0] * b[1] - a[1] * b[0]));
  }
}

TEST_CASE("Engel group law regression") {
  auto l = engel_algebra();
  GroupElement e1 = {Rat(1), Rat(0), Rat(0), Rat(0)};
  GroupElement e2 = {Rat(0), Rat(1), Rat(0), Rat(0)};
  GroupElement p = bch_multiply(l, e1, e2);
  CHECK(p[0] == Rat(1));
  CHECK(p[1] == Rat(1));
  CHECK(p[2] == Rat(1, 2));
  CHECK(p[3] == Rat(1, 12));
}

TEST_CASE("group axioms on random rational triples") {
  std::mt19937_64 rng(23);
  for (const auto& l : {heisenberg_algebra(), engel_algebra()}) {
    int n = l.dim();
    for (int trial = 0; trial < 40; ++trial) {
      GroupElement a = random_rat_vec(rng, n), b = random_rat_vec(rng, n),
                   c = random_rat_vec(rng, n);
      CHECK(bch_multiply(l, bch_multiply(l, a, b), c) == bch_multiply(l, a, bch_multiply(l, b, c)));
      GroupElement inv = a;
      for (auto& x : inv) x = -x;
      CHECK(bch_multiply(l, a, inv) == GroupElement(n, Rat(0)));
      CHECK(bch_multiply(l, inv, a) == GroupElement(n, Rat(0)));
      CHECK(bch_multiply(l, a, GroupElement(n, Rat(0))) == a);
    }
  }
}

TEST_CASE("abelian algebras multiply by addition") {
  GradedNilpotentLieAlgebra l({1, 1, 1}, {});
  std::mt19937_64 rng(5);
  GroupElement a = random_rat_vec(rng, 3), b = random_rat_vec(rng, 3);
  GroupElement p = bch_multiply(l, a, b);
  for (int i = 0; i < 3; ++i) CHECK(p[i] == a[i] + b[i]);
}

TEST_CASE("weighted dilation is a group automorphism") {
  std::mt19937_64 rng(31);
  for (const auto& l : {heisenberg_algebra(), engel_algebra()}) {
    int n = l.dim();
    for (int trial = 0; trial < 20; ++trial) {
      Rat lam = random_rat(rng);
      if (lam == 0) lam = Rat(2, 3);
      GroupElement a = random_rat_vec(rng, n), b = random_rat_vec(rng, n);
      CHECK(dilate(l, lam, bch_multiply(l, a, b)) ==
            bch_multiply(l, dilate(l, lam, a), dilate(l, lam, b)));
    }
  }
}

TEST_CASE("osculating algebra of the Heisenberg chart") {
  auto chart = heisenberg_chart();
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 3; ++trial) {
    RatVec v = trial == 0 ? RatVec(3, Rat(0)) : random_rat_vec(rng, 3);
    auto l = osculating_algebra(chart, v);
    CHECK(l.check().pass());
    auto br = l.bracket_of_basis(0, 1);
    REQUIRE(br.size() == 1);
    CHECK(br.at(2) == Rat(1));
    CHECK(l.bracket_of_basis(0, 2).empty());
    CHECK(l.bracket_of_basis(1, 2).empty());
  }
}

TEST_CASE("1-step charts give abelian osculating algebras") {
  auto chart = flat_chart(3);
  auto l = osculating_algebra(chart, RatVec(3, Rat(0)));
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) CHECK(l.bracket_of_basis(a, b).empty());
}

TEST_CASE("osculating algebra of the Engel chart at the origin") {
  auto chart = engel_chart();
  auto l = osculating_algebra(chart, RatVec(4, Rat(0)));
  CHECK(l.check().pass());
  auto b01 = l.bracket_of_basis(0, 1);
  REQUIRE(b01.size() == 1);
  CHECK(b01.at(2) == Rat(1));
  auto b21 = l.bracket_of_basis(2, 1);
  REQUIRE(b21.size() == 1);
  CHECK(b21.at(3) == Rat(1));
  CHECK(l.bracket_of_basis(0, 2).empty());
  CHECK(l.bracket_of_basis(0, 3).empty());
  CHECK(l.bracket_of_basis(1, 3).empty());
}

TEST_CASE("osculating constants ignore frame perturbations of high order") {
  // Perturbing the frame by fields that vanish deeply at v must not move
  // the constants at v.
  auto chart = heisenberg_chart();
  RatVec v(3, Rat(0));
  Poly x = Poly::variable(3, 0), z = Poly::variable(3, 2);
  // X1 + z^2 X3 and X2 + x^3 X3: the added fields vanish at v to order >= 3.
  VectorField x1{{Poly::constant(3, Rat(1)), Poly::zero(3), z * z}};
  VectorField x2{{Poly::zero(3), Poly::constant(3, Rat(1)), x + x * x * x}};
  VectorField x3{{Poly::zero(3), Poly::zero(3), Poly::constant(3, Rat(1))}};
  FilteredChart pert(3, {2, 3}, {x1, x2, x3});
  REQUIRE(pert.validate().pass());
  auto l0 = osculating_algebra(chart, v);
  auto l1 = osculating_algebra(pert, v);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) CHECK(l0.bracket_of_basis(a, b) == l1.bracket_of_basis(a, b));
}

TEST_CASE("derivation action on graded classes") {
  auto chart = heisenberg_chart();
  ClassLocus at = ClassLocus::at_point(RatVec(3, Rat(0)));
  Poly x = Poly::variable(3, 0), z = Poly::variable(3, 2);

  RatVec e2 = {Rat(0), Rat(1), Rat(0)};
  auto out = derivation_action(chart, at, e2, GradedClass{2, z});
  REQUIRE(out.parts.size() == 1);
  CHECK(out.parts.at(1) == x);

  RatVec e1 = {Rat(1), Rat(0), Rat(0)};
  out = derivation_action(chart, at, e1, GradedClass{1, x});
  REQUIRE(out.parts.size() == 1);
  CHECK(out.parts.at(0) == Poly::constant(3, Rat(1)));

  out = derivation_action(chart, at, e2, GradedClass{0, Poly::constant(3, Rat(1))});
  CHECK(out.is_zero());

  // Precondition: representative must vanish to the declared grade.
  CHECK_THROWS_AS(derivation_action(chart, at, e1, GradedClass{2, x}), Error);
}

TEST_CASE("orbit polynomials on the Heisenberg chart") {
  auto chart = heisenberg_chart();
  ClassLocus at = ClassLocus::at_point(RatVec(3, Rat(0)));
  Poly x = Poly::variable(3, 0), y = Poly::variable(3, 1), z = Poly::variable(3, 2);
  Poly xi1 = Poly::variable(3, 0), xi2 = Poly::variable(3, 1), xi3 = Poly::variable(3, 2);

  CHECK(orbit_homomorphism(chart, at, GradedClass{0, Poly::constant(3, Rat(1))}).value ==
        Poly::constant(3, Rat(1)));
  CHECK(orbit_homomorphism(chart, at, GradedClass{1, x}).value == -xi1);
  CHECK(orbit_homomorphism(chart, at, GradedClass{2, z}).value ==
        -xi3 + (Rat(1, 2) * (xi1 * xi2)));
  CHECK(orbit_homomorphism(chart, at, GradedClass{2, x * y}).value == xi1 * xi2);
}

TEST_CASE("orbit map equivariance under the derivation action") {
  // F_{delta_eta a}(xi) = d/ds|_0 F_a( bch(-s eta, xi) ), exactly.
  auto chart = heisenberg_chart();
  RatVec v(3, Rat(0));
  ClassLocus at = ClassLocus::at_point(v);
  auto l = osculating_algebra(chart, v);
  std::mt19937_64 rng(71);

  Poly x = Poly::variable(3, 0), y = Poly::variable(3, 1), z = Poly::variable(3, 2);
  std::vector<GradedClass> classes = {{2, z}, {2, x * y}, {1, x}, {1, y}, {2, x * x}};
  const int nodes = 9;  // exact differentiation for the s-degrees that occur
  std::vector<Rat> wts(nodes, Rat(0));
  for (int j = 0; j < nodes; ++j) {
    Rat denom(1);
    for (int k = 0; k < nodes; ++k)
      if (k != j) denom *= Rat(j - k);
    Rat num(0);
    for (int i = 0; i < nodes; ++i) {
      if (i == j) continue;
      Rat prod(1);
      for (int k = 0; k < nodes; ++k)
        if (k != i && k != j) prod *= Rat(-k);
      num += prod;
    }
    wts[j] = num / denom;
  }

  for (const auto& cls : classes) {
    for (int trial = 0; trial < 4; ++trial) {
      RatVec eta = random_rat_vec(rng, 3, 3, 2);
      RatVec xi = random_rat_vec(rng, 3, 3, 2);
      GradedElement de = derivation_action(chart, at, eta, cls);
      Rat lhs(0);
      for (const auto& [grade, rep] : de.parts) {
        auto f = orbit_homomorphism(chart, at, GradedClass{grade, rep});
        lhs += f.value.eval<Rat>(std::span<const Rat>(xi));
      }
      auto fa = orbit_homomorphism(chart, at, cls);
      Rat rhs(0);
      for (int j = 0; j < nodes; ++j) {
        RatVec shift = eta;
        for (auto& t : shift) t *= Rat(-j);
        GroupElement arg = bch_multiply(l, shift, xi);
        rhs += wts[j] * fa.value.eval<Rat>(std::span<const Rat>(arg));
      }
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("orbit isomorphism rank and multiplicativity") {
  CHECK(verify_orbit_isomorphism(heisenberg_chart(), RatVec(3, Rat(0))).pass());
  CHECK(verify_orbit_isomorphism(flat_chart(2), RatVec(2, Rat(0))).pass());
  CHECK(verify_orbit_isomorphism(engel_chart(), RatVec(4, Rat(0)), 3, 10).pass());
  RatVec v = {Rat(1), Rat(-1, 2), Rat(2)};
  CHECK(verify_orbit_isomorphism(heisenberg_chart(), v, 5, 10).pass());
}

TEST_CASE("osculating quotient bookkeeping") {
  auto plane = heisenberg_plane_chart();
  auto q = osculating_quotient(plane, RatVec(3, Rat(0)));
  CHECK(q.tangential == std::vector<int>{0, 1});
  CHECK(q.normal == std::vector<int>{2});
  GroupElement g = {Rat(3), Rat(-2), Rat(5)};
  GroupElement n = q.normalize(g);
  CHECK(n[0] == 0);
  CHECK(n[1] == 0);
  CHECK(n[2] == Rat(5));

  auto point = heisenberg_point_chart();
  auto qp = osculating_quotient(point, RatVec(3, Rat(0)));
  CHECK(qp.tangential.empty());
  CHECK(qp.normalize(g) == g);

  CHECK_THROWS_AS(osculating_quotient(plane, RatVec{Rat(0), Rat(0), Rat(1)}), Error);
}

TEST_CASE("coset normalization is constant on cosets") {
  auto l = heisenberg_algebra();
  OsculatingQuotient q{l, {0}, {1, 2}};  // subalgebra spanned by e1
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    GroupElement x = random_rat_vec(rng, 3);
    GroupElement sub(3, Rat(0));
    sub[0] = random_rat(rng);
    GroupElement same_coset = bch_multiply(l, x, sub);
    CHECK(q.normalize(x) == q.normalize(same_coset));
    CHECK(q.normalize(x)[0] == 0);
  }
}

TEST_CASE("unsupported step and singular points fail loudly") {
  GradedNilpotentLieAlgebra deep({1, 7}, {});
  GroupElement a = {Rat(1), Rat(0)}, b = {Rat(0), Rat(1)};
  CHECK_THROWS_AS(bch_multiply(deep, a, b), Error);

  // Frame singular away from the origin: X1 = (1 + u1) d1.
  int n = 2;
  VectorField x1{{Poly::constant(n, Rat(1)) + Poly::variable(n, 0), Poly::zero(n)}};
  VectorField x2{{Poly::zero(n), Poly::constant(n, Rat(1))}};
  FilteredChart chart(2, {2}, {x1, x2});
  REQUIRE(chart.validate().pass());
  CHECK_THROWS_AS(osculating_algebra(chart, RatVec{Rat(-1), Rat(0)}), Error);
}
