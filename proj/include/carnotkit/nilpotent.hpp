#pragma once

#include <map>
#include <utility>
#include <vector>

#include "carnotkit/chart.hpp"

namespace carnotkit {

/// Graded nilpotent Lie algebra given by basis weights and structure
/// constants: [e_a, e_b] = sum_c c^c_{ab} e_c with c^c_{ab} = 0 unless
/// q_c = q_a + q_b. The grading forces nilpotency of step max(q).
class GradedNilpotentLieAlgebra {
 public:
  GradedNilpotentLieAlgebra(WeightVector weights,
                            std::map<std::pair<int, int>, std::map<int, Rat>> brackets);

  int dim() const { return static_cast<int>(weights_.size()); }
  int step() const;
  const WeightVector& weights() const { return weights_; }

  /// Coefficients of [e_a, e_b] (antisymmetry filled in).
  std::map<int, Rat> bracket_of_basis(int a, int b) const;

  RatVec bracket(const RatVec& x, const RatVec& y) const;

  /// Antisymmetry, grading and the Jacobi identity, exactly.
  ValidationReport check() const;

 private:
  WeightVector weights_;
  // Stored for a < b only.
  std::map<std::pair<int, int>, std::map<int, Rat>> brackets_;
};

/// Element of the unipotent group in exponential coordinates of the first
/// kind: the vector of coefficients of log of the element.
using GroupElement = RatVec;

/// Group law log(exp x . exp y) by the Dynkin commutator series truncated at
/// nested-bracket depth step(L); exact for graded nilpotent algebras of
/// step <= 6.
GroupElement bch_multiply(const GradedNilpotentLieAlgebra& l, const GroupElement& x,
                          const GroupElement& y);

/// Weighted dilation x_a -> lambda^{q_a} x_a (a group automorphism).
GroupElement dilate(const GradedNilpotentLieAlgebra& l, const Rat& lambda, const GroupElement& x);

/// Dynkin series data: words over letters {0,1} with rational coefficients,
/// truncated at total length <= depth. Exposed for independent testing.
struct DynkinTerm {
  std::vector<int> word;  // 0 = first argument, 1 = second
  Rat coeff;
};
const std::vector<DynkinTerm>& dynkin_terms(int depth);

/// Osculating algebra at the rational point v: evaluates every frame bracket
/// at v, solves against the frame matrix and keeps the weight-additive part.
GradedNilpotentLieAlgebra osculating_algebra(const FilteredChart& chart, const RatVec& v);

/// Graded class <rep>_grade of the order-of-vanishing filtration.
struct GradedClass {
  int grade;
  Poly rep;
};

/// Finite sum of graded classes, one representative per grade.
struct GradedElement {
  std::map<int, Poly> parts;

  bool is_zero() const;
  void add(int grade, const Poly& p);
};

/// Where graded classes live: vanishing orders at a point of the chart, or
/// along the marked submanifold (with the counit evaluated at base_point).
struct ClassLocus {
  Locus locus;
  RatVec base_point;

  static ClassLocus at_point(RatVec v) { return {Locus::at(v), std::move(v)}; }
  static ClassLocus on_marked(const FilteredChart& chart);
};

/// Action of the algebra element xi = sum xi_a e_a as a derivation:
/// each class <f>_q contributes <X_a f>_{q - q_a}, pieces of negative grade
/// vanish. The representative must vanish to order >= grade on the locus.
GradedElement derivation_action(const FilteredChart& chart, const ClassLocus& at, const RatVec& xi,
                                const GradedClass& a);

/// Polynomial function on the osculating group produced by the orbit map:
/// F_a(xi) = sum_k (-1)^k / k! * counit(delta_xi^k a), a polynomial in the
/// exponential coordinates xi, weighted-homogeneous of degree = grade.
struct GradedFunction {
  Poly value;  // polynomial in the group coordinates xi_1..xi_n
  WeightVector weights;
};
GradedFunction orbit_homomorphism(const FilteredChart& chart, const ClassLocus& at,
                                  const GradedClass& a);

/// Rank and multiplicativity check of the orbit map on the grade <= step
/// truncation, exact over the rationals.
ValidationReport verify_orbit_isomorphism(const FilteredChart& chart, const RatVec& v,
                                          unsigned seed = 1, int multiplicativity_samples = 25);

/// Osculating algebra at a marked-submanifold point together with the
/// subalgebra spanned by the tangential frame directions.
struct OsculatingQuotient {
  GradedNilpotentLieAlgebra algebra;
  std::vector<int> tangential;  // indices spanning the subalgebra
  std::vector<int> normal;

  /// Coset representative with tangential exponential coordinates zero,
  /// obtained by right multiplication with a subalgebra element.
  GroupElement normalize(const GroupElement& x) const;
};
OsculatingQuotient osculating_quotient(const FilteredChart& chart, const RatVec& m);

}  // namespace carnotkit
