#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "carnotkit/linalg.hpp"
#include "carnotkit/poly.hpp"
#include "carnotkit/report.hpp"

namespace carnotkit {

/// Vector field with polynomial components in the coordinate basis d/du_i.
struct VectorField {
  std::vector<Poly> comp;

  VectorField() = default;
  explicit VectorField(std::vector<Poly> c) : comp(std::move(c)) {}
  static VectorField zero(int dim);

  int dim() const { return static_cast<int>(comp.size()); }

  /// Derivative of f along the field: sum_i comp_i * df/du_i.
  Poly apply(const Poly& f) const;

  bool operator==(const VectorField& o) const = default;
};

VectorField operator+(const VectorField& a, const VectorField& b);
VectorField operator-(const VectorField& a, const VectorField& b);
VectorField scale(const Poly& f, const VectorField& x);

/// [X,Y], component i equal to X(Y_i) - Y(X_i).
VectorField lie_bracket(const VectorField& x, const VectorField& y);

/// Polynomial chart of a filtered manifold: a frame X_1..X_n adapted to the
/// filtration ranks, with weights derived from the rank jumps, and an optional
/// marked submanifold M = { u_i = 0 : i in normal_vars }. Frame field i is
/// normal for M exactly when coordinate i is.
class FilteredChart {
 public:
  FilteredChart(int dim, std::vector<int> ranks, std::vector<VectorField> frame,
                std::vector<int> normal_vars = {});

  int dim() const { return dim_; }
  int step() const { return static_cast<int>(ranks_.size()); }
  const std::vector<int>& ranks() const { return ranks_; }
  const WeightVector& weights() const { return weights_; }
  const std::vector<VectorField>& frame() const { return frame_; }
  const VectorField& frame_field(int a) const { return frame_[a]; }
  bool marked() const { return !normal_vars_.empty(); }
  const std::vector<int>& normal_vars() const { return normal_vars_; }
  std::vector<int> tangential_vars() const;

  /// Matrix F[i][a] = component i of X_a evaluated at v.
  RatMat frame_matrix_at(const RatVec& v) const;

  /// Full structural validation: frame invertibility at the origin, tangency
  /// of the non-normal frame fields when M is marked, and the bracket-weight
  /// conditions with expansion coefficients obtained by exact Cramer division.
  const ValidationReport& validate() const;

  /// Expansion [X_a,X_b] = sum_c f^c_{ab} X_c. Only available when validation
  /// passed; coefficients are exact polynomials.
  const Poly& structure_function(int a, int b, int c) const;

  void require_valid() const;

 private:
  int dim_;
  std::vector<int> ranks_;
  WeightVector weights_;
  std::vector<VectorField> frame_;
  std::vector<int> normal_vars_;

  struct Cache {
    std::optional<ValidationReport> report;
    std::vector<Poly> structure;  // [a*n*n + b*n + c]
  };
  std::shared_ptr<Cache> cache_;

  void run_validation() const;
};

/// X^alpha f with the frame order fixed: X_1^{a_1} ... X_n^{a_n}, the
/// rightmost factor acting first.
Poly frame_monomial_apply(const FilteredChart& chart, const Mono& alpha, const Poly& f);

/// Weighted order q_1 a_1 + ... + q_n a_n of a frame multi-index.
int weighted_order(const WeightVector& w, const Mono& alpha);

/// All multi-indices alpha with weighted order <= cap (frame weights).
std::vector<Mono> multi_indices_up_to(const WeightVector& w, int cap);

/// Differential operator in frame form: D = sum_alpha f_alpha X^alpha.
struct FrameOperator {
  std::map<Mono, Poly> terms;

  bool is_zero() const;
  void add(const Mono& alpha, const Poly& f);
  Poly apply(const FilteredChart& chart, const Poly& g) const;
};

/// Max over nonzero coefficients of the weighted order. Throws on zero D.
int h_order_of_operator(const FilteredChart& chart, const FrameOperator& d);

/// Composition D1 . D2 re-expressed in frame form (normal ordering via the
/// chart's structure functions). Requires a validated chart.
FrameOperator frame_compose(const FilteredChart& chart, const FrameOperator& d1,
                            const FrameOperator& d2);

/// Evaluation locus for vanishing orders: a rational point, or the marked
/// coordinate submanifold of the chart.
struct Locus {
  enum Kind { Point, Marked } kind;
  RatVec point;  // used when kind == Point

  static Locus at(RatVec v) { return Locus{Point, std::move(v)}; }
  static Locus on_marked() { return Locus{Marked, {}}; }
};

/// True when X^alpha f vanishes on the locus for every alpha of weighted
/// order <= q-1 (an exact test: evaluation at the point, or identical
/// vanishing of the restriction to the marked subspace).
bool vanishes_to_h_order(const FilteredChart& chart, const Poly& f, const Locus& locus, int q);

/// Exact H-order of vanishing, capped: returns the order if it is <= cap,
/// and cap+1 when the order is at least cap+1.
int vanishing_h_order(const FilteredChart& chart, const Poly& f, const Locus& locus, int cap);

}  // namespace carnotkit
