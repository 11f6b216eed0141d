#pragma once

#include <optional>

#include "carnotkit/deform.hpp"
#include "carnotkit/nilpotent.hpp"

namespace carnotkit {

/// The square of a base chart with the diagonal marked, re-coordinatized so
/// the diagonal is the coordinate subspace {normal coordinates = 0}. Frame
/// fields pair the base fields diagonally (tangential) and on the second
/// factor (normal); coordinates are ordered by weight, tangential before
/// normal inside each weight block.
struct DoubledChart {
  FilteredChart chart;  // dimension 2n, marked
  std::vector<int> tangential_slot;  // slot of base coordinate i
  std::vector<int> normal_slot;      // slot of the paired normal coordinate
  std::vector<Poly> to_doubled;      // (u, u') -> doubled coordinates
  std::vector<Poly> from_doubled;    // doubled coordinates -> (u, u')
};

DoubledChart build_doubled_chart(const FilteredChart& base);

/// Arrow of the tangent groupoid: a pair-groupoid arrow at level lambda != 0
/// (target point p, source point q), or an osculating-group element over a
/// base point on the zero fiber.
struct TGElement {
  Rat lambda;
  RatVec p, q;       // lambda != 0
  RatVec m;          // lambda == 0: base point
  GroupElement xi;   // lambda == 0: exponential coordinates

  bool zero_fiber() const { return lambda == 0; }
  static TGElement arrow(Rat lambda, RatVec p, RatVec q);
  static TGElement fiber(RatVec m, GroupElement xi);
  bool operator==(const TGElement& o) const = default;
};

struct ConvergencePoint {
  Rat lambda;
  Rat error_exact;
  double error = 0.0;
  bool domain_exit = false;
};

struct ConvergenceReport {
  std::vector<ConvergencePoint> points;
  bool exact_zero = false;            // every error vanished identically
  std::optional<double> fitted_order; // least-squares slope on the nonzero tail
};

/// Tangent groupoid of a base chart: pair groupoid at every nonzero level,
/// osculating groups on the zero fiber, with the fiber transported through
/// the doubled chart's adapted coordinates.
class TangentGroupoid {
 public:
  explicit TangentGroupoid(FilteredChart base);

  const FilteredChart& base() const { return base_; }
  const DoubledChart& doubled() const { return doubled_; }

  TGElement unit(const RatVec& m, const Rat& lambda) const;
  TGElement inverse(const TGElement& g) const;
  std::pair<RatVec, Rat> source(const TGElement& g) const;
  std::pair<RatVec, Rat> target(const TGElement& g) const;
  TGElement compose(const TGElement& g, const TGElement& h) const;

  /// Fiber transport at base point m: the polynomial map sending exponential
  /// coordinates of the osculating group to the adapted normal coordinates
  /// of the zero fiber, and its exact inverse.
  std::vector<Poly> fiber_transport(const RatVec& m) const;
  GroupElement fiber_transport_inverse(const RatVec& m, const RatVec& ztilde) const;

  /// Embeds xi at level lambda (as an arrow with source m), embeds eta (as an
  /// arrow with target m), composes, re-zooms, and measures the max-norm
  /// distance to the group product in exponential coordinates.
  ConvergenceReport convergence_test(const RatVec& m, const GroupElement& xi,
                                     const GroupElement& eta, const std::vector<Rat>& lambdas,
                                     double bounds = 1e6) const;

 private:
  FilteredChart base_;
  DoubledChart doubled_;

  RatVec doubled_coords(const RatVec& first, const RatVec& second) const;
  std::pair<RatVec, RatVec> split_pair(const RatVec& doubled) const;
};

/// Geometric default level sequence 2^-1 .. 2^-10.
std::vector<Rat> default_lambda_sequence();

}  // namespace carnotkit
