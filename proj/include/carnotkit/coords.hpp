#pragma once

#include "carnotkit/chart.hpp"
#include "carnotkit/nilpotent.hpp"

namespace carnotkit {

/// Privileged coordinates centered at v: polynomials x_1..x_n with
/// x_b vanishing at v to H-order exactly q_b and (X_a x_b)(v) = delta_ab.
/// Produced as the dual family to the unit frame multi-indices inside the
/// space of coordinate monomials of total degree <= step, with free
/// coefficients zeroed for determinism; both conditions re-verified.
std::vector<Poly> privileged_coordinates(const FilteredChart& chart, const RatVec& v);

/// Adapted coordinates along the marked submanifold: one polynomial z_c per
/// normal index c with z_c vanishing on M to H-order q_c and
/// (X_c z_d) = delta_cd on M, both exact. Solves the dual problem at the
/// origin, then corrects weight by weight so the relations hold on all of M.
std::vector<Poly> adapted_coordinates(const FilteredChart& chart);

/// Carnot predicate: the orbit image of each coordinate class <x_a>_{q_a}
/// must equal the orbit image a flat chart produces, i.e. minus the a-th
/// exponential coordinate. `witness` holds the first deviation.
struct CarnotResult {
  bool carnot;
  int witness_index;  // -1 when carnot
  Poly witness;       // F_a + xi_a for the first failing a
};
CarnotResult is_carnot(const FilteredChart& chart, const RatVec& v, const std::vector<Poly>& coords);

/// Weighted radial field over the normal coordinates: sum q_c u_c d/du_c.
VectorField model_euler_field(const WeightVector& weights, const std::vector<int>& normal_vars);

}  // namespace carnotkit
