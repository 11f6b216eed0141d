#pragma once

#include <optional>

#include "carnotkit/chart.hpp"

namespace carnotkit {

/// Laurent polynomial sum_q a_q t^{-q} with polynomial coefficients; for
/// q > 0 the coefficient must vanish on the marked submanifold to H-order q.
struct ReesElement {
  std::map<int, Poly> coeff;  // q -> a_q

  static ReesElement unit(int dim) { return ReesElement{{{0, Poly::constant(dim, Rat(1))}}}; }
  static ReesElement term(int q, Poly a) { return ReesElement{{{q, std::move(a)}}}; }
  bool is_zero() const;
};

/// Membership check for the coefficient filtration.
ValidationReport rees_validate(const FilteredChart& chart, const ReesElement& f);

/// Laurent convolution; the output invariant is re-verified.
ReesElement rees_multiply(const FilteredChart& chart, const ReesElement& f, const ReesElement& g);

/// The element rewritten in deformation-chart variables (lambda, u) with the
/// normal coordinates scaled out: z_c -> lambda^{q_c} u_c, then multiplied by
/// lambda^{-q} per term. The result has no negative lambda powers exactly when
/// the membership invariant holds; otherwise this throws.
Poly rees_deformation_polynomial(const FilteredChart& chart, const ReesElement& f);

/// Point of the deformation-space chart: lambda plus one value per chart
/// coordinate (tangential slots hold y, normal slots hold the scaled ztilde).
struct DeformPoint {
  double lambda = 0.0;
  std::vector<double> coords;
};

/// Evaluation: Laurent evaluation at t = lambda away from lambda = 0, and the
/// scaled-substitution limit on the zero fiber.
double rees_evaluate(const FilteredChart& chart, const ReesElement& f, const DeformPoint& p);

/// ztilde_c = lambda^{-q_c} z_c on normal slots; tangential slots unchanged.
template <typename T>
std::vector<T> zoom(const FilteredChart& chart, const T& lambda, const std::vector<T>& manifold);

/// z_c = lambda^{q_c} ztilde_c; inverse of zoom for lambda != 0.
template <typename T>
std::vector<T> unzoom(const FilteredChart& chart, const T& lambda, const std::vector<T>& fiber);

/// Weighted dilation of fiber coordinates: ztilde_c -> mu^{q_c} ztilde_c.
template <typename T>
std::vector<T> fiber_dilate(const FilteredChart& chart, const T& mu, const std::vector<T>& fiber);

/// Tests E(f) = q f + (H-order >= q+1 remainder) for q = 1..cap on the
/// monomial generating family of each I_q modulo I_{q+1}.
ValidationReport euler_like_check(const FilteredChart& chart, const VectorField& e, int cap);

/// Vector fields on the deformation chart (variable 0 is lambda, variable
/// i+1 is chart coordinate i). T generates the fiber translation flow,
/// C the zoom flow, and E extends the given field; lambda T = C + E exactly.
struct TField {
  FilteredChart chart;
  VectorField t;  // dim n+1
  VectorField c;
  VectorField e;

  static TField build(const FilteredChart& chart, const VectorField& euler_like);
};

struct IntegrateOptions {
  double step = 1e-3;
  double tol = 1e-9;      // Richardson self-check tolerance
  double bounds = 1e6;    // chart box: |coordinate| must stay below
  bool self_check = true;
  std::optional<double> rescale;  // integrate from the dilated start instead
};

struct IntegrateResult {
  DeformPoint endpoint;               // fiber coordinates at lambda_target
  std::vector<double> manifold_point; // unzoomed, when lambda_target != 0
  double self_check_error = 0.0;
  bool self_check_ok = true;          // self_check_error <= tol
  bool domain_exit = false;
  bool step_underflow = false;
};

/// Integrates the T flow from a zero-fiber start to lambda_target with a
/// fixed-step classical fourth-order scheme.
IntegrateResult integrate_tube(const TField& tf, const DeformPoint& start, double lambda_target,
                               const IntegrateOptions& opts = {});

struct TubeTolerances {
  double differential = 1e-6;
  double scaling = 1e-6;
};

struct TubeReport {
  ValidationReport report;
  double differential_residual = 0.0;
  double scaling_residual = 0.0;
  bool brackets_exact = false;
  bool translation_identity_exact = false;
};

/// Three checks: the normal differential of the tubular map at the zero
/// section is the identity per weight block (finite differences), the flow
/// scaling relation on sampled points, and the exact symbolic bracket
/// relations [T,C] = T, [T,E] = 0 together with lambda T = C + E.
TubeReport verify_tube(const FilteredChart& chart, const VectorField& euler_like, int samples,
                       const TubeTolerances& tol = {}, unsigned seed = 12345,
                       const IntegrateOptions& opts = {});

// --- template implementations ---

namespace detail {
template <typename T>
T int_pow(const T& base, int k) {
  T r;
  if constexpr (std::is_same_v<T, Rat>)
    r = Rat(1);
  else
    r = T(1);
  for (int i = 0; i < k; ++i) r *= base;
  return r;
}
}  // namespace detail

template <typename T>
std::vector<T> zoom(const FilteredChart& chart, const T& lambda, const std::vector<T>& manifold) {
  if (lambda == T(0)) throw Error("zoom: lambda must be nonzero");
  if (static_cast<int>(manifold.size()) != chart.dim()) throw Error("zoom: point dimension mismatch");
  std::vector<T> out = manifold;
  for (int c : chart.normal_vars()) out[c] = manifold[c] / detail::int_pow(lambda, chart.weights()[c]);
  return out;
}

template <typename T>
std::vector<T> unzoom(const FilteredChart& chart, const T& lambda, const std::vector<T>& fiber) {
  if (lambda == T(0)) throw Error("unzoom: lambda must be nonzero");
  if (static_cast<int>(fiber.size()) != chart.dim()) throw Error("unzoom: point dimension mismatch");
  std::vector<T> out = fiber;
  for (int c : chart.normal_vars()) out[c] = fiber[c] * detail::int_pow(lambda, chart.weights()[c]);
  return out;
}

template <typename T>
std::vector<T> fiber_dilate(const FilteredChart& chart, const T& mu, const std::vector<T>& fiber) {
  std::vector<T> out = fiber;
  for (int c : chart.normal_vars()) out[c] = fiber[c] * detail::int_pow(mu, chart.weights()[c]);
  return out;
}

}  // namespace carnotkit
