#include "carnotkit/coords.hpp"

#include <algorithm>
#include <sstream>

namespace carnotkit {

namespace {

// Centered coordinate monomials (u - v)^beta of total degree <= cap.
std::vector<Poly> centered_monomials(int n, const RatVec& v, int cap) {
  std::vector<Poly> out;
  WeightVector ones(n, 1);
  for (const Mono& e : multi_indices_up_to(ones, cap)) {
    Poly p = Poly::constant(n, Rat(1));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < e[i]; ++k) p = p * (Poly::variable(n, i) - Poly::constant(n, v[i]));
    out.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<Poly> privileged_coordinates(const FilteredChart& chart, const RatVec& v) {
  chart.require_valid();
  const int n = chart.dim();
  const int r = chart.step();
  if (static_cast<int>(v.size()) != n) throw Error("privileged_coordinates: point dimension mismatch");
  if (!inverse(chart.frame_matrix_at(v)))
    throw Error("privileged_coordinates: frame matrix singular at the point");

  std::vector<Mono> alphas = multi_indices_up_to(chart.weights(), r);
  std::vector<Poly> monos = centered_monomials(n, v, r);

  RatMat m(alphas.size(), RatVec(monos.size()));
  std::span<const Rat> pt(v);
  for (size_t i = 0; i < alphas.size(); ++i)
    for (size_t j = 0; j < monos.size(); ++j)
      m[i][j] = frame_monomial_apply(chart, alphas[i], monos[j]).eval<Rat>(pt);

  RatMat rhs(alphas.size(), RatVec(n, Rat(0)));
  for (size_t i = 0; i < alphas.size(); ++i) {
    int total = 0, which = -1;
    for (int a = 0; a < n; ++a) {
      total += alphas[i][a];
      if (alphas[i][a] == 1) which = a;
    }
    if (total == 1) rhs[i][which] = 1;
  }

  auto sol = solve_many(std::move(m), std::move(rhs));
  if (!sol)
    throw Error("privileged_coordinates: dual linear system is rank-deficient "
                "(frame monomials are not independent at the point)");

  std::vector<Poly> coords(n, Poly::zero(n));
  for (int b = 0; b < n; ++b)
    for (size_t j = 0; j < monos.size(); ++j)
      if ((*sol)[j][b] != 0) coords[b] += monos[j].scale((*sol)[j][b]);

  // Re-verify both defining conditions through the chart operations.
  for (int b = 0; b < n; ++b) {
    if (vanishing_h_order(chart, coords[b], Locus::at(v), r) != chart.weights()[b])
      throw Error("privileged_coordinates: output fails the vanishing-order condition");
    for (int a = 0; a < n; ++a) {
      Rat val = chart.frame_field(a).apply(coords[b]).eval<Rat>(pt);
      if (val != Rat(a == b ? 1 : 0))
        throw Error("privileged_coordinates: output fails the dual-pairing condition");
    }
  }
  return coords;
}

namespace {

using PolyMat = std::vector<std::vector<Poly>>;

// Inverse of a square polynomial matrix as a truncated series around its
// constant part, all entries truncated at weighted degree cap.
std::optional<PolyMat> series_inverse(const PolyMat& b, const WeightVector& w, int cap) {
  const int k = static_cast<int>(b.size());
  const int n = b.empty() ? 0 : b[0][0].dim();
  RatMat b0(k, RatVec(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) b0[i][j] = b[i][j].constant_term();
  auto b0inv = inverse(b0);
  if (!b0inv) return std::nullopt;

  // D = B0^{-1} B - I, entries in the augmentation ideal.
  PolyMat d(k, std::vector<Poly>(k, Poly::zero(n)));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      Poly acc(n);
      for (int l = 0; l < k; ++l) acc += b[l][j].scale((*b0inv)[i][l]);
      if (i == j) acc -= Poly::constant(n, Rat(1));
      d[i][j] = jet_truncate(acc, w, cap);
    }

  // (I + D)^{-1} = sum (-D)^m, truncated.
  PolyMat acc(k, std::vector<Poly>(k, Poly::zero(n)));
  PolyMat power = acc;
  for (int i = 0; i < k; ++i) {
    acc[i][i] = Poly::constant(n, Rat(1));
    power[i][i] = Poly::constant(n, Rat(1));
  }
  for (int m = 1; m <= cap; ++m) {
    PolyMat next(k, std::vector<Poly>(k, Poly::zero(n)));
    bool nonzero = false;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        Poly s(n);
        for (int l = 0; l < k; ++l) s += power[i][l] * d[l][j];
        next[i][j] = jet_truncate(s.scale(Rat(-1)), w, cap);
        if (!next[i][j].is_zero()) nonzero = true;
      }
    power = std::move(next);
    if (!nonzero) break;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) acc[i][j] += power[i][j];
  }
  // Right-multiply by B0^{-1}: (B0 (I + D))^{-1} = (I+D)^{-1} B0^{-1}.
  PolyMat out(k, std::vector<Poly>(k, Poly::zero(n)));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      Poly s(n);
      for (int l = 0; l < k; ++l) s += acc[i][l].scale((*b0inv)[l][j]);
      out[i][j] = s;
    }
  return out;
}

}  // namespace

std::vector<Poly> adapted_coordinates(const FilteredChart& chart) {
  chart.require_valid();
  if (!chart.marked()) throw Error("adapted_coordinates: chart has no marked submanifold");
  const int n = chart.dim();
  const int r = chart.step();
  const auto& normal = chart.normal_vars();
  const auto& w = chart.weights();

  // Normal multi-indices with weighted order in [1, r].
  std::vector<Mono> alphas;
  {
    WeightVector nw(normal.size());
    for (size_t i = 0; i < normal.size(); ++i) nw[i] = w[normal[i]];
    for (const Mono& packed : multi_indices_up_to(nw, r)) {
      Mono full(n, 0);
      int total = 0;
      for (size_t i = 0; i < normal.size(); ++i) {
        full[normal[i]] = packed[i];
        total += packed[i];
      }
      if (total > 0) alphas.push_back(full);
    }
  }
  const size_t k = alphas.size();

  // Candidate polynomials: centered monomials that vanish on M.
  std::vector<Poly> monos;
  for (Poly& p : centered_monomials(n, RatVec(n, Rat(0)), r))
    if (p.restrict_zero(normal).is_zero()) monos.push_back(std::move(p));

  // Point problem at the origin of M.
  RatMat m(k, RatVec(monos.size()));
  RatVec origin(n, Rat(0));
  std::span<const Rat> pt(origin);
  for (size_t i = 0; i < k; ++i)
    for (size_t j = 0; j < monos.size(); ++j)
      m[i][j] = frame_monomial_apply(chart, alphas[i], monos[j]).eval<Rat>(pt);
  RatMat rhs = identity_matrix(static_cast<int>(k));
  auto sol = solve_many(std::move(m), std::move(rhs));
  if (!sol) throw Error("adapted_coordinates: point problem is rank-deficient");

  std::vector<Poly> f(k, Poly::zero(n));
  for (size_t b = 0; b < k; ++b)
    for (size_t j = 0; j < monos.size(); ++j)
      if ((*sol)[j][b] != 0) f[b] += monos[j].scale((*sol)[j][b]);

  auto restricted_row = [&](const Mono& alpha, const Poly& g) {
    return frame_monomial_apply(chart, alpha, g).restrict_zero(normal);
  };

  // Weight-stratified correction: make X^alpha f_beta = delta on all of M.
  for (int t = 1; t <= r; ++t) {
    std::vector<size_t> block;
    for (size_t i = 0; i < k; ++i)
      if (weighted_order(w, alphas[i]) == t) block.push_back(i);
    if (block.empty()) continue;

    // Same-weight block inverse over the ring of tangential polynomials.
    PolyMat b(block.size(), std::vector<Poly>(block.size(), Poly::zero(n)));
    for (size_t i = 0; i < block.size(); ++i)
      for (size_t j = 0; j < block.size(); ++j)
        b[i][j] = restricted_row(alphas[block[i]], f[block[j]]);
    auto c = series_inverse(b, w, r);
    if (!c)
      throw Error("adapted_coordinates: correction matrix is singular at the base point");
    std::vector<Poly> cleaned(block.size(), Poly::zero(n));
    for (size_t j = 0; j < block.size(); ++j) {
      Poly acc(n);
      for (size_t l = 0; l < block.size(); ++l) acc += f[block[l]] * (*c)[l][j];
      cleaned[j] = acc;
    }
    for (size_t j = 0; j < block.size(); ++j) f[block[j]] = cleaned[j];

    // Clear the weight-t rows of every other dual function.
    for (size_t bidx = 0; bidx < k; ++bidx) {
      if (weighted_order(w, alphas[bidx]) == t) continue;
      Poly corr(n);
      for (size_t i = 0; i < block.size(); ++i) {
        Poly res = restricted_row(alphas[block[i]], f[bidx]);
        if (!res.is_zero()) corr += res * f[block[i]];
      }
      f[bidx] -= corr;
    }
  }

  // Output: dual functions of the unit normal indices, in normal-index order.
  std::vector<Poly> out;
  for (int c : normal) {
    Mono unit(n, 0);
    unit[c] = 1;
    auto it = std::find(alphas.begin(), alphas.end(), unit);
    if (it == alphas.end()) throw Error("adapted_coordinates: missing unit index");
    out.push_back(f[it - alphas.begin()]);
  }

  // Exact verification of both defining relations on M.
  for (size_t ci = 0; ci < normal.size(); ++ci) {
    int c = normal[ci];
    if (!vanishes_to_h_order(chart, out[ci], Locus::on_marked(), w[c]))
      throw Error("adapted_coordinates: output fails the vanishing-order condition on M");
    for (size_t di = 0; di < normal.size(); ++di) {
      Poly val = chart.frame_field(normal[di]).apply(out[ci]).restrict_zero(normal);
      Poly expect = di == ci ? Poly::constant(n, Rat(1)) : Poly::zero(n);
      if (!(val == expect))
        throw Error("adapted_coordinates: output fails the dual-pairing condition on M "
                    "(series correction did not terminate)");
    }
  }
  return out;
}

CarnotResult is_carnot(const FilteredChart& chart, const RatVec& v, const std::vector<Poly>& coords) {
  chart.require_valid();
  const int n = chart.dim();
  if (static_cast<int>(coords.size()) != n) throw Error("is_carnot: expected one coordinate per dimension");
  std::span<const Rat> pt(v);
  for (int b = 0; b < n; ++b) {
    if (vanishing_h_order(chart, coords[b], Locus::at(v), chart.step()) != chart.weights()[b])
      throw Error("is_carnot: coordinates are not privileged at the point");
    for (int a = 0; a < n; ++a)
      if (chart.frame_field(a).apply(coords[b]).eval<Rat>(pt) != Rat(a == b ? 1 : 0))
        throw Error("is_carnot: coordinates are not privileged at the point");
  }
  ClassLocus at = ClassLocus::at_point(v);
  for (int a = 0; a < n; ++a) {
    GradedFunction fa = orbit_homomorphism(chart, at, GradedClass{chart.weights()[a], coords[a]});
    Poly witness = fa.value + Poly::variable(n, a);
    if (!witness.is_zero()) return CarnotResult{false, a, witness};
  }
  return CarnotResult{true, -1, Poly::zero(n)};
}

VectorField model_euler_field(const WeightVector& weights, const std::vector<int>& normal_vars) {
  const int n = static_cast<int>(weights.size());
  VectorField e = VectorField::zero(n);
  for (int c : normal_vars) {
    if (c < 0 || c >= n) throw Error("model_euler_field: normal index out of range");
    e.comp[c] = Poly::variable(n, c).scale(Rat(weights[c]));
  }
  return e;
}

}  // namespace carnotkit
