#include "carnotkit/groupoid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "carnotkit/coords.hpp"

namespace carnotkit {

namespace {

// Push fields through the coordinate change new = F(old), old = G(new).
std::vector<VectorField> change_coordinates(const std::vector<VectorField>& fields,
                                            const std::vector<Poly>& forward,
                                            const std::vector<Poly>& inverse) {
  std::vector<VectorField> out;
  out.reserve(fields.size());
  for (const auto& x : fields) {
    std::vector<Poly> comp;
    comp.reserve(forward.size());
    for (const auto& f : forward) comp.push_back(x.apply(f).substitute(inverse));
    out.push_back(VectorField{std::move(comp)});
  }
  return out;
}

std::vector<Poly> compose_maps(const std::vector<Poly>& outer, const std::vector<Poly>& inner) {
  std::vector<Poly> out;
  out.reserve(outer.size());
  for (const auto& f : outer) out.push_back(f.substitute(inner));
  return out;
}

}  // namespace

DoubledChart build_doubled_chart(const FilteredChart& base) {
  base.require_valid();
  if (base.marked()) throw Error("doubled chart: base chart must be unmarked");
  const int n = base.dim();
  const int m = 2 * n;
  const int r = base.step();
  const auto& w = base.weights();

  // Slot layout: per weight block, diagonal (tangential) fields first.
  std::vector<int> tangential_slot(n, -1), normal_slot(n, -1);
  {
    int slot = 0;
    for (int q = 1; q <= r; ++q) {
      for (int i = 0; i < n; ++i)
        if (w[i] == q) tangential_slot[i] = slot++;
      for (int i = 0; i < n; ++i)
        if (w[i] == q) normal_slot[i] = slot++;
    }
  }
  std::vector<int> ranks;
  for (int q = 1; q <= r; ++q) ranks.push_back(2 * base.ranks()[q - 1]);

  // Fields on the square, in (u, u') variables.
  auto lift_first = [&](const Poly& p) {
    Poly out(m);
    for (const auto& [e, c] : p.terms()) {
      Mono ee(m, 0);
      std::copy(e.begin(), e.end(), ee.begin());
      out.add_term(ee, c);
    }
    return out;
  };
  auto lift_second = [&](const Poly& p) {
    Poly out(m);
    for (const auto& [e, c] : p.terms()) {
      Mono ee(m, 0);
      std::copy(e.begin(), e.end(), ee.begin() + n);
      out.add_term(ee, c);
    }
    return out;
  };
  std::vector<VectorField> diagonal(n), second(n);
  for (int i = 0; i < n; ++i) {
    std::vector<Poly> dcomp(m, Poly::zero(m)), scomp(m, Poly::zero(m));
    for (int j = 0; j < n; ++j) {
      dcomp[j] = lift_first(base.frame_field(i).comp[j]);
      dcomp[n + j] = lift_second(base.frame_field(i).comp[j]);
      scomp[n + j] = lift_second(base.frame_field(i).comp[j]);
    }
    diagonal[i] = VectorField{std::move(dcomp)};
    second[i] = VectorField{std::move(scomp)};
  }

  // Stage 1: (u, u') -> slots with differences d_i = u'_i - u_i.
  std::vector<Poly> fwd1(m, Poly::zero(m)), inv1(m, Poly::zero(m));
  for (int i = 0; i < n; ++i) {
    fwd1[tangential_slot[i]] = Poly::variable(m, i);
    fwd1[normal_slot[i]] = Poly::variable(m, n + i) - Poly::variable(m, i);
    inv1[i] = Poly::variable(m, tangential_slot[i]);
    inv1[n + i] = Poly::variable(m, tangential_slot[i]) + Poly::variable(m, normal_slot[i]);
  }
  std::vector<VectorField> frame1(m);
  {
    std::vector<VectorField> all;
    all.reserve(m);
    for (int i = 0; i < n; ++i) all.push_back(diagonal[i]);
    for (int i = 0; i < n; ++i) all.push_back(second[i]);
    auto moved = change_coordinates(all, fwd1, inv1);
    for (int i = 0; i < n; ++i) {
      frame1[tangential_slot[i]] = moved[i];
      frame1[normal_slot[i]] = moved[n + i];
    }
  }
  std::vector<int> normals;
  for (int i = 0; i < n; ++i) normals.push_back(normal_slot[i]);
  std::sort(normals.begin(), normals.end());
  FilteredChart stage1(m, ranks, frame1, normals);
  stage1.require_valid();

  // Stage 2: correct the difference coordinates to adapted ones.
  std::vector<Poly> adapted = adapted_coordinates(stage1);
  std::vector<Poly> fwd2(m, Poly::zero(m)), inv2(m, Poly::zero(m));
  for (int s = 0; s < m; ++s) fwd2[s] = Poly::variable(m, s);
  for (size_t k = 0; k < normals.size(); ++k) fwd2[normals[k]] = adapted[k];
  // Invert by weight recursion: the correction terms raise weight.
  for (int s = 0; s < m; ++s) inv2[s] = Poly::variable(m, s);
  for (int iter = 0; iter <= r + 1; ++iter) {
    std::vector<Poly> next = inv2;
    for (size_t k = 0; k < normals.size(); ++k) {
      int s = normals[k];
      Poly corr = adapted[k] - Poly::variable(m, s);       // in stage-1 coordinates
      next[s] = Poly::variable(m, s) - corr.substitute(inv2);
    }
    if (next == inv2) break;
    inv2 = std::move(next);
  }
  // The inverse must be exact.
  {
    auto check = compose_maps(fwd2, inv2);
    for (int s = 0; s < m; ++s)
      if (!(check[s] == Poly::variable(m, s)))
        throw Error("doubled chart: adapted coordinate change is not polynomially invertible");
  }

  FilteredChart final_chart(m, ranks, change_coordinates(frame1, fwd2, inv2), normals);
  final_chart.require_valid();

  return DoubledChart{std::move(final_chart), std::move(tangential_slot), std::move(normal_slot),
                      compose_maps(fwd2, fwd1), compose_maps(inv1, inv2)};
}

TGElement TGElement::arrow(Rat lambda, RatVec p, RatVec q) {
  if (lambda == 0) throw Error("tangent groupoid: arrows at level zero are fiber elements");
  TGElement g;
  g.lambda = std::move(lambda);
  g.p = std::move(p);
  g.q = std::move(q);
  return g;
}

TGElement TGElement::fiber(RatVec m, GroupElement xi) {
  TGElement g;
  g.lambda = 0;
  g.m = std::move(m);
  g.xi = std::move(xi);
  return g;
}

TangentGroupoid::TangentGroupoid(FilteredChart base)
    : base_(std::move(base)), doubled_(build_doubled_chart(base_)) {}

TGElement TangentGroupoid::unit(const RatVec& m, const Rat& lambda) const {
  if (lambda == 0) return TGElement::fiber(m, GroupElement(base_.dim(), Rat(0)));
  return TGElement::arrow(lambda, m, m);
}

TGElement TangentGroupoid::inverse(const TGElement& g) const {
  if (g.zero_fiber()) {
    GroupElement neg = g.xi;
    for (auto& x : neg) x = -x;
    return TGElement::fiber(g.m, std::move(neg));
  }
  return TGElement::arrow(g.lambda, g.q, g.p);
}

std::pair<RatVec, Rat> TangentGroupoid::source(const TGElement& g) const {
  if (g.zero_fiber()) return {g.m, Rat(0)};
  return {g.q, g.lambda};
}

std::pair<RatVec, Rat> TangentGroupoid::target(const TGElement& g) const {
  if (g.zero_fiber()) return {g.m, Rat(0)};
  return {g.p, g.lambda};
}

TGElement TangentGroupoid::compose(const TGElement& g, const TGElement& h) const {
  if (g.lambda != h.lambda) throw Error("tangent groupoid: level mismatch");
  if (g.zero_fiber()) {
    if (g.m != h.m) throw Error("tangent groupoid: fiber elements over different base points");
    auto algebra = osculating_algebra(base_, g.m);
    return TGElement::fiber(g.m, bch_multiply(algebra, g.xi, h.xi));
  }
  if (g.q != h.p) throw Error("tangent groupoid: arrows are not composable");
  return TGElement::arrow(g.lambda, g.p, h.q);
}

RatVec TangentGroupoid::doubled_coords(const RatVec& first, const RatVec& second) const {
  const int n = base_.dim();
  RatVec both(2 * n);
  std::copy(first.begin(), first.end(), both.begin());
  std::copy(second.begin(), second.end(), both.begin() + n);
  RatVec out(2 * n);
  std::span<const Rat> pt(both);
  for (int s = 0; s < 2 * n; ++s) out[s] = doubled_.to_doubled[s].eval<Rat>(pt);
  return out;
}

std::pair<RatVec, RatVec> TangentGroupoid::split_pair(const RatVec& doubled) const {
  const int n = base_.dim();
  RatVec first(n), second(n);
  std::span<const Rat> pt(doubled);
  for (int i = 0; i < n; ++i) {
    first[i] = doubled_.from_doubled[i].eval<Rat>(pt);
    second[i] = doubled_.from_doubled[n + i].eval<Rat>(pt);
  }
  return {first, second};
}

std::vector<Poly> TangentGroupoid::fiber_transport(const RatVec& m) const {
  const int n = base_.dim();
  RatVec vd = doubled_coords(m, m);
  ClassLocus at{Locus::on_marked(), vd};
  // Group coordinates of (exp chi, e): chi along the diagonal block, -chi
  // along the second-factor block.
  std::vector<Poly> repl(2 * n, Poly::zero(n));
  for (int i = 0; i < n; ++i) {
    repl[doubled_.tangential_slot[i]] = Poly::variable(n, i);
    repl[doubled_.normal_slot[i]] = -Poly::variable(n, i);
  }
  std::vector<Poly> transport;
  transport.reserve(n);
  for (int i = 0; i < n; ++i) {
    int slot = doubled_.normal_slot[i];
    GradedClass cls{doubled_.chart.weights()[slot], Poly::variable(2 * n, slot)};
    GradedFunction f = orbit_homomorphism(doubled_.chart, at, cls);
    transport.push_back(f.value.substitute(repl));
  }
  return transport;
}

GroupElement TangentGroupoid::fiber_transport_inverse(const RatVec& m, const RatVec& ztilde) const {
  const int n = base_.dim();
  auto transport = fiber_transport(m);
  GroupElement chi = ztilde;
  for (int iter = 0; iter <= base_.step() + 1; ++iter) {
    GroupElement next(n);
    std::span<const Rat> pt(chi);
    for (int i = 0; i < n; ++i) next[i] = ztilde[i] - (transport[i].eval<Rat>(pt) - chi[i]);
    if (next == chi) break;
    chi = std::move(next);
  }
  std::span<const Rat> pt(chi);
  for (int i = 0; i < n; ++i)
    if (transport[i].eval<Rat>(pt) != ztilde[i])
      throw Error("fiber transport inversion failed (map is not weight-triangular)");
  return chi;
}

ConvergenceReport TangentGroupoid::convergence_test(const RatVec& m, const GroupElement& xi,
                                                    const GroupElement& eta,
                                                    const std::vector<Rat>& lambdas,
                                                    double bounds) const {
  const int n = base_.dim();
  auto algebra = osculating_algebra(base_, m);
  GroupElement reference = bch_multiply(algebra, xi, eta);
  auto transport = fiber_transport(m);

  auto embed_fiber = [&](const GroupElement& chi) {
    std::span<const Rat> pt(chi);
    RatVec zt(n);
    for (int i = 0; i < n; ++i) zt[i] = transport[i].eval<Rat>(pt);
    return zt;
  };
  GroupElement neg_xi = xi;
  for (auto& x : neg_xi) x = -x;
  RatVec zt_eta = embed_fiber(eta);
  RatVec zt_negxi = embed_fiber(neg_xi);

  ConvergenceReport rep;
  bool all_zero = true;
  for (const Rat& lam : lambdas) {
    ConvergencePoint cp;
    cp.lambda = lam;
    // Arrow with target m embedding eta: fiber coords held at transport(eta).
    RatVec fiber_b(2 * n, Rat(0));
    RatVec fiber_a(2 * n, Rat(0));
    for (int i = 0; i < n; ++i) {
      fiber_b[doubled_.tangential_slot[i]] = m[i];
      fiber_a[doubled_.tangential_slot[i]] = m[i];
    }
    for (int i = 0; i < n; ++i) {
      int s = doubled_.normal_slot[i];
      Rat scale = detail::int_pow(lam, doubled_.chart.weights()[s]);
      fiber_b[s] = scale * zt_eta[i];
      fiber_a[s] = scale * zt_negxi[i];
    }
    auto [bp, bq] = split_pair(fiber_b);  // (m, q_eta)
    auto [ap, aq] = split_pair(fiber_a);  // (m, q_{-xi})
    TGElement b = TGElement::arrow(lam, bp, bq);
    TGElement a = inverse(TGElement::arrow(lam, ap, aq));  // (q_{-xi}, m)
    TGElement c = compose(a, b);

    bool exit = false;
    for (const Rat& x : c.p)
      if (std::abs(to_double(x)) > bounds) exit = true;
    for (const Rat& x : c.q)
      if (std::abs(to_double(x)) > bounds) exit = true;
    if (exit) {
      cp.domain_exit = true;
      all_zero = false;
      rep.points.push_back(cp);
      continue;
    }

    RatVec dc = doubled_coords(c.p, c.q);
    RatVec zt_c(n);
    for (int i = 0; i < n; ++i) {
      int s = doubled_.normal_slot[i];
      zt_c[i] = dc[s] / detail::int_pow(lam, doubled_.chart.weights()[s]);
    }
    GroupElement recovered = fiber_transport_inverse(m, zt_c);
    Rat err(0);
    for (int i = 0; i < n; ++i) {
      Rat d = recovered[i] - reference[i];
      if (d < 0) d = -d;
      if (d > err) err = d;
    }
    cp.error_exact = err;
    cp.error = to_double(err);
    if (err != 0) all_zero = false;
    rep.points.push_back(cp);
  }
  rep.exact_zero = all_zero && !rep.points.empty();

  // Least-squares slope of log e against log lambda on the nonzero tail.
  std::vector<std::pair<double, double>> pts;
  for (const auto& cp : rep.points)
    if (!cp.domain_exit && cp.error > 0) pts.emplace_back(std::log(to_double(cp.lambda)), std::log(cp.error));
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double k = static_cast<double>(pts.size());
    double denom = k * sxx - sx * sx;
    if (denom != 0) rep.fitted_order = (k * sxy - sx * sy) / denom;
  }
  return rep;
}

std::vector<Rat> default_lambda_sequence() {
  std::vector<Rat> out;
  Rat lam(1, 2);
  for (int i = 0; i < 10; ++i) {
    out.push_back(lam);
    lam /= 2;
  }
  return out;
}

}  // namespace carnotkit
