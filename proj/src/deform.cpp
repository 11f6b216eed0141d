#include "carnotkit/deform.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace carnotkit {

bool ReesElement::is_zero() const {
  for (const auto& [q, a] : coeff)
    if (!a.is_zero()) return false;
  return true;
}

ValidationReport rees_validate(const FilteredChart& chart, const ReesElement& f) {
  chart.require_valid();
  if (!chart.marked()) throw Error("rees element: chart has no marked submanifold");
  ValidationReport rep;
  for (const auto& [q, a] : f.coeff) {
    if (a.is_zero()) continue;
    if (a.dim() != chart.dim()) throw Error("rees element: coefficient dimension mismatch");
    if (q <= 0) continue;
    if (!vanishes_to_h_order(chart, a, Locus::on_marked(), q)) {
      std::ostringstream msg;
      msg << "coefficient of t^-" << q << " does not vanish to H-order " << q
          << " on the marked submanifold";
      rep.add("coeff(" + std::to_string(q) + ")", msg.str());
    }
  }
  return rep;
}

ReesElement rees_multiply(const FilteredChart& chart, const ReesElement& f, const ReesElement& g) {
  auto fr = rees_validate(chart, f);
  auto gr = rees_validate(chart, g);
  if (!fr.pass() || !gr.pass()) throw Error("rees_multiply: operand violates the membership invariant");
  ReesElement out;
  for (const auto& [p, a] : f.coeff) {
    for (const auto& [q, b] : g.coeff) {
      if (a.is_zero() || b.is_zero()) continue;
      Poly prod = a * b;
      if (prod.is_zero()) continue;
      auto [it, fresh] = out.coeff.try_emplace(p + q, prod);
      if (!fresh) {
        it->second += prod;
        if (it->second.is_zero()) out.coeff.erase(it);
      }
    }
  }
  auto rep = rees_validate(chart, out);
  if (!rep.pass()) throw Error("rees_multiply: product violates the membership invariant");
  return out;
}

namespace {

// z_c -> lambda^{q_c} u_c into the (lambda, u) ring; variable 0 is lambda.
Poly scale_substitute(const FilteredChart& chart, const Poly& p) {
  const int n = chart.dim();
  Poly out(n + 1);
  std::vector<bool> is_normal(n, false);
  for (int c : chart.normal_vars()) is_normal[c] = true;
  for (const auto& [e, c] : p.terms()) {
    Mono ee(n + 1, 0);
    int lam = 0;
    for (int i = 0; i < n; ++i) {
      ee[i + 1] = e[i];
      if (is_normal[i]) lam += chart.weights()[i] * e[i];
    }
    ee[0] = lam;
    out.add_term(ee, c);
  }
  return out;
}

std::optional<Poly> divide_lambda_power(const Poly& p, int k) {
  Poly out(p.dim());
  for (const auto& [e, c] : p.terms()) {
    if (e[0] < k) return std::nullopt;
    Mono ee = e;
    ee[0] -= k;
    out.add_term(ee, c);
  }
  return out;
}

}  // namespace

Poly rees_deformation_polynomial(const FilteredChart& chart, const ReesElement& f) {
  chart.require_valid();
  if (!chart.marked()) throw Error("rees element: chart has no marked submanifold");
  Poly acc(chart.dim() + 1);
  for (const auto& [q, a] : f.coeff) {
    if (a.is_zero()) continue;
    Poly scaled = scale_substitute(chart, a);
    std::optional<Poly> shifted;
    if (q >= 0) {
      shifted = divide_lambda_power(scaled, q);
    } else {
      // t^{-q} with q < 0 is a positive power of lambda.
      Poly lam = Poly::variable(chart.dim() + 1, 0).pow(-q);
      shifted = scaled * lam;
    }
    if (!shifted)
      throw Error("rees element: coefficient of t^-" + std::to_string(q) +
                  " violates the membership invariant (nonexact division at lambda = 0)");
    acc += *shifted;
  }
  return acc;
}

double rees_evaluate(const FilteredChart& chart, const ReesElement& f, const DeformPoint& p) {
  if (static_cast<int>(p.coords.size()) != chart.dim())
    throw Error("rees_evaluate: point dimension mismatch");
  if (p.lambda != 0.0) {
    // Laurent evaluation at t = lambda on the unzoomed manifold point.
    std::vector<double> manifold = unzoom(chart, p.lambda, p.coords);
    double acc = 0;
    for (const auto& [q, a] : f.coeff)
      acc += a.eval<double>(std::span<const double>(manifold)) * std::pow(p.lambda, -q);
    return acc;
  }
  Poly poly = rees_deformation_polynomial(chart, f);
  std::vector<double> pt(chart.dim() + 1);
  pt[0] = 0.0;
  std::copy(p.coords.begin(), p.coords.end(), pt.begin() + 1);
  return poly.eval<double>(std::span<const double>(pt));
}

ValidationReport euler_like_check(const FilteredChart& chart, const VectorField& e, int cap) {
  chart.require_valid();
  if (!chart.marked()) throw Error("euler_like_check: chart has no marked submanifold");
  if (e.dim() != chart.dim()) throw Error("euler_like_check: field dimension mismatch");
  if (cap < 1) throw Error("euler_like_check: cap must be at least 1");
  ValidationReport rep;
  const int n = chart.dim();
  const int r = chart.step();
  const auto& normal = chart.normal_vars();
  const auto tangential = chart.tangential_vars();
  const auto& w = chart.weights();

  WeightVector nw(normal.size());
  for (size_t i = 0; i < normal.size(); ++i) nw[i] = w[normal[i]];

  for (int q = 1; q <= cap; ++q) {
    // Generators of I_q mod I_{q+1}: z^beta of weighted degree exactly q
    // times tangential monomials up to total degree r.
    std::vector<Mono> betas;
    for (const Mono& packed : multi_indices_up_to(nw, q))
      if (weighted_order(nw, packed) == q) betas.push_back(packed);
    WeightVector ones(tangential.size(), 1);
    std::vector<Mono> gammas = multi_indices_up_to(ones, r);

    for (const Mono& beta : betas) {
      for (const Mono& gamma : gammas) {
        Mono exps(n, 0);
        for (size_t i = 0; i < normal.size(); ++i) exps[normal[i]] = beta[i];
        for (size_t i = 0; i < tangential.size(); ++i) exps[tangential[i]] = gamma[i];
        Poly gen = Poly::monomial(n, exps, Rat(1));
        Poly residual = e.apply(gen) - gen.scale(Rat(q));
        if (!vanishes_to_h_order(chart, residual, Locus::on_marked(), q + 1)) {
          int got = vanishing_h_order(chart, residual, Locus::on_marked(), q + 1);
          std::ostringstream msg;
          msg << "generator " << gen.str() << " of weight " << q
              << ": residual E(f) - q f has H-order " << got << " < " << q + 1 << " on M";
          rep.add("q=" + std::to_string(q), msg.str());
        }
      }
    }
  }
  return rep;
}

TField TField::build(const FilteredChart& chart, const VectorField& euler_like) {
  chart.require_valid();
  auto check = euler_like_check(chart, euler_like, chart.step());
  if (!check.pass())
    throw Error("t-field: the field is not Euler-like: " + check.violations.front().message);
  const int n = chart.dim();
  const auto& w = chart.weights();

  VectorField t = VectorField::zero(n + 1);
  VectorField c = VectorField::zero(n + 1);
  VectorField e = VectorField::zero(n + 1);
  t.comp[0] = Poly::constant(n + 1, Rat(1));
  c.comp[0] = Poly::variable(n + 1, 0);

  std::vector<bool> is_normal(n, false);
  for (int idx : chart.normal_vars()) is_normal[idx] = true;

  for (int i = 0; i < n; ++i) {
    Poly scaled = scale_substitute(chart, euler_like.comp[i]);
    if (is_normal[i]) {
      Poly ztil = Poly::variable(n + 1, i + 1);
      auto ecomp = divide_lambda_power(scaled, w[i]);
      if (!ecomp)
        throw Error("t-field: component " + std::to_string(i + 1) +
                    " is not divisible by lambda^" + std::to_string(w[i]));
      e.comp[i + 1] = *ecomp;
      c.comp[i + 1] = ztil.scale(Rat(-w[i]));
      auto tcomp = divide_lambda_power(scaled - Poly::variable(n + 1, i + 1).scale(Rat(w[i])) *
                                                    Poly::variable(n + 1, 0).pow(w[i]),
                                       w[i] + 1);
      if (!tcomp)
        throw Error("t-field: residual of component " + std::to_string(i + 1) +
                    " is not divisible by lambda^" + std::to_string(w[i] + 1));
      t.comp[i + 1] = *tcomp;
    } else {
      auto tcomp = divide_lambda_power(scaled, 1);
      if (!tcomp)
        throw Error("t-field: tangential component " + std::to_string(i + 1) +
                    " does not vanish on the marked submanifold");
      t.comp[i + 1] = *tcomp;
      e.comp[i + 1] = scaled;
    }
  }

  // lambda T = C + E must hold on the nose.
  Poly lam = Poly::variable(n + 1, 0);
  for (int i = 0; i <= n; ++i)
    if (!(lam * t.comp[i] == c.comp[i] + e.comp[i]))
      throw Error("t-field: translation identity failed (internal error)");
  return TField{chart, std::move(t), std::move(c), std::move(e)};
}

namespace {

std::vector<double> eval_field(const VectorField& f, const std::vector<double>& state) {
  std::vector<double> out(f.dim());
  std::span<const double> pt(state);
  for (int i = 0; i < f.dim(); ++i) out[i] = f.comp[i].eval<double>(pt);
  return out;
}

struct RawResult {
  std::vector<double> state;
  bool domain_exit = false;
  bool step_underflow = false;
};

RawResult rk4_integrate(const VectorField& t, std::vector<double> state, double s0, double s1,
                        double step, double bounds) {
  RawResult res;
  if (step <= 0) throw Error("integrate: step must be positive");
  double span_len = s1 - s0;
  if (span_len <= 0) throw Error("integrate: lambda target must exceed the start");
  long nsteps = static_cast<long>(std::ceil(span_len / step));
  if (nsteps < 1) nsteps = 1;
  if (nsteps > 100000000L) {
    res.step_underflow = true;
    res.state = std::move(state);
    return res;
  }
  double h = span_len / static_cast<double>(nsteps);
  std::vector<double> k1, k2, k3, k4, tmp(state.size());
  for (long i = 0; i < nsteps; ++i) {
    k1 = eval_field(t, state);
    for (size_t j = 0; j < state.size(); ++j) tmp[j] = state[j] + 0.5 * h * k1[j];
    k2 = eval_field(t, tmp);
    for (size_t j = 0; j < state.size(); ++j) tmp[j] = state[j] + 0.5 * h * k2[j];
    k3 = eval_field(t, tmp);
    for (size_t j = 0; j < state.size(); ++j) tmp[j] = state[j] + h * k3[j];
    k4 = eval_field(t, tmp);
    for (size_t j = 0; j < state.size(); ++j)
      state[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
    for (double x : state)
      if (!std::isfinite(x) || std::abs(x) > bounds) {
        res.domain_exit = true;
        res.state = std::move(state);
        return res;
      }
  }
  res.state = std::move(state);
  return res;
}

}  // namespace

IntegrateResult integrate_tube(const TField& tf, const DeformPoint& start, double lambda_target,
                               const IntegrateOptions& opts) {
  const int n = tf.chart.dim();
  if (static_cast<int>(start.coords.size()) != n) throw Error("integrate_tube: start dimension mismatch");

  DeformPoint from = start;
  double target = lambda_target;
  if (opts.rescale) {
    // phi_{lt}(X) = phi_{lt/mu}(dilated X): trade start size for interval.
    double mu = *opts.rescale;
    if (mu <= 0) throw Error("integrate_tube: rescale factor must be positive");
    from.coords = fiber_dilate(tf.chart, mu, from.coords);
    target = lambda_target / mu;
  }

  std::vector<double> state(n + 1);
  state[0] = from.lambda;
  std::copy(from.coords.begin(), from.coords.end(), state.begin() + 1);

  IntegrateResult out;
  RawResult raw = rk4_integrate(tf.t, state, from.lambda, target, opts.step, opts.bounds);
  out.domain_exit = raw.domain_exit;
  out.step_underflow = raw.step_underflow;
  if (opts.self_check && !raw.domain_exit && !raw.step_underflow) {
    RawResult fine = rk4_integrate(tf.t, state, from.lambda, target, opts.step / 10.0, opts.bounds);
    double err = 0;
    // The lambda slot integrates a constant and is pinned to the target below.
    for (size_t j = 1; j < raw.state.size(); ++j)
      err = std::max(err, std::abs(raw.state[j] - fine.state[j]));
    out.self_check_error = err;
    out.self_check_ok = err <= opts.tol;
  }

  DeformPoint end;
  end.lambda = raw.domain_exit || raw.step_underflow ? raw.state[0] : target;
  end.coords.assign(raw.state.begin() + 1, raw.state.end());
  if (opts.rescale && !raw.domain_exit && !raw.step_underflow) {
    // Map back to the requested fiber.
    std::vector<double> manifold = unzoom(tf.chart, target, end.coords);
    end.coords = zoom(tf.chart, lambda_target, manifold);
    end.lambda = lambda_target;
  }
  out.endpoint = end;
  if (lambda_target != 0.0 && !out.domain_exit && !out.step_underflow)
    out.manifold_point = unzoom(tf.chart, lambda_target, out.endpoint.coords);
  return out;
}

TubeReport verify_tube(const FilteredChart& chart, const VectorField& euler_like, int samples,
                       const TubeTolerances& tol, unsigned seed, const IntegrateOptions& opts) {
  TubeReport out;
  TField tf = TField::build(chart, euler_like);
  const int n = chart.dim();
  const auto& normal = chart.normal_vars();

  // (c) exact symbolic bracket relations on the deformation chart.
  {
    VectorField tc = lie_bracket(tf.t, tf.c);
    VectorField te = lie_bracket(tf.t, tf.e);
    out.brackets_exact = (tc == tf.t) && te == VectorField::zero(n + 1);
    if (!out.brackets_exact) out.report.add("brackets", "[T,C] = T or [T,E] = 0 fails symbolically");
    Poly lam = Poly::variable(n + 1, 0);
    out.translation_identity_exact = true;
    for (int i = 0; i <= n; ++i)
      if (!(lam * tf.t.comp[i] == tf.c.comp[i] + tf.e.comp[i])) out.translation_identity_exact = false;
    if (!out.translation_identity_exact)
      out.report.add("translation", "lambda T = C + E fails symbolically");
  }

  const double s = 0.5;

  // (a) finite-difference normal differential at the zero section.
  {
    const double h = 1e-4;
    double resid = 0;
    for (size_t ci = 0; ci < normal.size(); ++ci) {
      DeformPoint plus{0.0, std::vector<double>(n, 0.0)};
      DeformPoint minus{0.0, std::vector<double>(n, 0.0)};
      plus.coords[normal[ci]] = h;
      minus.coords[normal[ci]] = -h;
      auto rp = integrate_tube(tf, plus, s, opts);
      auto rm = integrate_tube(tf, minus, s, opts);
      if (rp.domain_exit || rm.domain_exit) {
        out.report.add("differential", "trajectory left the chart box");
        break;
      }
      for (size_t di = 0; di < normal.size(); ++di) {
        double d = (rp.endpoint.coords[normal[di]] - rm.endpoint.coords[normal[di]]) / (2 * h);
        double expect = ci == di ? 1.0 : 0.0;
        resid = std::max(resid, std::abs(d - expect));
      }
    }
    out.differential_residual = resid;
    if (resid > tol.differential) {
      std::ostringstream msg;
      msg << "normal differential deviates from the identity by " << resid;
      out.report.add("differential", msg.str());
    }
  }

  // (b) scaling relation phi_{mu s}(X) = phi_s(dilated X) on sampled points.
  {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double resid = 0;
    for (int trial = 0; trial < samples; ++trial) {
      DeformPoint x{0.0, std::vector<double>(n, 0.0)};
      for (int i = 0; i < n; ++i) x.coords[i] = 0.5 * unit(rng);
      double mu = trial % 2 == 0 ? 2.0 : 0.5;
      auto lhs = integrate_tube(tf, x, mu * s, opts);
      DeformPoint dil{0.0, fiber_dilate(chart, mu, x.coords)};
      auto rhs = integrate_tube(tf, dil, s, opts);
      if (lhs.domain_exit || rhs.domain_exit) {
        out.report.add("scaling", "trajectory left the chart box");
        break;
      }
      for (int i = 0; i < n; ++i)
        resid = std::max(resid, std::abs(lhs.manifold_point[i] - rhs.manifold_point[i]));
    }
    out.scaling_residual = resid;
    if (resid > tol.scaling) {
      std::ostringstream msg;
      msg << "scaling relation residual " << resid;
      out.report.add("scaling", msg.str());
    }
  }

  return out;
}

}  // namespace carnotkit
