#include "carnotkit/nilpotent.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>

namespace carnotkit {

GradedNilpotentLieAlgebra::GradedNilpotentLieAlgebra(
    WeightVector weights, std::map<std::pair<int, int>, std::map<int, Rat>> brackets)
    : weights_(std::move(weights)) {
  for (int q : weights_)
    if (q < 1) throw Error("lie algebra: weights must be positive");
  for (auto& [ab, coeffs] : brackets) {
    auto [a, b] = ab;
    if (a < 0 || b < 0 || a >= dim() || b >= dim()) throw Error("lie algebra: basis index out of range");
    if (a == b) {
      for (auto& [c, v] : coeffs)
        if (v != 0) throw Error("lie algebra: [e_a, e_a] must vanish");
      continue;
    }
    std::map<int, Rat> clean;
    for (auto& [c, v] : coeffs) {
      if (v == 0) continue;
      if (c < 0 || c >= dim()) throw Error("lie algebra: bracket target out of range");
      clean[c] = v;
    }
    if (clean.empty()) continue;
    if (a < b) {
      auto [it, fresh] = brackets_.try_emplace(std::make_pair(a, b), clean);
      if (!fresh) {
        for (auto& [c, v] : clean)
          if (it->second.count(c) == 0 || it->second[c] != v)
            throw Error("lie algebra: inconsistent duplicate bracket entry");
      }
    } else {
      std::map<int, Rat> neg;
      for (auto& [c, v] : clean) neg[c] = -v;
      auto [it, fresh] = brackets_.try_emplace(std::make_pair(b, a), neg);
      if (!fresh) {
        for (auto& [c, v] : neg)
          if (it->second.count(c) == 0 || it->second[c] != v)
            throw Error("lie algebra: bracket entries violate antisymmetry");
      }
    }
  }
}

int GradedNilpotentLieAlgebra::step() const {
  int s = 1;
  for (int q : weights_) s = std::max(s, q);
  return s;
}

std::map<int, Rat> GradedNilpotentLieAlgebra::bracket_of_basis(int a, int b) const {
  if (a == b) return {};
  bool flip = a > b;
  auto it = brackets_.find(flip ? std::make_pair(b, a) : std::make_pair(a, b));
  if (it == brackets_.end()) return {};
  if (!flip) return it->second;
  std::map<int, Rat> neg;
  for (const auto& [c, v] : it->second) neg[c] = -v;
  return neg;
}

RatVec GradedNilpotentLieAlgebra::bracket(const RatVec& x, const RatVec& y) const {
  if (static_cast<int>(x.size()) != dim() || static_cast<int>(y.size()) != dim())
    throw Error("lie algebra bracket: vector length mismatch");
  RatVec r(dim(), Rat(0));
  for (const auto& [ab, coeffs] : brackets_) {
    auto [a, b] = ab;
    Rat factor = x[a] * y[b] - x[b] * y[a];
    if (factor == 0) continue;
    for (const auto& [c, v] : coeffs) r[c] += factor * v;
  }
  return r;
}

ValidationReport GradedNilpotentLieAlgebra::check() const {
  ValidationReport rep;
  const int n = dim();
  for (const auto& [ab, coeffs] : brackets_) {
    auto [a, b] = ab;
    for (const auto& [c, v] : coeffs) {
      if (v == 0) continue;
      if (weights_[c] != weights_[a] + weights_[b]) {
        std::ostringstream msg;
        msg << "[e" << (a + 1) << ",e" << (b + 1) << "] hits e" << (c + 1) << " of weight "
            << weights_[c] << " != " << weights_[a] + weights_[b];
        rep.add("grading", msg.str());
      }
    }
  }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c) {
        RatVec ea(n, Rat(0)), eb(n, Rat(0)), ec(n, Rat(0));
        ea[a] = 1;
        eb[b] = 1;
        ec[c] = 1;
        RatVec s1 = bracket(bracket(ea, eb), ec);
        RatVec s2 = bracket(bracket(eb, ec), ea);
        RatVec s3 = bracket(bracket(ec, ea), eb);
        for (int i = 0; i < n; ++i) {
          if (s1[i] + s2[i] + s3[i] != 0) {
            std::ostringstream msg;
            msg << "Jacobi fails on (e" << (a + 1) << ",e" << (b + 1) << ",e" << (c + 1) << ")";
            rep.add("jacobi", msg.str());
            break;
          }
        }
      }
  return rep;
}

namespace {

void dynkin_fill(int depth, std::vector<DynkinTerm>& out) {
  // Sequences (p_1,q_1)..(p_k,q_k) with p_i + q_i >= 1 and total length
  // m <= depth; coefficient (-1)^{k-1} / (k * m * prod p_i! q_i!); the word
  // is X^{p_1} Y^{q_1} ... X^{p_k} Y^{q_k}, bracketed right-nested.
  std::vector<std::pair<int, int>> pairs;
  auto emit = [&out, &pairs](int m) {
    int k = static_cast<int>(pairs.size());
    Int denom = Int(k) * Int(m);
    std::vector<int> word;
    for (auto [p, q] : pairs) {
      denom *= factorial(p) * factorial(q);
      word.insert(word.end(), p, 0);
      word.insert(word.end(), q, 1);
    }
    Rat coeff = Rat(Int((k - 1) % 2 == 0 ? 1 : -1), denom);
    out.push_back({std::move(word), coeff});
  };
  std::function<void(int)> rec = [&](int used) {
    if (!pairs.empty()) emit(used);
    if (used >= depth) return;
    for (int add = 1; used + add <= depth; ++add)
      for (int p = 0; p <= add; ++p) {
        pairs.emplace_back(p, add - p);
        rec(used + add);
        pairs.pop_back();
      }
  };
  rec(0);
}

}  // namespace

const std::vector<DynkinTerm>& dynkin_terms(int depth) {
  if (depth < 1 || depth > 6) throw Error("bch: supported steps are 1..6");
  static std::mutex mu;
  static std::map<int, std::vector<DynkinTerm>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(depth);
  if (it == cache.end()) {
    std::vector<DynkinTerm> terms;
    dynkin_fill(depth, terms);
    it = cache.emplace(depth, std::move(terms)).first;
  }
  return it->second;
}

GroupElement bch_multiply(const GradedNilpotentLieAlgebra& l, const GroupElement& x,
                          const GroupElement& y) {
  const int n = l.dim();
  if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
    throw Error("bch: element length mismatch");
  GroupElement acc(n, Rat(0));
  for (const auto& term : dynkin_terms(l.step())) {
    const auto& w = term.word;
    RatVec cur = w.back() == 0 ? x : y;
    bool zero = false;
    for (int i = static_cast<int>(w.size()) - 2; i >= 0; --i) {
      cur = l.bracket(w[i] == 0 ? x : y, cur);
      zero = std::all_of(cur.begin(), cur.end(), [](const Rat& v) { return v == 0; });
      if (zero) break;
    }
    if (zero) continue;
    for (int i = 0; i < n; ++i) acc[i] += term.coeff * cur[i];
  }
  return acc;
}

GroupElement dilate(const GradedNilpotentLieAlgebra& l, const Rat& lambda, const GroupElement& x) {
  GroupElement r = x;
  for (int i = 0; i < l.dim(); ++i) {
    Rat f = 1;
    for (int k = 0; k < l.weights()[i]; ++k) f *= lambda;
    r[i] *= f;
  }
  return r;
}

GradedNilpotentLieAlgebra osculating_algebra(const FilteredChart& chart, const RatVec& v) {
  chart.require_valid();
  const int n = chart.dim();
  RatMat fm = chart.frame_matrix_at(v);
  auto inv = inverse(fm);
  if (!inv) throw Error("osculating_algebra: frame matrix singular at the point");
  std::map<std::pair<int, int>, std::map<int, Rat>> brackets;
  std::span<const Rat> pt(v);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      VectorField br = lie_bracket(chart.frame_field(a), chart.frame_field(b));
      RatVec bv(n);
      for (int i = 0; i < n; ++i) bv[i] = br.comp[i].eval<Rat>(pt);
      RatVec coeffs = mat_vec(*inv, bv);
      std::map<int, Rat> keep;
      for (int c = 0; c < n; ++c) {
        if (coeffs[c] == 0) continue;
        if (chart.weights()[c] == chart.weights()[a] + chart.weights()[b]) keep[c] = coeffs[c];
      }
      if (!keep.empty()) brackets[std::make_pair(a, b)] = std::move(keep);
    }
  }
  GradedNilpotentLieAlgebra l(chart.weights(), std::move(brackets));
  auto rep = l.check();
  if (!rep.pass())
    throw Error("osculating_algebra: structure constants fail validation: " +
                rep.violations.front().message);
  return l;
}

bool GradedElement::is_zero() const {
  for (const auto& [g, p] : parts)
    if (!p.is_zero()) return false;
  return true;
}

void GradedElement::add(int grade, const Poly& p) {
  if (p.is_zero() || grade < 0) return;
  auto [it, fresh] = parts.try_emplace(grade, p);
  if (!fresh) {
    it->second += p;
    if (it->second.is_zero()) parts.erase(it);
  }
}

ClassLocus ClassLocus::on_marked(const FilteredChart& chart) {
  if (!chart.marked()) throw Error("class locus: chart has no marked submanifold");
  return {Locus::on_marked(), RatVec(chart.dim(), Rat(0))};
}

namespace {

void check_class(const FilteredChart& chart, const ClassLocus& at, const GradedClass& a) {
  if (a.grade < 0) throw Error("graded class: negative grade");
  if (a.rep.dim() != chart.dim()) throw Error("graded class: representative dimension mismatch");
  if (a.grade == 0) return;
  if (!vanishes_to_h_order(chart, a.rep, at.locus, a.grade))
    throw Error("graded class: representative does not vanish to the declared grade");
}

}  // namespace

GradedElement derivation_action(const FilteredChart& chart, const ClassLocus& at, const RatVec& xi,
                                const GradedClass& a) {
  chart.require_valid();
  check_class(chart, at, a);
  GradedElement out;
  for (int b = 0; b < chart.dim(); ++b) {
    if (xi[b] == 0) continue;
    int grade = a.grade - chart.weights()[b];
    if (grade < 0) continue;
    Poly g = chart.frame_field(b).apply(a.rep);
    if (g.is_zero()) continue;
    out.add(grade, g.scale(xi[b]));
  }
  return out;
}

GradedFunction orbit_homomorphism(const FilteredChart& chart, const ClassLocus& at,
                                  const GradedClass& a) {
  chart.require_valid();
  check_class(chart, at, a);
  const int n = chart.dim();
  const int m = 2 * n;  // ring variables: u_1..u_n, xi_1..xi_n

  auto lift = [&](const Poly& p) {
    Poly r(m);
    for (const auto& [e, c] : p.terms()) {
      Mono ee(m, 0);
      std::copy(e.begin(), e.end(), ee.begin());
      r.add_term(ee, c);
    }
    return r;
  };
  std::vector<VectorField> lifted(n);
  for (int b = 0; b < n; ++b) {
    std::vector<Poly> comp(m, Poly::zero(m));
    for (int i = 0; i < n; ++i) comp[i] = lift(chart.frame_field(b).comp[i]);
    lifted[b] = VectorField{std::move(comp)};
  }

  // Counit: evaluate the grade-0 piece at the base point, keeping the xi part.
  auto counit = [&](const GradedElement& e) {
    auto it = e.parts.find(0);
    if (it == e.parts.end()) return Poly::zero(n);
    std::vector<Poly> repl(m, Poly::zero(n));
    for (int i = 0; i < n; ++i) repl[i] = Poly::constant(n, at.base_point[i]);
    for (int i = 0; i < n; ++i) repl[n + i] = Poly::variable(n, i);
    return it->second.substitute(repl);
  };

  GradedElement state;
  state.add(a.grade, lift(a.rep));
  Poly result = counit(state);
  Rat sign(1);
  Int kfact = 1;
  for (int k = 1; !state.is_zero() && k <= a.grade + 1; ++k) {
    GradedElement next;
    for (const auto& [q, f] : state.parts) {
      for (int b = 0; b < n; ++b) {
        int grade = q - chart.weights()[b];
        if (grade < 0) continue;
        Poly g = lifted[b].apply(f);
        if (g.is_zero()) continue;
        next.add(grade, Poly::variable(m, n + b) * g);
      }
    }
    state = std::move(next);
    sign = -sign;
    kfact *= k;
    Poly piece = counit(state);
    if (!piece.is_zero()) result += piece.scale(sign / Rat(kfact));
  }
  return GradedFunction{result, chart.weights()};
}

namespace {

// Coefficient-space basis of { f in span(monos) : order of f on locus >= q }.
RatMat order_subspace(const FilteredChart& chart, const ClassLocus& at,
                      const std::vector<Poly>& monos, int q) {
  RatMat rows;
  for (const Mono& alpha : multi_indices_up_to(chart.weights(), q - 1)) {
    if (at.locus.kind == Locus::Point) {
      RatVec row(monos.size());
      for (size_t j = 0; j < monos.size(); ++j)
        row[j] = frame_monomial_apply(chart, alpha, monos[j])
                     .eval<Rat>(std::span<const Rat>(at.locus.point));
      rows.push_back(std::move(row));
    } else {
      std::vector<Poly> applied(monos.size());
      std::map<Mono, size_t> support;
      for (size_t j = 0; j < monos.size(); ++j) {
        applied[j] =
            frame_monomial_apply(chart, alpha, monos[j]).restrict_zero(chart.normal_vars());
        for (const auto& [e, c] : applied[j].terms()) support.try_emplace(e, support.size());
      }
      RatMat block(support.size(), RatVec(monos.size(), Rat(0)));
      for (size_t j = 0; j < monos.size(); ++j)
        for (const auto& [e, c] : applied[j].terms()) block[support[e]][j] = c;
      for (auto& row : block) rows.push_back(std::move(row));
    }
  }
  return nullspace(std::move(rows), static_cast<int>(monos.size()));
}

Poly combine(const std::vector<Poly>& monos, const RatVec& coeff) {
  Poly p(monos.empty() ? 0 : monos[0].dim());
  for (size_t j = 0; j < monos.size(); ++j)
    if (coeff[j] != 0) p += monos[j].scale(coeff[j]);
  return p;
}

std::vector<Mono> weighted_monos_of_degree(const WeightVector& w, int q) {
  std::vector<Mono> all = multi_indices_up_to(w, q);
  std::vector<Mono> out;
  for (auto& m : all)
    if (weighted_order(w, m) == q) out.push_back(m);
  return out;
}

}  // namespace

ValidationReport verify_orbit_isomorphism(const FilteredChart& chart, const RatVec& v,
                                          unsigned seed, int multiplicativity_samples) {
  chart.require_valid();
  ValidationReport rep;
  const int n = chart.dim();
  const int r = chart.step();
  ClassLocus at = ClassLocus::at_point(v);

  std::vector<Poly> monos;
  {
    WeightVector ones(n, 1);
    for (const Mono& e : multi_indices_up_to(ones, r)) {
      Poly p = Poly::constant(n, Rat(1));
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < e[i]; ++k) p = p * (Poly::variable(n, i) - Poly::constant(n, v[i]));
      monos.push_back(p);
    }
  }

  std::vector<RatMat> spaces(r + 2);
  for (int q = 0; q <= r + 1; ++q) spaces[q] = order_subspace(chart, at, monos, q);

  std::vector<std::vector<Poly>> grade_basis(r + 1);
  for (int q = 0; q <= r; ++q) {
    const RatMat& big = spaces[q];
    RatMat stack = spaces[q + 1];
    std::vector<Poly> reps;
    int base_rank = rank(stack);
    for (const auto& cand : big) {
      RatMat trial = stack;
      trial.push_back(cand);
      int rk = rank(trial);
      if (rk > base_rank) {
        stack = std::move(trial);
        base_rank = rk;
        reps.push_back(combine(monos, cand));
      }
    }
    grade_basis[q] = std::move(reps);

    auto target = weighted_monos_of_degree(chart.weights(), q);
    if (grade_basis[q].size() != target.size()) {
      std::ostringstream msg;
      msg << "grade " << q << ": jet space dimension " << grade_basis[q].size() << " != "
          << target.size() << " monomials of weighted degree " << q;
      rep.add("rank", msg.str());
      continue;
    }
    std::map<Mono, size_t> col;
    for (const auto& e : target) col.emplace(e, col.size());
    RatMat img;
    bool homogeneous = true;
    for (const auto& f : grade_basis[q]) {
      GradedFunction ff = orbit_homomorphism(chart, at, GradedClass{q, f});
      RatVec row(target.size(), Rat(0));
      for (const auto& [e, c] : ff.value.terms()) {
        auto it = col.find(e);
        if (it == col.end()) {
          rep.add("homogeneity", "orbit image of a grade-" + std::to_string(q) +
                                     " class is not weighted-homogeneous");
          homogeneous = false;
          break;
        }
        row[it->second] = c;
      }
      if (!homogeneous) break;
      img.push_back(std::move(row));
    }
    if (homogeneous && rank(img) != static_cast<int>(target.size())) {
      std::ostringstream msg;
      msg << "grade " << q << ": orbit map is not a linear bijection";
      rep.add("rank", msg.str());
    }
  }

  std::mt19937_64 rng(seed);
  auto random_combo = [&](int q) {
    const auto& basis = grade_basis[q];
    Poly p(n);
    for (const auto& b : basis) {
      int c = static_cast<int>(rng() % 7) - 3;
      if (c != 0) p += b.scale(Rat(c));
    }
    return p;
  };
  for (int trial = 0; trial < multiplicativity_samples; ++trial) {
    int p = static_cast<int>(rng() % (r + 1));
    int q = static_cast<int>(rng() % (r - p + 1));
    Poly fa = random_combo(p), fb = random_combo(q);
    if (fa.is_zero() || fb.is_zero()) continue;
    GradedFunction ga = orbit_homomorphism(chart, at, GradedClass{p, fa});
    GradedFunction gb = orbit_homomorphism(chart, at, GradedClass{q, fb});
    GradedFunction gab = orbit_homomorphism(chart, at, GradedClass{p + q, fa * fb});
    if (!(gab.value == ga.value * gb.value)) {
      rep.add("multiplicativity",
              "orbit map fails F_{ab} = F_a F_b on a sampled pair of grades " +
                  std::to_string(p) + "," + std::to_string(q));
    }
  }
  return rep;
}

OsculatingQuotient osculating_quotient(const FilteredChart& chart, const RatVec& m) {
  chart.require_valid();
  if (!chart.marked()) throw Error("osculating_quotient: chart has no marked submanifold");
  if (static_cast<int>(m.size()) != chart.dim())
    throw Error("osculating_quotient: point dimension mismatch");
  for (int c : chart.normal_vars())
    if (m[c] != 0) throw Error("osculating_quotient: point does not lie on the marked submanifold");
  auto algebra = osculating_algebra(chart, m);
  return OsculatingQuotient{std::move(algebra), chart.tangential_vars(), chart.normal_vars()};
}

GroupElement OsculatingQuotient::normalize(const GroupElement& x) const {
  const int n = algebra.dim();
  if (static_cast<int>(x.size()) != n) throw Error("normalize: element length mismatch");
  // Right-multiply by a subalgebra element, fixing one weight at a time;
  // weight-w corrections do not disturb already-cleared lower weights.
  GroupElement g(n, Rat(0));
  for (int w = 1; w <= algebra.step(); ++w) {
    GroupElement h = bch_multiply(algebra, x, g);
    for (int a : tangential)
      if (algebra.weights()[a] == w) g[a] -= h[a];
  }
  GroupElement h = bch_multiply(algebra, x, g);
  for (int a : tangential)
    if (h[a] != 0) throw Error("normalize: coset normalization did not converge");
  return h;
}

}  // namespace carnotkit
