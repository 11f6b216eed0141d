#include "carnotkit/poly.hpp"

#include <algorithm>
#include <sstream>

namespace carnotkit {

Poly Poly::constant(int dim, const Rat& c) {
  Poly p(dim);
  p.add_term(Mono(dim, 0), c);
  return p;
}

Poly Poly::variable(int dim, int i) {
  if (i < 0 || i >= dim) throw Error("variable index out of range");
  Mono e(dim, 0);
  e[i] = 1;
  return monomial(dim, e, Rat(1));
}

Poly Poly::monomial(int dim, Mono e, const Rat& c) {
  if (static_cast<int>(e.size()) != dim) throw Error("monomial exponent length mismatch");
  for (int x : e)
    if (x < 0) throw Error("negative exponent");
  Poly p(dim);
  p.add_term(e, c);
  return p;
}

Rat Poly::coeff(const Mono& e) const {
  auto it = terms_.find(e);
  return it == terms_.end() ? Rat(0) : it->second;
}

Rat Poly::constant_term() const { return coeff(Mono(dim_, 0)); }

void Poly::add_term(const Mono& e, const Rat& c) {
  if (c == 0) return;
  if (static_cast<int>(e.size()) != dim_) throw Error("term exponent length mismatch");
  auto [it, inserted] = terms_.try_emplace(e, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly Poly::operator-() const {
  Poly r(dim_);
  for (const auto& [e, c] : terms_) r.terms_.emplace(e, -c);
  return r;
}

Poly& Poly::operator+=(const Poly& o) {
  if (o.dim_ != dim_) throw Error("poly add: dimension mismatch");
  for (const auto& [e, c] : o.terms_) add_term(e, c);
  return *this;
}

Poly& Poly::operator-=(const Poly& o) {
  if (o.dim_ != dim_) throw Error("poly sub: dimension mismatch");
  for (const auto& [e, c] : o.terms_) add_term(e, -c);
  return *this;
}

Poly Poly::operator+(const Poly& o) const {
  Poly r = *this;
  r += o;
  return r;
}

Poly Poly::operator-(const Poly& o) const {
  Poly r = *this;
  r -= o;
  return r;
}

Poly Poly::operator*(const Poly& o) const {
  if (o.dim_ != dim_) throw Error("poly mul: dimension mismatch");
  Poly r(dim_);
  Mono e(dim_);
  for (const auto& [e1, c1] : terms_) {
    for (const auto& [e2, c2] : o.terms_) {
      for (int i = 0; i < dim_; ++i) e[i] = e1[i] + e2[i];
      r.add_term(e, c1 * c2);
    }
  }
  return r;
}

Poly Poly::scale(const Rat& c) const {
  Poly r(dim_);
  if (c == 0) return r;
  for (const auto& [e, k] : terms_) r.terms_.emplace(e, k * c);
  return r;
}

Poly Poly::pow(int k) const {
  if (k < 0) throw Error("negative power");
  Poly r = Poly::constant(dim_, Rat(1));
  for (int i = 0; i < k; ++i) r = r * (*this);
  return r;
}

Poly Poly::derivative(int var) const {
  if (var < 0 || var >= dim_) throw Error("derivative: variable out of range");
  Poly r(dim_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    Mono d = e;
    d[var] -= 1;
    r.add_term(d, c * e[var]);
  }
  return r;
}

Poly Poly::substitute(const std::vector<Poly>& repl) const {
  if (static_cast<int>(repl.size()) != dim_) throw Error("substitute: needs one polynomial per variable");
  int out_dim = repl.empty() ? 0 : repl[0].dim();
  for (const auto& p : repl)
    if (p.dim() != out_dim) throw Error("substitute: replacement dimension mismatch");
  // Cache powers of each replacement as needed.
  std::vector<std::vector<Poly>> powers(dim_);
  for (int i = 0; i < dim_; ++i) powers[i].push_back(Poly::constant(out_dim, Rat(1)));
  Poly r(out_dim);
  for (const auto& [e, c] : terms_) {
    Poly term = Poly::constant(out_dim, c);
    for (int i = 0; i < dim_; ++i) {
      while (static_cast<int>(powers[i].size()) <= e[i]) powers[i].push_back(powers[i].back() * repl[i]);
      if (e[i] > 0) term = term * powers[i][e[i]];
    }
    r += term;
  }
  return r;
}

Poly Poly::restrict_zero(const std::vector<int>& vars) const {
  Poly r(dim_);
  for (const auto& [e, c] : terms_) {
    bool uses = false;
    for (int v : vars)
      if (e[v] > 0) {
        uses = true;
        break;
      }
    if (!uses) r.terms_.emplace(e, c);
  }
  return r;
}

int Poly::total_degree() const {
  int d = -1;
  for (const auto& [e, c] : terms_) {
    int t = 0;
    for (int x : e) t += x;
    d = std::max(d, t);
  }
  return d;
}

std::string Poly::str(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (const auto& [e, c] : terms_) {
    if (!first) out << " + ";
    first = false;
    out << format_rat(c);
    for (int i = 0; i < dim_; ++i) {
      if (e[i] == 0) continue;
      out << "*";
      if (static_cast<int>(names.size()) == dim_)
        out << names[i];
      else
        out << "u" << (i + 1);
      if (e[i] > 1) out << "^" << e[i];
    }
  }
  return out.str();
}

std::optional<int> weighted_valuation(const Poly& f, const WeightVector& w,
                                      const std::vector<int>* subset) {
  if (static_cast<int>(w.size()) != f.dim()) throw Error("weighted_valuation: weight length mismatch");
  if (f.is_zero()) return std::nullopt;
  std::optional<int> best;
  for (const auto& [e, c] : f.terms()) {
    int deg = 0;
    if (subset) {
      for (int i : *subset) deg += w[i] * e[i];
    } else {
      for (int i = 0; i < f.dim(); ++i) deg += w[i] * e[i];
    }
    if (!best || deg < *best) best = deg;
  }
  return best;
}

Poly jet_truncate(const Poly& f, const WeightVector& w, int cap) {
  if (cap < 0) throw Error("jet_truncate: cap must be nonnegative");
  if (static_cast<int>(w.size()) != f.dim()) throw Error("jet_truncate: weight length mismatch");
  Poly r(f.dim());
  for (const auto& [e, c] : f.terms()) {
    int deg = 0;
    for (int i = 0; i < f.dim(); ++i) deg += w[i] * e[i];
    if (deg <= cap) r.add_term(e, c);
  }
  return r;
}

namespace {
// Graded-lex order used as the division order: total degree, then lex.
bool mono_less(const Mono& a, const Mono& b) {
  int da = 0, db = 0;
  for (int x : a) da += x;
  for (int x : b) db += x;
  if (da != db) return da < db;
  return a < b;
}

const Mono* leading_mono(const Poly& p) {
  const Mono* best = nullptr;
  for (const auto& [e, c] : p.terms())
    if (!best || mono_less(*best, e)) best = &e;
  return best;
}

bool mono_divides(const Mono& d, const Mono& m) {
  for (size_t i = 0; i < d.size(); ++i)
    if (d[i] > m[i]) return false;
  return true;
}
}  // namespace

std::optional<Poly> exact_divide(const Poly& num, const Poly& den) {
  if (num.dim() != den.dim()) throw Error("exact_divide: dimension mismatch");
  if (den.is_zero()) throw Error("exact_divide: division by zero polynomial");
  Poly rem = num;
  Poly quot(num.dim());
  const Mono* dlead = leading_mono(den);
  const Rat dcoeff = den.coeff(*dlead);
  while (!rem.is_zero()) {
    const Mono* rlead = leading_mono(rem);
    if (!mono_divides(*dlead, *rlead)) return std::nullopt;
    Mono q(num.dim());
    for (int i = 0; i < num.dim(); ++i) q[i] = (*rlead)[i] - (*dlead)[i];
    Rat qc = rem.coeff(*rlead) / dcoeff;
    Poly qterm = Poly::monomial(num.dim(), q, qc);
    quot += qterm;
    rem -= qterm * den;
  }
  return quot;
}

}  // namespace carnotkit
