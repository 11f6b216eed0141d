#include "carnotkit/chart.hpp"

#include <algorithm>
#include <sstream>

namespace carnotkit {

VectorField VectorField::zero(int dim) {
  return VectorField(std::vector<Poly>(dim, Poly::zero(dim)));
}

Poly VectorField::apply(const Poly& f) const {
  if (f.dim() != dim()) throw Error("vector field apply: dimension mismatch");
  Poly r(f.dim());
  for (int i = 0; i < dim(); ++i) {
    if (comp[i].is_zero()) continue;
    r += comp[i] * f.derivative(i);
  }
  return r;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  if (a.dim() != b.dim()) throw Error("vector field add: dimension mismatch");
  VectorField r = a;
  for (int i = 0; i < a.dim(); ++i) r.comp[i] += b.comp[i];
  return r;
}

VectorField operator-(const VectorField& a, const VectorField& b) {
  if (a.dim() != b.dim()) throw Error("vector field sub: dimension mismatch");
  VectorField r = a;
  for (int i = 0; i < a.dim(); ++i) r.comp[i] -= b.comp[i];
  return r;
}

VectorField scale(const Poly& f, const VectorField& x) {
  VectorField r = x;
  for (auto& c : r.comp) c = f * c;
  return r;
}

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  if (x.dim() != y.dim()) throw Error("lie_bracket: dimension mismatch");
  VectorField r = VectorField::zero(x.dim());
  for (int i = 0; i < x.dim(); ++i) r.comp[i] = x.apply(y.comp[i]) - y.apply(x.comp[i]);
  return r;
}

FilteredChart::FilteredChart(int dim, std::vector<int> ranks, std::vector<VectorField> frame,
                             std::vector<int> normal_vars)
    : dim_(dim), ranks_(std::move(ranks)), frame_(std::move(frame)),
      normal_vars_(std::move(normal_vars)), cache_(std::make_shared<Cache>()) {
  if (dim_ < 1) throw Error("chart: dimension must be positive");
  if (ranks_.empty() || ranks_.back() != dim_) throw Error("chart: last rank must equal the dimension");
  int prev = 0;
  for (int r : ranks_) {
    if (r < prev || r < 1) throw Error("chart: ranks must be nondecreasing and positive");
    prev = r;
  }
  if (static_cast<int>(frame_.size()) != dim_) throw Error("chart: frame must have one field per dimension");
  for (const auto& f : frame_) {
    if (f.dim() != dim_) throw Error("chart: frame field dimension mismatch");
    for (const auto& c : f.comp)
      if (c.dim() != dim_) throw Error("chart: frame component dimension mismatch");
  }
  weights_.assign(dim_, 0);
  int q = 1, idx = 0;
  for (int r : ranks_) {
    while (idx < r) weights_[idx++] = q;
    ++q;
  }
  std::sort(normal_vars_.begin(), normal_vars_.end());
  normal_vars_.erase(std::unique(normal_vars_.begin(), normal_vars_.end()), normal_vars_.end());
  for (int v : normal_vars_)
    if (v < 0 || v >= dim_) throw Error("chart: normal variable index out of range");
}

std::vector<int> FilteredChart::tangential_vars() const {
  std::vector<int> t;
  size_t k = 0;
  for (int i = 0; i < dim_; ++i) {
    if (k < normal_vars_.size() && normal_vars_[k] == i) {
      ++k;
      continue;
    }
    t.push_back(i);
  }
  return t;
}

RatMat FilteredChart::frame_matrix_at(const RatVec& v) const {
  if (static_cast<int>(v.size()) != dim_) throw Error("frame_matrix_at: point dimension mismatch");
  RatMat m(dim_, RatVec(dim_, Rat(0)));
  std::span<const Rat> pt(v);
  for (int a = 0; a < dim_; ++a)
    for (int i = 0; i < dim_; ++i) m[i][a] = frame_[a].comp[i].eval<Rat>(pt);
  return m;
}

namespace {

using PolyMat = std::vector<std::vector<Poly>>;

// Determinant of the submatrix using columns col.. and rows where mask bit
// is set; memoized on the row mask (columns are consumed left to right).
Poly det_rec(const PolyMat& m, int col, unsigned mask, std::map<unsigned, Poly>& memo, int dim) {
  int n = static_cast<int>(m.size());
  if (col == n) return Poly::constant(dim, Rat(1));
  auto it = memo.find(mask);
  if (it != memo.end()) return it->second;
  Poly det(dim);
  int sign = 1;
  for (int i = 0; i < n; ++i) {
    if (!(mask & (1u << i))) continue;
    if (!m[i][col].is_zero()) {
      Poly sub = det_rec(m, col + 1, mask & ~(1u << i), memo, dim);
      Poly term = m[i][col] * sub;
      det += sign > 0 ? term : -term;
    }
    sign = -sign;
  }
  memo.emplace(mask, det);
  return det;
}

Poly poly_det(const PolyMat& m, int dim) {
  std::map<unsigned, Poly> memo;
  unsigned full = (1u << m.size()) - 1u;
  return det_rec(m, 0, full, memo, dim);
}

// Minor determinant with row i and column c removed.
Poly poly_minor(const PolyMat& m, int dim, int skip_row, int skip_col) {
  int n = static_cast<int>(m.size());
  PolyMat sub;
  for (int i = 0; i < n; ++i) {
    if (i == skip_row) continue;
    std::vector<Poly> row;
    for (int j = 0; j < n; ++j) {
      if (j == skip_col) continue;
      row.push_back(m[i][j]);
    }
    sub.push_back(std::move(row));
  }
  if (sub.empty()) return Poly::constant(dim, Rat(1));
  return poly_det(sub, dim);
}

}  // namespace

void FilteredChart::run_validation() const {
  ValidationReport report;
  const int n = dim_;
  const int r = step();

  // Frame invertibility at the chart origin.
  RatVec origin(n, Rat(0));
  if (rank(frame_matrix_at(origin)) != n)
    report.add("frame", "frame matrix is singular at the chart origin");

  // (G,H)-frame condition: non-normal fields are tangent to the marked
  // submanifold, i.e. their normal components vanish on { normal vars = 0 }.
  if (marked()) {
    for (int a : tangential_vars()) {
      for (int c : normal_vars_) {
        if (!frame_[a].comp[c].restrict_zero(normal_vars_).is_zero()) {
          std::ostringstream msg;
          msg << "frame field " << (a + 1) << " is not tangent to the marked submanifold"
              << " (component " << (c + 1) << " does not vanish there)";
          report.add("tangency(" + std::to_string(a + 1) + "," + std::to_string(c + 1) + ")", msg.str());
        }
      }
    }
  }

  // Bracket expansion by Cramer's rule over the polynomial ring.
  PolyMat fm(n, std::vector<Poly>(n, Poly::zero(n)));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a) fm[i][a] = frame_[a].comp[i];
  Poly det = poly_det(fm, n);
  std::vector<Poly> structure(static_cast<size_t>(n) * n * n, Poly::zero(n));
  if (det.is_zero()) {
    report.add("frame", "frame determinant vanishes identically");
  } else {
    // Cofactors: det with column c replaced by B equals sum_i B_i * cof[i][c].
    PolyMat cof(n, std::vector<Poly>(n, Poly::zero(n)));
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < n; ++c) {
        Poly mn = poly_minor(fm, n, i, c);
        cof[i][c] = ((i + c) % 2 == 0) ? mn : -mn;
      }
    for (int a = 0; a < n; ++a) {
      for (int b = a + 1; b < n; ++b) {
        VectorField br = lie_bracket(frame_[a], frame_[b]);
        bool ok = true;
        for (int c = 0; c < n; ++c) {
          Poly num(n);
          for (int i = 0; i < n; ++i) num += br.comp[i] * cof[i][c];
          auto fc = exact_divide(num, det);
          if (!fc) {
            std::ostringstream msg;
            msg << "bracket [X" << (a + 1) << ",X" << (b + 1)
                << "] has non-polynomial frame coefficients (Cramer division failed)";
            report.add("bracket(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")", msg.str());
            ok = false;
            break;
          }
          structure[(static_cast<size_t>(a) * n + b) * n + c] = *fc;
          structure[(static_cast<size_t>(b) * n + a) * n + c] = -*fc;
        }
        if (!ok) continue;
        for (int c = 0; c < n; ++c) {
          int bound = std::min(weights_[a] + weights_[b], r);
          if (weights_[c] > bound &&
              !structure[(static_cast<size_t>(a) * n + b) * n + c].is_zero()) {
            std::ostringstream msg;
            msg << "bracket [X" << (a + 1) << ",X" << (b + 1) << "] needs X" << (c + 1)
                << " of weight " << weights_[c] << " > " << bound;
            report.add("weight(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")", msg.str());
          }
        }
      }
    }
  }

  cache_->structure = std::move(structure);
  cache_->report = std::move(report);
}

const ValidationReport& FilteredChart::validate() const {
  if (!cache_->report) run_validation();
  return *cache_->report;
}

const Poly& FilteredChart::structure_function(int a, int b, int c) const {
  require_valid();
  return cache_->structure[(static_cast<size_t>(a) * dim_ + b) * dim_ + c];
}

void FilteredChart::require_valid() const {
  const auto& rep = validate();
  if (!rep.pass()) throw Error("chart does not validate: " + rep.violations.front().message);
}

Poly frame_monomial_apply(const FilteredChart& chart, const Mono& alpha, const Poly& f) {
  if (static_cast<int>(alpha.size()) != chart.dim()) throw Error("frame_monomial_apply: index length mismatch");
  Poly g = f;
  for (int a = chart.dim() - 1; a >= 0; --a)
    for (int k = 0; k < alpha[a]; ++k) g = chart.frame_field(a).apply(g);
  return g;
}

int weighted_order(const WeightVector& w, const Mono& alpha) {
  int s = 0;
  for (size_t i = 0; i < w.size(); ++i) s += w[i] * alpha[i];
  return s;
}

namespace {
void enumerate_rec(const WeightVector& w, int pos, int budget, Mono& cur, std::vector<Mono>& out) {
  if (pos < 0) {
    out.push_back(cur);
    return;
  }
  for (int k = 0; k * w[pos] <= budget; ++k) {
    cur[pos] = k;
    enumerate_rec(w, pos - 1, budget - k * w[pos], cur, out);
  }
  cur[pos] = 0;
}
}  // namespace

std::vector<Mono> multi_indices_up_to(const WeightVector& w, int cap) {
  std::vector<Mono> out;
  Mono cur(w.size(), 0);
  enumerate_rec(w, static_cast<int>(w.size()) - 1, cap, cur, out);
  std::sort(out.begin(), out.end(), [&](const Mono& a, const Mono& b) {
    int wa = weighted_order(w, a), wb = weighted_order(w, b);
    if (wa != wb) return wa < wb;
    return a < b;
  });
  return out;
}

bool FrameOperator::is_zero() const {
  for (const auto& [a, f] : terms)
    if (!f.is_zero()) return false;
  return true;
}

void FrameOperator::add(const Mono& alpha, const Poly& f) {
  if (f.is_zero()) return;
  auto [it, inserted] = terms.try_emplace(alpha, f);
  if (!inserted) {
    it->second += f;
    if (it->second.is_zero()) terms.erase(it);
  }
}

Poly FrameOperator::apply(const FilteredChart& chart, const Poly& g) const {
  Poly r(g.dim());
  for (const auto& [alpha, f] : terms) r += f * frame_monomial_apply(chart, alpha, g);
  return r;
}

int h_order_of_operator(const FilteredChart& chart, const FrameOperator& d) {
  if (d.is_zero()) throw Error("h_order_of_operator: zero operator");
  int best = -1;
  for (const auto& [alpha, f] : d.terms) {
    if (f.is_zero()) continue;
    best = std::max(best, weighted_order(chart.weights(), alpha));
  }
  return best;
}

namespace {

// X_a composed with a frame-form operator, re-expressed in frame form.
FrameOperator field_compose(const FilteredChart& chart, int a, const FrameOperator& op) {
  const int n = chart.dim();
  FrameOperator out;
  for (const auto& [beta, g] : op.terms) {
    // Leibniz part: derivative hits the coefficient.
    out.add(beta, chart.frame_field(a).apply(g));
    // Operator part: g * (X_a . X^beta).
    int first = -1;
    for (int i = 0; i < n; ++i)
      if (beta[i] > 0) {
        first = i;
        break;
      }
    if (first < 0 || a <= first) {
      Mono up = beta;
      if (first < 0) {
        up = Mono(n, 0);
      }
      up[a] += 1;
      out.add(up, g);
      continue;
    }
    // X_a X^beta = X_b (X_a X^beta') + [X_a, X_b] X^beta', beta' = beta - e_b.
    int b = first;
    Mono rest = beta;
    rest[b] -= 1;
    FrameOperator unit;
    unit.add(rest, Poly::constant(n, Rat(1)));
    FrameOperator inner = field_compose(chart, a, unit);
    FrameOperator t = field_compose(chart, b, inner);
    for (int c = 0; c < n; ++c) {
      const Poly& f = chart.structure_function(a, b, c);
      if (f.is_zero()) continue;
      FrameOperator piece = field_compose(chart, c, unit);
      for (const auto& [gamma, h] : piece.terms) t.add(gamma, f * h);
    }
    for (const auto& [gamma, h] : t.terms) out.add(gamma, g * h);
  }
  return out;
}

}  // namespace

FrameOperator frame_compose(const FilteredChart& chart, const FrameOperator& d1,
                            const FrameOperator& d2) {
  chart.require_valid();
  const int n = chart.dim();
  FrameOperator out;
  for (const auto& [alpha, f] : d1.terms) {
    FrameOperator cur = d2;
    for (int a = n - 1; a >= 0; --a)
      for (int k = 0; k < alpha[a]; ++k) cur = field_compose(chart, a, cur);
    for (const auto& [gamma, h] : cur.terms) out.add(gamma, f * h);
  }
  return out;
}

namespace {

bool vanishes_on(const Poly& g, const FilteredChart& chart, const Locus& locus) {
  if (locus.kind == Locus::Point) return g.eval<Rat>(std::span<const Rat>(locus.point)) == 0;
  return g.restrict_zero(chart.normal_vars()).is_zero();
}

// Enumerates X^alpha f for all alpha of weighted order <= budget, sharing
// suffix applications; returns false on the first non-vanishing value.
bool check_rec(const FilteredChart& chart, const Locus& locus, int pos, int budget, const Poly& g) {
  if (pos < 0) return vanishes_on(g, chart, locus);
  const int w = chart.weights()[pos];
  Poly cur = g;
  for (int k = 0; k * w <= budget; ++k) {
    if (k > 0) cur = chart.frame_field(pos).apply(cur);
    if (!check_rec(chart, locus, pos - 1, budget - k * w, cur)) return false;
  }
  return true;
}

}  // namespace

bool vanishes_to_h_order(const FilteredChart& chart, const Poly& f, const Locus& locus, int q) {
  if (f.dim() != chart.dim()) throw Error("vanishes_to_h_order: dimension mismatch");
  if (locus.kind == Locus::Marked && !chart.marked())
    throw Error("vanishes_to_h_order: chart has no marked submanifold");
  if (q <= 0) return true;
  return check_rec(chart, locus, chart.dim() - 1, q - 1, f);
}

int vanishing_h_order(const FilteredChart& chart, const Poly& f, const Locus& locus, int cap) {
  if (cap < 1) throw Error("vanishing_h_order: cap must be at least 1");
  for (int q = 1; q <= cap + 1; ++q)
    if (!vanishes_to_h_order(chart, f, locus, q)) return q - 1;
  return cap + 1;
}

}  // namespace carnotkit
