#include "carnotkit/linalg.hpp"

namespace carnotkit {

RatMat identity_matrix(int n) {
  RatMat m(n, RatVec(n, Rat(0)));
  for (int i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

RatVec mat_vec(const RatMat& a, const RatVec& x) {
  RatVec r(a.size(), Rat(0));
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != x.size()) throw Error("mat_vec: shape mismatch");
    for (size_t j = 0; j < x.size(); ++j) r[i] += a[i][j] * x[j];
  }
  return r;
}

RatMat mat_mul(const RatMat& a, const RatMat& b) {
  size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  RatMat r(n, RatVec(m, Rat(0)));
  for (size_t i = 0; i < n; ++i) {
    if (a[i].size() != k) throw Error("mat_mul: shape mismatch");
    for (size_t l = 0; l < k; ++l) {
      if (a[i][l] == 0) continue;
      for (size_t j = 0; j < m; ++j) r[i][j] += a[i][l] * b[l][j];
    }
  }
  return r;
}

namespace {

// Row echelon reduction in place; returns pivot columns. Deterministic:
// the first row with a nonzero entry in the scan column is chosen.
std::vector<int> echelon(RatMat& a, RatMat* rhs) {
  std::vector<int> pivots;
  size_t rows = a.size();
  size_t cols = rows == 0 ? 0 : a[0].size();
  size_t r = 0;
  for (size_t c = 0; c < cols && r < rows; ++c) {
    size_t sel = r;
    while (sel < rows && a[sel][c] == 0) ++sel;
    if (sel == rows) continue;
    std::swap(a[sel], a[r]);
    if (rhs) std::swap((*rhs)[sel], (*rhs)[r]);
    Rat inv = Rat(1) / a[r][c];
    for (size_t j = c; j < cols; ++j) a[r][j] *= inv;
    if (rhs)
      for (auto& x : (*rhs)[r]) x *= inv;
    for (size_t i = 0; i < rows; ++i) {
      if (i == r || a[i][c] == 0) continue;
      Rat f = a[i][c];
      for (size_t j = c; j < cols; ++j) a[i][j] -= f * a[r][j];
      if (rhs)
        for (size_t j = 0; j < (*rhs)[i].size(); ++j) (*rhs)[i][j] -= f * (*rhs)[r][j];
    }
    pivots.push_back(static_cast<int>(c));
    ++r;
  }
  return pivots;
}

}  // namespace

int rank(RatMat a) {
  auto p = echelon(a, nullptr);
  return static_cast<int>(p.size());
}

std::optional<RatMat> solve_many(RatMat a, RatMat b) {
  size_t rows = a.size();
  size_t cols = rows == 0 ? 0 : a[0].size();
  if (b.size() != rows) throw Error("solve_many: shape mismatch");
  size_t nrhs = rows == 0 ? 0 : b[0].size();
  auto pivots = echelon(a, &b);
  // Inconsistency: zero row of A with nonzero rhs.
  for (size_t i = pivots.size(); i < rows; ++i)
    for (size_t j = 0; j < nrhs; ++j)
      if (b[i][j] != 0) return std::nullopt;
  RatMat x(cols, RatVec(nrhs, Rat(0)));
  for (size_t k = 0; k < pivots.size(); ++k)
    for (size_t j = 0; j < nrhs; ++j) x[pivots[k]][j] = b[k][j];
  return x;
}

std::optional<RatVec> solve(RatMat a, RatVec b) {
  RatMat bm(b.size(), RatVec(1));
  for (size_t i = 0; i < b.size(); ++i) bm[i][0] = b[i];
  auto xm = solve_many(std::move(a), std::move(bm));
  if (!xm) return std::nullopt;
  RatVec x(xm->size());
  for (size_t i = 0; i < x.size(); ++i) x[i] = (*xm)[i][0];
  return x;
}

std::optional<RatMat> inverse(RatMat a) {
  size_t n = a.size();
  for (auto& row : a)
    if (row.size() != n) throw Error("inverse: matrix not square");
  RatMat id = identity_matrix(static_cast<int>(n));
  auto pivots = echelon(a, &id);
  if (pivots.size() != n) return std::nullopt;
  return id;
}

RatMat nullspace(RatMat a, int cols_hint) {
  size_t rows = a.size();
  size_t cols = rows == 0 ? static_cast<size_t>(cols_hint < 0 ? 0 : cols_hint) : a[0].size();
  auto pivots = echelon(a, nullptr);
  std::vector<bool> is_pivot(cols, false);
  for (int c : pivots) is_pivot[c] = true;
  RatMat basis;
  for (size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    RatVec v(cols, Rat(0));
    v[free] = 1;
    for (size_t k = 0; k < pivots.size(); ++k) v[pivots[k]] = -a[k][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

}  // namespace carnotkit
