#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carnotkit/rational.hpp"

namespace carnotkit {

/// Exponent vector of a monomial; length equals the ambient dimension.
using Mono = std::vector<int>;

/// Weights (q_1 <= ... <= q_n), one positive integer per variable.
using WeightVector = std::vector<int>;

/// Sparse multivariate polynomial over exact rationals.
///
/// Terms are kept in a canonically ordered map with no zero coefficients,
/// so equality of values is structural equality and "identically zero"
/// is decidable.
class Poly {
 public:
  Poly() : dim_(0) {}
  explicit Poly(int dim) : dim_(dim) {}

  static Poly zero(int dim) { return Poly(dim); }
  static Poly constant(int dim, const Rat& c);
  static Poly variable(int dim, int i);
  static Poly monomial(int dim, Mono e, const Rat& c);

  int dim() const { return dim_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Mono, Rat>& terms() const { return terms_; }

  Rat coeff(const Mono& e) const;
  Rat constant_term() const;

  Poly operator-() const;
  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly& operator+=(const Poly& o);
  Poly& operator-=(const Poly& o);
  bool operator==(const Poly& o) const = default;

  Poly scale(const Rat& c) const;
  Poly pow(int k) const;

  /// d/du_i, exact.
  Poly derivative(int var) const;

  /// Substitutes one polynomial per variable (all of a common dimension).
  Poly substitute(const std::vector<Poly>& repl) const;

  /// Sets the listed variables to zero, dropping every term that uses them.
  Poly restrict_zero(const std::vector<int>& vars) const;

  /// Total degree of the highest monomial (-1 for the zero polynomial).
  int total_degree() const;

  template <typename T>
  T eval(std::span<const T> point) const;

  /// Adds c * u^e, dropping the term if the sum cancels.
  void add_term(const Mono& e, const Rat& c);

  std::string str(const std::vector<std::string>& names = {}) const;

 private:
  int dim_;
  std::map<Mono, Rat> terms_;
};

inline Poly operator*(const Rat& c, const Poly& p) { return p.scale(c); }

/// Minimum over monomials of the weighted degree sum q_i * e_i, restricted to
/// `subset` when given. Returns nullopt (== +infinity) for the zero polynomial.
std::optional<int> weighted_valuation(const Poly& f, const WeightVector& w,
                                      const std::vector<int>* subset = nullptr);

/// Drops all monomials of weighted degree > cap.
Poly jet_truncate(const Poly& f, const WeightVector& w, int cap);

/// Exact polynomial quotient num/den, or nullopt when den does not divide num.
std::optional<Poly> exact_divide(const Poly& num, const Poly& den);

template <typename T>
T Poly::eval(std::span<const T> point) const {
  if (static_cast<int>(point.size()) != dim_) throw Error("eval: point dimension mismatch");
  T acc{};
  if constexpr (std::is_same_v<T, Rat>)
    acc = Rat(0);
  else
    acc = T(0);
  for (const auto& [e, c] : terms_) {
    T term;
    if constexpr (std::is_same_v<T, Rat>)
      term = c;
    else
      term = to_double(c);
    for (int i = 0; i < dim_; ++i)
      for (int k = 0; k < e[i]; ++k) term *= point[i];
    acc += term;
  }
  return acc;
}

}  // namespace carnotkit
