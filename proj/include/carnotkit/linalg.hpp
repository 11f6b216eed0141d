#pragma once

#include <optional>
#include <vector>

#include "carnotkit/rational.hpp"

namespace carnotkit {

using RatVec = std::vector<Rat>;
using RatMat = std::vector<std::vector<Rat>>;  // row major

RatMat identity_matrix(int n);
RatVec mat_vec(const RatMat& a, const RatVec& x);
RatMat mat_mul(const RatMat& a, const RatMat& b);

int rank(RatMat a);

/// Solves A x = b. With minimal_support, free variables (non-pivot columns in
/// the given column order) are set to zero, which makes the result
/// deterministic. Returns nullopt when inconsistent.
std::optional<RatVec> solve(RatMat a, RatVec b);

/// Simultaneous solve for several right-hand sides (columns of B).
/// Returns X with A X = B, free variables zeroed; nullopt when inconsistent.
std::optional<RatMat> solve_many(RatMat a, RatMat b);

std::optional<RatMat> inverse(RatMat a);

/// Basis of the right nullspace, one vector per row of the result.
/// `cols` must be supplied when `a` has no rows.
RatMat nullspace(RatMat a, int cols = -1);

}  // namespace carnotkit
