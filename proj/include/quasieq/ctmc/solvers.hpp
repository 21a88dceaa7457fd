#pragma once

#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/types.hpp"

namespace quasieq::ctmc {

/// Stationary law of a conservative generator that is irreducible on C.
///
/// Fixes one anchor state, solves for the others through the killed system
/// on the rest of C (an M-matrix factorization with subtraction-free
/// pivots) and normalizes. Throws kIrreducibility (naming a state that
/// cannot be reached) or kNumericalFailure when the balance residual
/// max|pi Q| exceeds 1e-10 relative to the largest rate.
ProbabilityVector stationary_distribution(const SparseGenerator& q);

/// max_j |(pi Q)_j| for a law over C.
double balance_residual(const SparseGenerator& q, const ProbabilityVector& pi);

/// Law of X(t) by uniformization. Cemetery exits are kept, so mass lost to
/// absorption shows up in cemetery(). The Poisson series is cut where the
/// neglected tail is below 1e-12.
ProbabilityVector transient_distribution(const SparseGenerator& q,
                                         const ProbabilityVector& init,
                                         double t);

}  // namespace quasieq::ctmc
