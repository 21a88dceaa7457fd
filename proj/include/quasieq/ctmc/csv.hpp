#pragma once

#include <iosfwd>

#include "quasieq/ctmc/generator.hpp"
#include "quasieq/ctmc/types.hpp"

namespace quasieq::ctmc {

// Triplet CSV with header "from,to,rate"; n is taken as the largest state id
// unless a larger one is given.
void write_generator_csv(std::ostream& out, const SparseGenerator& q);
SparseGenerator read_generator_csv(std::istream& in, std::size_t n = 0);

// "state,prob" CSV; a row for state 0 is written only when the cemetery
// carries mass.
void write_distribution_csv(std::ostream& out, const ProbabilityVector& pv);
ProbabilityVector read_distribution_csv(std::istream& in, std::size_t n = 0);

}  // namespace quasieq::ctmc
