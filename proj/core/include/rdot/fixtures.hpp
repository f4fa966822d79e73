#pragma once

#include <string_view>
#include <vector>

#include "rdot/measures.hpp"

namespace rdot::fixtures {

// Built-in problems. Atom locations and weights of the 5- and 10-atom
// sources are fixed documented choices, not published values.

/// 5-atom source under squared error, reproduction grid = source atoms.
DiscreteDistribution five_atom_source();

/// 10-atom source for scalar quantizer design.
DiscreteDistribution ten_atom_source();

/// Uniform binary source on atoms {0, 1}; pair with hamming_matrix(2, 2).
DiscreteDistribution binary_uniform_source();

/// Binary symmetric channel with the given crossover probability.
Matrix binary_symmetric_channel(double crossover);

Matrix identity_channel(std::size_t n);

/// p(0|0) = 1, p(0|1) = 0.3, p(1|1) = 0.7.
Matrix z_channel();

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_spaced(double lo, double hi, std::size_t n);

}  // namespace rdot::fixtures
