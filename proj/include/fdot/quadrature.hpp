#pragma once

#include <cstddef>
#include <vector>

namespace fdot {

struct QuadRule {
    std::vector<double> nodes;    // on [-1, 1]
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1,1]; results are cached per order.
const QuadRule& gauss_legendre(std::size_t n);

// First-kind Gauss-Chebyshev abscissae cos((2k-1)pi/2n), k=1..n.
// Each node carries the common weight pi/n for integrals against 1/sqrt(1-u^2).
const std::vector<double>& chebyshev_nodes(std::size_t n);

}  // namespace fdot
