#pragma once

#include "fieldseg/grid.hpp"

#include <string>

namespace fieldseg {

/// Square-lattice percolation density.
inline constexpr double kSquareLatticeRho = 0.5;

struct CriticalityResult {
    int m = 0;
    double rho = 0.0;
    double k_solution = 0.0;  ///< exact root of m^2 / (m^2 + 2m(K-1)^2) = rho
    int k_c = 0;              ///< ceil(max(2, k_solution))
    int m_c = 0;              ///< floor(m / k_c)
    int r_c = 0;              ///< connectivity radius, equal to m_c

    friend bool operator==(const CriticalityResult&, const CriticalityResult&) = default;
};

/// Positive root K = 1 + sqrt(m (1 - rho) / (2 rho)).
double solve_k(int m, double rho);

/// Throws DegenerateRegion when floor(m / K_c) == 0.
CriticalityResult compute_criticality(int m, double rho = kSquareLatticeRho);

/// floor(sqrt(R * C)).
int default_m(const PixelGrid& grid);
int default_m(int rows, int cols);

std::string to_json(const CriticalityResult& result);

} // namespace fieldseg
