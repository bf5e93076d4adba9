#include "fieldseg/criticality.hpp"

#include "fieldseg/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace fieldseg {

double solve_k(int m, double rho) {
    if (!(rho > 0.0 && rho < 1.0)) {
        throw Error(ErrorCode::InvalidRho, "rho must lie in (0,1), got " + std::to_string(rho));
    }
    if (m < 1) throw Error(ErrorCode::InvalidM, "m must be >= 1, got " + std::to_string(m));
    return 1.0 + std::sqrt(static_cast<double>(m) * (1.0 - rho) / (2.0 * rho));
}

CriticalityResult compute_criticality(int m, double rho) {
    CriticalityResult out;
    out.m = m;
    out.rho = rho;
    out.k_solution = solve_k(m, rho);
    out.k_c = static_cast<int>(std::ceil(std::max(2.0, out.k_solution)));
    out.m_c = m / out.k_c;
    if (out.m_c < 1) {
        throw Error(ErrorCode::DegenerateRegion, "floor(m / K_c) = floor(" + std::to_string(m) + " / " +
                                                     std::to_string(out.k_c) + ") = 0");
    }
    out.r_c = out.m_c;
    return out;
}

int default_m(int rows, int cols) {
    const auto d = static_cast<long long>(rows) * static_cast<long long>(cols);
    auto root = static_cast<long long>(std::sqrt(static_cast<double>(d)));
    while (root * root > d) --root;
    while ((root + 1) * (root + 1) <= d) ++root;
    return static_cast<int>(root);
}

int default_m(const PixelGrid& grid) { return default_m(grid.rows(), grid.cols()); }

std::string to_json(const CriticalityResult& r) {
    nlohmann::ordered_json j;
    j["m"] = r.m;
    j["rho"] = r.rho;
    j["k_solution"] = r.k_solution;
    j["K_c"] = r.k_c;
    j["m_c"] = r.m_c;
    j["R_c"] = r.r_c;
    return j.dump();
}

} // namespace fieldseg
