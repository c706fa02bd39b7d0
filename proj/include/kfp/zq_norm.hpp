#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kfp/spectral_field.hpp"

namespace kfp {

/// Mixed norm of a kinetic field given per-coefficient spatial fields:
/// spatial L^q of each Hermite coefficient, then l^2 across coefficients
/// (Parseval substitutes for the velocity integral).
inline double norm_zq_kinetic(const std::vector<SpectralField>& coeffs,
                              double q) {
    if (q < 1.0) throw std::invalid_argument("Z_q norm needs q >= 1");
    double s = 0.0;
    for (const SpectralField& c : coeffs) {
        double lq = norm_lp(c, q);
        s += lq * lq;
    }
    return std::sqrt(s);
}

/// Norm of the full kinetic-fluid tuple: Z_q part of f plus the spatial L^1
/// norms of the fluid components.
inline double norm_zq_state(const std::vector<SpectralField>& kinetic,
                            const std::vector<SpectralField>& fluid,
                            double q) {
    double s = norm_zq_kinetic(kinetic, q);
    for (const SpectralField& g : fluid) s += norm_lp(g, 1.0);
    return s;
}

}  // namespace kfp
