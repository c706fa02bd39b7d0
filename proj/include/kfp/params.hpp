#pragma once

#include <stdexcept>

namespace kfp {

/// Transport coefficients of the fluid phase in the normalized system
/// (heat capacity and gas constant are fixed to one by the scaling).
/// mu1 is the shear viscosity, mu2 + 2 mu1 / 3 the bulk viscosity.
struct PhysicalParams {
    double mu1 = 1.0;
    double mu2 = 0.0;
    double kappa = 1.0;

    void validate() const {
        if (!(mu1 > 0)) throw std::invalid_argument("mu1 must be positive");
        if (!(mu2 + 2.0 * mu1 / 3.0 >= 0))
            throw std::invalid_argument("bulk viscosity must be >= 0");
        if (!(kappa > 0)) throw std::invalid_argument("kappa must be positive");
    }
};

}  // namespace kfp
