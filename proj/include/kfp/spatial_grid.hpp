#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kfp {

/// Periodic grid in 1, 2, or 3 spatial dimensions with n (even) points per
/// axis and period 2*pi*box_scale per axis.  Flat storage index is
/// x0-fastest: idx = i0 + n*(i1 + n*i2).
struct SpatialGrid {
    int dim = 1;
    int n = 64;
    double box_scale = 1.0;

    void validate() const {
        if (dim < 1 || dim > 3) throw std::invalid_argument("grid dim not in {1,2,3}");
        if (n < 8 || n % 2 != 0)
            throw std::invalid_argument("grid points per axis must be even and >= 8");
        if (box_scale <= 0) throw std::invalid_argument("box scale must be positive");
    }

    bool operator==(const SpatialGrid& o) const {
        return dim == o.dim && n == o.n && box_scale == o.box_scale;
    }
    bool operator!=(const SpatialGrid& o) const { return !(*this == o); }

    long points() const {
        long p = 1;
        for (int i = 0; i < dim; ++i) p *= n;
        return p;
    }
    double period() const { return 2.0 * std::numbers::pi * box_scale; }
    double spacing() const { return period() / n; }
    double volume() const { return std::pow(period(), dim); }
    double cell_volume() const { return std::pow(spacing(), dim); }

    /// Integer frequency of a 1d index, in [-n/2, n/2).
    int frequency(int idx) const { return idx <= n / 2 - 1 ? idx : idx - n; }

    /// Integer frequencies of a flat index (components beyond dim are 0).
    Eigen::Vector3i frequencies(long flat) const {
        Eigen::Vector3i m = Eigen::Vector3i::Zero();
        for (int a = 0; a < dim; ++a) {
            m[a] = frequency(static_cast<int>(flat % n));
            flat /= n;
        }
        return m;
    }

    /// Physical wavevector k = m / box_scale.
    Eigen::Vector3d wavevector(long flat) const {
        return frequencies(flat).cast<double>() / box_scale;
    }

    /// Physical coordinates of a flat index.
    Eigen::Vector3d coordinates(long flat) const {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        for (int a = 0; a < dim; ++a) {
            x[a] = spacing() * static_cast<double>(flat % n);
            flat /= n;
        }
        return x;
    }
};

}  // namespace kfp
