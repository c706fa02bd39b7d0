#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace kfp {

/// Quadrature over wavenumber space, int_{R^3} F(k) dk ~
/// sum_r w_r sum_a omega_a F(r n_a): a radial rule on (k_min, k_max] with
/// the k^2 Jacobian folded into w_r, and a symmetric direction set on the
/// unit sphere with weights summing to 4 pi.
struct KQuadrature {
    std::vector<double> radial_nodes;
    std::vector<double> radial_weights;  // include k^2 dk
    std::vector<Eigen::Vector3d> directions;
    std::vector<double> direction_weights;  // sum to 4*pi

    std::size_t size() const {
        return radial_nodes.size() * directions.size();
    }
};

namespace detail {
// 8-point Gauss-Legendre rule on [-1, 1].
inline const double kGl8X[8] = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
inline const double kGl8W[8] = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};
}  // namespace detail

/// Log-spaced panels of 8-point Gauss-Legendre nodes in log k; n_radial is
/// rounded up to a multiple of 8.
inline void radial_log_rule(double k_min, double k_max, int n_radial,
                            std::vector<double>& nodes,
                            std::vector<double>& weights) {
    if (!(k_min > 0) || !(k_max > k_min))
        throw std::invalid_argument("radial rule needs 0 < k_min < k_max");
    int panels = std::max(1, (n_radial + 7) / 8);
    nodes.clear();
    weights.clear();
    const double s0 = std::log(k_min), s1 = std::log(k_max);
    const double ds = (s1 - s0) / panels;
    for (int p = 0; p < panels; ++p) {
        double a = s0 + p * ds;
        for (int i = 0; i < 8; ++i) {
            double s = a + 0.5 * ds * (detail::kGl8X[i] + 1.0);
            double k = std::exp(s);
            nodes.push_back(k);
            // dk = k ds, and the k^2 Jacobian of spherical coordinates
            weights.push_back(0.5 * ds * detail::kGl8W[i] * k * k * k);
        }
    }
}

/// Direction sets with octahedral symmetry: 6 axis points, or the 26-point
/// set (axes, edge midpoints, cube corners) exact through spherical
/// polynomials of degree 7.
inline void octahedral_directions(int count,
                                  std::vector<Eigen::Vector3d>& dirs,
                                  std::vector<double>& weights) {
    constexpr double four_pi = 4.0 * 3.14159265358979323846;
    dirs.clear();
    weights.clear();
    auto push_axes = [&](double w) {
        for (int ax = 0; ax < 3; ++ax)
            for (double s : {1.0, -1.0}) {
                Eigen::Vector3d d = Eigen::Vector3d::Zero();
                d[ax] = s;
                dirs.push_back(d);
                weights.push_back(w * four_pi);
            }
    };
    if (count == 6) {
        push_axes(1.0 / 6.0);
        return;
    }
    if (count != 26)
        throw std::invalid_argument("direction set must have 6 or 26 points");
    push_axes(1.0 / 21.0);
    const double we = 4.0 / 105.0, wc = 27.0 / 840.0;
    for (int ax = 0; ax < 3; ++ax)
        for (double s1 : {1.0, -1.0})
            for (double s2 : {1.0, -1.0}) {
                Eigen::Vector3d d = Eigen::Vector3d::Zero();
                d[ax] = s1;
                d[(ax + 1) % 3] = s2;
                dirs.push_back(d.normalized());
                weights.push_back(we * four_pi);
            }
    for (double s0 : {1.0, -1.0})
        for (double s1 : {1.0, -1.0})
            for (double s2 : {1.0, -1.0}) {
                dirs.push_back(Eigen::Vector3d(s0, s1, s2).normalized());
                weights.push_back(wc * four_pi);
            }
}

struct KQuadratureSpec {
    double k_min = 1e-3;
    double k_max = 20.0;
    int radial_points = 96;
    int angular_points = 26;
};

inline KQuadrature make_kquadrature(const KQuadratureSpec& spec) {
    KQuadrature q;
    radial_log_rule(spec.k_min, spec.k_max, spec.radial_points, q.radial_nodes,
                    q.radial_weights);
    octahedral_directions(spec.angular_points, q.directions,
                          q.direction_weights);
    return q;
}

}  // namespace kfp
