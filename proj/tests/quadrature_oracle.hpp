// Independent Gauss-Hermite quadrature oracle used by the unit and
// acceptance suites.  Everything here evaluates the *defining integrals* of
// the velocity-space operators through pointwise polynomial reconstruction
// and tensor quadrature -- no coefficient-space recurrences -- so it can
// arbitrate the ladder/diagonal implementations.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "kfp/hermite_basis.hpp"
#include "kfp/hermite_ops.hpp"

namespace kfp_test {

using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

class QuadOracle {
  public:
    explicit QuadOracle(const kfp::VelocityBasis& basis) : basis_(&basis) {
        const auto& rule = basis.rule_1d();
        const int q = rule.nodes.size();
        const auto& set = basis.indices();
        const int nf = set.size();
        const int nmax = basis.spec().truncation;

        MatrixXd he(q, nmax + 1);
        for (int i = 0; i < q; ++i)
            for (int d = 0; d <= nmax; ++d)
                he(i, d) = kfp::hermite_he(d, rule.nodes[i]) *
                           kfp::detail::inv_sqrt_factorial(d);

        const long nn = static_cast<long>(q) * q * q;
        w_.resize(nn);
        v_.resize(nn, 3);
        p_.resize(nn, nf);
        for (int i = 0; i < 3; ++i) d_[i].resize(nn, nf);
        lap_.resize(nn, nf);

        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                for (int k = 0; k < q; ++k) {
                    long row = (static_cast<long>(i) * q + j) * q + k;
                    w_[row] = rule.weights[i] * rule.weights[j] *
                              rule.weights[k];
                    v_(row, 0) = rule.nodes[i];
                    v_(row, 1) = rule.nodes[j];
                    v_(row, 2) = rule.nodes[k];
                    for (int m = 0; m < nf; ++m) {
                        const kfp::MultiIndex& a = set[m];
                        double h0 = he(i, a[0]), h1 = he(j, a[1]),
                               h2 = he(k, a[2]);
                        p_(row, m) = h0 * h1 * h2;
                        // d/dx (He_n / sqrt(n!)) = sqrt(n) He_{n-1}/sqrt((n-1)!)
                        double g0 = a[0] > 0 ? std::sqrt(a[0] * 1.0) *
                                                   he(i, a[0] - 1)
                                             : 0.0;
                        double g1 = a[1] > 0 ? std::sqrt(a[1] * 1.0) *
                                                   he(j, a[1] - 1)
                                             : 0.0;
                        double g2 = a[2] > 0 ? std::sqrt(a[2] * 1.0) *
                                                   he(k, a[2] - 1)
                                             : 0.0;
                        d_[0](row, m) = g0 * h1 * h2;
                        d_[1](row, m) = h0 * g1 * h2;
                        d_[2](row, m) = h0 * h1 * g2;
                        double l0 = a[0] > 1 ? std::sqrt(a[0] * (a[0] - 1.0)) *
                                                   he(i, a[0] - 2)
                                             : 0.0;
                        double l1 = a[1] > 1 ? std::sqrt(a[1] * (a[1] - 1.0)) *
                                                   he(j, a[1] - 2)
                                             : 0.0;
                        double l2 = a[2] > 1 ? std::sqrt(a[2] * (a[2] - 1.0)) *
                                                   he(k, a[2] - 2)
                                             : 0.0;
                        lap_(row, m) =
                            l0 * h1 * h2 + h0 * l1 * h2 + h0 * h1 * l2;
                    }
                }
    }

    const kfp::VelocityBasis& basis() const { return *basis_; }

    /// Node values of f / sqrt(M) for a coefficient vector.
    VectorXd poly(const VectorXd& c) const { return p_ * c; }
    VectorXd dpoly(int axis, const VectorXd& c) const { return d_[axis] * c; }

    /// E_gamma[a b] -- the L_v^2 inner product of a*sqrt(M) and b*sqrt(M).
    double inner(const VectorXd& a, const VectorXd& b) const {
        return (w_.array() * a.array() * b.array()).sum();
    }

    /// Coefficients <psi_beta, g sqrt(M)> of a node-value function g.
    VectorXd project_values(const VectorXd& g) const {
        return p_.transpose() * (w_.array() * g.array()).matrix();
    }

    // --- Defining-integral evaluations -------------------------------

    /// v_i f by pointwise multiplication, projected back onto the span.
    VectorXd mult_v(int axis, const VectorXd& c) const {
        return project_values(v_.col(axis).cwiseProduct(poly(c)));
    }

    /// d/dv_i f: node polynomial is dpoly - (v_i/2) poly.
    VectorXd deriv_v(int axis, const VectorXd& c) const {
        return project_values(dpoly(axis, c) -
                              0.5 * v_.col(axis).cwiseProduct(poly(c)));
    }

    /// (d/dv_i + v_i/2) f -- the polynomial part is exactly dpoly.
    VectorXd lower(int axis, const VectorXd& c) const {
        return project_values(dpoly(axis, c));
    }

    /// (-d/dv_i + v_i/2) f -- polynomial part v_i poly - dpoly.
    VectorXd raise(int axis, const VectorXd& c) const {
        return project_values(v_.col(axis).cwiseProduct(poly(c)) -
                              dpoly(axis, c));
    }

    /// Fokker-Planck operator through its Dirichlet form:
    /// <psi_beta, L f> = -int M grad(f/sqrt M) . grad(psi_beta/sqrt M).
    VectorXd collision(const VectorXd& c) const {
        VectorXd r = VectorXd::Zero(c.size());
        for (int i = 0; i < 3; ++i) {
            VectorXd df = dpoly(i, c);
            r -= d_[i].transpose() * (w_.array() * df.array()).matrix();
        }
        return r;
    }

    double collision_energy(const VectorXd& c) const {
        double s = 0.0;
        for (int i = 0; i < 3; ++i) {
            VectorXd df = dpoly(i, c);
            s += (w_.array() * df.array().square()).sum();
        }
        return s;
    }

    /// theta * (1/sqrt M) Lap_v(sqrt(M) f), via double integration by parts:
    /// <psi_beta, .> = E_gamma[poly_f * Lap poly_beta].
    VectorXd maxwell_laplacian(const VectorXd& c) const {
        return lap_.transpose() * (w_.array() * poly(c).array()).matrix();
    }

    /// All velocity terms of the kinetic perturbation tendency other than
    /// transport and L, from their defining integrands.
    VectorXd kinetic_terms(const VectorXd& c, const Vector3d& u,
                           double theta) const {
        VectorXd pf = poly(c);
        VectorXd uv = v_ * u;   // (u . v) at nodes
        VectorXd drift = uv.cwiseProduct(pf);
        for (int i = 0; i < 3; ++i) drift -= u[i] * dpoly(i, c);
        VectorXd vsq = v_.rowwise().squaredNorm();
        VectorXd source = uv + theta * (vsq.array() - 3.0).matrix();
        return project_values(drift + source) + theta * maxwell_laplacian(c);
    }

    double moment_a(const VectorXd& c) const {
        return (w_.array() * poly(c).array()).sum();
    }
    Vector3d moment_b(const VectorXd& c) const {
        Vector3d b;
        VectorXd pf = poly(c);
        for (int i = 0; i < 3; ++i)
            b[i] = (w_.array() * v_.col(i).array() * pf.array()).sum();
        return b;
    }
    double moment_omega(const VectorXd& c) const {
        VectorXd vsq = v_.rowwise().squaredNorm();
        return (w_.array() * (vsq.array() - 3.0) * poly(c).array()).sum() /
               std::sqrt(6.0);
    }
    Eigen::Matrix3d moment_gamma(const VectorXd& c) const {
        Eigen::Matrix3d g;
        VectorXd pf = poly(c);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                g(i, j) = (w_.array() *
                           (v_.col(i).array() * v_.col(j).array() - 1.0) *
                           pf.array())
                              .sum();
        return g;
    }
    Vector3d moment_upsilon(const VectorXd& c) const {
        Vector3d up;
        VectorXd pf = poly(c);
        VectorXd vsq = v_.rowwise().squaredNorm();
        for (int i = 0; i < 3; ++i)
            up[i] = (w_.array() * v_.col(i).array() *
                     (vsq.array() - 3.0) * pf.array())
                        .sum() /
                    std::sqrt(6.0);
        return up;
    }

    /// |f|_nu^2 = int |grad_v f|^2 + (1+|v|^2)|f|^2 dv, fully pointwise.
    double nu_norm_sq(const VectorXd& c) const {
        VectorXd pf = poly(c);
        VectorXd vsq = v_.rowwise().squaredNorm();
        double s =
            (w_.array() * (1.0 + vsq.array()) * pf.array().square()).sum();
        for (int i = 0; i < 3; ++i) {
            VectorXd gi =
                dpoly(i, c) - 0.5 * v_.col(i).cwiseProduct(pf);
            s += (w_.array() * gi.array().square()).sum();
        }
        return s;
    }

    double norm_sq(const VectorXd& c) const {
        VectorXd pf = poly(c);
        return (w_.array() * pf.array().square()).sum();
    }

    /// Macro projection by quadrature of the three moment integrals.
    VectorXd macro_projection(const VectorXd& c) const {
        double a = moment_a(c);
        Vector3d b = moment_b(c);
        double om = moment_omega(c);
        VectorXd vsq = v_.rowwise().squaredNorm();
        VectorXd g = VectorXd::Constant(w_.size(), a);
        g += v_ * b;
        g += om / std::sqrt(6.0) * (vsq.array() - 3.0).matrix();
        return project_values(g);
    }

  private:
    const kfp::VelocityBasis* basis_;
    VectorXd w_;
    MatrixXd v_;
    MatrixXd p_;
    MatrixXd d_[3];
    MatrixXd lap_;
};

/// Deterministic random coefficient vector supported on degrees <= band.
inline VectorXd random_banded(const kfp::VelocityBasis& basis, int band,
                              std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    VectorXd c = VectorXd::Zero(basis.size());
    for (int m = 0; m < basis.size(); ++m)
        if (basis.indices()[m].order() <= band) c[m] = nd(rng);
    return c;
}

}  // namespace kfp_test
