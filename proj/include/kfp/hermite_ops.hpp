#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "kfp/hermite_basis.hpp"

namespace kfp {

using Complex = std::complex<double>;

template <typename S>
using CoeffVector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Coefficient-space realizations of the elementary velocity operators.
/// With A+ = -d/dv_i + v_i/2 and A- = d/dv_i + v_i/2 acting on the weighted
/// basis: A+ psi_a = sqrt(a_i+1) psi_{a+e_i}, A- psi_a = sqrt(a_i) psi_{a-e_i},
/// v_i = A+ + A-, d/dv_i = (A- - A+)/2.
enum class Ladder { kMultV, kDV, kLower, kRaise };

/// Apply a ladder operator, writing into a (possibly larger) output set.
/// Contributions landing outside the output set are discarded (Galerkin
/// closure); with out one degree larger than in, the action is exact.
template <typename S>
CoeffVector<S> apply_ladder_into(const HermiteIndexSet& in,
                                 const HermiteIndexSet& out, Ladder kind,
                                 int axis, const CoeffVector<S>& c) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("bad ladder axis");
    CoeffVector<S> r = CoeffVector<S>::Zero(out.size());
    for (int m = 0; m < in.size(); ++m) {
        if (c[m] == S(0)) continue;
        const MultiIndex& a = in[m];
        const double up = std::sqrt(a[axis] + 1.0);
        const double dn = std::sqrt(static_cast<double>(a[axis]));
        switch (kind) {
            case Ladder::kRaise: {
                int p = out.position(a.bump(axis, 1));
                if (p >= 0) r[p] += up * c[m];
                break;
            }
            case Ladder::kLower: {
                int p = out.position(a.bump(axis, -1));
                if (p >= 0) r[p] += dn * c[m];
                break;
            }
            case Ladder::kMultV: {
                int p = out.position(a.bump(axis, 1));
                if (p >= 0) r[p] += up * c[m];
                p = out.position(a.bump(axis, -1));
                if (p >= 0) r[p] += dn * c[m];
                break;
            }
            case Ladder::kDV: {
                int p = out.position(a.bump(axis, -1));
                if (p >= 0) r[p] += 0.5 * dn * c[m];
                p = out.position(a.bump(axis, 1));
                if (p >= 0) r[p] -= 0.5 * up * c[m];
                break;
            }
        }
    }
    return r;
}

template <typename S>
CoeffVector<S> apply_ladder(const VelocityBasis& basis, Ladder kind, int axis,
                            const CoeffVector<S>& c) {
    return apply_ladder_into(basis.indices(), basis.indices(), kind, axis, c);
}

/// Linearized Fokker-Planck operator: diagonal with eigenvalue -|alpha|.
template <typename S>
CoeffVector<S> apply_collision(const VelocityBasis& basis,
                               const CoeffVector<S>& c) {
    const HermiteIndexSet& set = basis.indices();
    CoeffVector<S> r(set.size());
    for (int m = 0; m < set.size(); ++m)
        r[m] = -static_cast<double>(set[m].order()) * c[m];
    return r;
}

/// -<f, Lf> = sum |alpha| |c_alpha|^2.
template <typename S>
double collision_dissipation(const VelocityBasis& basis,
                             const CoeffVector<S>& c) {
    double s = 0.0;
    for (int m = 0; m < basis.indices().size(); ++m)
        s += basis.indices()[m].order() * std::norm(std::complex<double>(c[m]));
    return s;
}

namespace detail {
inline double sq_abs(double x) { return x * x; }
inline double sq_abs(const std::complex<double>& x) { return std::norm(x); }
}  // namespace detail

/// Velocity-side terms of the kinetic perturbation equation other than
/// transport and the collision operator, written as a tendency:
///   u . (-grad_v + v/2) f   (drift against the Maxwellian tilt)
/// + u . v sqrt(M)           (momentum exchange source)
/// + theta (|v|^2 - 3) sqrt(M)  (energy exchange source)
/// + theta * sum_i (-d/dv_i + v_i/2)^2 f   (temperature diffusion residual)
template <typename S, typename Su, typename St>
CoeffVector<S> kinetic_linear_terms(const VelocityBasis& basis,
                                    const CoeffVector<S>& c,
                                    const Eigen::Matrix<Su, 3, 1>& u,
                                    const St& theta) {
    const HermiteIndexSet& set = basis.indices();
    CoeffVector<S> r = CoeffVector<S>::Zero(set.size());
    const double sqrt2 = std::sqrt(2.0);
    for (int i = 0; i < 3; ++i) {
        MultiIndex e;
        e[i] = 1;
        r[set.require_position(e)] += S(u[i]);
        r[set.require_position(e.bump(i, 1))] += S(sqrt2 * theta);
    }
    for (int m = 0; m < set.size(); ++m) {
        if (c[m] == S(0)) continue;
        const MultiIndex& a = set[m];
        for (int i = 0; i < 3; ++i) {
            int p = set.position(a.bump(i, 1));
            if (p >= 0) r[p] += S(u[i]) * std::sqrt(a[i] + 1.0) * c[m];
            p = set.position(a.bump(i, 2));
            if (p >= 0)
                r[p] += S(theta) * std::sqrt((a[i] + 1.0) * (a[i] + 2.0)) *
                        c[m];
        }
    }
    return r;
}

template <typename S>
struct MacroMoments {
    S a{};
    Eigen::Matrix<S, 3, 1> b = Eigen::Matrix<S, 3, 1>::Zero();
    S omega{};
};

/// Macro coordinates: a = <sqrt(M), f>, b_i = <v_i sqrt(M), f>,
/// omega = <(|v|^2 - 3)/sqrt(6) sqrt(M), f>.
template <typename S>
MacroMoments<S> macro_moments(const VelocityBasis& basis,
                              const CoeffVector<S>& c) {
    const HermiteIndexSet& set = basis.indices();
    MacroMoments<S> m;
    m.a = c[set.require_position(MultiIndex{})];
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    for (int i = 0; i < 3; ++i) {
        MultiIndex e;
        e[i] = 1;
        m.b[i] = c[set.require_position(e)];
        m.omega += S(inv_sqrt3) * c[set.require_position(e.bump(i, 1))];
    }
    return m;
}

/// Gamma_{ij} f = <(v_i v_j - 1) sqrt(M), f>.
template <typename S>
Eigen::Matrix<S, 3, 3> moment_gamma(const VelocityBasis& basis,
                                    const CoeffVector<S>& c) {
    const HermiteIndexSet& set = basis.indices();
    Eigen::Matrix<S, 3, 3> g;
    const S c0 = c[set.require_position(MultiIndex{})];
    const double sqrt2 = std::sqrt(2.0);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            MultiIndex a;
            a[i] += 1;
            a[j] += 1;
            if (i == j)
                g(i, j) = S(sqrt2) * c[set.require_position(a)];
            else
                g(i, j) = c[set.require_position(a)] - c0;
            g(j, i) = g(i, j);
        }
    return g;
}

/// Upsilon_i f = <(1/sqrt(6)) v_i (|v|^2 - 3) sqrt(M), f>; reads degree-3
/// coefficients, so the truncation must be at least 3.
template <typename S>
Eigen::Matrix<S, 3, 1> moment_upsilon(const VelocityBasis& basis,
                                      const CoeffVector<S>& c) {
    const HermiteIndexSet& set = basis.indices();
    if (basis.spec().truncation < 3)
        throw std::invalid_argument(
            "moment_upsilon: truncation too small for requested moment");
    Eigen::Matrix<S, 3, 1> up;
    const double c1 = 2.0 / std::sqrt(6.0);
    const double c2 = 1.0 / std::sqrt(3.0);
    for (int i = 0; i < 3; ++i) {
        MultiIndex e;
        e[i] = 1;
        S v = c[set.require_position(e.bump(i, 2))] +
              S(c1) * c[set.require_position(e)];
        for (int j = 0; j < 3; ++j) {
            if (j == i) continue;
            v += S(c2) * c[set.require_position(e.bump(j, 2))];
        }
        up[i] = v;
    }
    return up;
}

/// Coefficients of the macro projection P f = a psi_0 + b . (v sqrt(M))
/// + omega (|v|^2-3)/sqrt(6) sqrt(M).
template <typename S>
CoeffVector<S> macro_coefficients(const VelocityBasis& basis,
                                  const MacroMoments<S>& m) {
    const HermiteIndexSet& set = basis.indices();
    CoeffVector<S> r = CoeffVector<S>::Zero(set.size());
    r[set.require_position(MultiIndex{})] = m.a;
    const double inv_sqrt3 = 1.0 / std::sqrt(3.0);
    for (int i = 0; i < 3; ++i) {
        MultiIndex e;
        e[i] = 1;
        r[set.require_position(e)] = m.b[i];
        r[set.require_position(e.bump(i, 1))] = S(inv_sqrt3) * m.omega;
    }
    return r;
}

/// f = P f + (I - P) f.  The micro part has vanishing a, b, omega.
template <typename S>
std::pair<CoeffVector<S>, CoeffVector<S>> decompose_macro_micro(
    const VelocityBasis& basis, const CoeffVector<S>& c) {
    CoeffVector<S> macro = macro_coefficients(basis, macro_moments(basis, c));
    return {macro, c - macro};
}

template <typename S>
CoeffVector<S> micro_part(const VelocityBasis& basis,
                          const CoeffVector<S>& c) {
    return c - macro_coefficients(basis, macro_moments(basis, c));
}

/// Squared nu-weighted norm |f|_nu^2 = int |grad_v f|^2 + (1+|v|^2) |f|^2 dv,
/// evaluated exactly by carrying the one-shell overflow of d/dv and v_i into
/// the extended index set and Parseval-summing.
template <typename S>
double nu_norm_sq(const VelocityBasis& basis, const CoeffVector<S>& c) {
    const HermiteIndexSet& in = basis.indices();
    const HermiteIndexSet& ext = basis.extended_indices();
    double s = 0.0;
    for (int m = 0; m < in.size(); ++m) s += detail::sq_abs(c[m]);
    for (int i = 0; i < 3; ++i) {
        CoeffVector<S> d = apply_ladder_into(in, ext, Ladder::kDV, i, c);
        CoeffVector<S> mv = apply_ladder_into(in, ext, Ladder::kMultV, i, c);
        for (int m = 0; m < ext.size(); ++m)
            s += detail::sq_abs(d[m]) + detail::sq_abs(mv[m]);
    }
    return s;
}

/// Values of every basis function at the tensor quadrature nodes; row = node
/// (lexicographic in the three axes), column = basis index.  Used for
/// pointwise reconstruction of f(v).
inline Eigen::MatrixXd basis_node_values(const VelocityBasis& basis) {
    const GaussHermiteRule& rule = basis.rule_1d();
    const int q = rule.nodes.size();
    const HermiteIndexSet& set = basis.indices();
    Eigen::MatrixXd he(q, basis.spec().truncation + 1);
    for (int i = 0; i < q; ++i)
        for (int d = 0; d <= basis.spec().truncation; ++d)
            he(i, d) =
                hermite_he(d, rule.nodes[i]) * detail::inv_sqrt_factorial(d);
    Eigen::MatrixXd psi(q * q * q, set.size());
    for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j)
            for (int k = 0; k < q; ++k) {
                Eigen::Vector3d v(rule.nodes[i], rule.nodes[j], rule.nodes[k]);
                double root_m = sqrt_maxwellian(v);
                int row = (i * q + j) * q + k;
                for (int m = 0; m < set.size(); ++m) {
                    const MultiIndex& a = set[m];
                    psi(row, m) =
                        root_m * he(i, a[0]) * he(j, a[1]) * he(k, a[2]);
                }
            }
    return psi;
}

}  // namespace kfp
