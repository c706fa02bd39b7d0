#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "kfp/gauss_hermite.hpp"
#include "kfp/multi_index.hpp"

namespace kfp {

/// Truncation and quadrature order for the weighted Hermite velocity basis
/// psi_alpha(v) = prod_i He_{alpha_i}(v_i) sqrt(M(v)) / sqrt(alpha_i!), where
/// M is the normalized Maxwellian.  The macro range (density, momentum,
/// energy shells) needs degrees 0..2, hence truncation >= 2.
struct HermiteBasisSpec {
    int truncation = 8;
    int quadrature_order = 12;

    void validate() const {
        if (truncation < 2)
            throw std::invalid_argument("basis truncation must be >= 2");
        if (quadrature_order < truncation + 4)
            throw std::invalid_argument(
                "quadrature order must be >= truncation + 4");
    }
};

/// Probabilists' Hermite polynomial He_n(x), three-term recurrence.
inline double hermite_he(int n, double x) {
    if (n == 0) return 1.0;
    double hm = 1.0, h = x;
    for (int k = 1; k < n; ++k) {
        double hp = x * h - static_cast<double>(k) * hm;
        hm = h;
        h = hp;
    }
    return h;
}

/// sqrt(M(v)) with M the normalized Maxwellian (2*pi)^{-3/2} exp(-|v|^2/2).
inline double sqrt_maxwellian(const Eigen::Vector3d& v) {
    constexpr double pi = std::numbers::pi;
    return std::pow(2.0 * pi, -0.75) * std::exp(-0.25 * v.squaredNorm());
}

namespace detail {
inline double inv_sqrt_factorial(int n) {
    double f = 1.0;
    for (int k = 2; k <= n; ++k) f *= static_cast<double>(k);
    return 1.0 / std::sqrt(f);
}
}  // namespace detail

/// Velocity-space discretization: index set of the truncated basis, an
/// extended set used to carry one-shell overflow exactly (derivatives and
/// v-multiplication raise the degree by one), and the tensor Gauss-Hermite
/// rule shared by all quadrature oracles.
class VelocityBasis {
  public:
    explicit VelocityBasis(HermiteBasisSpec spec)
        : spec_(spec),
          set_((spec.validate(), spec.truncation)),
          extended_(spec.truncation + 1),
          rule_(gauss_hermite(spec.quadrature_order)) {}

    const HermiteBasisSpec& spec() const { return spec_; }
    const HermiteIndexSet& indices() const { return set_; }
    const HermiteIndexSet& extended_indices() const { return extended_; }
    const GaussHermiteRule& rule_1d() const { return rule_; }
    int size() const { return set_.size(); }

    /// psi_alpha(v); throws when |alpha| exceeds the truncation.
    double eval(const MultiIndex& alpha, const Eigen::Vector3d& v) const {
        set_.require_position(alpha);
        double p = sqrt_maxwellian(v);
        for (int i = 0; i < 3; ++i)
            p *= hermite_he(alpha[i], v[i]) *
                 detail::inv_sqrt_factorial(alpha[i]);
        return p;
    }

    /// Galerkin projection c_alpha = <f, psi_alpha> by tensor quadrature.
    /// The integrand is evaluated as (f/sqrt(M)) * (He_alpha/sqrt(alpha!))
    /// against the Gaussian measure, which is exact whenever f/sqrt(M) is a
    /// polynomial within the rule's degree.
    Eigen::VectorXd project(
        const std::function<double(const Eigen::Vector3d&)>& f) const {
        const int q = rule_.nodes.size();
        const int n = set_.size();
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd he(q, spec_.truncation + 1);
        for (int i = 0; i < q; ++i)
            for (int d = 0; d <= spec_.truncation; ++d)
                he(i, d) = hermite_he(d, rule_.nodes[i]) *
                           detail::inv_sqrt_factorial(d);
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                for (int k = 0; k < q; ++k) {
                    Eigen::Vector3d v(rule_.nodes[i], rule_.nodes[j],
                                      rule_.nodes[k]);
                    double fv = f(v);
                    if (!std::isfinite(fv))
                        throw std::domain_error(
                            "project: non-finite sample value");
                    double w = rule_.weights[i] * rule_.weights[j] *
                               rule_.weights[k] * fv / sqrt_maxwellian(v);
                    for (int m = 0; m < n; ++m) {
                        const MultiIndex& a = set_[m];
                        c[m] += w * he(i, a[0]) * he(j, a[1]) * he(k, a[2]);
                    }
                }
        return c;
    }

  private:
    HermiteBasisSpec spec_;
    HermiteIndexSet set_;
    HermiteIndexSet extended_;
    GaussHermiteRule rule_;
};

}  // namespace kfp
