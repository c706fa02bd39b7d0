#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace kfp {

/// Nodes and weights for Gauss quadrature against the standard Gaussian
/// measure (2*pi)^(-1/2) exp(-x^2/2) dx.  Weights sum to one; the rule is
/// exact for polynomials of degree <= 2q - 1.
struct GaussHermiteRule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// Golub-Welsch construction from the Jacobi matrix of the probabilists'
/// Hermite recurrence x p_n = sqrt(n+1) p_{n+1} + sqrt(n) p_{n-1}.
inline GaussHermiteRule gauss_hermite(int q) {
    if (q < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(q, q);
    for (int n = 1; n < q; ++n) {
        double beta = std::sqrt(static_cast<double>(n));
        jacobi(n, n - 1) = beta;
        jacobi(n - 1, n) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    GaussHermiteRule rule;
    rule.nodes = es.eigenvalues();
    rule.weights.resize(q);
    for (int i = 0; i < q; ++i) {
        double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = v0 * v0;
    }
    return rule;
}

}  // namespace kfp
