#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "kfp/hermite_ops.hpp"
#include "kfp/ode.hpp"
#include "kfp/params.hpp"

namespace kfp {


/// Per-wavenumber state of the linearized system: Hermite coefficients of
/// fhat followed by (rhohat, uhat, thetahat).
struct ModeState {
    Eigen::Vector3d k = Eigen::Vector3d::Zero();
    Eigen::VectorXcd y;

    static ModeState zero(const VelocityBasis& basis,
                          const Eigen::Vector3d& k) {
        ModeState s;
        s.k = k;
        s.y = Eigen::VectorXcd::Zero(basis.size() + 5);
        return s;
    }

    int nf() const { return static_cast<int>(y.size()) - 5; }
    auto fhat() { return y.head(nf()); }
    auto fhat() const { return y.head(nf()); }
    Complex& rho() { return y[nf()]; }
    Complex rho() const { return y[nf()]; }
    auto u() { return y.segment(nf() + 1, 3); }
    auto u() const { return y.segment(nf() + 1, 3); }
    Complex& theta() { return y[nf() + 4]; }
    Complex theta() const { return y[nf() + 4]; }
};

/// Dense generator A(k) of the Fourier-mode linearized dynamics
/// dU/dt = A(k) U.  Row blocks:
///   fhat:  -i v.k fhat + L fhat + uhat . v sqrt(M) + thetahat (|v|^2-3) sqrt(M)
///   rho:   -i k . uhat
///   u:     -mu1 |k|^2 uhat - (mu1+mu2) k (k.uhat) - i k thetahat
///          - i k rhohat - (uhat - bhat)
///   theta: -kappa |k|^2 thetahat - i k . uhat - 3 thetahat + sqrt(6) omegahat
struct ModeGenerator {
    Eigen::Vector3d k;
    PhysicalParams params;
    const VelocityBasis* basis = nullptr;
    Eigen::MatrixXcd A;
};

inline ModeGenerator assemble_generator(const VelocityBasis& basis,
                                        const Eigen::Vector3d& k,
                                        const PhysicalParams& params) {
    params.validate();
    if (basis.spec().truncation < 3)
        throw std::invalid_argument(
            "assemble_generator: truncation too small (need >= 3)");
    const HermiteIndexSet& set = basis.indices();
    const int nf = set.size();
    const int dim = nf + 5;
    const int irho = nf, iu = nf + 1, ith = nf + 4;
    const Complex i1(0.0, 1.0);
    const double sqrt2 = std::sqrt(2.0);

    ModeGenerator gen;
    gen.k = k;
    gen.params = params;
    gen.basis = &basis;
    gen.A = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::MatrixXcd& A = gen.A;

    // Kinetic block: collision diagonal and -i v.k transport.
    for (int m = 0; m < nf; ++m) A(m, m) = -static_cast<double>(set[m].order());
    for (int m = 0; m < nf; ++m) {
        const MultiIndex& a = set[m];
        for (int ax = 0; ax < 3; ++ax) {
            if (k[ax] == 0.0) continue;
            int p = set.position(a.bump(ax, 1));
            if (p >= 0) A(p, m) -= i1 * k[ax] * std::sqrt(a[ax] + 1.0);
            p = set.position(a.bump(ax, -1));
            if (p >= 0)
                A(p, m) -= i1 * k[ax] * std::sqrt(static_cast<double>(a[ax]));
        }
    }
    // Exchange sources into the kinetic block and moment couplings back.
    for (int ax = 0; ax < 3; ++ax) {
        MultiIndex e;
        e[ax] = 1;
        const int pe = set.require_position(e);
        const int p2e = set.require_position(e.bump(ax, 1));
        A(pe, iu + ax) = 1.0;       // uhat . v sqrt(M)
        A(p2e, ith) = sqrt2;        // thetahat (|v|^2 - 3) sqrt(M)
        A(iu + ax, pe) = 1.0;       // + bhat in the velocity row
        A(ith, p2e) = sqrt2;        // + sqrt(6) omegahat in the theta row
    }
    // Fluid rows.
    const double k2 = k.squaredNorm();
    for (int ax = 0; ax < 3; ++ax) {
        A(irho, iu + ax) = -i1 * k[ax];
        A(iu + ax, iu + ax) += -params.mu1 * k2 - 1.0;
        for (int bx = 0; bx < 3; ++bx)
            A(iu + ax, iu + bx) += -(params.mu1 + params.mu2) * k[ax] * k[bx];
        A(iu + ax, ith) = -i1 * k[ax];
        A(iu + ax, irho) = -i1 * k[ax];
        A(ith, iu + ax) = -i1 * k[ax];
    }
    A(ith, ith) += -params.kappa * k2 - 3.0;
    return gen;
}

/// Evolve a mode under dU/dt = A U + S(t) with adaptive error control.
inline ModeState evolve_mode(
    const ModeGenerator& gen, const ModeState& state0, double t,
    const std::function<Eigen::VectorXcd(double)>& source = {},
    double rtol = 1e-10) {
    if (t < 0) throw std::invalid_argument("evolve_mode: negative time");
    ModeState out = state0;
    if (t == 0.0) return out;
    IntegratorOptions opts;
    opts.rtol = rtol;
    auto rhs = [&](double s, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        dy.noalias() = gen.A * y;
        if (source) dy += source(s);
    };
    out.y = integrate_dp45_to(rhs, 0.0, state0.y, t, opts);
    return out;
}

/// Small positive weights of the per-mode Lyapunov functional.
struct LyapunovWeights {
    double kappa1 = 0.01;
    double kappa2 = 0.01;
    double kappa3 = 0.01;

    void validate() const {
        if (kappa1 < 0 || kappa2 < 0 || kappa3 < 0 || kappa1 >= 1 ||
            kappa2 >= 1 || kappa3 >= 1)
            throw std::invalid_argument("Lyapunov weights must lie in [0,1)");
    }
};

/// Lyapunov functional of a mode: the plain squared norm plus two small
/// cross pairings.  Pairings (x|y) take the complex conjugate on the right.
inline double mode_lyapunov_em(const VelocityBasis& basis,
                               const ModeState& state,
                               const LyapunovWeights& w) {
    w.validate();
    const Eigen::Vector3d& k = state.k;
    const double k2 = k.squaredNorm();
    const Complex i1(0.0, 1.0);

    double em = state.y.squaredNorm();
    if (w.kappa2 == 0 && w.kappa3 == 0) return em;

    CoeffVector<Complex> f = state.fhat();
    MacroMoments<Complex> mac = macro_moments(basis, f);
    CoeffVector<Complex> micro = f - macro_coefficients(basis, mac);
    Eigen::Matrix3cd gamma = moment_gamma(basis, micro);
    Eigen::Vector3cd ups = moment_upsilon(basis, micro);

    Complex cross1 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            cross1 += (i1 * k[i] * mac.b[j] + i1 * k[j] * mac.b[i]) *
                      std::conj(gamma(i, j));
    Complex cross2 = 0.0;
    for (int i = 0; i < 3; ++i)
        cross2 += i1 * k[i] * mac.omega * std::conj(ups[i]);
    Complex kups = 0.0, kb = 0.0;
    for (int j = 0; j < 3; ++j) {
        kups += k[j] * ups[j];
        kb += k[j] * mac.b[j];
    }
    const double s65 = std::sqrt(6.0) / 5.0;
    Complex cross3 = mac.a * std::conj(i1 * s65 * kups - i1 * kb);
    Complex e1 = (cross1 + cross2 + w.kappa1 * cross3) / (1.0 + k2);

    Complex ucross = 0.0;
    for (int j = 0; j < 3; ++j)
        ucross += state.u()[j] * std::conj(i1 * k[j] * state.rho());
    ucross /= (1.0 + k2);

    return em + w.kappa2 * e1.real() + w.kappa3 * ucross.real();
}

/// Guard object: verifies on construction that the weighted quadratic form
/// stays positive on a deterministic sample of unit states.
class EmFunctional {
  public:
    EmFunctional(const VelocityBasis& basis, const Eigen::Vector3d& k,
                 const LyapunovWeights& w)
        : basis_(&basis), k_(k), w_(w) {
        w.validate();
        std::mt19937_64 rng(0x5eedULL);
        std::normal_distribution<double> nd;
        const int dim = basis.size() + 5;
        for (int trial = 0; trial < 64; ++trial) {
            ModeState s;
            s.k = k;
            s.y.resize(dim);
            for (int i = 0; i < dim; ++i) s.y[i] = Complex(nd(rng), nd(rng));
            s.y /= s.y.norm();
            if (mode_lyapunov_em(basis, s, w) <= 0.0)
                throw std::invalid_argument(
                    "Lyapunov weights give a non-positive form at this k");
        }
    }

    double operator()(const ModeState& s) const {
        return mode_lyapunov_em(*basis_, s, w_);
    }

  private:
    const VelocityBasis* basis_;
    Eigen::Vector3d k_;
    LyapunovWeights w_;
};

struct ModeDecayFit {
    double c = 0.0;                    // rate against |k|^2 t / (1+|k|^2)
    double max_positive_residual = 0;  // envelope violation in log scale
};

/// Fit the decay envelope E_M(t) <= E_M(0) exp(-c |k|^2 t / (1+|k|^2)).
inline ModeDecayFit fit_mode_decay(const ModeGenerator& gen,
                                   const ModeState& state0,
                                   const std::vector<double>& t_grid,
                                   const LyapunovWeights& w,
                                   double rtol = 1e-10) {
    if (t_grid.size() < 8)
        throw std::invalid_argument("fit_mode_decay: need >= 8 samples");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1])
            throw std::invalid_argument("fit_mode_decay: times not increasing");
    EmFunctional em(*gen.basis, gen.k, w);
    const double em0 = em(state0);
    if (em0 <= 0.0)
        throw std::invalid_argument("fit_mode_decay: E_M(0) vanishes");

    const double k2 = gen.k.squaredNorm();
    const double xfac = k2 / (1.0 + k2);
    std::vector<double> xs, ys;
    IntegratorOptions opts;
    opts.rtol = rtol;
    auto rhs = [&](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
        dy.noalias() = gen.A * y;
    };
    integrate_dp45(rhs, 0.0, state0.y, t_grid,
                   [&](double t, const Eigen::VectorXcd& y) {
                       ModeState s;
                       s.k = gen.k;
                       s.y = y;
                       double v = em(s);
                       if (v > 0) {
                           xs.push_back(xfac * t);
                           ys.push_back(std::log(v));
                       }
                   },
                   opts);
    if (xs.size() < 8)
        throw std::runtime_error("fit_mode_decay: functional underflowed");

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    ModeDecayFit fit;
    fit.c = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double y0 = std::log(em0);
    for (std::size_t i = 0; i < xs.size(); ++i)
        fit.max_positive_residual = std::max(
            fit.max_positive_residual, ys[i] - (y0 - fit.c * xs[i]));
    return fit;
}

/// Exact evolution of one mode through the eigendecomposition of A(k).
/// Serves both as the test oracle for the adaptive integrator and as the
/// fast propagator for wavenumber-quadrature sweeps, where stability-limited
/// explicit stepping of thousands of stiff modes would be prohibitive.
class ModePropagator {
  public:
    explicit ModePropagator(const ModeGenerator& gen) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(gen.A);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("mode eigendecomposition failed");
        lambda_ = es.eigenvalues();
        v_ = es.eigenvectors();
        vlu_.compute(v_);
    }

    Eigen::VectorXcd evolve(const Eigen::VectorXcd& y0, double t) const {
        Eigen::VectorXcd w = vlu_.solve(y0);
        for (int i = 0; i < w.size(); ++i) w[i] *= std::exp(lambda_[i] * t);
        return v_ * w;
    }

    /// Response at time t to a constant source s switched on during
    /// [0, t_off]:  int_0^min(t,t_off) e^{(t-s)A} s ds.
    Eigen::VectorXcd forced_response(const Eigen::VectorXcd& s, double t,
                                     double t_off) const {
        const double ton = std::min(t, t_off);
        Eigen::VectorXcd w = vlu_.solve(s);
        for (int i = 0; i < w.size(); ++i) {
            Complex lam = lambda_[i];
            Complex phi = (std::abs(lam) * ton < 1e-8)
                              ? Complex(ton, 0.0) * (1.0 + 0.5 * lam * ton)
                              : (std::exp(lam * ton) - 1.0) / lam;
            w[i] *= phi * std::exp(lam * (t - ton));
        }
        return v_ * w;
    }

    double spectral_abscissa() const {
        double m = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < lambda_.size(); ++i)
            m = std::max(m, lambda_[i].real());
        return m;
    }

  private:
    Eigen::VectorXcd lambda_;
    Eigen::MatrixXcd v_;
    Eigen::PartialPivLU<Eigen::MatrixXcd> vlu_;
};

}  // namespace kfp
