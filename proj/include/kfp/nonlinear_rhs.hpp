#pragma once

#include "kfp/nonlinear_state.hpp"

namespace kfp {

namespace detail {

/// Spectral-space state used inside the steppers.
struct StateSpec {
    Eigen::MatrixXcd f;
    Eigen::MatrixXcd fluid;
};

inline StateSpec to_spectral(const KineticFluidState& s) {
    return {forward_columns(s.grid(), s.f),
            forward_columns(s.grid(), s.fluid)};
}

/// Holds the auxiliary spectral derivatives of one state.
struct Derivatives {
    std::array<Eigen::MatrixXd, 3> df;    // d_i of every kinetic column
    std::array<Eigen::MatrixXd, 3> dfl;   // d_i of the five fluid fields
    Eigen::MatrixXd lap_fluid;            // Laplacian of the fluid fields
    Eigen::VectorXd div_u;
    std::array<Eigen::VectorXd, 3> grad_div_u;
};

inline Derivatives spatial_derivatives(const SpatialGrid& grid,
                                       const StateSpec& spec) {
    Derivatives d;
    const long npts = grid.points();
    Eigen::VectorXd k2(npts);
    std::array<Eigen::VectorXcd, 3> ik;
    for (int ax = 0; ax < grid.dim; ++ax) ik[ax].resize(npts);
    for (long p = 0; p < npts; ++p) {
        Eigen::Vector3d k = grid.wavevector(p);
        k2[p] = k.squaredNorm();
        for (int ax = 0; ax < grid.dim; ++ax)
            ik[ax][p] = Complex(0.0, k[ax]);
    }
    for (int ax = 0; ax < grid.dim; ++ax) {
        d.df[ax] = inverse_columns_real(
            grid, spec.f.array().colwise() * ik[ax].array());
        d.dfl[ax] = inverse_columns_real(
            grid, spec.fluid.array().colwise() * ik[ax].array());
    }
    d.lap_fluid = inverse_columns_real(
        grid, spec.fluid.array().colwise() * (-k2.cast<Complex>()).array());
    // div u and its gradient
    Eigen::VectorXcd divu_hat = Eigen::VectorXcd::Zero(npts);
    for (int ax = 0; ax < grid.dim; ++ax)
        divu_hat += spec.fluid.col(1 + ax).cwiseProduct(ik[ax]);
    d.div_u = inverse_columns_real(grid, divu_hat).col(0);
    for (int ax = 0; ax < grid.dim; ++ax)
        d.grad_div_u[ax] =
            inverse_columns_real(grid, divu_hat.cwiseProduct(ik[ax])).col(0);
    return d;
}

struct StatePhys {
    Eigen::MatrixXd f;
    Eigen::MatrixXd fluid;
};

/// Full tendency of the perturbation system, physical space.  All products
/// are pointwise; callers that require dealiasing truncate the result (the
/// steppers keep states band-limited so quadratic aliases fall outside the
/// retained band).
inline StatePhys rhs_physical(const KineticFluidState& state,
                              const Derivatives& der,
                              const PhysicalParams& params) {
    const VelocityBasis& basis = state.basis();
    const SpatialGrid& grid = state.grid();
    const KineticOpTables& tab = KineticOpTables::get(basis);
    const long npts = grid.points();
    const int nf = basis.size();

    StatePhys out;
    out.f = Eigen::MatrixXd::Zero(npts, nf);
    out.fluid = Eigen::MatrixXd::Zero(npts, 5);

    const auto rho = state.fluid.col(0).array();
    const auto theta = state.fluid.col(4).array();
    Eigen::ArrayXd inv = 1.0 / (1.0 + rho);
    const auto a = state.f.col(tab.pos0).array();

    // ---- kinetic tendency ----
    // transport: -sum_i MULT_i (d_i f)
    for (int ax = 0; ax < grid.dim; ++ax)
        for (const auto& e : tab.mult[ax])
            out.f.col(e.dst) -= e.coef * der.df[ax].col(e.src);
    // collision: -|alpha| f
    for (int m = 0; m < nf; ++m)
        out.f.col(m) -= tab.collision_rate[m] * state.f.col(m);
    // drift against the Maxwellian tilt: u . raise(f)
    for (int ax = 0; ax < 3; ++ax) {
        const auto u_ax = state.fluid.col(1 + ax).array();
        for (const auto& e : tab.raise[ax])
            out.f.col(e.dst).array() +=
                e.coef * u_ax * state.f.col(e.src).array();
        // exchange sources
        out.f.col(tab.e_pos[ax]) += state.fluid.col(1 + ax);
        out.f.col(tab.e2_pos[ax]).array() += std::sqrt(2.0) * theta;
        // temperature diffusion residual: theta (raise_i)^2 f
        for (const auto& e : tab.raise2[ax])
            out.f.col(e.dst).array() +=
                e.coef * theta * state.f.col(e.src).array();
    }

    // ---- fluid tendencies ----
    Eigen::ArrayXd b[3];
    for (int ax = 0; ax < 3; ++ax) b[ax] = state.f.col(tab.e_pos[ax]).array();
    Eigen::ArrayXd omega = Eigen::ArrayXd::Zero(npts);
    for (int ax = 0; ax < 3; ++ax) omega += state.f.col(tab.e2_pos[ax]).array();
    omega /= std::sqrt(3.0);

    // advection terms u . grad(...)
    auto advect = [&](int col) {
        Eigen::ArrayXd r = Eigen::ArrayXd::Zero(npts);
        for (int ax = 0; ax < grid.dim; ++ax)
            r += state.fluid.col(1 + ax).array() * der.dfl[ax].col(col).array();
        return r;
    };

    // density
    out.fluid.col(0).array() =
        -advect(0) - (1.0 + rho) * der.div_u.array();

    // velocity
    for (int m = 0; m < 3; ++m) {
        Eigen::ArrayXd t = -advect(1 + m);
        if (m < grid.dim) {
            t -= (1.0 + theta) * inv * der.dfl[m].col(0).array();  // pressure
            t -= der.dfl[m].col(4).array();
        }
        t += inv * (params.mu1 * der.lap_fluid.col(1 + m).array());
        if (m < grid.dim)
            t += inv * (params.mu1 + params.mu2) * der.grad_div_u[m].array();
        t += inv * (b[m] - state.fluid.col(1 + m).array() * (1.0 + a));
        out.fluid.col(1 + m).array() = t;
    }

    // temperature
    {
        Eigen::ArrayXd usq = Eigen::ArrayXd::Zero(npts);
        Eigen::ArrayXd ub = Eigen::ArrayXd::Zero(npts);
        for (int ax = 0; ax < 3; ++ax) {
            usq += state.fluid.col(1 + ax).array().square();
            ub += state.fluid.col(1 + ax).array() * b[ax];
        }
        // |D(u)|^2 with D_ij = (d_i u_j + d_j u_i) / 2, d_i = 0 beyond dim
        Eigen::ArrayXd dsq = Eigen::ArrayXd::Zero(npts);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Eigen::ArrayXd dij = Eigen::ArrayXd::Zero(npts);
                if (i < grid.dim) dij += der.dfl[i].col(1 + j).array();
                if (j < grid.dim) dij += der.dfl[j].col(1 + i).array();
                dsq += 0.25 * dij.square();
            }
        Eigen::ArrayXd exch = std::sqrt(6.0) * omega - 3.0 * theta;
        Eigen::ArrayXd t = -advect(4) - theta * der.div_u.array() -
                           der.div_u.array() + exch;
        t += inv * (params.kappa * der.lap_fluid.col(4).array() + usq -
                    2.0 * ub + a * usq - 3.0 * a * theta +
                    2.0 * params.mu1 * dsq +
                    params.mu2 * der.div_u.array().square());
        t -= rho * inv * exch;
        out.fluid.col(4).array() = t;
    }
    return out;
}

/// Stiff linear part: collision, constant-coefficient exchange couplings,
/// viscosity and heat conduction.  Treated implicitly by the steppers.
inline StatePhys stiff_physical(const KineticFluidState& state,
                                const Derivatives& der,
                                const PhysicalParams& params) {
    const VelocityBasis& basis = state.basis();
    const SpatialGrid& grid = state.grid();
    const KineticOpTables& tab = KineticOpTables::get(basis);
    const long npts = grid.points();
    const int nf = basis.size();

    StatePhys out;
    out.f = Eigen::MatrixXd::Zero(npts, nf);
    out.fluid = Eigen::MatrixXd::Zero(npts, 5);

    for (int m = 0; m < nf; ++m)
        out.f.col(m) = -tab.collision_rate[m] * state.f.col(m);
    const auto theta = state.fluid.col(4).array();
    Eigen::ArrayXd omega = Eigen::ArrayXd::Zero(npts);
    for (int ax = 0; ax < 3; ++ax) {
        out.f.col(tab.e_pos[ax]) += state.fluid.col(1 + ax);
        out.f.col(tab.e2_pos[ax]).array() += std::sqrt(2.0) * theta;
        omega += state.f.col(tab.e2_pos[ax]).array();
    }
    omega /= std::sqrt(3.0);

    for (int m = 0; m < 3; ++m) {
        Eigen::ArrayXd t = params.mu1 * der.lap_fluid.col(1 + m).array();
        if (m < grid.dim)
            t += (params.mu1 + params.mu2) * der.grad_div_u[m].array();
        t += state.f.col(tab.e_pos[m]).array() -
             state.fluid.col(1 + m).array();
        out.fluid.col(1 + m).array() = t;
    }
    out.fluid.col(4).array() = params.kappa * der.lap_fluid.col(4).array() +
                               std::sqrt(6.0) * omega - 3.0 * theta;
    return out;
}

}  // namespace detail

/// Tendency of the full nonlinear perturbation system.  With dealias on,
/// the assembled tendency is truncated by the 2/3 rule.
inline KineticFluidState compute_rhs(const KineticFluidState& state,
                                     const PhysicalParams& params,
                                     bool dealias = true) {
    params.validate();
    state.check_vacuum_guard();
    detail::StateSpec spec = detail::to_spectral(state);
    detail::Derivatives der = detail::spatial_derivatives(state.grid(), spec);
    detail::StatePhys rhs = detail::rhs_physical(state, der, params);

    KineticFluidState out(state.basis(), state.grid());
    out.time = state.time;
    if (dealias) {
        Eigen::VectorXd mask = dealias_mask(state.grid());
        Eigen::MatrixXcd fh = forward_columns(state.grid(), rhs.f);
        Eigen::MatrixXcd gh = forward_columns(state.grid(), rhs.fluid);
        fh.array().colwise() *= mask.cast<Complex>().array();
        gh.array().colwise() *= mask.cast<Complex>().array();
        out.f = inverse_columns_real(state.grid(), fh);
        out.fluid = inverse_columns_real(state.grid(), gh);
    } else {
        out.f = rhs.f;
        out.fluid = rhs.fluid;
    }
    return out;
}

/// Minimum of the reconstructed distribution M + sqrt(M) f over grid points
/// and tensor quadrature velocity nodes.
class PositivityEvaluator {
  public:
    explicit PositivityEvaluator(const VelocityBasis& basis)
        : basis_(&basis), psi_(basis_node_values(basis)) {
        const auto& rule = basis.rule_1d();
        const int q = rule.nodes.size();
        mvals_.resize(psi_.rows());
        sqrt_mvals_.resize(psi_.rows());
        long row = 0;
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                for (int k = 0; k < q; ++k, ++row) {
                    Eigen::Vector3d v(rule.nodes[i], rule.nodes[j],
                                      rule.nodes[k]);
                    sqrt_mvals_[row] = sqrt_maxwellian(v);
                    mvals_[row] = sqrt_mvals_[row] * sqrt_mvals_[row];
                }
    }

    double minimum(const KineticFluidState& state, int stride = 1) const {
        double mn = std::numeric_limits<double>::infinity();
        Eigen::VectorXd c(basis_->size());
        for (long p = 0; p < state.grid().points(); p += std::max(1, stride)) {
            c = state.f.row(p);
            Eigen::VectorXd fv = psi_ * c;
            mn = std::min(
                mn, (mvals_.array() + sqrt_mvals_.array() * fv.array())
                        .minCoeff());
        }
        return mn;
    }

  private:
    const VelocityBasis* basis_;
    Eigen::MatrixXd psi_;
    Eigen::VectorXd mvals_;
    Eigen::VectorXd sqrt_mvals_;
};

inline double positivity_min(const KineticFluidState& state, int stride = 1) {
    return PositivityEvaluator(state.basis()).minimum(state, stride);
}

}  // namespace kfp
