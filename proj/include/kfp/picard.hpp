#pragma once

#include "kfp/linear_mode.hpp"
#include "kfp/nonlinear_rhs.hpp"

namespace kfp {

/// One implicit-Euler solve of the frozen-coefficient linear system that
/// underlies the local-existence iteration: coefficient fields are taken
/// from a previous iterate, the unknown next iterate solves
///   (I - dt * Lfrozen) W = W0 + dt * (frozen sources).
/// The solve is preconditioned Richardson iteration with the exact
/// constant-coefficient resolvent (dense per-Fourier-mode factorizations of
/// I - dt * A(k)); the variable-coefficient remainder is O(perturbation),
/// so a handful of sweeps reaches solver tolerance.
class PicardOperator {
  public:
    PicardOperator(const VelocityBasis& basis, const SpatialGrid& grid,
                   double dt, const PhysicalParams& params)
        : basis_(&basis), grid_(grid), dt_(dt), params_(params) {
        if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
        params.validate();
        grid.validate();
        const long npts = grid.points();
        const int dim = basis.size() + 5;
        const KineticOpTables& tab = KineticOpTables::get(basis);
        lu_.reserve(npts);
        gens_.reserve(npts);
        for (long p = 0; p < npts; ++p) {
            ModeGenerator gen =
                assemble_generator(basis, grid.wavevector(p), params);
            // In the frozen scheme the kinetic exchange sources carry
            // previous-level coefficients, so they are not couplings of the
            // unknown; drop them from the constant part.
            for (int ax = 0; ax < 3; ++ax) {
                gen.A(tab.e_pos[ax], basis.size() + 1 + ax) = 0.0;
                gen.A(tab.e2_pos[ax], basis.size() + 4) = 0.0;
            }
            Eigen::MatrixXcd m =
                Eigen::MatrixXcd::Identity(dim, dim) - dt * gen.A;
            lu_.emplace_back(m);
            gens_.push_back(std::move(gen.A));
        }
    }

    KineticFluidState apply(const KineticFluidState& frozen,
                            const KineticFluidState& initial) const {
        if (frozen.grid() != initial.grid())
            throw std::invalid_argument("picard states on different grids");
        frozen.check_vacuum_guard();
        const long npts = grid_.points();
        const int nf = basis_->size();
        const int dim = nf + 5;

        Eigen::MatrixXcd rhs0 = stack(detail::to_spectral(with_sources(
            initial, frozen)));
        Eigen::MatrixXcd w(npts, dim);
        solve_resolvent(rhs0, w);

        double scale = std::max(w.norm(), rhs0.norm());
        for (int iter = 0; iter < 60; ++iter) {
            Eigen::MatrixXcd r =
                rhs0 + dt_ * (frozen_apply(frozen, w) - constant_apply(w));
            Eigen::MatrixXcd wn(npts, dim);
            solve_resolvent(r, wn);
            double delta = (wn - w).norm();
            w.swap(wn);
            if (delta <= 1e-12 * std::max(scale, w.norm())) {
                KineticFluidState out = unstack(w);
                out.time = initial.time + dt_;
                return out;
            }
        }
        throw std::runtime_error("picard implicit solve failed to converge");
    }

  private:
    // layout: row = grid point, cols = [f coefficients, rho, u, theta]
    Eigen::MatrixXcd stack(const detail::StateSpec& s) const {
        Eigen::MatrixXcd m(grid_.points(), basis_->size() + 5);
        m.leftCols(basis_->size()) = s.f;
        m.rightCols(5) = s.fluid;
        return m;
    }
    KineticFluidState unstack(const Eigen::MatrixXcd& m) const {
        KineticFluidState out(*basis_, grid_);
        out.f = inverse_columns_real(
            grid_, Eigen::MatrixXcd(m.leftCols(basis_->size())));
        out.fluid =
            inverse_columns_real(grid_, Eigen::MatrixXcd(m.rightCols(5)));
        return out;
    }

    void solve_resolvent(const Eigen::MatrixXcd& r,
                         Eigen::MatrixXcd& out) const {
        for (long p = 0; p < grid_.points(); ++p)
            out.row(p) = lu_[p].solve(r.row(p).transpose()).transpose();
    }

    /// Initial data plus dt times the frozen (unknown-free) sources.
    KineticFluidState with_sources(const KineticFluidState& initial,
                                   const KineticFluidState& frozen) const {
        const KineticOpTables& tab = KineticOpTables::get(*basis_);
        KineticFluidState out = initial;
        const auto rho_n = frozen.fluid.col(0).array();
        const auto theta_n = frozen.fluid.col(4).array();
        Eigen::ArrayXd inv = 1.0 / (1.0 + rho_n);
        const auto a_n = frozen.f.col(tab.pos0).array();

        for (int ax = 0; ax < 3; ++ax) {
            out.f.col(tab.e_pos[ax]) += dt_ * frozen.fluid.col(1 + ax);
            out.f.col(tab.e2_pos[ax]).array() +=
                dt_ * std::sqrt(2.0) * theta_n;
        }

        detail::StateSpec fspec = detail::to_spectral(frozen);
        detail::Derivatives fder =
            detail::spatial_derivatives(grid_, fspec);
        Eigen::ArrayXd usq = Eigen::ArrayXd::Zero(grid_.points());
        Eigen::ArrayXd ub = Eigen::ArrayXd::Zero(grid_.points());
        for (int ax = 0; ax < 3; ++ax) {
            usq += frozen.fluid.col(1 + ax).array().square();
            ub += frozen.fluid.col(1 + ax).array() *
                  frozen.f.col(tab.e_pos[ax]).array();
        }
        Eigen::ArrayXd dsq = Eigen::ArrayXd::Zero(grid_.points());
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                Eigen::ArrayXd dij = Eigen::ArrayXd::Zero(grid_.points());
                if (i < grid_.dim) dij += fder.dfl[i].col(1 + j).array();
                if (j < grid_.dim) dij += fder.dfl[j].col(1 + i).array();
                dsq += 0.25 * dij.square();
            }
        out.fluid.col(4).array() +=
            dt_ * inv *
            (usq - 2.0 * ub + a_n * usq - 3.0 * a_n * theta_n +
             2.0 * params_.mu1 * dsq +
             params_.mu2 * fder.div_u.array().square());
        return out;
    }

    /// Frozen-coefficient operator applied to the unknown (spectral in/out),
    /// sources excluded.
    Eigen::MatrixXcd frozen_apply(const KineticFluidState& frozen,
                                  const Eigen::MatrixXcd& w) const {
        const KineticOpTables& tab = KineticOpTables::get(*basis_);
        const long npts = grid_.points();
        const int nf = basis_->size();

        detail::StateSpec spec{w.leftCols(nf), w.rightCols(5)};
        detail::Derivatives der = detail::spatial_derivatives(grid_, spec);
        Eigen::MatrixXd wf = inverse_columns_real(grid_, spec.f);
        Eigen::MatrixXd wl = inverse_columns_real(grid_, spec.fluid);

        const auto rho_n = frozen.fluid.col(0).array();
        const auto theta_n = frozen.fluid.col(4).array();
        Eigen::ArrayXd inv = 1.0 / (1.0 + rho_n);
        const auto a_n = frozen.f.col(tab.pos0).array();

        // frozen div u^n
        detail::StateSpec fspec = detail::to_spectral(frozen);
        detail::Derivatives fder = detail::spatial_derivatives(grid_, fspec);

        Eigen::MatrixXd rf = Eigen::MatrixXd::Zero(npts, nf);
        Eigen::MatrixXd rl = Eigen::MatrixXd::Zero(npts, 5);

        // kinetic: transport + collision + frozen drift and diffusion
        for (int ax = 0; ax < grid_.dim; ++ax)
            for (const auto& e : tab.mult[ax])
                rf.col(e.dst) -= e.coef * der.df[ax].col(e.src);
        for (int m = 0; m < nf; ++m)
            rf.col(m) -= tab.collision_rate[m] * wf.col(m);
        for (int ax = 0; ax < 3; ++ax) {
            const auto u_ax = frozen.fluid.col(1 + ax).array();
            for (const auto& e : tab.raise[ax])
                rf.col(e.dst).array() += e.coef * u_ax * wf.col(e.src).array();
            for (const auto& e : tab.raise2[ax])
                rf.col(e.dst).array() +=
                    e.coef * theta_n * wf.col(e.src).array();
        }

        auto advect = [&](int col) {
            Eigen::ArrayXd r = Eigen::ArrayXd::Zero(npts);
            for (int ax = 0; ax < grid_.dim; ++ax)
                r += frozen.fluid.col(1 + ax).array() *
                     der.dfl[ax].col(col).array();
            return r;
        };

        // density row
        rl.col(0).array() =
            -advect(0) - (1.0 + rho_n) * der.div_u.array();
        // velocity rows
        for (int m = 0; m < 3; ++m) {
            Eigen::ArrayXd t = -advect(1 + m);
            if (m < grid_.dim) {
                t -= (1.0 + theta_n) * inv * der.dfl[m].col(0).array();
                t -= der.dfl[m].col(4).array();
            }
            t += inv * params_.mu1 * der.lap_fluid.col(1 + m).array();
            if (m < grid_.dim)
                t += inv * (params_.mu1 + params_.mu2) *
                     der.grad_div_u[m].array();
            t += inv * (wf.col(tab.e_pos[m]).array() -
                        wl.col(1 + m).array() * (1.0 + a_n));
            rl.col(1 + m).array() = t;
        }
        // temperature row
        {
            Eigen::ArrayXd omega = Eigen::ArrayXd::Zero(npts);
            for (int ax = 0; ax < 3; ++ax)
                omega += wf.col(tab.e2_pos[ax]).array();
            omega /= std::sqrt(3.0);
            Eigen::ArrayXd t = -advect(4) -
                               wl.col(4).array() * fder.div_u.array() -
                               der.div_u.array();
            t += inv * (params_.kappa * der.lap_fluid.col(4).array() +
                        std::sqrt(6.0) * omega - 3.0 * wl.col(4).array());
            rl.col(4).array() = t;
        }

        Eigen::MatrixXcd out(npts, nf + 5);
        out.leftCols(nf) = forward_columns(grid_, rf);
        out.rightCols(5) = forward_columns(grid_, rl);
        return out;
    }

    /// Constant-coefficient linearized generator, per-mode matvec.
    Eigen::MatrixXcd constant_apply(const Eigen::MatrixXcd& w) const {
        Eigen::MatrixXcd out(w.rows(), w.cols());
        for (long p = 0; p < grid_.points(); ++p)
            out.row(p) = (gens_[p] * w.row(p).transpose()).transpose();
        return out;
    }

    const VelocityBasis* basis_;
    SpatialGrid grid_;
    double dt_;
    PhysicalParams params_;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
    std::vector<Eigen::MatrixXcd> gens_;
};

inline KineticFluidState picard_step(const KineticFluidState& frozen,
                                     const KineticFluidState& initial,
                                     double dt, const PhysicalParams& params) {
    PicardOperator op(initial.basis(), initial.grid(), dt, params);
    return op.apply(frozen, initial);
}

}  // namespace kfp
