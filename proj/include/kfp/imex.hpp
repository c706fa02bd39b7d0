#pragma once

#include "kfp/nonlinear_rhs.hpp"

namespace kfp {

struct StepperConfig {
    enum class Scheme { kImex1, kImex2 };
    double dt = 2e-3;
    Scheme scheme = Scheme::kImex2;
    bool dealias = true;
    double cfl_safety = 0.5;

    void validate() const {
        if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
        if (!(cfl_safety > 0 && cfl_safety <= 1))
            throw std::invalid_argument("cfl safety factor must be in (0,1]");
    }
};

/// IMEX time stepper for the perturbation system.  Stiff terms (collision,
/// exchange couplings with their sources, viscosity, heat conduction) are
/// solved implicitly per Fourier mode: the implicit operator is constant-
/// coefficient, so it block-diagonalizes into a 6x6 momentum block
/// (velocity-shell coefficients with u), a 4x4 energy block (trace shell
/// with theta), and a diagonal on the remaining coefficients.  Transport
/// and every nonlinear term are explicit; the second-order scheme has a
/// three-stage explicit tableau whose stability region covers the
/// imaginary axis up to sqrt(3).
class ImexStepper {
  public:
    ImexStepper(const VelocityBasis& basis, const SpatialGrid& grid,
                const PhysicalParams& params, const StepperConfig& config)
        : basis_(&basis), grid_(grid), params_(params), config_(config) {
        params.validate();
        config.validate();
        grid.validate();
        const KineticOpTables& tab = KineticOpTables::get(basis);
        const double dx = grid.spacing();
        cfl_limit_ = config.cfl_safety * dx / tab.vmax;
        if (config.dt > cfl_limit_)
            throw std::invalid_argument(
                "CFL violation: dt exceeds the transport stability limit");
        mask_ = dealias_mask(grid);
    }

    double cfl_limit() const { return cfl_limit_; }

    KineticFluidState step(const KineticFluidState& in) const {
        return advance(in, config_.dt);
    }

    /// One step of the configured scheme with step size h <= dt.
    KineticFluidState advance(const KineticFluidState& in, double h) const {
        in.check_vacuum_guard();
        if (config_.scheme == StepperConfig::Scheme::kImex1)
            return step_imex1(in, h);
        return step_imex2(in, h);
    }

  private:
    using StateSpec = detail::StateSpec;

    KineticFluidState from_spectral(const StateSpec& s, double time) const {
        KineticFluidState out(*basis_, grid_);
        out.f = inverse_columns_real(grid_, s.f);
        out.fluid = inverse_columns_real(grid_, s.fluid);
        out.time = time;
        return out;
    }

    void apply_mask(StateSpec& s) const {
        if (!config_.dealias) return;
        s.f.array().colwise() *= mask_.cast<Complex>().array();
        s.fluid.array().colwise() *= mask_.cast<Complex>().array();
    }

    /// Explicit tendency (full rhs minus stiff part) and the stiff part,
    /// both in spectral space, evaluated from a spectral state.
    void split_tendency(const StateSpec& spec, double time, StateSpec* expl,
                        StateSpec* stiff) const {
        KineticFluidState phys = from_spectral(spec, time);
        phys.check_vacuum_guard();
        detail::Derivatives der = detail::spatial_derivatives(grid_, spec);
        detail::StatePhys rhs =
            detail::rhs_physical(phys, der, params_);
        detail::StatePhys st = detail::stiff_physical(phys, der, params_);
        if (expl) {
            expl->f = forward_columns(grid_, (rhs.f - st.f).eval());
            expl->fluid =
                forward_columns(grid_, (rhs.fluid - st.fluid).eval());
        }
        if (stiff) {
            stiff->f = forward_columns(grid_, st.f);
            stiff->fluid = forward_columns(grid_, st.fluid);
        }
    }

    /// Solve (I - gdt * S) X = R in place, per Fourier mode.
    void implicit_solve(StateSpec& x, double gdt) const {
        const KineticOpTables& tab = KineticOpTables::get(*basis_);
        const int nf = basis_->size();
        const double sqrt2 = std::sqrt(2.0);

        // diagonal collision solve for every kinetic column
        for (int m = 0; m < nf; ++m)
            x.f.col(m) /= (1.0 + gdt * tab.collision_rate[m]);

        Eigen::Matrix<Complex, 6, 6> mom;
        Eigen::Matrix<Complex, 6, 1> rmom;
        Eigen::Matrix<Complex, 4, 4> ene;
        Eigen::Matrix<Complex, 4, 1> rene;
        for (long p = 0; p < grid_.points(); ++p) {
            const Eigen::Vector3d k = grid_.wavevector(p);
            const double k2 = k.squaredNorm();

            // momentum block: (c_{e_1..3}, u_1..3); the diagonal collision
            // solve above already divided the c rows by (1 + gdt), undo it.
            mom.setZero();
            for (int i = 0; i < 3; ++i) {
                mom(i, i) = 1.0 + gdt;
                mom(i, 3 + i) = -gdt;
                mom(3 + i, i) = -gdt;
                for (int j = 0; j < 3; ++j)
                    mom(3 + i, 3 + j) =
                        Complex((i == j ? 1.0 + gdt * (1.0 + params_.mu1 * k2)
                                        : 0.0) +
                                gdt * (params_.mu1 + params_.mu2) * k[i] *
                                    k[j]);
                rmom[i] = x.f(p, tab.e_pos[i]) * (1.0 + gdt);
                rmom[3 + i] = x.fluid(p, 1 + i);
            }
            Eigen::Matrix<Complex, 6, 1> sol = mom.partialPivLu().solve(rmom);
            for (int i = 0; i < 3; ++i) {
                x.f(p, tab.e_pos[i]) = sol[i];
                x.fluid(p, 1 + i) = sol[3 + i];
            }

            // energy block: (c_{2e_1..3}, theta)
            ene.setZero();
            for (int i = 0; i < 3; ++i) {
                ene(i, i) = 1.0 + 2.0 * gdt;
                ene(i, 3) = -sqrt2 * gdt;
                ene(3, i) = -sqrt2 * gdt;
                rene[i] = x.f(p, tab.e2_pos[i]) * (1.0 + 2.0 * gdt);
            }
            ene(3, 3) = 1.0 + gdt * (3.0 + params_.kappa * k2);
            rene[3] = x.fluid(p, 4);
            Eigen::Matrix<Complex, 4, 1> esol =
                ene.partialPivLu().solve(rene);
            for (int i = 0; i < 3; ++i) x.f(p, tab.e2_pos[i]) = esol[i];
            x.fluid(p, 4) = esol[3];
        }
    }

    KineticFluidState step_imex1(const KineticFluidState& in, double h) const {
        StateSpec un = detail::to_spectral(in);
        StateSpec e1;
        split_tendency(un, in.time, &e1, nullptr);
        StateSpec x;
        x.f = un.f + h * e1.f;
        x.fluid = un.fluid + h * e1.fluid;
        implicit_solve(x, h);
        apply_mask(x);
        return from_spectral(x, in.time + h);
    }

    KineticFluidState step_imex2(const KineticFluidState& in, double h) const {
        const double gamma = 1.0 - 1.0 / std::sqrt(2.0);
        const double delta = -2.0 * std::sqrt(2.0) / 3.0;
        StateSpec un = detail::to_spectral(in);

        StateSpec e1;
        split_tendency(un, in.time, &e1, nullptr);

        StateSpec u2;
        u2.f = un.f + (h * gamma) * e1.f;
        u2.fluid = un.fluid + (h * gamma) * e1.fluid;
        implicit_solve(u2, gamma * h);
        apply_mask(u2);

        StateSpec e2, s2;
        split_tendency(u2, in.time + gamma * h, &e2, &s2);

        StateSpec u3;
        u3.f = un.f + h * (delta * e1.f + (1.0 - delta) * e2.f) +
               (h * (1.0 - gamma)) * s2.f;
        u3.fluid = un.fluid +
                   h * (delta * e1.fluid + (1.0 - delta) * e2.fluid) +
                   (h * (1.0 - gamma)) * s2.fluid;
        implicit_solve(u3, gamma * h);
        apply_mask(u3);

        StateSpec e3, s3;
        split_tendency(u3, in.time + h, &e3, &s3);

        StateSpec out;
        out.f = un.f + h * ((1.0 - gamma) * (e2.f + s2.f) +
                            gamma * (e3.f + s3.f));
        out.fluid = un.fluid + h * ((1.0 - gamma) * (e2.fluid + s2.fluid) +
                                    gamma * (e3.fluid + s3.fluid));
        apply_mask(out);
        return from_spectral(out, in.time + h);
    }

    const VelocityBasis* basis_;
    SpatialGrid grid_;
    PhysicalParams params_;
    StepperConfig config_;
    double cfl_limit_ = 0.0;
    Eigen::VectorXd mask_;
};

/// Advance to t_final, invoking the observer at t = 0, every
/// observe_interval thereafter, and at the final time.
inline KineticFluidState run_simulation(
    const KineticFluidState& initial, double t_final,
    const StepperConfig& config, const PhysicalParams& params,
    const std::function<void(const KineticFluidState&)>& observer = {},
    double observe_interval = 0.0) {
    if (t_final < initial.time)
        throw std::invalid_argument("t_final precedes the initial time");
    ImexStepper stepper(initial.basis(), initial.grid(), params, config);
    KineticFluidState state = initial;
    if (observer) observer(state);
    if (t_final == initial.time) return state;

    double next_obs = observe_interval > 0
                          ? initial.time + observe_interval
                          : std::numeric_limits<double>::infinity();
    const double eps = 1e-12 * std::max(1.0, std::abs(t_final));
    while (state.time < t_final - eps) {
        double h = std::min(config.dt, t_final - state.time);
        state = stepper.advance(state, h);
        if (observer && (state.time >= next_obs - eps ||
                         state.time >= t_final - eps)) {
            observer(state);
            while (next_obs <= state.time + eps) next_obs += observe_interval;
        }
    }
    return state;
}

}  // namespace kfp
