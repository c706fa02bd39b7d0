#pragma once

#include <map>
#include <string>

#include "kfp/nonlinear_state.hpp"
#include "kfp/spectral_field.hpp"

namespace kfp {

enum class FunctionalKind {
    kSobolevPlain,
    kEnergyE,
    kDissipationD,
    kHighH,
    kHighM,
    kCrossE0,
    kCrossE0High,
    kE1Second,
    kD1Second,
};

inline const char* functional_name(FunctionalKind k) {
    switch (k) {
        case FunctionalKind::kSobolevPlain: return "SOBOLEV_PLAIN";
        case FunctionalKind::kEnergyE: return "ENERGY_E";
        case FunctionalKind::kDissipationD: return "DISSIPATION_D";
        case FunctionalKind::kHighH: return "HIGH_H";
        case FunctionalKind::kHighM: return "HIGH_M";
        case FunctionalKind::kCrossE0: return "CROSS_E0";
        case FunctionalKind::kCrossE0High: return "CROSS_E0_HIGH";
        case FunctionalKind::kE1Second: return "E1_SECOND";
        case FunctionalKind::kD1Second: return "D1_SECOND";
    }
    return "?";
}

/// Cross-term weights of the composite functionals.  The analysis only
/// requires them small and positive; defaults are 0.01 and zero is allowed
/// so the composites reduce to their plain Sobolev cores.
struct FunctionalWeights {
    double tau1 = 0.01, tau2 = 0.01, tau3 = 0.01;  // energy cross terms
    double tau4 = 0.01, tau5 = 0.01, tau6 = 0.01;  // high-order variants
    double tau7 = 0.01, tau8 = 0.01;               // second-order variants
    double c1 = 1.0, c2 = 1.0;  // mixed velocity-derivative shell weights
    double high_cutoff = 2.0;   // r0 of the frequency split

    void validate() const {
        for (double t : {tau1, tau2, tau3, tau4, tau5, tau6, tau7, tau8})
            if (t < 0 || t > 0.1)
                throw std::invalid_argument(
                    "functional weights must lie in [0, 0.1]");
        if (!(high_cutoff > 0))
            throw std::invalid_argument("high-frequency cutoff must be > 0");
    }
};

namespace detail {

/// Shared machinery for evaluating the analysis functionals of one state:
/// spectral representations, moment fields of the micro part, spatial
/// derivative shells, velocity-ladder extensions for nu-norms and mixed
/// derivatives, and the sharp frequency split.
class FunctionalContext {
  public:
    FunctionalContext(const KineticFluidState& state,
                      const FunctionalWeights& weights)
        : basis_(&state.basis()),
          grid_(state.grid()),
          w_(weights),
          ext1_(basis_->spec().truncation + 1),
          ext2_(basis_->spec().truncation + 2),
          ext3_(basis_->spec().truncation + 3),
          tab_(KineticOpTables::get(*basis_)) {
        w_.validate();
        if (basis_->spec().truncation < 3)
            throw std::invalid_argument(
                "functionals need basis truncation >= 3");
        fhat_ = forward_columns(grid_, state.f);
        fluidhat_ = forward_columns(grid_, state.fluid);
        const long npts = grid_.points();
        for (int ax = 0; ax < grid_.dim; ++ax) {
            ik_[ax].resize(npts);
            for (long p = 0; p < npts; ++p)
                ik_[ax][p] = Complex(0.0, grid_.wavevector(p)[ax]);
        }
        highmask_.resize(npts);
        for (long p = 0; p < npts; ++p)
            highmask_[p] =
                grid_.wavevector(p).norm() > 0.5 * w_.high_cutoff ? 1.0 : 0.0;

        // micro part of f, directly in spectral coefficients
        micro_ = fhat_;
        micro_.col(tab_.pos0).setZero();
        Eigen::VectorXcd trace = Eigen::VectorXcd::Zero(npts);
        for (int ax = 0; ax < 3; ++ax) {
            micro_.col(tab_.e_pos[ax]).setZero();
            trace += fhat_.col(tab_.e2_pos[ax]);
        }
        for (int ax = 0; ax < 3; ++ax)
            micro_.col(tab_.e2_pos[ax]) -= trace / 3.0;
    }

    const SpatialGrid& grid() const { return grid_; }
    const VelocityBasis& basis() const { return *basis_; }
    const FunctionalWeights& weights() const { return w_; }

    // --- spectral helpers -------------------------------------------

    /// Multiply every column by (ik)^alpha; alpha beyond the grid dimension
    /// must vanish (enforced by shell enumeration).
    Eigen::MatrixXcd dx(const Eigen::MatrixXcd& m,
                        const MultiIndex& alpha) const {
        Eigen::MatrixXcd out = m;
        for (int ax = 0; ax < 3; ++ax)
            for (int j = 0; j < alpha[ax]; ++j)
                out.array().colwise() *= ik_[ax].array();
        return out;
    }

    double l2sq(const Eigen::MatrixXcd& m) const {
        return grid_.volume() * m.squaredNorm();
    }

    /// Real L^2 pairing of matching columns: sum_c int a_c b_c dx.
    double pair(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) const {
        return grid_.volume() * a.cwiseProduct(b.conjugate()).sum().real();
    }

    Eigen::MatrixXcd highpass(const Eigen::MatrixXcd& m) const {
        Eigen::MatrixXcd out = m;
        out.array().colwise() *= highmask_.cast<Complex>().array();
        return out;
    }

    /// Spatial derivative multi-indices with |alpha| = s over grid_.dim axes.
    std::vector<MultiIndex> shell(int s) const {
        std::vector<MultiIndex> out;
        if (grid_.dim == 1) {
            MultiIndex a;
            a[0] = s;
            out.push_back(a);
            return out;
        }
        for (int i = 0; i <= s; ++i)
            for (int j = 0; j + i <= s; ++j) {
                int k = s - i - j;
                MultiIndex a;
                a.a = {i, j, k};
                bool ok = true;
                for (int ax = grid_.dim; ax < 3; ++ax)
                    if (a[ax] != 0) ok = false;
                if (ok) out.push_back(a);
            }
        return out;
    }

    // --- ladder application on coefficient columns -------------------

    Eigen::MatrixXcd ladder_cols(const HermiteIndexSet& in,
                                 const HermiteIndexSet& out, Ladder kind,
                                 int axis, const Eigen::MatrixXcd& m) const {
        Eigen::MatrixXcd r =
            Eigen::MatrixXcd::Zero(m.rows(), out.size());
        for (int c = 0; c < in.size(); ++c) {
            const MultiIndex& a = in[c];
            const double up = std::sqrt(a[axis] + 1.0);
            const double dn = std::sqrt(static_cast<double>(a[axis]));
            int pu = out.position(a.bump(axis, 1));
            int pd = out.position(a.bump(axis, -1));
            switch (kind) {
                case Ladder::kMultV:
                    if (pu >= 0) r.col(pu) += up * m.col(c);
                    if (pd >= 0) r.col(pd) += dn * m.col(c);
                    break;
                case Ladder::kDV:
                    if (pd >= 0) r.col(pd) += 0.5 * dn * m.col(c);
                    if (pu >= 0) r.col(pu) -= 0.5 * up * m.col(c);
                    break;
                case Ladder::kRaise:
                    if (pu >= 0) r.col(pu) += up * m.col(c);
                    break;
                case Ladder::kLower:
                    if (pd >= 0) r.col(pd) += dn * m.col(c);
                    break;
            }
        }
        return r;
    }

    /// Squared nu-norm of a kinetic coefficient matrix over space and
    /// velocity, exact through one extension shell.
    double nu_norm_sq_cols(const HermiteIndexSet& in,
                           const HermiteIndexSet& ext,
                           const Eigen::MatrixXcd& m) const {
        double s = l2sq(m);
        for (int ax = 0; ax < 3; ++ax) {
            s += l2sq(ladder_cols(in, ext, Ladder::kDV, ax, m));
            s += l2sq(ladder_cols(in, ext, Ladder::kMultV, ax, m));
        }
        return s;
    }

    /// Velocity derivative d^beta applied to columns over the base set,
    /// landing in a set extended by |beta| shells.
    Eigen::MatrixXcd velocity_derivative(const Eigen::MatrixXcd& m,
                                         const MultiIndex& beta) const {
        const HermiteIndexSet* cur = &basis_->indices();
        Eigen::MatrixXcd r = m;
        int level = 0;
        for (int ax = 0; ax < 3; ++ax)
            for (int j = 0; j < beta[ax]; ++j) {
                const HermiteIndexSet* next = set_at(++level);
                r = ladder_cols(*cur, *next, Ladder::kDV, ax, r);
                cur = next;
            }
        return r;
    }

    const HermiteIndexSet* set_at(int level) const {
        switch (level) {
            case 0: return &basis_->indices();
            case 1: return &ext1_;
            case 2: return &ext2_;
            case 3: return &ext3_;
        }
        throw std::logic_error("extension level too deep");
    }

    // --- moment fields ------------------------------------------------

    Eigen::VectorXcd a_field() const { return fhat_.col(tab_.pos0); }
    Eigen::MatrixXcd b_field() const {
        Eigen::MatrixXcd b(fhat_.rows(), 3);
        for (int ax = 0; ax < 3; ++ax) b.col(ax) = fhat_.col(tab_.e_pos[ax]);
        return b;
    }
    Eigen::VectorXcd omega_field() const {
        Eigen::VectorXcd om = Eigen::VectorXcd::Zero(fhat_.rows());
        for (int ax = 0; ax < 3; ++ax) om += fhat_.col(tab_.e2_pos[ax]);
        return om / std::sqrt(3.0);
    }
    const Eigen::MatrixXcd& micro() const { return micro_; }
    const Eigen::MatrixXcd& fhat() const { return fhat_; }
    const Eigen::MatrixXcd& fluidhat() const { return fluidhat_; }

    /// Gamma_{ij} of the micro part as spectral fields (marginal storage:
    /// the six independent components, row-major upper triangle).
    Eigen::MatrixXcd gamma_micro() const {
        const HermiteIndexSet& set = basis_->indices();
        Eigen::MatrixXcd g(fhat_.rows(), 9);
        const double sqrt2 = std::sqrt(2.0);
        Eigen::VectorXcd c0 = micro_.col(tab_.pos0);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                MultiIndex a;
                a[i] += 1;
                a[j] += 1;
                int pos = set.require_position(a);
                if (i == j)
                    g.col(3 * i + j) = sqrt2 * micro_.col(pos);
                else
                    g.col(3 * i + j) = micro_.col(pos) - c0;
            }
        return g;
    }

    Eigen::MatrixXcd upsilon_micro() const {
        const HermiteIndexSet& set = basis_->indices();
        Eigen::MatrixXcd up(fhat_.rows(), 3);
        const double c1 = 2.0 / std::sqrt(6.0);
        const double c2 = 1.0 / std::sqrt(3.0);
        for (int i = 0; i < 3; ++i) {
            MultiIndex e;
            e[i] = 1;
            Eigen::VectorXcd v =
                micro_.col(set.require_position(e.bump(i, 2))) +
                c1 * micro_.col(set.require_position(e));
            for (int j = 0; j < 3; ++j) {
                if (j == i) continue;
                MultiIndex m = e;
                m[j] += 2;
                v += c2 * micro_.col(set.require_position(m));
            }
            up.col(i) = v;
        }
        return up;
    }

    Eigen::VectorXcd spatial_d(const Eigen::VectorXcd& g, int axis) const {
        if (axis >= grid_.dim)
            return Eigen::VectorXcd::Zero(g.size());
        return g.cwiseProduct(ik_[axis]);
    }

    const HermiteIndexSet& ext1() const { return ext1_; }

  private:
    const VelocityBasis* basis_;
    SpatialGrid grid_;
    FunctionalWeights w_;
    HermiteIndexSet ext1_, ext2_, ext3_;
    const KineticOpTables& tab_;
    Eigen::MatrixXcd fhat_, fluidhat_, micro_;
    std::array<Eigen::VectorXcd, 3> ik_;
    Eigen::VectorXd highmask_;
};

/// Plain Sobolev shell sum_{|alpha| = s} ||d^alpha (f, rho, u, theta)||^2.
inline double sobolev_shell(const FunctionalContext& ctx, int s) {
    double total = 0.0;
    for (const MultiIndex& a : ctx.shell(s)) {
        total += ctx.l2sq(ctx.dx(ctx.fhat(), a));
        total += ctx.l2sq(ctx.dx(ctx.fluidhat(), a));
    }
    return total;
}

/// The moment cross functional over the derivative shells [amin, amax]:
///   sum_alpha { sum_ij <d^a (d_j b_i + d_i b_j), d^a Gamma_ij(micro)>
///             + sum_i <d^a d_i omega, d^a Upsilon_i(micro)> }
/// + (2/21) sum_alpha <d^a a,
///                     d^a ((sqrt6/5) sum_i d_i Upsilon_i(micro) - div b)>,
/// optionally on the high-frequency projections of every field.
inline double moment_cross_functional(const FunctionalContext& ctx, int amin,
                                      int amax, bool high) {
    Eigen::MatrixXcd b = ctx.b_field();
    Eigen::VectorXcd a = ctx.a_field();
    Eigen::VectorXcd om = ctx.omega_field();
    Eigen::MatrixXcd gamma = ctx.gamma_micro();
    Eigen::MatrixXcd ups = ctx.upsilon_micro();
    if (high) {
        b = ctx.highpass(b);
        a = ctx.highpass(a);
        om = ctx.highpass(om);
        gamma = ctx.highpass(gamma);
        ups = ctx.highpass(ups);
    }
    Eigen::VectorXcd div_b = Eigen::VectorXcd::Zero(a.size());
    Eigen::VectorXcd div_ups = Eigen::VectorXcd::Zero(a.size());
    for (int i = 0; i < 3; ++i) {
        div_b += ctx.spatial_d(b.col(i), i);
        div_ups += ctx.spatial_d(ups.col(i), i);
    }
    Eigen::VectorXcd mix =
        std::sqrt(6.0) / 5.0 * div_ups - div_b;

    double total = 0.0;
    for (int s = amin; s <= amax; ++s)
        for (const MultiIndex& al : ctx.shell(s)) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    Eigen::VectorXcd sym = ctx.spatial_d(b.col(i), j) +
                                           ctx.spatial_d(b.col(j), i);
                    total += ctx.pair(ctx.dx(sym, al),
                                      ctx.dx(gamma.col(3 * i + j), al));
                }
            for (int i = 0; i < 3; ++i)
                total += ctx.pair(ctx.dx(ctx.spatial_d(om, i), al),
                                  ctx.dx(ups.col(i), al));
            total += 2.0 / 21.0 *
                     ctx.pair(ctx.dx(a, al), ctx.dx(mix, al));
        }
    return total;
}

/// sum over shells of <d^a u, d^a grad rho> pairings.
inline double velocity_density_cross(const FunctionalContext& ctx, int amin,
                                     int amax) {
    double total = 0.0;
    const Eigen::MatrixXcd& fl = ctx.fluidhat();
    for (int s = amin; s <= amax; ++s)
        for (const MultiIndex& al : ctx.shell(s))
            for (int m = 0; m < 3; ++m) {
                Eigen::VectorXcd dm_rho = ctx.spatial_d(fl.col(0), m);
                total += ctx.pair(ctx.dx(Eigen::VectorXcd(fl.col(1 + m)), al),
                                  ctx.dx(dm_rho, al));
            }
    return total;
}

/// Mixed space-velocity derivative sums of the micro part.
inline double mixed_micro_l2(const FunctionalContext& ctx, int beta_order,
                             int alpha_max) {
    double total = 0.0;
    std::vector<MultiIndex> betas;
    {
        // velocity multi-indices of the given order (3 axes)
        for (int i = 0; i <= beta_order; ++i)
            for (int j = 0; j + i <= beta_order; ++j) {
                MultiIndex b;
                b.a = {i, j, beta_order - i - j};
                betas.push_back(b);
            }
    }
    for (const MultiIndex& beta : betas) {
        Eigen::MatrixXcd dv = ctx.velocity_derivative(ctx.micro(), beta);
        for (int s = 0; s <= alpha_max; ++s)
            for (const MultiIndex& al : ctx.shell(s))
                total += ctx.l2sq(ctx.dx(dv, al));
    }
    return total;
}

inline double mixed_micro_nu(const FunctionalContext& ctx, int beta_order,
                             int alpha_min, int alpha_max) {
    double total = 0.0;
    std::vector<MultiIndex> betas;
    for (int i = 0; i <= beta_order; ++i)
        for (int j = 0; j + i <= beta_order; ++j) {
            MultiIndex b;
            b.a = {i, j, beta_order - i - j};
            betas.push_back(b);
        }
    for (const MultiIndex& beta : betas) {
        Eigen::MatrixXcd dv = ctx.velocity_derivative(ctx.micro(), beta);
        const HermiteIndexSet* in = ctx.set_at(beta_order);
        const HermiteIndexSet* ext = ctx.set_at(beta_order + 1);
        for (int s = alpha_min; s <= alpha_max; ++s)
            for (const MultiIndex& al : ctx.shell(s))
                total += ctx.nu_norm_sq_cols(*in, *ext, ctx.dx(dv, al));
    }
    return total;
}

}  // namespace detail

/// The moment cross functional over chosen derivative shells, optionally on
/// the high-frequency projections (exposed for the definitional identity
/// between the high-pass variant and evaluation on a pre-filtered state).
inline double evaluate_moment_cross(const KineticFluidState& state,
                                    const FunctionalWeights& weights,
                                    int alpha_min, int alpha_max, bool high) {
    detail::FunctionalContext ctx(state, weights);
    return detail::moment_cross_functional(ctx, alpha_min, alpha_max, high);
}

/// Evaluate one of the analysis functionals on a state.
inline double evaluate_functional(FunctionalKind kind,
                                  const KineticFluidState& state,
                                  const FunctionalWeights& weights = {}) {
    using detail::FunctionalContext;
    FunctionalContext ctx(state, weights);
    const Eigen::MatrixXcd& fl = ctx.fluidhat();
    const SpatialGrid& grid = state.grid();

    auto stacked_macro = [&]() {
        // (a, b, rho, omega) as one matrix of spectral columns
        Eigen::MatrixXcd m(fl.rows(), 6);
        m.col(0) = ctx.a_field();
        m.leftCols(4).rightCols(3) = ctx.b_field();
        m.col(4) = fl.col(0);
        m.col(5) = ctx.omega_field();
        return m;
    };
    auto exchange_fields = [&]() {
        // b - u and sqrt(2) omega - sqrt(3) theta
        Eigen::MatrixXcd m(fl.rows(), 4);
        Eigen::MatrixXcd b = ctx.b_field();
        for (int i = 0; i < 3; ++i) m.col(i) = b.col(i) - fl.col(1 + i);
        m.col(3) = std::sqrt(2.0) * ctx.omega_field() -
                   std::sqrt(3.0) * fl.col(4);
        return m;
    };
    auto grad_l2 = [&](const Eigen::MatrixXcd& m, const MultiIndex& al) {
        double t = 0.0;
        for (int i = 0; i < grid.dim; ++i) {
            Eigen::MatrixXcd g = m;
            for (int c = 0; c < g.cols(); ++c)
                g.col(c) = ctx.spatial_d(g.col(c), i);
            t += ctx.l2sq(ctx.dx(g, al));
        }
        return t;
    };

    switch (kind) {
        case FunctionalKind::kSobolevPlain: {
            return detail::sobolev_shell(ctx, 0) +
                   detail::sobolev_shell(ctx, 1) +
                   detail::sobolev_shell(ctx, 2);
        }
        case FunctionalKind::kEnergyE: {
            double e = detail::sobolev_shell(ctx, 0) +
                       detail::sobolev_shell(ctx, 1) +
                       detail::sobolev_shell(ctx, 2);
            e += weights.tau1 * detail::moment_cross_functional(ctx, 0, 1,
                                                                false);
            e += weights.tau2 * detail::velocity_density_cross(ctx, 0, 1);
            e += weights.tau3 * (weights.c1 * detail::mixed_micro_l2(ctx, 1, 1) +
                                 weights.c2 * detail::mixed_micro_l2(ctx, 2, 0));
            return e;
        }
        case FunctionalKind::kDissipationD: {
            double d = 0.0;
            Eigen::MatrixXcd macro = stacked_macro();
            for (int s = 1; s <= 2; ++s)
                for (const MultiIndex& al : ctx.shell(s))
                    d += ctx.l2sq(ctx.dx(macro, al));
            Eigen::MatrixXcd uth(fl.rows(), 4);
            uth.leftCols(3) = fl.middleCols(1, 3);
            uth.col(3) = fl.col(4);
            for (int s = 0; s <= 2; ++s)
                for (const MultiIndex& al : ctx.shell(s)) {
                    d += ctx.nu_norm_sq_cols(state.basis().indices(),
                                             ctx.ext1(),
                                             ctx.dx(ctx.micro(), al));
                    d += grad_l2(uth, al);
                    d += ctx.l2sq(ctx.dx(exchange_fields(), al));
                }
            d += detail::mixed_micro_nu(ctx, 1, 0, 1);
            d += detail::mixed_micro_nu(ctx, 2, 0, 0);
            return d;
        }
        case FunctionalKind::kHighH: {
            double h = detail::sobolev_shell(ctx, 1) +
                       detail::sobolev_shell(ctx, 2);
            h += weights.tau4 *
                 detail::moment_cross_functional(ctx, 1, 1, false);
            h += weights.tau5 * detail::velocity_density_cross(ctx, 1, 1);
            h += weights.tau6 * weights.c1 * detail::mixed_micro_l2(ctx, 1, 1);
            return h;
        }
        case FunctionalKind::kHighM: {
            double m = 0.0;
            Eigen::MatrixXcd uth(fl.rows(), 4);
            uth.leftCols(3) = fl.middleCols(1, 3);
            uth.col(3) = fl.col(4);
            for (int s = 1; s <= 2; ++s)
                for (const MultiIndex& al : ctx.shell(s)) {
                    m += ctx.nu_norm_sq_cols(state.basis().indices(),
                                             ctx.ext1(),
                                             ctx.dx(ctx.micro(), al));
                    m += ctx.l2sq(ctx.dx(exchange_fields(), al));
                    m += grad_l2(uth, al);
                }
            Eigen::MatrixXcd macro = stacked_macro();
            for (const MultiIndex& al : ctx.shell(1)) m += grad_l2(macro, al);
            m += detail::mixed_micro_nu(ctx, 1, 1, 1);
            return m;
        }
        case FunctionalKind::kCrossE0:
            return detail::moment_cross_functional(ctx, 0, 1, false);
        case FunctionalKind::kCrossE0High:
            return detail::moment_cross_functional(ctx, 1, 1, true);
        case FunctionalKind::kE1Second: {
            double e = detail::sobolev_shell(ctx, 2);
            e += weights.tau7 *
                 detail::moment_cross_functional(ctx, 1, 1, true);
            // sum_{m,i} <d_i u_m, d_i d_m rho^H>
            Eigen::VectorXcd rho_h = ctx.highpass(fl.col(0));
            double cross = 0.0;
            for (int m = 0; m < 3; ++m)
                for (int i = 0; i < grid.dim; ++i)
                    cross += ctx.pair(
                        ctx.spatial_d(fl.col(1 + m), i),
                        ctx.spatial_d(ctx.spatial_d(rho_h, m), i));
            e += weights.tau8 * cross;
            return e;
        }
        case FunctionalKind::kD1Second: {
            double d = 0.0;
            Eigen::MatrixXcd uth(fl.rows(), 4);
            uth.leftCols(3) = fl.middleCols(1, 3);
            uth.col(3) = fl.col(4);
            for (const MultiIndex& al : ctx.shell(2)) {
                d += ctx.nu_norm_sq_cols(state.basis().indices(), ctx.ext1(),
                                         ctx.dx(ctx.micro(), al));
                d += ctx.l2sq(ctx.dx(exchange_fields(), al));
                d += grad_l2(uth, al);  // third derivatives of (u, theta)
            }
            Eigen::MatrixXcd machi(fl.rows(), 6);
            machi.col(0) = ctx.highpass(ctx.a_field());
            machi.leftCols(4).rightCols(3) = ctx.highpass(ctx.b_field());
            machi.col(4) = ctx.highpass(fl.col(0));
            machi.col(5) = ctx.highpass(ctx.omega_field());
            for (const MultiIndex& al : ctx.shell(2))
                d += ctx.l2sq(ctx.dx(machi, al));
            return d;
        }
    }
    throw std::invalid_argument("unknown functional kind");
}

/// The four conserved integrals of the periodic problem.
struct ConservationResiduals {
    double particle_mass = 0.0;           // int a
    double fluid_mass = 0.0;              // int rho
    Eigen::Vector3d momentum = Eigen::Vector3d::Zero();  // int b + (1+rho) u
    double energy = 0.0;  // int (1+rho)(theta + |u|^2/2) + sqrt(6)/2 omega
};

inline ConservationResiduals conservation_residuals(
    const KineticFluidState& s) {
    const KineticOpTables& tab = KineticOpTables::get(s.basis());
    const double w = s.grid().cell_volume();
    ConservationResiduals r;
    r.particle_mass = w * s.f.col(tab.pos0).sum();
    r.fluid_mass = w * s.fluid.col(0).sum();
    for (int ax = 0; ax < 3; ++ax)
        r.momentum[ax] = w * (s.f.col(tab.e_pos[ax]).array() +
                              (1.0 + s.fluid.col(0).array()) *
                                  s.fluid.col(1 + ax).array())
                                 .sum();
    Eigen::ArrayXd omega = Eigen::ArrayXd::Zero(s.grid().points());
    for (int ax = 0; ax < 3; ++ax) omega += s.f.col(tab.e2_pos[ax]).array();
    omega /= std::sqrt(3.0);
    r.energy = w * ((1.0 + s.fluid.col(0).array()) *
                        (s.fluid.col(4).array() +
                         0.5 * (s.fluid.col(1).array().square() +
                                s.fluid.col(2).array().square() +
                                s.fluid.col(3).array().square())) +
                    std::sqrt(6.0) / 2.0 * omega)
                       .sum();
    return r;
}

struct ExponentialFit {
    double rate = 0.0;           // zeta in exp(-zeta t)
    double residual = 0.0;       // max log deviation over the total log drop
    double log_intercept = 0.0;  // fitted log value at t = 0
};

inline ExponentialFit fit_exponential(const std::vector<double>& times,
                                      const std::vector<double>& values) {
    if (times.size() < 2 || times.size() != values.size())
        throw std::invalid_argument("fit_exponential: bad sample set");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(values[i] > 0))
            throw std::invalid_argument("fit_exponential: non-positive value");
        sx += times[i];
        sy += std::log(values[i]);
        sxx += times[i] * times[i];
        sxy += times[i] * std::log(values[i]);
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double intercept = (sy - slope * sx) / n;
    ExponentialFit fit;
    fit.rate = -slope;
    fit.log_intercept = intercept;
    double maxdev = 0.0, lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < times.size(); ++i) {
        double pred = intercept + slope * times[i];
        maxdev = std::max(maxdev, std::abs(std::log(values[i]) - pred));
        lo = std::min(lo, std::log(values[i]));
        hi = std::max(hi, std::log(values[i]));
    }
    fit.residual = maxdev / std::max(hi - lo, 1e-300);
    return fit;
}

struct LyapunovCheck {
    double max_ratio = 0.0;  // max over interior times of (dE/dt) / D
    double lambda = 0.0;     // -max_ratio
    bool pass = false;
};

/// Finite-difference check of dE/dt <= -lambda D along a trajectory.
inline LyapunovCheck lyapunov_check(const std::vector<double>& times,
                                    const std::vector<double>& energy,
                                    const std::vector<double>& dissipation) {
    if (times.size() < 3 || times.size() != energy.size() ||
        times.size() != dissipation.size())
        throw std::invalid_argument("lyapunov_check: need >= 3 observations");
    LyapunovCheck out;
    out.max_ratio = -std::numeric_limits<double>::infinity();
    bool all_zero = true;
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
        double dedt =
            (energy[i + 1] - energy[i - 1]) / (times[i + 1] - times[i - 1]);
        if (dissipation[i] == 0.0) {
            if (energy[i] != 0.0)
                throw std::domain_error(
                    "lyapunov_check: vanishing dissipation at non-trivial "
                    "state");
            continue;  // equilibrium point, vacuously fine
        }
        all_zero = false;
        out.max_ratio = std::max(out.max_ratio, dedt / dissipation[i]);
    }
    if (all_zero) {
        out.max_ratio = 0.0;
        out.lambda = 0.0;
        out.pass = true;  // vacuous
        return out;
    }
    out.lambda = -out.max_ratio;
    out.pass = out.lambda > 0.0;
    return out;
}

struct InterpolationReport {
    double lp = 0.0;
    double bound = 0.0;
    double ratio = 0.0;
};

/// ||g||_{L^p} <= ||g||_{L^2}^zeta ||g||_{L^6}^{1-zeta}, zeta = (6-p)/(2p).
inline InterpolationReport interpolation_check(const SpectralField& g,
                                               double p) {
    if (p < 2.0 || p > 6.0)
        throw std::invalid_argument("interpolation check needs 2 <= p <= 6");
    const double zeta = (6.0 - p) / (2.0 * p);
    InterpolationReport rep;
    rep.lp = norm_lp(g, p);
    rep.bound = std::pow(norm_lp(g, 2.0), zeta) *
                std::pow(norm_lp(g, 6.0), 1.0 - zeta);
    rep.ratio = rep.bound > 0 ? rep.lp / rep.bound : 0.0;
    return rep;
}

/// Time series of named functionals with fit results.
struct FunctionalReport {
    std::vector<double> times;
    std::map<std::string, std::vector<double>> series;
    std::map<std::string, double> fits;

    void append(double t, const std::map<std::string, double>& row) {
        if (!times.empty() && t <= times.back())
            throw std::invalid_argument("report times must increase");
        times.push_back(t);
        for (const auto& [k, v] : row) series[k].push_back(v);
    }
};

}  // namespace kfp
