#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <mutex>
#include <random>

#include "kfp/hermite_ops.hpp"
#include "kfp/params.hpp"
#include "kfp/spectral_field.hpp"

namespace kfp {

/// Full kinetic-fluid state on the periodic grid, stored as physical-space
/// real samples: one column per Hermite coefficient for f, and the fluid
/// fields (rho, u, theta).  Velocity space is always three-dimensional;
/// transport couples only the first grid.dim velocity components.
class KineticFluidState {
  public:
    KineticFluidState(const VelocityBasis& basis, const SpatialGrid& grid)
        : basis_(&basis), grid_(grid) {
        grid.validate();
        f = Eigen::MatrixXd::Zero(grid.points(), basis.size());
        fluid = Eigen::MatrixXd::Zero(grid.points(), 5);
    }

    const VelocityBasis& basis() const { return *basis_; }
    const SpatialGrid& grid() const { return grid_; }

    Eigen::MatrixXd f;      // points x basis.size()
    Eigen::MatrixXd fluid;  // points x 5: rho, u1, u2, u3, theta
    double time = 0.0;

    auto rho() const { return fluid.col(0); }
    auto u(int i) const { return fluid.col(1 + i); }
    auto theta() const { return fluid.col(4); }

    /// Vacuum guard: the total density 1 + rho must stay well away from
    /// zero (the small-perturbation regime never approaches vacuum).
    void check_vacuum_guard() const {
        if ((1.0 + fluid.col(0).array()).minCoeff() < 0.1)
            throw std::runtime_error("vacuum guard violated: 1 + rho < 0.1");
    }

  private:
    const VelocityBasis* basis_;
    SpatialGrid grid_;
};

/// Sparse coefficient-space tables for the velocity operators, cached per
/// basis.  vmax is the spectral radius of one-axis velocity multiplication
/// on the truncated span (the largest transport characteristic).
struct KineticOpTables {
    struct Entry {
        int src, dst;
        double coef;
    };
    std::array<std::vector<Entry>, 3> mult;
    std::array<std::vector<Entry>, 3> raise;
    std::array<std::vector<Entry>, 3> raise2;
    Eigen::VectorXd collision_rate;
    std::array<int, 3> e_pos{};
    std::array<int, 3> e2_pos{};
    int pos0 = 0;
    double vmax = 0.0;

    static const KineticOpTables& get(const VelocityBasis& basis) {
        static std::mutex mu;
        static std::map<const VelocityBasis*, std::unique_ptr<KineticOpTables>>
            cache;
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(&basis);
        if (it == cache.end()) {
            auto t = std::make_unique<KineticOpTables>();
            t->build(basis);
            it = cache.emplace(&basis, std::move(t)).first;
        }
        return *it->second;
    }

    void build(const VelocityBasis& basis) {
        const HermiteIndexSet& set = basis.indices();
        const int nf = set.size();
        collision_rate.resize(nf);
        for (int m = 0; m < nf; ++m)
            collision_rate[m] = static_cast<double>(set[m].order());
        pos0 = set.require_position(MultiIndex{});
        for (int ax = 0; ax < 3; ++ax) {
            MultiIndex e;
            e[ax] = 1;
            e_pos[ax] = set.require_position(e);
            e2_pos[ax] = set.require_position(e.bump(ax, 1));
            for (int m = 0; m < nf; ++m) {
                const MultiIndex& a = set[m];
                int up = set.position(a.bump(ax, 1));
                int dn = set.position(a.bump(ax, -1));
                int up2 = set.position(a.bump(ax, 2));
                double cu = std::sqrt(a[ax] + 1.0);
                double cd = std::sqrt(static_cast<double>(a[ax]));
                if (up >= 0) {
                    mult[ax].push_back({m, up, cu});
                    raise[ax].push_back({m, up, cu});
                }
                if (dn >= 0) mult[ax].push_back({m, dn, cd});
                if (up2 >= 0)
                    raise2[ax].push_back(
                        {m, up2, std::sqrt((a[ax] + 1.0) * (a[ax] + 2.0))});
            }
        }
        // spectral radius of the one-axis Jacobi matrix on degrees 0..N
        const int n1 = basis.spec().truncation + 1;
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n1, n1);
        for (int n = 1; n < n1; ++n) {
            jac(n, n - 1) = std::sqrt(static_cast<double>(n));
            jac(n - 1, n) = jac(n, n - 1);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
        vmax = std::max(std::abs(es.eigenvalues().minCoeff()),
                        std::abs(es.eigenvalues().maxCoeff()));
    }
};

/// Column-wise transforms between physical and spectral representations.
inline Eigen::MatrixXcd forward_columns(const SpatialGrid& grid,
                                        const Eigen::MatrixXd& phys) {
    const FftPlan& plan = FftPlan::get(grid.dim, grid.n);
    Eigen::MatrixXcd out(phys.rows(), phys.cols());
    Eigen::VectorXcd in(phys.rows());
    const double scale = 1.0 / static_cast<double>(grid.points());
    for (int c = 0; c < phys.cols(); ++c) {
        in = phys.col(c).cast<Complex>();
        plan.forward(in.data(), out.col(c).data());
        out.col(c) *= scale;
    }
    return out;
}

inline Eigen::MatrixXd inverse_columns_real(const SpatialGrid& grid,
                                            const Eigen::MatrixXcd& spec) {
    const FftPlan& plan = FftPlan::get(grid.dim, grid.n);
    Eigen::MatrixXd out(spec.rows(), spec.cols());
    Eigen::VectorXcd tmp(spec.rows());
    for (int c = 0; c < spec.cols(); ++c) {
        plan.inverse(spec.col(c).data(), tmp.data());
        out.col(c) = tmp.real();
    }
    return out;
}

/// 2/3-rule mask over flat grid indices (1 keep, 0 drop).
inline Eigen::VectorXd dealias_mask(const SpatialGrid& grid) {
    Eigen::VectorXd mask(grid.points());
    const int cut = grid.n / 3;
    for (long p = 0; p < grid.points(); ++p) {
        Eigen::Vector3i m = grid.frequencies(p);
        mask[p] = (std::abs(m[0]) > cut || std::abs(m[1]) > cut ||
                   std::abs(m[2]) > cut)
                      ? 0.0
                      : 1.0;
    }
    return mask;
}

/// Grid L^2 norms of the full state (Parseval in velocity).
inline double state_l2_sq(const KineticFluidState& s) {
    const double w = s.grid().cell_volume();
    return w * (s.f.squaredNorm() + s.fluid.squaredNorm());
}

inline double state_h1_sq(const KineticFluidState& s) {
    double total = state_l2_sq(s);
    Eigen::MatrixXcd fhat = forward_columns(s.grid(), s.f);
    Eigen::MatrixXcd flhat = forward_columns(s.grid(), s.fluid);
    const double vol = s.grid().volume();
    for (long p = 0; p < s.grid().points(); ++p) {
        double k2 = s.grid().wavevector(p).squaredNorm();
        total += vol * k2 *
                 (fhat.row(p).squaredNorm() + flhat.row(p).squaredNorm());
    }
    return total;
}

/// Smooth random perturbation satisfying the periodic-domain conservation
/// constraints: zero-mean particle and fluid densities, zero total momentum
/// b + (1+rho) u, and zero total energy (1+rho)(theta + |u|^2/2) +
/// sqrt(6)/2 omega.  Deterministic for a fixed seed.
inline KineticFluidState random_admissible_state(const VelocityBasis& basis,
                                                 const SpatialGrid& grid,
                                                 double amplitude,
                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    const KineticOpTables& tab = KineticOpTables::get(basis);

    auto random_field = [&](double amp) {
        SpectralField g(grid, Space::kSpectral);
        for (long p = 0; p < grid.points(); ++p) {
            Eigen::Vector3i m = grid.frequencies(p);
            int mmax = m.cwiseAbs().maxCoeff();
            int msum = m.cwiseAbs().sum();
            if (mmax < 1 || mmax > 3) continue;
            g.data()[p] = amp * std::pow(2.0, -msum) *
                          Complex(nd(rng), nd(rng));
        }
        return Eigen::VectorXd(g.to_physical().data().real());
    };

    KineticFluidState s(basis, grid);
    for (int c = 0; c < 5; ++c) s.fluid.col(c) = random_field(amplitude);
    // amplitude decays fast in Hermite degree so that the reconstructed
    // distribution M + sqrt(M) f stays positive out to the far quadrature
    // nodes, where M is tiny and high-degree polynomials are large
    for (int m = 0; m < basis.size(); ++m) {
        int deg = basis.indices()[m].order();
        if (deg > 3) continue;
        s.f.col(m) = random_field(amplitude * std::pow(4.0, -deg));
    }

    // momentum correction: shift the mean of b
    for (int ax = 0; ax < 3; ++ax) {
        double target =
            (s.f.col(tab.e_pos[ax]).array() +
             (1.0 + s.fluid.col(0).array()) * s.fluid.col(1 + ax).array())
                .mean();
        s.f.col(tab.e_pos[ax]).array() -= target;
    }
    // energy correction: shift the mean of omega through the trace shell
    {
        Eigen::ArrayXd energy =
            (1.0 + s.fluid.col(0).array()) *
            (s.fluid.col(4).array() +
             0.5 * (s.fluid.col(1).array().square() +
                    s.fluid.col(2).array().square() +
                    s.fluid.col(3).array().square()));
        double omega_mean = 0.0;
        for (int ax = 0; ax < 3; ++ax)
            omega_mean += s.f.col(tab.e2_pos[ax]).mean();
        omega_mean /= std::sqrt(3.0);
        double omega_target = -2.0 / std::sqrt(6.0) * energy.mean();
        double shift = (omega_target - omega_mean) / std::sqrt(3.0);
        for (int ax = 0; ax < 3; ++ax)
            s.f.col(tab.e2_pos[ax]).array() += shift;
    }
    return s;
}

}  // namespace kfp
