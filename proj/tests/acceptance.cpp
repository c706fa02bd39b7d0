// Acceptance suite: runs every verification scenario end to end at its
// stated tolerance and prints one PASS/FAIL line per criterion.  Exit code
// is nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdarg>
#include <random>

#include "kfp/diagnostics.hpp"
#include "kfp/imex.hpp"
#include "kfp/picard.hpp"
#include "kfp/semigroup.hpp"
#include "quadrature_oracle.hpp"

using namespace kfp;
using kfp_test::QuadOracle;
using kfp_test::random_banded;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {

int g_failures = 0;
std::chrono::steady_clock::time_point g_t0;

void begin() { g_t0 = std::chrono::steady_clock::now(); }

void report(int criterion, bool pass, const std::string& detail) {
    double dt = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - g_t0)
                    .count();
    std::printf("criterion %2d: %s  %s  [%.1f s]\n", criterion,
                pass ? "PASS" : "FAIL", detail.c_str(), dt);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

const VelocityBasis& basis8() {
    static VelocityBasis b({8, 12});
    return b;
}

// --- 1: quadrature-oracle equivalence of every velocity operator --------
void criterion1() {
    begin();
    const VelocityBasis& b = basis8();
    QuadOracle oracle(b);
    std::mt19937_64 rng(101);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        VectorXd c = random_banded(b, b.spec().truncation - 2, rng);
        Vector3d u(nd(rng), nd(rng), nd(rng));
        double theta = nd(rng);

        auto track = [&](double d) { worst = std::max(worst, d); };
        track((apply_collision(b, c) - oracle.collision(c))
                  .cwiseAbs()
                  .maxCoeff());
        for (int ax = 0; ax < 3; ++ax) {
            track((apply_ladder(b, Ladder::kMultV, ax, c) -
                   oracle.mult_v(ax, c))
                      .cwiseAbs()
                      .maxCoeff());
            track((apply_ladder(b, Ladder::kDV, ax, c) -
                   oracle.deriv_v(ax, c))
                      .cwiseAbs()
                      .maxCoeff());
            track((apply_ladder(b, Ladder::kRaise, ax, c) -
                   oracle.raise(ax, c))
                      .cwiseAbs()
                      .maxCoeff());
            track((apply_ladder(b, Ladder::kLower, ax, c) -
                   oracle.lower(ax, c))
                      .cwiseAbs()
                      .maxCoeff());
        }
        track((kinetic_linear_terms(b, c, u, theta) -
               oracle.kinetic_terms(c, u, theta))
                  .cwiseAbs()
                  .maxCoeff());
        MacroMoments<double> m = macro_moments(b, c);
        track(std::abs(m.a - oracle.moment_a(c)));
        track((m.b - oracle.moment_b(c)).cwiseAbs().maxCoeff());
        track(std::abs(m.omega - oracle.moment_omega(c)));
        track((moment_gamma(b, c) - oracle.moment_gamma(c))
                  .cwiseAbs()
                  .maxCoeff());
        track((moment_upsilon(b, c) - oracle.moment_upsilon(c))
                  .cwiseAbs()
                  .maxCoeff());
        track((macro_coefficients(b, m) - oracle.macro_projection(c))
                  .cwiseAbs()
                  .maxCoeff());
        track(std::abs(nu_norm_sq(b, c) - oracle.nu_norm_sq(c)) /
              std::max(1.0, oracle.nu_norm_sq(c)));
        track(std::abs(c.squaredNorm() - oracle.norm_sq(c)) /
              std::max(1.0, oracle.norm_sq(c)));
    }
    report(1, worst < 1e-8,
           fmt("operator vs quadrature, worst deviation %.2e (tol 1e-8, "
               "100 states, degrees <= %d)",
               worst, basis8().spec().truncation - 2));
}

// --- 2: coercivity of the collision operator ----------------------------
void criterion2() {
    begin();
    const VelocityBasis& b = basis8();
    std::mt19937_64 rng(202);
    bool macro_bound = true;
    double worst_defect = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        VectorXd c = random_banded(b, b.spec().truncation, rng);
        MacroMoments<double> m = macro_moments(b, c);
        double defect = (m.b.squaredNorm() + 2.0 * m.omega * m.omega) -
                        collision_dissipation(b, c);
        worst_defect = std::max(worst_defect, defect);
        if (defect > 1e-12) macro_bound = false;
    }
    double inf_ratio = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 200; ++trial) {
        VectorXd c = micro_part(b, random_banded(b, b.spec().truncation, rng));
        inf_ratio = std::min(
            inf_ratio, collision_dissipation(b, c) / nu_norm_sq(b, c));
    }
    report(2, macro_bound && inf_ratio > 0.0,
           fmt("-<f,Lf> >= |b|^2 + 2|w|^2 (worst defect %.1e, tol 1e-12); "
               "micro nu-ratio infimum %.4f > 0",
               worst_defect, inf_ratio));
}

// --- 3: per-mode spectral stability and decay envelopes ------------------
void criterion3() {
    begin();
    const VelocityBasis& b = basis8();
    PhysicalParams params;
    LyapunovWeights w;
    std::vector<Vector3d> dirs;
    std::vector<double> dw;
    octahedral_directions(6, dirs, dw);
    double abscissa = -1e300, cmin = 1e300, cmax = -1e300;
    Eigen::VectorXcd dir0 = InitialProfile{}.direction(b);
    for (double mag : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0})
        for (const Vector3d& d : dirs) {
            Vector3d k = mag * d;
            ModeGenerator gen = assemble_generator(b, k, params);
            ModePropagator prop(gen);
            abscissa = std::max(abscissa, prop.spectral_abscissa());
            ModeState s0;
            s0.k = k;
            s0.y = dir0;
            double k2 = k.squaredNorm();
            double tmax = 6.0 * (1.0 + k2) / k2;
            std::vector<double> ts;
            for (int i = 1; i <= 12; ++i) ts.push_back(tmax * i / 12.0);
            ModeDecayFit fit = fit_mode_decay(gen, s0, ts, w);
            cmin = std::min(cmin, fit.c);
            cmax = std::max(cmax, fit.c);
        }
    bool pass = abscissa <= 1e-10 && cmin > 0.0 && cmax / cmin < 5.0;
    report(3, pass,
           fmt("abscissa %.2e (tol 1e-10); normalized rates in [%.3f, %.3f], "
               "spread %.2f (< 5)",
               abscissa, cmin, cmax, cmax / cmin));
}

// --- 4 & 10: whole-space algebraic decay rates ---------------------------
void criteria4_and_10() {
    begin();
    const VelocityBasis& b = basis8();
    PhysicalParams params;
    InitialProfile profile;
    KQuadratureSpec spec;  // defaults: 96 radial on [1e-3, 20], 26 directions
    check_kquad_resolution(spec, profile);
    KQuadrature quad = make_kquadrature(spec);
    std::vector<double> times;
    for (int i = 0; i < 20; ++i)
        times.push_back(10.0 * std::pow(100.0, i / 19.0));
    DecayTable table =
        synthesize_decay_table(b, params, profile, quad, times, 1);

    double expo[3];
    for (int m = 0; m < 3; ++m) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < times.size(); ++i)
            vals.push_back(table.norms(i, m));
        expo[m] = fit_power_law(times, vals).exponent;
    }
    bool pass4 = std::abs(expo[0] + 0.75) <= 0.10 &&
                 std::abs(expo[1] + 1.25) <= 0.10 &&
                 std::abs(expo[2] + 1.75) <= 0.15;
    report(4, pass4,
           fmt("fitted slopes %.3f / %.3f / %.3f vs -0.75+-0.10, "
               "-1.25+-0.10, -1.75+-0.15 over t in [10, 1000]",
               expo[0], expo[1], expo[2]));

    begin();
    double inc1 = expo[1] - expo[0], inc2 = expo[2] - expo[1];
    bool pass10 = std::abs(inc1 + 0.5) <= 0.07 && std::abs(inc2 + 0.5) <= 0.07;
    report(10, pass10,
           fmt("per-derivative increments %.3f and %.3f vs -0.5 +- 0.07",
               inc1, inc2));
}

// --- 5 & 6: nonlinear periodic run ---------------------------------------
void criteria5_and_6() {
    begin();
    const VelocityBasis& b = basis8();
    SpatialGrid grid{1, 64, 1.0};
    PhysicalParams params;
    StepperConfig cfg;
    cfg.dt = 2e-3;
    KineticFluidState initial = random_admissible_state(b, grid, 1e-2, 1);
    FunctionalWeights fw;
    PositivityEvaluator positivity(b);

    std::vector<double> times, energy, dissipation, pmin;
    double drift = 0.0;
    ConservationResiduals cons0;
    bool first = true;
    run_simulation(
        initial, 20.0, cfg, params,
        [&](const KineticFluidState& s) {
            times.push_back(s.time);
            energy.push_back(
                evaluate_functional(FunctionalKind::kEnergyE, s, fw));
            dissipation.push_back(
                evaluate_functional(FunctionalKind::kDissipationD, s, fw));
            pmin.push_back(positivity.minimum(s));
            ConservationResiduals c = conservation_residuals(s);
            if (first) {
                cons0 = c;
                first = false;
            } else {
                double dt1 = 1.0 + s.time;
                drift = std::max(
                    {drift,
                     std::abs(c.particle_mass - cons0.particle_mass) / dt1,
                     std::abs(c.fluid_mass - cons0.fluid_mass) / dt1,
                     (c.momentum - cons0.momentum).norm() / dt1,
                     std::abs(c.energy - cons0.energy) / dt1});
            }
        },
        0.1);

    bool monotone = true;
    for (std::size_t i = 1; i < energy.size(); ++i)
        if (energy[i] > energy[i - 1]) monotone = false;
    double min_pos = *std::min_element(pmin.begin(), pmin.end());

    std::vector<double> ft, fe;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (times[i] >= 2.0 && times[i] <= 20.0) {
            ft.push_back(times[i]);
            fe.push_back(energy[i]);
        }
    ExponentialFit efit = fit_exponential(ft, fe);

    bool pass5 = drift < 1e-6 && min_pos > 0.0 && monotone &&
                 efit.rate > 0.0 && efit.residual < 0.10;
    report(5, pass5,
           fmt("drift %.1e (< 1e-6/(1+t)); positivity min %.3e > 0; "
               "E monotone %s; zeta %.3f > 0, fit residual %.1f%% (< 10%%)",
               drift, min_pos, monotone ? "yes" : "NO", efit.rate,
               100.0 * efit.residual));

    begin();
    LyapunovCheck lyap = lyapunov_check(times, energy, dissipation);
    report(6, lyap.pass,
           fmt("max (dE/dt)/D = %.4f, measured lambda %.4f > 0",
               lyap.max_ratio, lyap.lambda));
}

// --- 7: contraction of the frozen-coefficient iteration ------------------
void criterion7() {
    begin();
    const VelocityBasis& b = basis8();
    SpatialGrid grid{1, 64, 1.0};
    PhysicalParams params;
    KineticFluidState data = random_admissible_state(b, grid, 1e-2, 7);
    PicardOperator op(b, grid, 1e-2, params);
    KineticFluidState last(b, grid);
    std::vector<double> diffs;
    for (int iter = 0; iter < 5; ++iter) {
        KineticFluidState next = op.apply(last, data);
        KineticFluidState d(b, grid);
        d.f = next.f - last.f;
        d.fluid = next.fluid - last.fluid;
        diffs.push_back(std::sqrt(state_h1_sq(d)));
        last = next;
    }
    bool pass = true;
    std::string ratios;
    for (std::size_t i = 1; i < diffs.size(); ++i) {
        double r = diffs[i] / diffs[i - 1];
        ratios += fmt("%s%.2e", i > 1 ? ", " : "", r);
        if (!(r < 1.0) || !(diffs[i] < diffs[i - 1])) pass = false;
    }
    report(7, pass,
           fmt("successive-difference ratios {%s} all < 1 and decreasing",
               ratios.c_str()));
}

// --- 8: sharp-cutoff frequency-split inequalities -------------------------
void criterion8() {
    begin();
    SpatialGrid grid{1, 64, 1.0};
    FrequencySplitSpec split{4.0};
    std::mt19937_64 rng(808);
    std::normal_distribution<double> nd;
    MultiIndex d1, d2;
    d1[0] = 1;
    d2[0] = 2;
    double worst = -1e300;
    for (int trial = 0; trial < 100; ++trial) {
        SpectralField f(grid, Space::kSpectral);
        for (long p = 0; p < grid.points(); ++p) {
            int m = grid.frequency(static_cast<int>(p));
            if (std::abs(m) > grid.n / 2 - 2) continue;
            f.data()[p] = Complex(nd(rng), nd(rng));
        }
        SpectralField phys = f.to_physical();
        for (long p = 0; p < grid.points(); ++p)
            phys.data()[p] = phys.data()[p].real();
        f = phys.to_spectral();

        auto [low, high] = frequency_split(f, split);
        double r0 = split.r0;
        worst = std::max(worst, norm_l2(high) -
                                    2.0 / r0 * norm_l2(derivative(f, d1)));
        worst = std::max(worst,
                         norm_l2(high) - std::pow(2.0 / r0, 2) *
                                             norm_l2(derivative(f, d2)));
        worst = std::max(worst, norm_l2(derivative(low, d2)) -
                                    r0 * norm_l2(derivative(low, d1)));
    }
    report(8, worst <= 1e-10,
           fmt("three cutoff inequalities on 100 fields, worst slack "
               "violation %.1e (tol 1e-10)",
               worst));
}

// --- 9: L^p interpolation inequality --------------------------------------
void criterion9() {
    begin();
    SpatialGrid grid{1, 64, 1.0};
    std::mt19937_64 rng(909);
    std::normal_distribution<double> nd;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        SpectralField f(grid, Space::kSpectral);
        for (long p = 0; p < grid.points(); ++p) {
            int m = grid.frequency(static_cast<int>(p));
            if (std::abs(m) > 12) continue;
            f.data()[p] = Complex(nd(rng), nd(rng));
        }
        SpectralField phys = f.to_physical();
        for (long p = 0; p < grid.points(); ++p)
            phys.data()[p] = phys.data()[p].real();
        for (double p : {2.0, 3.0, 4.0, 6.0})
            worst = std::max(worst, interpolation_check(phys, p).ratio);
    }
    report(9, worst <= 1.0 + 1e-10,
           fmt("||g||_p <= ||g||_2^z ||g||_6^(1-z), worst ratio %.12f "
               "(tol 1 + 1e-10), p in {2,3,4,6}",
               worst));
}

}  // namespace

int main() {
    std::printf("acceptance suite: basis truncation 8, quadrature order 12\n");
    criterion1();
    criterion2();
    criterion3();
    criteria4_and_10();
    criteria5_and_6();
    criterion7();
    criterion8();
    criterion9();
    std::printf(g_failures == 0 ? "all criteria passed\n"
                                : "%d criteria FAILED\n",
                g_failures);
    return g_failures == 0 ? 0 : 1;
}
