#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "kfp/diagnostics.hpp"

using namespace kfp;
using Catch::Approx;
using Eigen::Vector3d;

namespace {
constexpr double pi = std::numbers::pi;

const VelocityBasis& basis6() {
    static VelocityBasis b({6, 10});
    return b;
}
const SpatialGrid grid64{1, 64, 1.0};

const std::vector<FunctionalKind> kAllKinds = {
    FunctionalKind::kSobolevPlain, FunctionalKind::kEnergyE,
    FunctionalKind::kDissipationD, FunctionalKind::kHighH,
    FunctionalKind::kHighM,        FunctionalKind::kCrossE0,
    FunctionalKind::kCrossE0High,  FunctionalKind::kE1Second,
    FunctionalKind::kD1Second};
}  // namespace

TEST_CASE("all functionals vanish at equilibrium") {
    KineticFluidState z(basis6(), grid64);
    for (FunctionalKind k : kAllKinds)
        CHECK(evaluate_functional(k, z) == 0.0);
}

TEST_CASE("plain Sobolev sum on an analytic field") {
    VelocityBasis b({3, 7});
    SpatialGrid g3{3, 16, 1.0};
    KineticFluidState s(b, g3);
    for (long p = 0; p < g3.points(); ++p)
        s.fluid(p, 0) = std::sin(g3.coordinates(p)[0]);
    double v = evaluate_functional(FunctionalKind::kSobolevPlain, s);
    CHECK(v == Approx(12.0 * pi * pi * pi).epsilon(1e-10));
    CHECK(v == Approx(372.06).margin(0.02));
}

TEST_CASE("energy functional stays near its Sobolev core") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        KineticFluidState s =
            random_admissible_state(basis6(), grid64, 1e-2, 100 + trial);
        double e = evaluate_functional(FunctionalKind::kEnergyE, s);
        double sob = evaluate_functional(FunctionalKind::kSobolevPlain, s);
        CHECK(std::abs(e - sob) <= 0.2 * sob);
    }

    // with vanishing weights the two coincide exactly
    FunctionalWeights w;
    w.tau1 = w.tau2 = w.tau3 = 0.0;
    KineticFluidState s = random_admissible_state(basis6(), grid64, 1e-2, 42);
    CHECK(evaluate_functional(FunctionalKind::kEnergyE, s, w) ==
          Approx(evaluate_functional(FunctionalKind::kSobolevPlain, s))
              .epsilon(1e-14));
}

TEST_CASE("quadratic homogeneity") {
    KineticFluidState s = random_admissible_state(basis6(), grid64, 1e-2, 7);
    KineticFluidState s3 = s;
    s3.f *= 3.0;
    s3.fluid *= 3.0;
    for (FunctionalKind k : kAllKinds) {
        double a = evaluate_functional(k, s);
        double b = evaluate_functional(k, s3);
        CHECK(b == Approx(9.0 * a).epsilon(1e-11));
    }
}

TEST_CASE("signs of the quadratic functionals") {
    for (int trial = 0; trial < 5; ++trial) {
        KineticFluidState s =
            random_admissible_state(basis6(), grid64, 1e-2, 200 + trial);
        CHECK(evaluate_functional(FunctionalKind::kDissipationD, s) >= 0.0);
        CHECK(evaluate_functional(FunctionalKind::kHighH, s,
                                  FunctionalWeights{0, 0, 0, 0, 0, 0, 0, 0}) >=
              0.0);
        CHECK(evaluate_functional(FunctionalKind::kHighM, s) >= 0.0);
        CHECK(evaluate_functional(FunctionalKind::kD1Second, s) >= 0.0);
    }
}

TEST_CASE("high-frequency cross functional is definitionally consistent") {
    KineticFluidState s = random_admissible_state(basis6(), grid64, 1e-2, 11);
    FunctionalWeights w;

    // filter the state itself, then evaluate the plain shell-1 functional
    KineticFluidState hs = s;
    Eigen::MatrixXcd fh = forward_columns(grid64, s.f);
    Eigen::MatrixXcd gh = forward_columns(grid64, s.fluid);
    for (long p = 0; p < grid64.points(); ++p)
        if (grid64.wavevector(p).norm() <= 0.5 * w.high_cutoff) {
            fh.row(p).setZero();
            gh.row(p).setZero();
        }
    hs.f = inverse_columns_real(grid64, fh);
    hs.fluid = inverse_columns_real(grid64, gh);

    double via_mask = evaluate_moment_cross(s, w, 1, 1, true);
    double via_state = evaluate_moment_cross(hs, w, 1, 1, false);
    CHECK(via_mask == Approx(via_state).epsilon(1e-12));
    CHECK(evaluate_functional(FunctionalKind::kCrossE0High, s, w) ==
          Approx(via_state).epsilon(1e-12));
}

TEST_CASE("conservation residuals") {
    KineticFluidState z(basis6(), grid64);
    ConservationResiduals r0 = conservation_residuals(z);
    CHECK(r0.particle_mass == 0.0);
    CHECK(r0.fluid_mass == 0.0);
    CHECK(r0.momentum.norm() == 0.0);
    CHECK(r0.energy == 0.0);

    KineticFluidState s = random_admissible_state(basis6(), grid64, 1e-2, 13);
    ConservationResiduals r = conservation_residuals(s);
    CHECK(std::abs(r.particle_mass) < 1e-12);
    CHECK(std::abs(r.fluid_mass) < 1e-12);
    CHECK(r.momentum.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(r.energy) < 1e-12);
}

TEST_CASE("exponential fitting") {
    std::vector<double> ts, vs;
    for (int i = 0; i < 10; ++i) {
        ts.push_back(0.3 * i);
        vs.push_back(5.0 * std::exp(-2.0 * 0.3 * i));
    }
    ExponentialFit fit = fit_exponential(ts, vs);
    CHECK(fit.rate == Approx(2.0).margin(1e-9));
    CHECK(fit.residual < 1e-9);

    std::vector<double> flat(ts.size(), 1.5);
    CHECK(fit_exponential(ts, flat).rate == Approx(0.0).margin(1e-12));

    std::vector<double> bad = vs;
    bad[2] = 0.0;
    CHECK_THROWS(fit_exponential(ts, bad));
}

TEST_CASE("lyapunov check") {
    SECTION("equilibrium trajectory passes vacuously") {
        std::vector<double> t{0, 1, 2, 3};
        std::vector<double> z(4, 0.0);
        LyapunovCheck c = lyapunov_check(t, z, z);
        CHECK(c.pass);
    }
    SECTION("synthetic decaying trajectory") {
        std::vector<double> t, e, d;
        for (int i = 0; i < 20; ++i) {
            t.push_back(0.1 * i);
            e.push_back(std::exp(-2.0 * 0.1 * i));
            d.push_back(std::exp(-2.0 * 0.1 * i));  // dE/dt = -2E = -2D
        }
        LyapunovCheck c = lyapunov_check(t, e, d);
        CHECK(c.pass);
        CHECK(c.lambda == Approx(2.0).margin(0.05));
    }
    SECTION("degenerate dissipation is rejected") {
        std::vector<double> t{0, 1, 2};
        std::vector<double> e{1.0, 0.5, 0.25};
        std::vector<double> d{1.0, 0.0, 1.0};
        CHECK_THROWS(lyapunov_check(t, e, d));
        CHECK_THROWS(lyapunov_check({0, 1}, {1, 1}, {1, 1}));
    }
}

TEST_CASE("interpolation inequality") {
    SpatialGrid g{1, 64, 1.0};
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;

    SECTION("endpoints are equalities") {
        SpectralField f = SpectralField::from_function(
            g, [](const Vector3d& x) { return std::sin(x[0]) + 0.3; });
        CHECK(interpolation_check(f, 2.0).ratio == Approx(1.0).epsilon(1e-12));
        CHECK(interpolation_check(f, 6.0).ratio == Approx(1.0).epsilon(1e-12));
        CHECK_THROWS(interpolation_check(f, 1.5));
        CHECK_THROWS(interpolation_check(f, 7.0));
    }
    SECTION("interior exponents satisfy the bound") {
        for (int trial = 0; trial < 20; ++trial) {
            SpectralField f(g, Space::kSpectral);
            for (long p = 0; p < g.points(); ++p) {
                int m = g.frequency(static_cast<int>(p));
                if (std::abs(m) <= 8)
                    f.data()[p] = Complex(nd(rng), nd(rng));
            }
            SpectralField phys = f.to_physical();
            for (long p = 0; p < g.points(); ++p)
                phys.data()[p] = phys.data()[p].real();
            for (double p : {3.0, 4.0})
                CHECK(interpolation_check(phys, p).ratio <= 1.0 + 1e-10);
        }
    }
}

TEST_CASE("functional report guards its time axis") {
    FunctionalReport rep;
    rep.append(0.0, {{"E", 1.0}});
    rep.append(1.0, {{"E", 0.5}});
    CHECK_THROWS(rep.append(0.5, {{"E", 0.4}}));
    CHECK(rep.series.at("E").size() == 2);
}
