#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "kfp/hermite_basis.hpp"
#include "kfp/hermite_ops.hpp"
#include "quadrature_oracle.hpp"

using namespace kfp;
using kfp_test::QuadOracle;
using kfp_test::random_banded;
using Catch::Approx;
using Eigen::Vector3d;
using Eigen::VectorXd;

namespace {
const VelocityBasis& basis8() {
    static VelocityBasis b({8, 12});
    return b;
}
const QuadOracle& oracle8() {
    static QuadOracle o(basis8());
    return o;
}
VectorXd unit_coeff(const VelocityBasis& b, const MultiIndex& a) {
    VectorXd c = VectorXd::Zero(b.size());
    c[b.indices().require_position(a)] = 1.0;
    return c;
}
}  // namespace

TEST_CASE("basis spec validation") {
    CHECK_THROWS(VelocityBasis({1, 12}));
    CHECK_THROWS(VelocityBasis({8, 8}));
    CHECK_NOTHROW(VelocityBasis({2, 6}));
}

TEST_CASE("basis point evaluation") {
    const VelocityBasis& b = basis8();
    constexpr double pi = std::numbers::pi;
    double psi0 = b.eval(MultiIndex{}, Vector3d::Zero());
    CHECK(psi0 == Approx(std::pow(2 * pi, -0.75)).epsilon(1e-14));
    CHECK(psi0 == Approx(0.251976).margin(2e-5));

    MultiIndex e1;
    e1[0] = 1;
    double psie1 = b.eval(e1, Vector3d(1, 0, 0));
    CHECK(psie1 == Approx(std::exp(-0.25) * std::pow(2 * pi, -0.75))
                       .epsilon(1e-14));
    CHECK(psie1 == Approx(0.196238).margin(2e-5));

    MultiIndex big;
    big.a = {5, 4, 0};
    CHECK_THROWS(b.eval(big, Vector3d::Zero()));
}

TEST_CASE("Gram matrix is the identity under quadrature") {
    VelocityBasis b({4, 12});
    QuadOracle o(b);
    for (int m = 0; m < b.size(); ++m)
        for (int n = m; n < b.size(); ++n) {
            double g = o.inner(o.poly(unit_coeff(b, b.indices()[m])),
                               o.poly(unit_coeff(b, b.indices()[n])));
            CHECK(g == Approx(m == n ? 1.0 : 0.0).margin(1e-10));
        }
}

TEST_CASE("projection of simple velocity functions") {
    const VelocityBasis& b = basis8();
    const auto& set = b.indices();

    VectorXd c = b.project([](const Vector3d& v) { return sqrt_maxwellian(v); });
    CHECK(c[set.require_position(MultiIndex{})] == Approx(1.0).epsilon(1e-12));
    c[set.require_position(MultiIndex{})] = 0;
    CHECK(c.cwiseAbs().maxCoeff() < 1e-12);

    c = b.project(
        [](const Vector3d& v) { return v[0] * sqrt_maxwellian(v); });
    MultiIndex e1;
    e1[0] = 1;
    CHECK(c[set.require_position(e1)] == Approx(1.0).epsilon(1e-12));

    c = b.project([](const Vector3d& v) {
        return (v.squaredNorm() - 3.0) / std::sqrt(6.0) * sqrt_maxwellian(v);
    });
    for (int ax = 0; ax < 3; ++ax) {
        MultiIndex t;
        t[ax] = 2;
        CHECK(c[set.require_position(t)] ==
              Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
    }
    CHECK(c.norm() == Approx(1.0).epsilon(1e-12));

    CHECK_THROWS(b.project(
        [](const Vector3d&) { return std::nan(""); }));
}

TEST_CASE("collision operator is diagonal and matches its Dirichlet form") {
    const VelocityBasis& b = basis8();
    const QuadOracle& o = oracle8();

    VectorXd c0 = unit_coeff(b, MultiIndex{});
    CHECK(apply_collision(b, c0).cwiseAbs().maxCoeff() == 0.0);

    MultiIndex e1;
    e1[0] = 1;
    VectorXd ce = unit_coeff(b, e1);
    VectorXd lc = apply_collision(b, ce);
    CHECK(lc[b.indices().require_position(e1)] == Approx(-1.0));
    CHECK((lc - o.collision(ce)).cwiseAbs().maxCoeff() < 1e-10);

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        VectorXd c = random_banded(b, 4, rng);
        double impl = -c.dot(apply_collision(b, c));
        CHECK(impl == Approx(collision_dissipation(b, c)).epsilon(1e-13));
        CHECK(impl == Approx(o.collision_energy(c)).margin(1e-10));
    }
}

TEST_CASE("ladder operators reproduce the quadrature oracle") {
    const VelocityBasis& b = basis8();
    const QuadOracle& o = oracle8();

    VectorXd c0 = unit_coeff(b, MultiIndex{});
    MultiIndex e1;
    e1[0] = 1;
    VectorXd r = apply_ladder(b, Ladder::kRaise, 0, c0);
    CHECK(r[b.indices().require_position(e1)] == Approx(1.0));
    CHECK((r - o.raise(0, c0)).cwiseAbs().maxCoeff() < 1e-10);

    VectorXd ce = unit_coeff(b, e1);
    VectorXd l = apply_ladder(b, Ladder::kLower, 0, ce);
    CHECK(l[0] == Approx(1.0));
    CHECK((l - o.lower(0, ce)).cwiseAbs().maxCoeff() < 1e-10);

    VectorXd m = apply_ladder(b, Ladder::kMultV, 0, ce);
    CHECK(m[b.indices().require_position(e1.bump(0, 1))] ==
          Approx(std::sqrt(2.0)));
    CHECK(m[0] == Approx(1.0));
    CHECK((m - o.mult_v(0, ce)).cwiseAbs().maxCoeff() < 1e-10);

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        VectorXd c = random_banded(b, 6, rng);
        for (int ax = 0; ax < 3; ++ax) {
            CHECK((apply_ladder(b, Ladder::kMultV, ax, c) - o.mult_v(ax, c))
                      .cwiseAbs()
                      .maxCoeff() < 1e-9);
            CHECK((apply_ladder(b, Ladder::kDV, ax, c) - o.deriv_v(ax, c))
                      .cwiseAbs()
                      .maxCoeff() < 1e-9);
            CHECK((apply_ladder(b, Ladder::kRaise, ax, c) - o.raise(ax, c))
                      .cwiseAbs()
                      .maxCoeff() < 1e-9);
            CHECK((apply_ladder(b, Ladder::kLower, ax, c) - o.lower(ax, c))
                      .cwiseAbs()
                      .maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("kinetic velocity terms match their defining integrals") {
    const VelocityBasis& b = basis8();
    const QuadOracle& o = oracle8();
    const auto& set = b.indices();

    SECTION("pure velocity source") {
        VectorXd c = VectorXd::Zero(b.size());
        VectorXd out = kinetic_linear_terms(b, c, Vector3d(1, 0, 0), 0.0);
        MultiIndex e1;
        e1[0] = 1;
        CHECK(out[set.require_position(e1)] == Approx(1.0));
        out[set.require_position(e1)] = 0;
        CHECK(out.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("pure temperature source") {
        VectorXd c = VectorXd::Zero(b.size());
        VectorXd out = kinetic_linear_terms(b, c, Vector3d::Zero().eval(), 1.0);
        for (int ax = 0; ax < 3; ++ax) {
            MultiIndex t;
            t[ax] = 2;
            CHECK(out[set.require_position(t)] == Approx(std::sqrt(2.0)));
        }
    }
    SECTION("Maxwellian-shell diffusion residual") {
        VectorXd c = unit_coeff(b, MultiIndex{});
        VectorXd out = kinetic_linear_terms(b, c, Vector3d::Zero().eval(), 1.0);
        // source sqrt(2) plus the (1/sqrt M) Lap(sqrt M psi_0) contribution
        for (int ax = 0; ax < 3; ++ax) {
            MultiIndex t;
            t[ax] = 2;
            CHECK(out[set.require_position(t)] ==
                  Approx(2.0 * std::sqrt(2.0)));
        }
        CHECK((out - o.kinetic_terms(c, Vector3d::Zero().eval(), 1.0))
                  .cwiseAbs()
                  .maxCoeff() < 1e-9);
    }
    SECTION("random states against the oracle") {
        std::mt19937_64 rng(23);
        for (int trial = 0; trial < 5; ++trial) {
            VectorXd c = random_banded(b, 6, rng);
            Vector3d u(0.3, -0.2, 0.1);
            double theta = -0.4;
            CHECK((kinetic_linear_terms(b, c, u, theta) -
                   o.kinetic_terms(c, u, theta))
                      .cwiseAbs()
                      .maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("macro moments") {
    const VelocityBasis& b = basis8();
    const QuadOracle& o = oracle8();

    VectorXd c0 = unit_coeff(b, MultiIndex{});
    auto m = macro_moments(b, c0);
    CHECK(m.a == 1.0);
    CHECK(m.b.norm() == 0.0);
    CHECK(m.omega == 0.0);

    MultiIndex t200;
    t200[0] = 2;
    VectorXd c2 = unit_coeff(b, t200);
    m = macro_moments(b, c2);
    CHECK(m.omega == Approx(1.0 / std::sqrt(3.0)));
    CHECK(moment_gamma(b, c2)(0, 0) == Approx(std::sqrt(2.0)));

    MultiIndex e1;
    e1[0] = 1;
    VectorXd c1 = unit_coeff(b, e1);
    m = macro_moments(b, c1);
    CHECK(m.b[0] == Approx(1.0));
    CHECK(moment_upsilon(b, c1)[0] == Approx(2.0 / std::sqrt(6.0)));
    CHECK(moment_upsilon(b, c1)[0] == Approx(0.81650).margin(1e-5));

    VelocityBasis small({2, 8});
    CHECK_THROWS(moment_upsilon(small, VectorXd::Zero(small.size()).eval()));

    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 5; ++trial) {
        VectorXd c = random_banded(b, 6, rng);
        auto mm = macro_moments(b, c);
        CHECK(mm.a == Approx(o.moment_a(c)).margin(1e-10));
        CHECK((mm.b - o.moment_b(c)).norm() < 1e-10);
        CHECK(mm.omega == Approx(o.moment_omega(c)).margin(1e-10));
        CHECK((moment_gamma(b, c) - o.moment_gamma(c)).norm() < 1e-9);
        CHECK((moment_upsilon(b, c) - o.moment_upsilon(c)).norm() < 1e-9);
    }
}

TEST_CASE("macro-micro decomposition") {
    const VelocityBasis& b = basis8();
    const QuadOracle& o = oracle8();

    VectorXd c0 = 2.5 * unit_coeff(b, MultiIndex{});
    auto [mac, mic] = decompose_macro_micro(b, c0);
    CHECK(mic.cwiseAbs().maxCoeff() == 0.0);

    MultiIndex t200;
    t200[0] = 2;
    VectorXd c2 = unit_coeff(b, t200);
    auto [mac2, mic2] = decompose_macro_micro(b, c2);
    for (int ax = 0; ax < 3; ++ax) {
        MultiIndex t;
        t[ax] = 2;
        CHECK(mac2[b.indices().require_position(t)] == Approx(1.0 / 3.0));
    }
    CHECK(macro_moments(b, mic2).omega == Approx(0.0).margin(1e-14));
    CHECK((mac2 - o.macro_projection(c2)).cwiseAbs().maxCoeff() < 1e-10);

    std::mt19937_64 rng(37);
    VectorXd c = random_banded(b, 8, rng);
    auto [mac3, mic3] = decompose_macro_micro(b, c);
    CHECK(((mac3 + mic3) - c).cwiseAbs().maxCoeff() < 1e-14);
    auto mm = macro_moments(b, mic3);
    CHECK(std::abs(mm.a) < 1e-13);
    CHECK(mm.b.cwiseAbs().maxCoeff() < 1e-13);
    CHECK(std::abs(mm.omega) < 1e-13);
    auto [mac4, mic4] = decompose_macro_micro(b, mac3);
    CHECK((mac4 - mac3).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(mic4.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("nu-weighted norm") {
    const VelocityBasis& b = basis8();
    const QuadOracle& o = oracle8();

    CHECK(nu_norm_sq(b, VectorXd::Zero(b.size()).eval()) == 0.0);
    VectorXd c0 = unit_coeff(b, MultiIndex{});
    CHECK(nu_norm_sq(b, c0) == Approx(4.75).epsilon(1e-12));
    CHECK(o.nu_norm_sq(c0) == Approx(4.75).margin(1e-10));

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 5; ++trial) {
        VectorXd c = random_banded(b, 6, rng);
        double impl = nu_norm_sq(b, c);
        CHECK(impl == Approx(o.nu_norm_sq(c)).epsilon(1e-9));
        CHECK(impl >= c.squaredNorm());
    }
}

TEST_CASE("Parseval against quadrature") {
    const VelocityBasis& b = basis8();
    const QuadOracle& o = oracle8();
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 5; ++trial) {
        VectorXd c = random_banded(b, 8, rng);
        CHECK(c.squaredNorm() == Approx(o.norm_sq(c)).epsilon(1e-11));
    }
}

TEST_CASE("coercivity of the collision operator") {
    const VelocityBasis& b = basis8();
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 50; ++trial) {
        VectorXd c = random_banded(b, 8, rng);
        auto m = macro_moments(b, c);
        double energy = collision_dissipation(b, c);
        double macro_floor = m.b.squaredNorm() + 2.0 * m.omega * m.omega;
        CHECK(energy >= macro_floor - 1e-12);
    }
    // equality iff the micro part vanishes
    MacroMoments<double> mm;
    mm.a = 0.3;
    mm.b = Vector3d(0.5, -1.0, 0.25);
    mm.omega = -0.75;
    VectorXd mac = macro_coefficients(b, mm);
    CHECK(collision_dissipation(b, mac) ==
          Approx(mm.b.squaredNorm() + 2 * mm.omega * mm.omega).epsilon(1e-13));

    double inf_ratio = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 200; ++trial) {
        VectorXd c = micro_part(b, random_banded(b, 8, rng));
        double r = collision_dissipation(b, c) / nu_norm_sq(b, c);
        inf_ratio = std::min(inf_ratio, r);
    }
    INFO("micro coercivity infimum over sample: " << inf_ratio);
    CHECK(inf_ratio > 0.0);
}
