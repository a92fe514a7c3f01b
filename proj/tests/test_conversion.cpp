#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "paramres/conversion.hpp"
#include "paramres/steadystate.hpp"
#include "support.hpp"

using namespace paramres;

namespace {

/// Direct solve of the conversion statics: M a = S b, c = b - i S a.
Mat2 conversion_oracle(const ModePair& mp, double eps, double z1, double z2, double D)
{
    Mat2 M, S = Mat2::Zero();
    M << D + z1 + I * mp.gamma1, eps, eps, D + z2 + I * mp.gamma2;
    S(0, 0) = std::sqrt(2 * mp.gamma10);
    S(1, 1) = std::sqrt(2 * mp.gamma20);
    return Mat2::Identity() - I * S * M.inverse() * S;
}

double unitarity(const Mat2& V) { return (V * V.adjoint() - Mat2::Identity()).cwiseAbs().maxCoeff(); }

PumpConfig conv(double eps, double delta) { return {eps, delta, Regime::conversion}; }

}  // namespace

TEST_CASE("linear conversion matrix matches the direct solve")
{
    testing::Rng rng(31);
    for (int k = 0; k < 100; ++k) {
        double g1 = rng.uniform(0.3, 3), g2 = rng.uniform(0.3, 3);
        auto mp = ModePair::lossy(g1, g2, g1 * rng.uniform(0.2, 1), g2 * rng.uniform(0.2, 1), 0, 0);
        double eps = rng.uniform(0, 3), z1 = rng.uniform(-3, 3), z2 = rng.uniform(-3, 3), D = rng.uniform(-4, 4);
        auto V = conversion_matrix(mp, eps, z1, z2, D);
        CHECK((V - conversion_oracle(mp, eps, z1, z2, D)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(V(0, 1) == V(1, 0));
    }
}

TEST_CASE("no pump, no conversion")
{
    auto mp = ModePair::lossless(1, 2, 0, 0);
    auto s = conversion_scattering(mp, conv(0.0, 0.5), 0.1, 0.0, 0.3);
    CHECK(std::abs(s.V(0, 1)) == 0.0);
    CHECK(std::abs(s.V(0, 0)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("lossless conversion is unitary, with and without Kerr")
{
    testing::Rng rng(37);
    for (int k = 0; k < 100; ++k) {
        double g1 = rng.uniform(0.3, 3), g2 = rng.uniform(0.3, 3);
        auto mp = ModePair::lossless(g1, g2, rng.uniform(0, 0.05), rng.uniform(0, 0.05));
        auto s = conversion_scattering(mp, conv(rng.uniform(0, 3), rng.uniform(-3, 3)), std::polar(rng.uniform(0, 2), 0.3),
                                       0.0, rng.uniform(-4, 4));
        CHECK(s.unitarity_defect < 1e-12);
        CHECK(unitarity(s.V) < 1e-12);
        CHECK(std::norm(s.V(0, 0)) + std::norm(s.V(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("losses only remove photons")
{
    auto mp = ModePair::lossy(1.5, 2.0, 1.0, 1.2, 0, 0);
    for (double D : testing::linspace(-5, 5, 21)) {
        auto V = conversion_matrix(mp, 1.3, 0.2, -0.4, D);
        CHECK(std::norm(V(0, 0)) + std::norm(V(1, 0)) < 1.0);
    }
}

TEST_CASE("self-consistent field solves the Kerr-shifted statics")
{
    auto mp = ModePair::lossless(1, 3, 0.02, 0.06);
    PumpConfig p = conv(1.2, 0.4);
    cplx b1 = std::polar(1.5, 0.2);
    auto s = conversion_scattering(mp, p, b1, 0.0, 0.7);
    double z1 = -p.delta + mp.alpha1 * std::norm(s.state.a1) + 2 * mp.alpha * std::norm(s.state.a2);
    double z2 = p.delta + mp.alpha2 * std::norm(s.state.a2) + 2 * mp.alpha * std::norm(s.state.a1);
    CHECK((s.V - conversion_oracle(mp, p.epsilon, z1, z2, 0.7)).cwiseAbs().maxCoeff() < 1e-10);
    // the intracavity field itself: c = b - i S a with c = V b
    cplx c1 = (s.V * Eigen::Vector2cd(b1, 0.0))(0);
    CHECK(std::abs(c1 - (b1 - I * std::sqrt(2.0) * s.state.a1)) < 1e-10);
    CHECK_FALSE(s.quantum_valid);
    CHECK(conversion_scattering(mp, p, 1e-4, 0.0, 0.7).quantum_valid);
}

TEST_CASE("full conversion point")
{
    auto mp = ModePair::lossless(1, 3, 0, 0);
    for (double d : {-1.0, 0.0, 0.5, 2.0}) {
        auto fc = full_conversion_point(mp, d);
        CHECK(fc.epsilon == doctest::Approx(std::sqrt(3.0 * (1 + 4 * d * d / 4))).epsilon(1e-14));
        CHECK(fc.Delta == doctest::Approx(d * 4 / 2).epsilon(1e-14));
        auto V = conversion_matrix(mp, fc.epsilon, -d, d, fc.Delta);
        CHECK(std::norm(V(0, 0)) < 1e-20);
        CHECK(std::norm(V(0, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(full_conversion_point(mp, 0.0).epsilon == doctest::Approx(instability_threshold(mp, 0.0).epsilon_th));
}

TEST_CASE("full conversion point is the reflection minimum")
{
    auto mp = ModePair::lossless(0.8, 2.5, 0, 0);
    double d = 0.7;
    auto fc = full_conversion_point(mp, d);
    auto refl = [&](double e, double D) { return std::norm(conversion_matrix(mp, e, -d, d, D)(0, 0)); };
    // coordinate descent oracle from a coarse start
    double e = 1.0, D = 0.0, h = 0.5;
    while (h > 1e-10) {
        bool moved = false;
        for (auto [de, dD] : {std::pair{h, 0.0}, {-h, 0.0}, {0.0, h}, {0.0, -h}})
            if (refl(e + de, D + dD) < refl(e, D)) {
                e += de;
                D += dD;
                moved = true;
            }
        if (!moved) h /= 2;
    }
    CHECK(e == doctest::Approx(fc.epsilon).epsilon(1e-6));
    CHECK(D == doctest::Approx(fc.Delta).epsilon(1e-6));
}

TEST_CASE("full conversion edge cases")
{
    auto eq = ModePair::lossless(1, 1, 0, 0);
    CHECK(full_conversion_point(eq, 0.0).epsilon == 1.0);
    CHECK_THROWS_AS(full_conversion_point(eq, 0.2), DomainError);
    CHECK_THROWS_AS(full_conversion_point(ModePair::lossy(1, 2, 0.5, 2, 0, 0), 0.0), DomainError);
    CHECK_THROWS_AS(conversion_scattering(eq, {1.0, 0.0, Regime::amplification}, 0.1, 0.0, 0.0), DomainError);
}

TEST_CASE("avoided crossing: the resonances split by about twice the pump")
{
    auto mp = ModePair::lossless(1, 1, 0, 0);
    ConversionSweep req;
    req.mode_pair = mp;
    req.pump = conv(5.0, 0.0);
    req.delta_grid = {0.0, 0.1};
    req.delta1_grid = testing::linspace(-10, 10, 2001);
    auto map = conversion_sweep_serial(req);
    std::vector<double> at0;
    for (auto& pk : map.peaks)
        if (pk.delta == 0.0) at0.push_back(pk.delta1);
    REQUIRE(at0.size() == 2);
    // oracle: |V12|^2 = 4 e^2 / ((D^2 - 1 - e^2)^2 + 4 D^2) peaks at D^2 = e^2 - 1, just inside
    // the resonance real parts +-e
    CHECK(at0[0] == doctest::Approx(-std::sqrt(24.0)).epsilon(1e-4));
    CHECK(at0[1] == doctest::Approx(std::sqrt(24.0)).epsilon(1e-4));
}

TEST_CASE("far-detuned reflection dip sits on the bare resonance")
{
    auto mp = ModePair::lossy(1.0, 1.0, 0.5, 0.5, 0, 0);
    double d = 30.0;
    double best = 1e9, at = 0;
    for (double d1 : testing::linspace(-2, 2, 4001)) {
        double r = std::norm(conversion_matrix(mp, 1.0, -d, d, d1 + d)(0, 0));
        if (r < best) best = r, at = d1;
    }
    CHECK(std::abs(at) < 0.05);
}

TEST_CASE("newton failure is reported")
{
    auto mp = ModePair::lossless(1, 1, 0.05, 0.05);
    ConversionOptions opt;
    opt.max_iterations = 1;
    CHECK_THROWS_AS(conversion_scattering(mp, conv(1.0, 0.0), 30.0, 0.0, 0.0, opt), NumericalError);
}

TEST_CASE("conversion sweep: parallel equals serial and peaks are local maxima")
{
    ConversionSweep req;
    req.mode_pair = ModePair::lossy(1.8, 4.0, 1.0, 3.0, 0.01, 0.03);
    req.pump = conv(2.0, 0.0);
    req.b1 = 0.05;
    req.delta_grid = testing::linspace(-4, 4, 9);
    req.delta1_grid = testing::linspace(-10, 10, 201);
    auto a = conversion_sweep(req, 2);
    auto b = conversion_sweep_serial(req);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].conversion == b.rows[i].conversion);
        CHECK(a.rows[i].reflection == b.rows[i].reflection);
        CHECK(a.rows[i].delta2 == doctest::Approx(2 * a.rows[i].delta + a.rows[i].delta1));
    }
    REQUIRE(a.peaks.size() == b.peaks.size());
    double step = 0.1;
    for (auto& pk : a.peaks) {
        double grid_best = 0;
        for (auto& r : a.rows)
            if (r.delta == pk.delta && std::abs(r.delta1 - pk.delta1) <= step) grid_best = std::max(grid_best, r.conversion);
        CHECK(pk.value >= grid_best);
    }
    CHECK_THROWS_AS(conversion_sweep(ConversionSweep{req.mode_pair, req.pump, 0.0, {1.0}, {0.0, 1.0}, {}}), DomainError);
}
