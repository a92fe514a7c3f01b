#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "paramres/response.hpp"
#include "paramres/steadystate.hpp"
#include "support.hpp"

using namespace paramres;

namespace {

/// Input-output map from a direct solve of the transformed flow equations:
/// M (a1, a2*) = (sqrt(2 G10) b1, sqrt(2 G20) b2*), c1 = b1 - i sqrt(2 G10) a1, c2* = b2* + i sqrt(2 G20) a2*.
Mat2 io_oracle(const ModePair& mp, double eps, double z1, double z2, double D)
{
    Mat2 M;
    M << D + z1 + I * mp.gamma1, eps, eps, -D + z2 - I * mp.gamma2;
    Mat2 S = Mat2::Zero(), C = Mat2::Zero();
    S(0, 0) = std::sqrt(2 * mp.gamma10);
    S(1, 1) = std::sqrt(2 * mp.gamma20);
    C(0, 0) = -I * S(0, 0);
    C(1, 1) = I * S(1, 1);
    return Mat2::Identity() + C * M.inverse() * S;
}

double symplectic_defect(const FourModeBogoliubov& b)
{
    return (b.U * b.U.adjoint() - b.V * b.V.adjoint() - Mat2::Identity()).cwiseAbs().maxCoeff();
}

CavityState driven_state(const ModePair& mp, const PumpConfig& p, double power)
{
    auto states = solve_steady_state(mp, p, std::vector<DriveTone>{{1, std::sqrt(power), 0.0}});
    return states.front();
}

/// Equal drives on a balanced pair keep A1 = A2, the symmetric state the supermode picture assumes.
CavityState symmetric_state(const ModePair& mp, const PumpConfig& p, double power)
{
    cplx b = std::sqrt(power);
    for (auto& s : solve_steady_state(mp, p, FrameDrive{b, b, 0.0}))
        if (std::abs(s.a1 - s.a2) < 1e-9 * std::abs(s.a1)) return s;
    throw std::runtime_error("no symmetric state");
}

}  // namespace

TEST_CASE("io map matches the direct solve")
{
    testing::Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        double g1 = rng.uniform(0.3, 3), g2 = rng.uniform(0.3, 3);
        auto mp = ModePair::lossy(g1, g2, g1 * rng.uniform(0.2, 1), g2 * rng.uniform(0.2, 1), 0, 0);
        double eps = rng.uniform(0, 2), z1 = rng.uniform(-3, 3), z2 = rng.uniform(-3, 3), D = rng.uniform(-3, 3);
        auto io = io_matrix(mp, eps, z1, z2, D);
        auto ref = io_oracle(mp, eps, z1, z2, D);
        CHECK((io.V - ref).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
        CHECK(io.V(0, 1) == -io.V(1, 0));
    }
}

TEST_CASE("elastic scattering without pump")
{
    auto mp = ModePair::lossless(1, 2, 0, 0);
    auto io = io_matrix(mp, 0.0, 0.4, -0.2, 0.7);
    CHECK(std::abs(io.V(0, 0)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(io.V(1, 0)) == 0.0);
    auto uv = two_mode_uv(mp, {0.0, 0.3, Regime::amplification}, 0.5);
    CHECK(std::abs(uv.v1) == 0.0);
    CHECK(std::abs(uv.u2) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("linear gain at resonance, 95% of threshold")
{
    auto mp = ModePair::lossless(1, 1, 0, 0);
    auto uv = two_mode_uv(mp, {0.95, 0.0, Regime::amplification}, 0.0);
    CHECK(uv.u1.real() == doctest::Approx(-1.9025 / 0.0975).epsilon(1e-13));
    CHECK(std::norm(uv.u1) == doctest::Approx(380.8).epsilon(1e-3));
    CHECK(std::norm(uv.u1) - std::norm(uv.v1) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("two-mode identities hold for lossless pairs")
{
    testing::Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        double g1 = rng.uniform(0.2, 3), g2 = rng.uniform(0.2, 3), d = rng.uniform(-2, 2);
        auto mp = ModePair::lossless(g1, g2, 0, 0);
        PumpConfig p{rng.uniform(0, 0.98) * instability_threshold(mp, d).epsilon_th, d, Regime::amplification};
        double D = rng.uniform(-4, 4);
        auto a = two_mode_uv(mp, p, D), b = two_mode_uv(mp, p, -D);
        CHECK(std::norm(a.u1) - std::norm(a.v1) == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(std::norm(a.u2) - std::norm(a.v2) == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(std::abs(a.u1 * b.v2 - a.v1 * b.u2) < 1e-11 * std::max(1.0, std::abs(a.u1 * b.v2)));
        CHECK_FALSE(a.above_threshold);
    }
}

TEST_CASE("linear response diverges at the threshold point")
{
    auto mp = ModePair::lossless(1, 3, 0, 0);
    double d = 1.0;
    auto th = instability_threshold(mp, d);
    auto at = two_mode_uv(mp, {th.epsilon_th, d, Regime::amplification}, th.delta_crit);
    CHECK(at.divergent);
    auto near = two_mode_uv(mp, {th.epsilon_th * 0.999, d, Regime::amplification}, th.delta_crit);
    CHECK_FALSE(near.divergent);
    CHECK(std::norm(near.u1) > 1e4);
    CHECK_THROWS_AS(io_matrix(mp, th.epsilon_th, d, d, th.delta_crit), SingularResponse);
}

TEST_CASE("nonlinear gain sum rule")
{
    testing::Rng rng(9);
    for (int k = 0; k < 40; ++k) {
        double g1 = rng.uniform(0.5, 2), g2 = rng.uniform(0.5, 2);
        auto mp = ModePair::lossless(g1, g2, rng.uniform(1e-3, 0.05), rng.uniform(1e-3, 0.05));
        PumpConfig p{rng.uniform(0.1, 0.95) * std::sqrt(g1 * g2), rng.uniform(-1, 1), Regime::amplification};
        auto s = driven_state(mp, p, rng.uniform(0.1, 3));
        double D = rng.uniform(-3, 3);
        // g12 already refers to the mirrored detuning
        auto a = nonlinear_io(mp, p, s, D);
        CHECK(a.g11 - a.g12 == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("four-mode map reduces to the two-mode map for an empty cavity")
{
    auto mp = ModePair::lossless(1.3, 0.7, 0.01, 0.02);
    PumpConfig p{0.6, 0.2, Regime::amplification};
    CavityState empty;
    for (double D : {-1.0, 0.0, 0.4}) {
        auto fm = four_mode_bogoliubov(mp, p, empty, D);
        auto uv = two_mode_uv(mp, p, D);
        CHECK(std::abs(fm.U(0, 0) - uv.u1) < 1e-12);
        CHECK(std::abs(fm.U(1, 1) - uv.u2) < 1e-12);
        CHECK(std::abs(fm.V(0, 1) - uv.v1) < 1e-12);
        CHECK(std::abs(fm.V(1, 0) - uv.v2) < 1e-12);
        CHECK(std::abs(fm.U(0, 1)) < 1e-15);
        CHECK(std::abs(fm.V(0, 0)) < 1e-15);
    }
    auto m = four_mode_matrices(mp, p, empty, 0.3);
    CHECK(m.E(0, 1) == cplx(0.6));
    CHECK(m.E(0, 0) == cplx(0.0));
}

TEST_CASE("four-mode symplectic identity about driven states")
{
    testing::Rng rng(13);
    for (int k = 0; k < 40; ++k) {
        double g1 = rng.uniform(0.5, 2), g2 = rng.uniform(0.5, 2);
        auto mp = ModePair::lossless(g1, g2, rng.uniform(1e-3, 0.05), rng.uniform(1e-3, 0.05));
        PumpConfig p{rng.uniform(0.1, 0.95) * std::sqrt(g1 * g2), rng.uniform(-1, 1), Regime::amplification};
        auto s = driven_state(mp, p, rng.uniform(0.1, 3));
        auto b = four_mode_bogoliubov(mp, p, s, rng.uniform(-3, 3));
        REQUIRE_FALSE(b.divergent);
        CHECK(symplectic_defect(b) < 1e-10 * std::max(1.0, b.U.cwiseAbs2().maxCoeff()));
        auto m = four_mode_matrices(mp, p, s, 0.2);
        CHECK(m.E(0, 1) == m.E(1, 0));
    }
}

TEST_CASE("secondary idler gains scale with the field intensity")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    PumpConfig p{0.5, 0.0, Regime::amplification};
    double prev_ratio = 0;
    for (double power : {1e-4, 1e-3}) {
        auto s = driven_state(mp, p, power);
        auto g = four_mode_gains(mp, p, s, 0.3);
        double ratio = g.g12_p / std::pow(std::norm(s.a1), 2);
        if (prev_ratio > 0) CHECK(ratio == doctest::Approx(prev_ratio).epsilon(0.02));
        prev_ratio = ratio;
        CHECK(g.g12_p < 1e-3);
    }
}

TEST_CASE("supermode reconstruction equals the direct solve")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    PumpConfig p{0.9, -0.5, Regime::amplification};
    auto s = symmetric_state(mp, p, 1.0);
    REQUIRE(std::abs(std::abs(s.a1) - std::abs(s.a2)) < 1e-9 * std::abs(s.a1));
    for (double D : testing::linspace(-3, 3, 25)) {
        auto direct = four_mode_bogoliubov(mp, p, s, D);
        auto sm = supermode_bogoliubov(supermode_coeffs(mp, p, s, D));
        CHECK((direct.U - sm.U).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((direct.V - sm.V).cwiseAbs().maxCoeff() < 1e-10);
        auto c = supermode_coeffs(mp, p, s, D);
        CHECK(std::norm(c.u_minus) - std::norm(c.v_minus) == doctest::Approx(1.0).epsilon(1e-11));
        CHECK(std::norm(c.u_plus) - std::norm(c.v_plus) == doctest::Approx(1.0).epsilon(1e-11));
    }
}

TEST_CASE("supermodes refuse unbalanced or unequal inputs")
{
    auto mp = ModePair::lossless(1, 2, 0.01, 0.02);
    CHECK_THROWS_AS(supermode_coeffs(mp, {0.5, 0, Regime::amplification}, CavityState{}, 0.1), DomainError);
    auto bal = ModePair::lossless(1, 1, 0.01, 0.01);
    CavityState s;
    s.a1 = 2.0;
    s.a2 = 1.0;
    CHECK_THROWS_AS(supermode_coeffs(bal, {0.5, 0, Regime::amplification}, s, 0.1), DomainError);
    SupermodeOptions opt;
    opt.average_intensity = true;
    CHECK(supermode_coeffs(bal, {0.5, 0, Regime::amplification}, s, 0.1, opt).intensity == doctest::Approx(2.5));
}

TEST_CASE("minus supermode amplifies more than plus near threshold")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    PumpConfig p{1.0, 0.0, Regime::amplification};
    auto s = symmetric_state(mp, p, 0.01);
    auto c = supermode_coeffs(mp, p, s, 0.05);
    CHECK(std::abs(c.v_minus) > std::abs(c.v_plus));
}

TEST_CASE("oscillator determinants: closed form and the neutral minus mode")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    for (double eps : {1.2, 2.0, 10.0}) {
        for (double d : {0.0, -0.7}) {
            PumpConfig p{eps, d, Regime::amplification};
            auto st = to_cavity_state(mp, p, oscillation_state(mp, p, Branch::stable), 0.4);
            for (double D : {0.0, 0.5, 1.5}) {
                auto c = supermode_coeffs(mp, p, st, D);
                auto det = oscillator_determinants(mp, p, D);
                double scale = std::max(1.0, std::abs(det.det_plus));
                CHECK(std::abs(c.det_plus - det.det_plus) < 1e-9 * scale);
                CHECK(std::abs(c.det_minus - det.det_minus) < 1e-9 * scale);
            }
            CHECK(oscillator_determinants(mp, p, 0.0).det_minus == cplx(0.0));
        }
    }
}

TEST_CASE("large-pump asymptote of the minus coefficients")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    PumpConfig p{200.0, 0.0, Regime::amplification};
    auto st = to_cavity_state(mp, p, oscillation_state(mp, p, Branch::stable));
    for (double D : {0.5, 1.0, 2.0}) {
        auto c = supermode_coeffs(mp, p, st, D);
        cplx ref = oscillator_minus_asymptote(1.0, p.epsilon, D);
        CHECK(std::abs(c.v_minus) == doctest::Approx(std::abs(ref)).epsilon(0.02));
        CHECK(std::abs(c.u_minus) == doctest::Approx(std::abs(ref)).epsilon(0.02));
    }
    CHECK(oscillator_gain_asymptote(1.0, 10.0, 1.0) == doctest::Approx(4.0 / 9.0 * 100 / 5));
}

TEST_CASE("near-threshold asymptotics: phases, ratios and window")
{
    auto bal = ModePair::lossless(1, 1, 1e-4, 1e-4);
    PumpConfig p{1.0, 0.0, Regime::amplification};
    auto r = near_threshold_asymptotics(bal, p, {1, std::polar(std::sqrt(0.01), 0.3), 0.0});
    CHECK(r.balanced);
    CHECK(*r.arg_a1 == doctest::Approx(-pi / 2 + 0.3));
    CHECK(*r.arg_a2 == doctest::Approx(pi - 0.3));
    CHECK(r.g11 == r.g12);

    auto unb = ModePair::lossless(1, 3, 0.01, 0.09 / 3);
    auto u = near_threshold_asymptotics(unb, {std::sqrt(3.0), 0.0, Regime::amplification}, {1, 1.0, 0.0});
    CHECK(u.a2_abs * u.a2_abs / (u.a1_abs * u.a1_abs) == doctest::Approx(1.0 / 3).epsilon(1e-14));

    CHECK_THROWS_AS(near_threshold_asymptotics(bal, {0.5, 0.0, Regime::amplification}, {1, 0.1, 0.0}), OutOfRegime);
    CHECK_THROWS_AS(near_threshold_asymptotics(bal, p, {1, 100.0, 0.0}), OutOfRegime);
    CHECK_THROWS_AS(near_threshold_asymptotics(ModePair::lossy(1, 1, 0.5, 0.5, 1e-4, 1e-4), p, {1, 0.1, 0.0}),
                    OutOfRegime);
}

TEST_CASE("phase lock: unimodular phase and consistent outputs")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    for (double eps : {1.2, 2.0, 5.0}) {
        PumpConfig p{eps, 0.0, Regime::amplification};
        auto lk = phase_lock(mp, p, std::polar(0.01, 0.7));
        CHECK_FALSE(lk.free_phase);
        CHECK(std::abs(std::exp(I * lk.psi)) == doctest::Approx(1.0));
        CHECK(std::abs(lk.c_minus_closed - lk.c_minus_io) < 1e-12 * std::abs(lk.b_minus));
        CHECK(std::abs(lk.a_minus_bar.imag()) < 1e-12 * std::abs(lk.a_minus_bar));
    }
    CHECK(phase_lock(mp, {2.0, 0.0, Regime::amplification}, 0.0).free_phase);
    auto strong = phase_lock(mp, {1e6, 0.0, Regime::amplification}, std::polar(0.01, 0.7));
    CHECK(std::abs(strong.c_minus_closed - strong.b_minus) < 1e-5 * std::abs(strong.b_minus));
    CHECK_THROWS_AS(phase_lock(mp, {0.9, 0.0, Regime::amplification}, 0.1), DomainError);
}

TEST_CASE("phase lock agrees with the driven nonlinear solve at strong pump")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    PumpConfig p{5.0, 0.0, Regime::amplification};
    cplx b1 = std::polar(0.01, 0.3);
    auto lk = phase_lock(mp, p, b1);
    auto states = solve_steady_state(mp, p, FrameDrive{b1, 0.0, 0.0});
    double best = 1e9;
    for (auto& s : states)
        if (s.stability == Stability::stable) best = std::min(best, std::abs(std::remainder(s.psi() - lk.psi, 2 * pi)));
    CHECK(best < 1e-4);
}

TEST_CASE("regularized response is the zero-detuning limit of the locked transform")
{
    auto mp = ModePair::lossless(1, 1, 0.01, 0.01);
    PumpConfig p{2.0, 0.0, Regime::amplification};
    auto lk = phase_lock(mp, p, 0.1);
    cplx b0 = 0.1 * std::sqrt(lk.q * std::exp(I * lk.theta0) / std::conj(lk.q));
    cplx k(0.3, -0.2);
    Spectrum ramp = [&](double D) { return b0 + k * D; };
    auto reg = regularized_detuned_response(mp, p, ramp, 0.0);
    REQUIRE(reg.locked);
    cplx lim = detuned_response_exact(mp, p, ramp, 1e-6);
    CHECK(std::abs(reg.c_minus - lim) < 1e-5 * std::abs(lim));
    auto at = regularized_detuned_response(mp, p, ramp, 0.5);
    CHECK(std::abs(at.c_minus - detuned_response_exact(mp, p, ramp, 0.5)) < 1e-8 * std::abs(at.c_minus));

    Spectrum flat = [&](double) { return b0; };
    CHECK(std::abs(regularized_detuned_response(mp, p, flat, 0.0).c_minus) < 1e-12);

    Spectrum unlocked = [&](double) { return b0 * I; };
    auto u = regularized_detuned_response(mp, p, unlocked, 1e-3);
    CHECK_FALSE(u.locked);
    double r1 = std::abs(detuned_response_exact(mp, p, unlocked, 1e-3));
    double r2 = std::abs(detuned_response_exact(mp, p, unlocked, 1e-4));
    CHECK(r2 / r1 == doctest::Approx(10.0).epsilon(1e-3));
}
