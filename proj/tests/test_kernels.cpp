#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "paramres/kernels.hpp"
#include "paramres/response.hpp"
#include "support.hpp"

using namespace paramres;

namespace {

const ModePair balanced = ModePair::lossless(1, 1, 0.01, 0.01);

GainMapRequest gain_request()
{
    GainMapRequest req;
    req.mode_pair = balanced;
    req.pump = {1.3, 0.0, Regime::amplification};
    req.axis_grid = testing::linspace(-2, 2, 13);
    req.delta1_grid = testing::linspace(-4, 4, 41);
    return req;
}

/// Bitwise agreement; the free-phase pole yields NaN on both sides.
bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const FourModeGains& a, const FourModeGains& b)
{
    return same(a.g11_p, b.g11_p) && same(a.g12_m, b.g12_m) && same(a.g11_m, b.g11_m) && same(a.g12_p, b.g12_p) &&
           a.divergent == b.divergent;
}

}  // namespace

TEST_CASE("gain map: parallel equals serial")
{
    auto req = gain_request();
    for (GainSource src : {GainSource::automatic, GainSource::empty}) {
        req.source = src;
        if (src == GainSource::empty) req.pump.epsilon = 0.6;
        auto a = gain_map(req, 2), b = gain_map_serial(req);
        REQUIRE(a.rows.size() == b.rows.size());
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            CHECK(a.rows[i].delta1 == b.rows[i].delta1);
            CHECK(a.rows[i].Delta == b.rows[i].Delta);
            CHECK(same(a.rows[i].gains, b.rows[i].gains));
        }
        for (std::size_t i = 0; i < a.loci.size(); ++i) {
            CHECK(a.loci[i].source == b.loci[i].source);
            CHECK(a.loci[i].peak_delta1 == b.loci[i].peak_delta1);
        }
    }
}

TEST_CASE("empty-cavity gain map is the linear amplifier")
{
    auto req = gain_request();
    req.pump.epsilon = 0.8;
    req.source = GainSource::empty;
    auto map = gain_map(req);
    for (auto& r : map.rows) {
        PumpConfig p = req.pump;
        p.delta = r.axis_value;
        CHECK(r.Delta == doctest::Approx(r.delta1 - r.axis_value));
        CHECK(r.gains.g11_p == doctest::Approx(std::norm(two_mode_uv(balanced, p, r.Delta).u1)).epsilon(1e-12));
        CHECK(r.gains.g11_p - r.gains.g12_m == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(r.gains.g11_m == 0.0);
        CHECK(r.gains.g12_p == 0.0);
    }
}

TEST_CASE("gain locus follows the oscillation frame above threshold")
{
    auto req = gain_request();
    req.axis_grid = {-0.5, 0.0, 0.5};
    auto map = gain_map(req);
    for (auto& loc : map.loci) {
        PumpConfig p = req.pump;
        p.delta = loc.axis_value;
        CHECK(loc.oscillating);
        auto ring = to_cavity_state(balanced, p, oscillation_state(balanced, p, Branch::stable));
        CHECK(loc.frame_shift == doctest::Approx(ring.delta_s));
        CHECK(loc.resonance == doctest::Approx(loc.axis_value + ring.delta_s));
    }
    req.pump.epsilon = 0.9;
    req.axis_grid = {-0.3, 0.0, 0.3};
    map = gain_map(req);
    auto& mid = map.loci[1];
    CHECK_FALSE(mid.oscillating);
    CHECK(mid.source == "empty");
    CHECK(mid.peak_delta1 == 0.0);
}

TEST_CASE("gain map rejects bad grids and axes")
{
    auto req = gain_request();
    req.axis = SweepAxis::Delta;
    CHECK_THROWS_AS(gain_map(req), DomainError);
    req = gain_request();
    req.delta1_grid = {1.0, 0.0};
    CHECK_THROWS_AS(gain_map(req), DomainError);
}

TEST_CASE("squeeze map matches the spectrum routines")
{
    SqueezeMapRequest req;
    req.mode_pair = balanced;
    req.pump = {0.9, 0.2, Regime::amplification};
    req.theta_grid = testing::linspace(0, pi, 7);
    req.Delta_grid = testing::linspace(-2, 2, 9);
    auto a = squeeze_map(req, 2), b = squeeze_map_serial(req);
    REQUIRE(a.size() == req.theta_grid.size() * req.Delta_grid.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].total == b[i].total);
        HomodyneConfig h{a[i].theta, a[i].theta, LoMode::dual, 0.0};
        CHECK(a[i].total == doctest::Approx(two_mode_spectrum(balanced, req.pump, h, {a[i].Delta}).rows[0].total).epsilon(1e-12));
    }
    CHECK(a[1].theta == req.theta_grid[0]);
    CHECK(a[1].Delta == req.Delta_grid[1]);

    req.state = solve_steady_state(balanced, req.pump, FrameDrive{0.3, 0.3, 0.0}).front();
    req.mode = LoMode::single;
    auto c = squeeze_map(req, 2), d = squeeze_map_serial(req);
    for (std::size_t i = 0; i < c.size(); ++i) {
        CHECK(c[i].total == d[i].total);
        HomodyneConfig h{c[i].theta, c[i].theta, LoMode::single, 0.0};
        CHECK(c[i].total ==
              doctest::Approx(four_mode_spectrum(balanced, req.pump, *req.state, h, {c[i].Delta}).rows[0].total).epsilon(1e-12));
    }
}
