#include "paramres/device.hpp"

#include <cmath>
#include <limits>

namespace paramres {

std::vector<std::string> validate(const DeviceSpec& s)
{
    std::vector<std::string> warnings;
    if (!(s.gamma > 0 && s.gamma < 0.5))
        throw DomainError("device: gamma must lie in (0, 0.5)");
    if (s.gamma > 0.2)
        warnings.push_back("gamma > 0.2: small-participation estimates degrade");
    if (!(s.flux_amp >= 0 && s.flux_amp < 1))
        throw DomainError("device: flux_amp must lie in [0, 1)");
    if (!(s.flux_bias >= 0 && s.flux_bias < pi / 2))
        throw DomainError("device: flux_bias must lie in [0, pi/2)");
    if (!(s.omega_scale > 0) || !(s.el_cav > 0))
        throw DomainError("device: omega_scale and el_cav must be positive");
    if (!(s.coupling_ratio > 0))
        throw DomainError("device: coupling_ratio must be positive");
    if (s.n_modes < 1)
        throw DomainError("device: n_modes must be >= 1");
    if (s.ej > 0) {
        double g = s.el_cav / (2 * s.ej * std::cos(s.flux_bias));
        if (std::abs(g - s.gamma) > 1e-6 * s.gamma)
            warnings.push_back("gamma differs from E_L,cav/(2 E_J cos F) = " + std::to_string(g));
    }
    return warnings;
}

namespace {

/// Root of x sin x - c cos x on the branch ((n-1)pi, (n-1)pi + pi/2).
/// This form is free of the tangent pole and changes sign across the bracket.
double branch_root(double c, int n)
{
    double lo = (n - 1) * pi, hi = lo + pi / 2;
    auto h = [c](double x) { return x * std::sin(x) - c * std::cos(x); };
    auto dh = [c](double x) { return (1 + c) * std::sin(x) + x * std::cos(x); };
    double flo = h(lo);
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double fx = h(x);
        if (fx == 0) return x;
        if ((fx < 0) == (flo < 0)) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        double step = fx / dh(x);
        double xn = x - step;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(x) || hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi)
            return xn;
        x = xn;
    }
    throw NumericalError("mode spectrum: bracketed root search did not converge (n=" + std::to_string(n) + ")");
}

}  // namespace

std::vector<double> solve_mode_spectrum(double gamma, int n_modes)
{
    if (!(gamma > 0)) throw DomainError("mode spectrum: gamma must be positive");
    if (n_modes < 1) throw DomainError("mode spectrum: n_modes must be >= 1");
    double c = 1.0 / gamma;
    std::vector<double> roots;
    for (int n = 1; n <= n_modes; ++n) {
        double x = branch_root(c, n);
        // pole-free form, relative to its terms; the allowance covers a few ulps of x,
        // which a large 1/gamma amplifies
        double terms = std::abs(x * std::sin(x)) + std::abs(c * std::cos(x));
        double rel = std::abs(x * std::sin(x) - c * std::cos(x)) / terms;
        double slope = std::abs((1 + c) * std::sin(x) + x * std::cos(x));
        if (rel > std::max(1e-12, 8 * std::numeric_limits<double>::epsilon() * x * slope / terms))
            throw NumericalError("mode spectrum: residual " + std::to_string(rel) + " too large (pathological gamma)");
        roots.push_back(x);
    }
    return roots;
}

ModePair derive_mode_pair(const DeviceSpec& spec, std::pair<int, int> modes,
                          std::optional<std::array<double, 2>> total_rates)
{
    validate(spec);
    auto [n, m] = modes;
    if (!(n >= 1 && n < m)) throw DomainError("device: mode indices must satisfy 1 <= n < m");
    auto kd = solve_mode_spectrum(spec.gamma, m);
    std::array<double, 2> x{kd[n - 1], kd[m - 1]};

    ModePair mp;
    double g0[2], a[2], w[2];
    for (int j = 0; j < 2; ++j) {
        double c = std::cos(x[j]);
        if (std::abs(c) < 1e-300) throw DomainError("device: degenerate mode, cos(k d) = 0");
        w[j] = spec.omega_scale * x[j];
        g0[j] = w[j] * spec.coupling_ratio * spec.coupling_ratio * x[j];
        double f = std::sqrt(w[j]) * c / x[j];
        a[j] = f * f * f * f / (2 * spec.gamma * spec.el_cav);
        if (!(g0[j] > 0) || a[j] < 0) throw DomainError("device: negative coefficient, inconsistent spec");
    }
    mp.gamma10 = g0[0];
    mp.gamma20 = g0[1];
    mp.gamma1 = total_rates ? (*total_rates)[0] : g0[0];
    mp.gamma2 = total_rates ? (*total_rates)[1] : g0[1];
    mp.alpha1 = a[0];
    mp.alpha2 = a[1];
    mp.alpha = std::sqrt(a[0] * a[1]);
    mp.omega1 = w[0];
    mp.omega2 = w[1];
    mp.kd = x;
    validate(mp);
    return mp;
}

double pump_strength(const DeviceSpec& spec, const ModePair& mp)
{
    if (!mp.kd || !mp.omega1 || !mp.omega2)
        throw DomainError("pump strength: mode pair lacks device wavenumbers (use derive_mode_pair)");
    if (std::abs(std::cos(spec.flux_bias)) < 1e-15) throw DomainError("pump strength: tan F singular");
    double t = std::tan(spec.flux_bias);
    auto [x1, x2] = *mp.kd;
    double f1 = std::sqrt(*mp.omega1) * std::cos(x1) / x1;
    double f2 = std::sqrt(*mp.omega2) * std::cos(x2) / x2;
    // the two cosines carry opposite signs on adjacent branches; only the magnitude is physical
    return std::abs(spec.flux_amp * t / (2 * spec.gamma) * f1 * f2);
}

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::warn: return "warn";
    case Verdict::fail: return "fail";
    case Verdict::skipped: return "skipped";
    }
    return "?";
}

Verdict ValidityReport::overall() const
{
    Verdict worst = Verdict::pass;
    for (auto& c : checks) {
        if (c.verdict == Verdict::fail) return Verdict::fail;
        if (c.verdict == Verdict::warn) worst = Verdict::warn;
    }
    return worst;
}

ValidityReport validate_regime(const DeviceSpec* spec, const ModePair& mp, const PumpConfig& pump,
                               double photon_scale, ValidityThresholds th)
{
    ValidityReport rep;
    auto grade = [&](double r) {
        if (!std::isfinite(r)) return Verdict::fail;
        if (r < th.pass) return Verdict::pass;
        if (r < th.warn) return Verdict::warn;
        return Verdict::fail;
    };
    std::optional<double> w[2] = {mp.omega1, mp.omega2};
    double g[2] = {mp.gamma1, mp.gamma2};
    double a[2] = {mp.alpha1, mp.alpha2};
    for (int n = 0; n < 2; ++n) {
        std::string k = std::to_string(n + 1);
        if (!w[n]) {
            for (auto name : {"delta/omega", "epsilon/omega", "kerr/omega", "Gamma/omega"})
                rep.checks.push_back({name + k, 0.0, Verdict::skipped});
            continue;
        }
        double om = *w[n];
        rep.checks.push_back({"delta/omega" + k, std::abs(pump.delta) / om, grade(std::abs(pump.delta) / om)});
        rep.checks.push_back({"epsilon/omega" + k, pump.epsilon / om, grade(pump.epsilon / om)});
        double kerr = a[n] * photon_scale / om;
        rep.checks.push_back({"kerr/omega" + k, kerr, grade(kerr)});
        rep.checks.push_back({"Gamma/omega" + k, g[n] / om, grade(g[n] / om)});
    }
    bool eps_ok = w[0] && w[1] && pump.epsilon / std::max(*w[0], *w[1]) < th.pass &&
                  pump.epsilon / std::min(*w[0], *w[1]) < th.pass;
    bool damped_ok = pump.epsilon > 0 && std::max(g[0], g[1]) / pump.epsilon < th.pass;
    rep.above_threshold_capable = eps_ok && damped_ok;
    if (spec) rep.flux_near_half_pi = std::tan(spec->flux_bias) > 10;
    return rep;
}

}  // namespace paramres
