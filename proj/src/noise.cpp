#include "paramres/noise.hpp"

#include <cmath>
#include <limits>

#include <spdlog/spdlog.h>

#include "paramres/steadystate.hpp"

namespace paramres {

std::string to_string(LoMode m) { return m == LoMode::single ? "single" : "dual"; }

LoMode parse_lo_mode(const std::string& s)
{
    if (s == "single") return LoMode::single;
    if (s == "dual") return LoMode::dual;
    throw DomainError("unknown local-oscillator mode '" + s + "' (single|dual)");
}

double SpectralComponents::total(LoMode m) const
{
    if (m == LoMode::single) return s11;
    return s11 + s22 + (s12 + s21).real();
}

SpectralComponents spectral_components(const Mat2& u, const Mat2& vm, double theta1, double theta2)
{
    double th[2] = {theta1, theta2};
    cplx s[2][2];
    for (int n = 0; n < 2; ++n)
        for (int m = 0; m < 2; ++m) {
            cplx acc = 0.0;
            for (int k = 0; k < 2; ++k) {
                acc += u(n, k) * std::conj(u(m, k)) * std::exp(I * (th[m] - th[n]));
                acc += std::conj(vm(n, k)) * vm(m, k) * std::exp(I * (th[n] - th[m]));
                acc += u(n, k) * vm(m, k) * std::exp(-I * (th[n] + th[m]));
                acc += std::conj(vm(n, k)) * std::conj(u(m, k)) * std::exp(I * (th[n] + th[m]));
            }
            s[n][m] = acc;
        }
    return {s[0][0].real(), s[1][1].real(), s[0][1], s[1][0]};
}

namespace {

double wrap_pi(double t)
{
    double r = std::fmod(t, pi);
    if (r < 0) r += pi;
    if (r >= pi) r -= pi;
    return r;
}

void require_lossless(const ModePair& mp, const char* what)
{
    if (!mp.is_lossless(1e-12))
        throw DomainError(std::string(what) + ": internal losses need extra noise inputs, not modelled");
}

void require_below(const ModePair& mp, const PumpConfig& pump, const char* what)
{
    if (pump.regime != Regime::amplification) throw DomainError(std::string(what) + ": amplification regime only");
    if (!(pump.epsilon < instability_threshold(mp, pump.delta).epsilon_th))
        throw OutOfRegime(std::string(what) + ": two-mode noise is defined below threshold only");
}

/// Linear maps in matrix form: U = diag(u1, u2), V = antidiag(v1, v2).
std::pair<Mat2, Mat2> two_mode_matrices(const ModePair& mp, const PumpConfig& pump, double D)
{
    auto p = two_mode_uv(mp, pump, D);
    auto m = two_mode_uv(mp, pump, -D);
    Mat2 u, v;
    u << p.u1, 0.0, 0.0, p.u2;
    v << 0.0, m.v1, m.v2, 0.0;
    return {u, v};
}

/// Simpson rule on [a, b] with an even number of panels.
double simpson(const std::function<double(double)>& f, double a, double b, int panels = 64)
{
    double h = (b - a) / panels, s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
    return s * h / 3;
}

/// Theta-independent and e^{-2i theta} parts of the total noise for common LO phase.
std::pair<double, cplx> theta_parts(const Mat2& u, const Mat2& vm, LoMode mode)
{
    int n_max = mode == LoMode::single ? 1 : 2;
    double a = 0.0;
    cplx w = 0.0;
    for (int n = 0; n < n_max; ++n)
        for (int m = 0; m < n_max; ++m)
            for (int k = 0; k < 2; ++k) {
                a += (u(n, k) * std::conj(u(m, k)) + std::conj(vm(n, k)) * vm(m, k)).real();
                w += u(n, k) * vm(m, k);
            }
    return {a, w};
}

struct NoiseModel {
    std::function<std::pair<Mat2, Mat2>(double)> maps;  ///< U(D), V(-D)
    std::function<double(double)> gain;                 ///< signal gain for the peak width
    cplx coherent;                                      ///< sum of coherent outputs seen by the LOs
    double b_power = 0.0;
    double scale = 1.0;
};

SnrResult evaluate_snr(const NoiseModel& nm, const HomodyneConfig& hom, ThetaPolicy policy)
{
    SnrResult r;
    r.halfwidth = peak_halfwidth(nm.gain, 1e-4 * nm.scale, 1e4 * nm.scale);
    if (hom.bandwidth > 0) r.bandwidth = hom.bandwidth;
    else if (std::isfinite(r.halfwidth)) r.bandwidth = 0.1 * r.halfwidth;
    else r.bandwidth = 0.1 * nm.scale;
    if (r.bandwidth / 2 > r.halfwidth) {
        r.bandwidth_warning = true;
        spdlog::warn("snr: bandwidth {} exceeds the gain-peak half-width {}", r.bandwidth, r.halfwidth);
    }
    double h = r.bandwidth / 2;
    auto abar = simpson([&](double d) { auto [u, v] = nm.maps(d); return theta_parts(u, v, hom.mode).first; }, -h, h);
    double wre = simpson([&](double d) { auto [u, v] = nm.maps(d); return theta_parts(u, v, hom.mode).second.real(); }, -h, h);
    double wim = simpson([&](double d) { auto [u, v] = nm.maps(d); return theta_parts(u, v, hom.mode).second.imag(); }, -h, h);
    cplx wbar(wre, wim);
    auto [u0, v0] = nm.maps(0.0);
    auto [a0, w0] = theta_parts(u0, v0, hom.mode);

    auto p0 = [&](double t) {
        double x = 2 * (nm.coherent * std::exp(-I * t)).real();
        return 2 * pi * x * x;
    };
    auto sbar = [&](double t) { return abar + 2 * (wbar * std::exp(-2.0 * I * t)).real(); };
    auto ratio = [&](double t) { return p0(t) / sbar(t); };

    double t;
    if (policy == ThetaPolicy::max_amplification) {
        t = std::arg(nm.coherent);
    } else {
        const int n = 4000;
        double best = -1;
        t = 0;
        for (int i = 0; i < n; ++i) {
            double ti = pi * i / n;
            double v = ratio(ti);
            if (v > best) best = v, t = ti;
        }
        // golden-section refinement inside the winning cell
        double lo = t - pi / n, hi = t + pi / n, g = 0.5 * (std::sqrt(5.0) - 1);
        for (int it = 0; it < 80; ++it) {
            double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
            if (ratio(x1) > ratio(x2)) hi = x2;
            else lo = x1;
        }
        t = 0.5 * (lo + hi);
    }
    r.theta = wrap_pi(t);
    r.p0_bar = p0(r.theta);
    r.s_bar = sbar(r.theta);
    r.s0 = a0 + 2 * (w0 * std::exp(-2.0 * I * r.theta)).real();
    r.snr = r.p0_bar / r.s_bar;
    r.normalized = nm.b_power > 0 ? r.snr * r.bandwidth / nm.b_power : 0.0;
    return r;
}

NoiseModel four_mode_model(const ModePair& mp, const PumpConfig& pump, const CavityState& state, cplx b1,
                           LoMode mode)
{
    NoiseModel nm;
    nm.maps = [&mp, &pump, state](double d) {
        auto p = four_mode_bogoliubov(mp, pump, state, d);
        auto m = four_mode_bogoliubov(mp, pump, state, -d);
        if (p.divergent || m.divergent) throw SingularResponse("four-mode noise: response diverges inside the band");
        return std::pair{p.U, m.V};
    };
    nm.gain = [&mp, &pump, state](double d) { return std::norm(four_mode_bogoliubov(mp, pump, state, d).U(0, 0)); };
    auto [c1, c2] = output_fields(mp, FrameDrive{b1, 0.0, state.delta_s}, state);
    nm.coherent = mode == LoMode::single ? c1 : c1 + c2;
    nm.b_power = std::norm(b1);
    nm.scale = mp.rate_scale();
    return nm;
}

void check_four_mode_state(const ModePair& mp, const CavityState& state, bool allow_free)
{
    require_lossless(mp, "four-mode noise");
    if (state.free_phase && !allow_free)
        throw OutOfRegime("four-mode noise: quantum noise of the free-running oscillator is outside the model "
                          "(the locked phase fluctuates with the input noise)");
}

}  // namespace

TwoModeSqueezing two_mode_squeezing(const ModePair& mp, const PumpConfig& pump, double Delta)
{
    auto p = two_mode_uv(mp, pump, Delta);
    auto m = two_mode_uv(mp, pump, -Delta);
    return {std::asinh(std::abs(p.v1)), std::arg(p.u1 * m.v2)};
}

double two_mode_total_closed(const ModePair& mp, const PumpConfig& pump, double theta, double Delta)
{
    double s = 0.0;
    for (double d : {Delta, -Delta}) {
        auto q = two_mode_squeezing(mp, pump, d);
        double c = std::cos(q.chi / 2 - theta);
        s += std::exp(-2 * q.r) + 2 * std::sinh(2 * q.r) * c * c;
    }
    return s;
}

SqueezingSpectrum two_mode_spectrum(const ModePair& mp, const PumpConfig& pump, const HomodyneConfig& hom,
                                    const std::vector<double>& grid)
{
    require_lossless(mp, "two-mode spectrum");
    require_below(mp, pump, "two-mode spectrum");
    SqueezingSpectrum sp;
    for (double d : grid) {
        auto [u, v] = two_mode_matrices(mp, pump, d);
        SqueezingRow row;
        row.Delta = d;
        row.theta = hom.theta1;
        row.s = spectral_components(u, v, hom.theta1, hom.theta2);
        row.total = row.s.total(hom.mode);
        sp.rows.push_back(row);
    }
    return sp;
}

double optimal_squeezing_phase(const ModePair& mp, const PumpConfig& pump)
{
    require_below(mp, pump, "optimal squeezing phase");
    return wrap_pi(pi / 2 + two_mode_squeezing(mp, pump, 0.0).chi / 2);
}

std::pair<double, double> supermode_s11(const SupermodeCoeffs& at, const SupermodeCoeffs& mirror, double theta)
{
    auto one = [&](cplx u, cplx v) {
        double au = std::abs(u), av = std::abs(v);
        double chi = std::arg(u * v);
        return 0.5 * ((au - av) * (au - av) + 2 * au * av * (1 + std::cos(at.psi + chi - 2 * theta)));
    };
    return {one(at.u_plus, mirror.v_plus), one(at.u_minus, mirror.v_minus)};
}

std::pair<double, double> supermode_total(const SupermodeCoeffs& at, const SupermodeCoeffs& mirror, double theta)
{
    auto one = [&](cplx u, cplx vm, cplx v, double sign) {
        double r = std::asinh(std::abs(v));
        double chi = std::arg(u * vm);
        return 2 * (std::exp(-2 * r) + std::sinh(2 * r) * (1 + sign * std::cos(chi - 2 * theta)));
    };
    double c = std::cos(at.psi / 2), s = std::sin(at.psi / 2);
    return {one(at.u_plus, mirror.v_plus, at.v_plus, 1.0) * c * c,
            one(at.u_minus, mirror.v_minus, at.v_minus, -1.0) * s * s};
}

SqueezingSpectrum four_mode_spectrum(const ModePair& mp, const PumpConfig& pump, const CavityState& state,
                                     const HomodyneConfig& hom, const std::vector<double>& grid,
                                     const FourModeNoiseOptions& opt)
{
    check_four_mode_state(mp, state, opt.allow_free_phase);
    SqueezingSpectrum sp;
    bool split = false;
    if (std::abs(hom.theta1 - hom.theta2) < 1e-15) {
        try {
            supermode_coeffs(mp, pump, state, 0.0, opt.supermode);
            split = true;
        } catch (const DomainError&) {
        }
    }
    sp.has_supermodes = split;
    for (double d : grid) {
        auto p = four_mode_bogoliubov(mp, pump, state, d);
        auto m = four_mode_bogoliubov(mp, pump, state, -d);
        SqueezingRow row;
        row.Delta = d;
        row.theta = hom.theta1;
        if (p.divergent || m.divergent) {
            double nan = std::numeric_limits<double>::quiet_NaN();
            row.s = {nan, nan, cplx(nan, nan), cplx(nan, nan)};
            row.total = nan;
        } else {
            row.s = spectral_components(p.U, m.V, hom.theta1, hom.theta2);
            row.total = row.s.total(hom.mode);
        }
        if (split) {
            auto a = supermode_coeffs(mp, pump, state, d, opt.supermode);
            auto b = supermode_coeffs(mp, pump, state, -d, opt.supermode);
            auto parts = hom.mode == LoMode::single ? supermode_s11(a, b, hom.theta1) : supermode_total(a, b, hom.theta1);
            row.supermode_plus = parts.first;
            row.supermode_minus = parts.second;
        }
        sp.rows.push_back(row);
    }
    return sp;
}

double peak_halfwidth(const std::function<double(double)>& f, double start, double limit)
{
    double f0 = f(0.0), half = 0.5 * f0;
    double lo = 0.0, hi = start;
    while (f(hi) > half) {
        lo = hi;
        hi *= 2;
        if (hi > limit) return std::numeric_limits<double>::infinity();
    }
    for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) > half) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

SnrResult snr_linear(const ModePair& mp, const PumpConfig& pump, cplx b1, const HomodyneConfig& hom,
                     ThetaPolicy policy)
{
    require_lossless(mp, "snr");
    require_below(mp, pump, "snr");
    NoiseModel nm;
    nm.maps = [&](double d) { return two_mode_matrices(mp, pump, d); };
    nm.gain = [&](double d) { return std::norm(two_mode_uv(mp, pump, d).u1); };
    auto uv = two_mode_uv(mp, pump, 0.0);
    cplx c1 = uv.u1 * b1, c2 = uv.v2 * std::conj(b1);
    nm.coherent = hom.mode == LoMode::single ? c1 : c1 + c2;
    nm.b_power = std::norm(b1);
    nm.scale = mp.rate_scale();
    return evaluate_snr(nm, hom, policy);
}

SnrResult snr_four_mode(const ModePair& mp, const PumpConfig& pump, const CavityState& state, cplx b1,
                        const HomodyneConfig& hom, ThetaPolicy policy)
{
    check_four_mode_state(mp, state, false);
    return evaluate_snr(four_mode_model(mp, pump, state, b1, hom.mode), hom, policy);
}

SnrResult snr_analytic_four_mode(const ModePair& mp, const PumpConfig& pump, cplx b1, double bandwidth)
{
    require_lossless(mp, "analytic snr");
    if (!mp.is_balanced(1e-12)) throw DomainError("analytic snr: balanced modes only");
    DriveTone tone{1, b1, 0.0};
    auto nt = near_threshold_asymptotics(mp, pump, tone);
    double g = mp.gamma1;
    double zeta = 3 * mp.alpha * nt.a1_abs * nt.a1_abs;
    double theta_b = std::arg(b1);
    double psi = 2 * theta_b + pi / 2;
    double gain = nt.g11;
    auto s11 = [&](double d) {
        auto p = supermode_threshold_approx(g, zeta, d);
        auto m = supermode_threshold_approx(g, zeta, -d);
        auto one = [&](cplx u, cplx v) {
            double au = std::abs(u), av = std::abs(v);
            return 0.5 * ((au - av) * (au - av) + 2 * au * av * (1 + std::cos(psi + std::arg(u * v) - 2 * theta_b)));
        };
        return one(p.u_plus, m.v_plus) + one(p.u_minus, m.v_minus);
    };
    SnrResult r;
    r.theta = wrap_pi(theta_b);
    r.bandwidth = bandwidth;
    r.p0_bar = 8 * pi * gain * std::norm(b1);
    r.s0 = s11(0.0);
    r.s_bar = simpson(s11, -bandwidth / 2, bandwidth / 2);
    r.snr = r.p0_bar / r.s_bar;
    r.normalized = r.snr * bandwidth / std::norm(b1);
    r.halfwidth = std::numeric_limits<double>::quiet_NaN();
    return r;
}

std::vector<ThetaScanRow> theta_scan_four_mode(const ModePair& mp, const PumpConfig& pump, const CavityState& state,
                                               cplx b1, const HomodyneConfig& hom, int points)
{
    check_four_mode_state(mp, state, false);
    if (points < 2) throw DomainError("theta scan: needs at least two points");
    auto nm = four_mode_model(mp, pump, state, b1, hom.mode);
    auto [u0, v0] = nm.maps(0.0);
    auto [a0, w0] = theta_parts(u0, v0, hom.mode);
    std::optional<SupermodeCoeffs> sc;
    try {
        sc = supermode_coeffs(mp, pump, state, 0.0);
    } catch (const DomainError&) {
    }
    std::vector<ThetaScanRow> rows;
    for (int i = 0; i < points; ++i) {
        ThetaScanRow r;
        r.theta = pi * i / points;
        double x = 2 * (nm.coherent * std::exp(-I * r.theta)).real();
        r.p0_bar = 2 * pi * x * x;
        r.s0 = a0 + 2 * (w0 * std::exp(-2.0 * I * r.theta)).real();
        r.snr_normalized = nm.b_power > 0 ? r.p0_bar / r.s0 / nm.b_power : 0.0;
        if (sc) {
            auto parts = hom.mode == LoMode::single ? supermode_s11(*sc, *sc, r.theta) : supermode_total(*sc, *sc, r.theta);
            r.supermode_plus = parts.first;
            r.supermode_minus = parts.second;
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<PairAmplitudeRow> squeezed_vacuum_amplitudes(const ModePair& mp, const PumpConfig& pump,
                                                         const CavityState* state, const std::vector<double>& grid)
{
    require_lossless(mp, "squeezed vacuum");
    std::vector<PairAmplitudeRow> rows;
    auto pair_of = [](cplx u, cplx v) {
        double r = std::asinh(std::abs(v));
        double rho = std::arg(v / u) + pi;
        return std::pair{r, std::tanh(r) * std::exp(I * rho)};
    };
    if (!state) require_below(mp, pump, "squeezed vacuum");
    else check_four_mode_state(mp, *state, false);
    for (double d : grid) {
        PairAmplitudeRow row;
        row.Delta = d;
        auto uv = two_mode_uv(mp, pump, d);
        row.eta1 = std::arg(uv.u1);
        row.eta2 = std::arg(uv.u2);
        if (!state) {
            std::tie(row.r, row.g) = pair_of(uv.u1, uv.v1);
            row.rho = std::arg(uv.v1 / uv.u1) + pi;
        } else {
            auto c = supermode_coeffs(mp, pump, *state, d);
            auto [rp, gp] = pair_of(c.u_plus, c.v_plus);
            auto [rm, gm] = pair_of(c.u_minus, c.v_minus);
            row.g_plus = gp;
            row.g_minus = gm;
            row.same_mode = 0.5 * (gp + gm);
            row.cross_mode = 0.5 * (gp - gm);
            row.r = rm;
            row.g = gm;
            row.rho = std::arg(c.v_minus / c.u_minus) + pi;
            row.eta1 = std::arg(c.u_plus);
            row.eta2 = std::arg(c.u_minus);
        }
        double ch = std::cosh(row.r), t2 = std::norm(row.g);
        // closed geometric sum of |g|^{2n}
        row.norm = t2 < 1 ? 1.0 / (ch * ch * (1 - t2)) : std::numeric_limits<double>::infinity();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace paramres
