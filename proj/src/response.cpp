#include "paramres/response.hpp"

#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/SVD>

namespace paramres {

namespace {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

struct RawIO {
    Mat2 V;
    cplx det;
};

RawIO raw_io(const ModePair& mp, double eps, double z1, double z2, double D)
{
    cplx p1 = D + z1 + I * mp.gamma1;
    cplx p2 = -D + z2 - I * mp.gamma2;
    cplx det = p1 * p2 - eps * eps;
    cplx v12 = 2.0 * I * eps * std::sqrt(mp.gamma10 * mp.gamma20) / det;
    Mat2 V;
    V << 1.0 - 2.0 * I * mp.gamma10 * p2 / det, v12, -v12, 1.0 + 2.0 * I * mp.gamma20 * p1 / det;
    return {V, det};
}

bool is_pole(const ModePair& mp, cplx det) { return std::abs(det) < 1e-14 * mp.gamma1 * mp.gamma2; }

ModePair swapped(const ModePair& mp)
{
    ModePair s = mp;
    std::swap(s.gamma1, s.gamma2);
    std::swap(s.gamma10, s.gamma20);
    std::swap(s.alpha1, s.alpha2);
    return s;
}

void require_amplification(const PumpConfig& pump, const char* what)
{
    if (pump.regime != Regime::amplification)
        throw DomainError(std::string(what) + ": requires the amplification regime");
}

Mat2 nan_mat() { return Mat2::Constant(cplx(nan_v, nan_v)); }

void require_balanced(const ModePair& mp, double tol, const char* what)
{
    if (!mp.is_balanced(tol) || std::abs(mp.gamma10 - mp.gamma20) > tol * mp.gamma10)
        throw DomainError(std::string(what) + ": needs balanced modes (equal damping, coupling and Kerr)");
}

}  // namespace

NonlinearIO io_matrix(const ModePair& mp, double epsilon, double zeta1, double zeta2, double Delta)
{
    auto r = raw_io(mp, epsilon, zeta1, zeta2, Delta);
    if (is_pole(mp, r.det)) throw SingularResponse("input-output map: determinant vanishes at this detuning");
    return {r.V, r.det, std::norm(r.V(0, 0)), std::norm(r.V(1, 0))};
}

NonlinearIO nonlinear_io(const ModePair& mp, const PumpConfig& pump, const CavityState& state, double Delta)
{
    require_amplification(pump, "nonlinear_io");
    auto [z1, z2] = effective_detunings(mp, pump, state.a1, state.a2);
    return io_matrix(mp, pump.epsilon, z1, z2, Delta);
}

TwoModeBogoliubov two_mode_uv(const ModePair& mp, const PumpConfig& pump, double Delta)
{
    require_amplification(pump, "two_mode_uv");
    TwoModeBogoliubov b;
    auto r1 = raw_io(mp, pump.epsilon, pump.delta, pump.delta, Delta);
    auto r2 = raw_io(swapped(mp), pump.epsilon, pump.delta, pump.delta, Delta);
    b.u1 = r1.V(0, 0);
    b.v1 = r1.V(0, 1);
    b.u2 = r2.V(0, 0);
    b.v2 = r2.V(0, 1);
    b.divergent = is_pole(mp, r1.det) || is_pole(mp, r2.det);
    b.above_threshold = pump.epsilon > instability_threshold(mp, pump.delta).epsilon_th;
    return b;
}

NearThreshold near_threshold_asymptotics(const ModePair& mp, const PumpConfig& pump, const DriveTone& b1,
                                         double window_limit)
{
    require_amplification(pump, "near-threshold asymptotics");
    if (!mp.is_lossless(1e-12)) throw OutOfRegime("near-threshold asymptotics: lossless modes only");
    double s = mp.rate_scale();
    if (b1.mode != 1) throw DomainError("near-threshold asymptotics: the input must drive mode 1");
    if (std::abs(pump.delta) > 1e-12 * s || std::abs(b1.detuning) > 1e-12 * s)
        throw OutOfRegime("near-threshold asymptotics: needs zero pump and signal detuning");
    double g1 = mp.gamma1, g2 = mp.gamma2, b2 = b1.power();
    if (!(b2 > 0)) throw OutOfRegime("near-threshold asymptotics: input power must be positive");
    if (!(mp.alpha1 > 0)) throw OutOfRegime("near-threshold asymptotics: needs a Kerr nonlinearity");

    NearThreshold r;
    double dist = std::abs(1 - pump.epsilon * pump.epsilon / (g1 * g2));
    r.lower_ratio = dist * dist * dist * (g1 / mp.alpha1) / (b2 / g1);
    r.upper_ratio = std::cbrt(mp.alpha1 / g1 * b2 / g1);
    if (r.lower_ratio >= window_limit || r.upper_ratio >= window_limit)
        throw OutOfRegime("near-threshold asymptotics: input power outside the nonlinear window (lower " +
                          std::to_string(r.lower_ratio) + ", upper " + std::to_string(r.upper_ratio) + ")");

    r.balanced = mp.is_balanced(1e-12);
    if (r.balanced) {
        double a5 = std::sqrt(2.0) * std::pow(g1, 1.5) * std::sqrt(b2) / (9 * mp.alpha * mp.alpha);
        r.a1_abs = r.a2_abs = std::pow(a5, 0.2);
        double tb = b1.phase();
        r.arg_a1 = std::remainder(-pi / 2 + tb, 2 * pi);
        r.arg_a2 = std::remainder(pi - tb, 2 * pi);
    } else {
        double k = mp.alpha2 * g1 * g1 - mp.alpha1 * g2 * g2;
        if (std::abs(k) < 1e-12 * (mp.alpha2 * g1 * g1 + mp.alpha1 * g2 * g2))
            throw OutOfRegime("near-threshold asymptotics: Kerr asymmetry vanishes, unbalanced form does not apply");
        double a6 = 2 * g1 * std::pow(g2, 4) * b2 / (k * k);
        r.a1_abs = std::pow(a6, 1.0 / 6.0);
        r.a2_abs = std::sqrt(g1 / g2) * r.a1_abs;
    }
    r.g11 = r.g12 = 2 * r.a1_abs * r.a1_abs * g1 / b2;
    return r;
}

FourModeMatrices four_mode_matrices(const ModePair& mp, const PumpConfig& pump, const CavityState& s, double Delta)
{
    require_amplification(pump, "four-mode matrices");
    cplx a1 = s.a1, a2 = s.a2;
    double n1 = std::norm(a1), n2 = std::norm(a2), al = mp.alpha;
    double zb1 = pump.delta + 2 * mp.alpha1 * n1 + 2 * al * n2;
    double zb2 = pump.delta + 2 * mp.alpha2 * n2 + 2 * al * n1;
    FourModeMatrices m;
    m.T << Delta + s.delta_s + zb1 + I * mp.gamma1, 2 * al * a1 * std::conj(a2), 2 * al * std::conj(a1) * a2,
        Delta - s.delta_s + zb2 + I * mp.gamma2;
    cplx eb = pump.epsilon + 2 * al * a1 * a2;
    m.E << mp.alpha1 * a1 * a1, eb, eb, mp.alpha2 * a2 * a2;
    return m;
}

FourModeBogoliubov four_mode_bogoliubov(const ModePair& mp, const PumpConfig& pump, const CavityState& s,
                                        double Delta, double pole_condition)
{
    auto p = four_mode_matrices(mp, pump, s, Delta);
    auto q = four_mode_matrices(mp, pump, s, -Delta);
    Mat4 M;
    M << p.T, p.E, p.E.conjugate(), q.T.conjugate();

    FourModeBogoliubov r;
    r.psi = s.psi();
    r.theta = s.theta_sum();
    Eigen::JacobiSVD<Mat4> svd(M);
    auto sv = svd.singularValues();
    r.condition = sv(3) > 0 ? sv(0) / sv(3) : std::numeric_limits<double>::infinity();
    if (!(r.condition < pole_condition)) {
        r.divergent = true;
        r.U = r.V = nan_mat();
        return r;
    }
    Mat4 inv = Eigen::PartialPivLU<Mat4>(M).inverse();
    Eigen::Vector2cd d(std::sqrt(2 * mp.gamma10), std::sqrt(2 * mp.gamma20));
    Mat2 D = d.asDiagonal();
    r.U = Mat2::Identity() - I * D * inv.topLeftCorner<2, 2>() * D;
    r.V = -I * D * inv.topRightCorner<2, 2>() * D;
    return r;
}

FourModeGains four_mode_gains(const ModePair& mp, const PumpConfig& pump, const CavityState& s, double Delta)
{
    auto p = four_mode_bogoliubov(mp, pump, s, Delta);
    auto m = four_mode_bogoliubov(mp, pump, s, -Delta);
    FourModeGains g;
    g.divergent = p.divergent || m.divergent;
    g.g11_p = std::norm(p.U(0, 0));
    g.g12_m = std::norm(m.V(1, 0));
    g.g11_m = std::norm(m.V(0, 0));
    g.g12_p = std::norm(p.U(1, 0));
    return g;
}

SupermodeCoeffs supermode_coeffs(const ModePair& mp, const PumpConfig& pump, const CavityState& s, double Delta,
                                 const SupermodeOptions& opt)
{
    require_amplification(pump, "supermodes");
    require_balanced(mp, opt.imbalance_tol, "supermodes");
    if (std::abs(s.delta_s) > 1e-9 * mp.rate_scale())
        throw DomainError("supermodes: the strong field must sit at zero frame detuning");
    double r1 = std::abs(s.a1), r2 = std::abs(s.a2);
    if (!opt.average_intensity && std::abs(r1 - r2) > opt.imbalance_tol * std::max({r1, r2, 1e-300}))
        throw DomainError("supermodes: unequal field moduli (enable average_intensity to approximate)");

    SupermodeCoeffs c;
    c.intensity = 0.5 * (r1 * r1 + r2 * r2);
    c.psi = (r1 > 0 && r2 > 0) ? s.psi() : 0.0;
    c.theta = (r1 > 0 && r2 > 0) ? s.theta_sum() : 0.0;
    double al = mp.alpha, n = c.intensity, g = mp.gamma1, g0 = mp.gamma10;
    double zb = pump.delta + 4 * al * n;
    c.zeta_plus = zb + 2 * al * n;
    c.zeta_minus = zb - 2 * al * n;
    cplx kerr = al * n * std::exp(I * c.theta);
    cplx eb = pump.epsilon + 2.0 * kerr;
    c.eps_plus = eb + kerr;
    c.eps_minus = -eb + kerr;
    auto block = [&](double z, cplx e, cplx& u, cplx& v, cplx& det) {
        det = (z + Delta + I * g) * (z - Delta - I * g) - std::norm(e);
        u = 1.0 - 2.0 * I * g0 * (z - Delta - I * g) / det;
        v = 2.0 * I * g0 * e / det;
    };
    block(c.zeta_plus, c.eps_plus, c.u_plus, c.v_plus, c.det_plus);
    block(c.zeta_minus, c.eps_minus, c.u_minus, c.v_minus, c.det_minus);
    return c;
}

FourModeBogoliubov supermode_bogoliubov(const SupermodeCoeffs& c)
{
    FourModeBogoliubov r;
    r.psi = c.psi;
    r.theta = c.theta;
    cplx ep = std::exp(I * c.psi), em = std::exp(-I * c.psi);
    cplx us = 0.5 * (c.u_plus + c.u_minus), ud = 0.5 * (c.u_plus - c.u_minus);
    cplx vs = 0.5 * (c.v_plus + c.v_minus), vd = 0.5 * (c.v_plus - c.v_minus);
    r.U << us, ud * ep, ud * em, us;
    r.V << vs * ep, vd, vd, vs * em;
    r.divergent = !r.U.allFinite() || !r.V.allFinite();
    return r;
}

FourModeGains supermode_gains(const ModePair& mp, const PumpConfig& pump, const CavityState& s, double Delta,
                              const SupermodeOptions& opt)
{
    auto p = supermode_coeffs(mp, pump, s, Delta, opt);
    auto m = supermode_coeffs(mp, pump, s, -Delta, opt);
    FourModeGains g;
    g.g11_p = 0.25 * std::norm(p.u_plus + p.u_minus);
    g.g12_m = 0.25 * std::norm(m.v_plus - m.v_minus);
    g.g11_m = 0.25 * std::norm(m.v_plus + m.v_minus);
    g.g12_p = 0.25 * std::norm(p.u_plus - p.u_minus);
    g.divergent = !std::isfinite(g.g11_p + g.g12_m + g.g11_m + g.g12_p);
    return g;
}

SupermodePair supermode_threshold_approx(double gamma, double zeta, double Delta)
{
    SupermodePair r;
    auto one = [&](double vs, double sigma, cplx& u, cplx& v) {
        cplx den = vs * vs - Delta * Delta - 2.0 * I * gamma * Delta;
        u = (-2 * gamma * gamma + vs * vs - Delta * Delta) / den;
        v = 2.0 * I * sigma * gamma * gamma / den;
    };
    one(std::sqrt(3.0) * zeta, 1.0, r.u_plus, r.v_plus);
    one(zeta / std::sqrt(3.0), -1.0, r.u_minus, r.v_minus);
    return r;
}

OscillatorDeterminants oscillator_determinants(const ModePair& mp, const PumpConfig& pump, double Delta)
{
    require_balanced(mp, 1e-12, "oscillator determinants");
    double g = mp.gamma1, e = pump.epsilon;
    if (!(e > g)) throw DomainError("oscillator determinants: pump below threshold");
    auto dth = detuning_threshold(mp, e);
    if (!(pump.delta < *dth)) throw DomainError("oscillator determinants: no stable oscillation at this detuning");
    cplx shift = Delta * (Delta + 2.0 * I * g);
    return {4 * (e * e - pump.delta * std::sqrt(e * e - g * g) - g * g) - shift, -shift};
}

double oscillator_gain_asymptote(double gamma, double epsilon, double Delta)
{
    double d2 = Delta * Delta;
    return 4.0 / 9.0 * gamma * gamma * epsilon * epsilon / (d2 * (d2 + 4 * gamma * gamma));
}

cplx oscillator_minus_asymptote(double gamma, double epsilon, double Delta)
{
    return 4.0 / 3.0 * I * gamma * epsilon / (Delta * (Delta + 2.0 * I * gamma));
}

namespace {

struct LockFrame {
    cplx q;
    double theta0;
    double gamma;
};

LockFrame lock_frame(const ModePair& mp, const PumpConfig& pump, const char* what)
{
    require_amplification(pump, what);
    require_balanced(mp, 1e-12, what);
    if (!mp.is_lossless(1e-12)) throw DomainError(std::string(what) + ": lossless modes only");
    if (!(pump.epsilon > mp.gamma1)) throw DomainError(std::string(what) + ": pump at or below threshold");
    auto osc = oscillation_state(mp, pump, Branch::stable);
    double zeta_minus = pump.delta + 2 * mp.alpha * osc.r1 * osc.r1;
    return {cplx(zeta_minus, mp.gamma1), osc.theta, mp.gamma1};
}

}  // namespace

PhaseLock phase_lock(const ModePair& mp, const PumpConfig& pump, cplx b1, cplx b2)
{
    auto f = lock_frame(mp, pump, "phase lock");
    PhaseLock r;
    r.q = f.q;
    r.theta0 = f.theta0;
    cplx rot = std::exp(I * f.theta0);
    cplx num = std::conj(f.q) * b1 + f.q * rot * std::conj(b2);
    cplx den = f.q * rot * std::conj(b1) + std::conj(f.q) * b2;
    if (std::abs(den) == 0 || std::abs(num) == 0) {
        r.free_phase = true;
        return r;
    }
    r.psi = std::arg(num / den);
    cplx h = std::exp(0.5 * I * r.psi);
    r.b_minus = (b1 / h - b2 * h) / std::sqrt(2.0);
    cplx half = std::exp(0.5 * I * f.theta0);
    r.a_minus_bar = std::sqrt(f.gamma / 2) * (r.b_minus / half) / f.q;
    r.c_minus_closed = (f.q + std::conj(f.q)) / (2.0 * f.q) * r.b_minus;
    r.c_minus_io = r.b_minus - I * std::sqrt(2 * f.gamma) * r.a_minus_bar * half;
    return r;
}

cplx detuned_response_exact(const ModePair& mp, const PumpConfig& pump, const Spectrum& b, double Delta)
{
    auto f = lock_frame(mp, pump, "detuned response");
    if (Delta == 0) throw SingularResponse("detuned response: exact transform is singular at zero detuning");
    cplx rot = std::exp(I * f.theta0);
    cplx bp = b(Delta), bm = b(-Delta);
    cplx num = 2.0 * I * f.gamma * (std::conj(f.q) * bp - f.q * rot * std::conj(bm)) + Delta * Delta * bp;
    return num / (Delta * (Delta + 2.0 * I * f.gamma));
}

DetunedResponse regularized_detuned_response(const ModePair& mp, const PumpConfig& pump, const Spectrum& b,
                                             double Delta, double step, double lock_tol)
{
    auto f = lock_frame(mp, pump, "regularized response");
    cplx rot = std::exp(I * f.theta0);
    cplx b0 = b(0.0);
    DetunedResponse r;
    double scale = std::abs(f.q) * std::abs(b0);
    r.lock_defect = scale > 0 ? std::abs(std::conj(f.q) * b0 - f.q * rot * std::conj(b0)) / scale : 0.0;
    r.locked = r.lock_defect <= lock_tol;
    if (!r.locked) {
        r.c_minus = Delta == 0 ? cplx(std::numeric_limits<double>::infinity(), 0.0)
                               : detuned_response_exact(mp, pump, b, Delta);
        return r;
    }
    double h = step > 0 ? step : 1e-5 * f.gamma;
    cplx d = (b(h) - b(-h)) / (2 * h);
    cplx num = 2.0 * I * f.gamma * (std::conj(f.q) * d + f.q * rot * std::conj(d)) + Delta * b(Delta);
    r.c_minus = num / (2.0 * I * f.gamma + Delta);
    return r;
}

}  // namespace paramres
