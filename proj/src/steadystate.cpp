#include "paramres/steadystate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>

#include <spdlog/spdlog.h>

#include "paramres/parallel.hpp"

namespace paramres {

Threshold instability_threshold(const ModePair& mp, double delta)
{
    double g1 = mp.gamma1, g2 = mp.gamma2;
    if (!(g1 > 0 && g2 > 0)) throw DomainError("threshold: damping rates must be positive");
    double q = (g1 - g2) / (g1 + g2);
    return {std::sqrt(g1 * g2 + delta * delta * (1 - q * q)), delta * q};
}

std::optional<double> detuning_threshold(const ModePair& mp, double epsilon)
{
    double g = mp.gamma1 * mp.gamma2;
    if (epsilon * epsilon < g) return std::nullopt;
    return (mp.gamma1 + mp.gamma2) / (2 * std::sqrt(g)) * std::sqrt(epsilon * epsilon - g);
}

std::pair<double, double> effective_detunings(const ModePair& mp, const PumpConfig& pump, cplx a1, cplx a2)
{
    double n1 = std::norm(a1), n2 = std::norm(a2);
    double d1 = pump.regime == Regime::amplification ? pump.delta : -pump.delta;
    return {d1 + mp.alpha1 * n1 + 2 * mp.alpha * n2, pump.delta + mp.alpha2 * n2 + 2 * mp.alpha * n1};
}

OscillationState oscillation_state(const ModePair& mp, const PumpConfig& pump, Branch branch)
{
    if (pump.regime != Regime::amplification)
        throw DomainError("oscillation state: requires the amplification regime");
    double g1 = mp.gamma1, g2 = mp.gamma2, eps = pump.epsilon;
    if (!(eps * eps > g1 * g2)) throw DomainError("oscillation state: pump below the minimal threshold");
    double den = mp.alpha1 * g2 + mp.alpha2 * g1 + 2 * mp.alpha * (g1 + g2);
    if (!(den > 0)) throw DomainError("oscillation state: no Kerr nonlinearity, amplitude unbounded");
    double dth = *detuning_threshold(mp, eps);
    double num = branch == Branch::stable ? dth - pump.delta : -pump.delta - dth;
    if (!(num > 0))
        throw DomainError(std::string("oscillation state: ") + to_string(branch) + " branch does not exist at this detuning");

    OscillationState s;
    s.branch = branch;
    double r1sq = 2 * num * g2 / den;
    s.r1 = std::sqrt(r1sq);
    s.r2 = std::sqrt(r1sq * g1 / g2);
    double sin_t = std::sqrt(g1 * g2) / eps;
    double cos_t = std::sqrt(eps * eps - g1 * g2) / eps;
    if (branch == Branch::stable) cos_t = -cos_t;
    s.theta = std::atan2(sin_t, cos_t);
    auto [z1, z2] = effective_detunings(mp, pump, s.r1, s.r2);
    s.delta0 = (z2 * g1 - z1 * g2) / (g1 + g2);
    return s;
}

CavityState to_cavity_state(const ModePair& mp, const PumpConfig& pump, const OscillationState& osc, double psi)
{
    CavityState c;
    c.a1 = std::polar(osc.r1, 0.5 * (osc.theta + psi));
    c.a2 = std::polar(osc.r2, 0.5 * (osc.theta - psi));
    c.delta_s = osc.delta0;
    std::tie(c.zeta1, c.zeta2) = effective_detunings(mp, pump, c.a1, c.a2);
    c.free_phase = true;
    c.residual = steady_state_residual(mp, pump, FrameDrive{0.0, 0.0, osc.delta0}, c.a1, c.a2);
    return c;
}

FrameDrive fold_drives(const std::vector<DriveTone>& drives, std::optional<double> delta_s)
{
    FrameDrive f;
    bool have = delta_s.has_value();
    f.delta_s = delta_s.value_or(0.0);
    for (auto& d : drives) {
        if (d.mode != 1 && d.mode != 2) throw DomainError("drive: mode must be 1 or 2");
        double frame = d.mode == 1 ? d.detuning : -d.detuning;
        if (!have) {
            f.delta_s = frame;
            have = true;
        } else if (std::abs(frame - f.delta_s) > 1e-12 * std::max(1.0, std::abs(frame))) {
            throw DomainError("drive: tones do not share a common frame detuning");
        }
        (d.mode == 1 ? f.b1 : f.b2) += d.amplitude;
    }
    return f;
}

namespace {

struct Residual {
    cplx r1, r2;
};

Residual residual(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd, cplx a1, cplx a2)
{
    auto [z1, z2] = effective_detunings(mp, pump, a1, a2);
    double ds = fd.delta_s;
    cplx s1 = std::sqrt(2 * mp.gamma10) * fd.b1;
    cplx s2 = std::sqrt(2 * mp.gamma20) * std::conj(fd.b2);
    return {(ds + z1 + I * mp.gamma1) * a1 + pump.epsilon * std::conj(a2) - s1,
            (-ds + z2 - I * mp.gamma2) * std::conj(a2) + pump.epsilon * a1 - s2};
}

/// Magnitude of the largest term in the static equations; sets the convergence scale.
double term_scale(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd, cplx a1, cplx a2)
{
    auto [z1, z2] = effective_detunings(mp, pump, a1, a2);
    double m1 = std::abs(a1), m2 = std::abs(a2);
    double ds = std::abs(fd.delta_s);
    return std::max({(ds + std::abs(z1) + mp.gamma1) * m1, pump.epsilon * m2, std::sqrt(2 * mp.gamma10) * std::abs(fd.b1),
                     (ds + std::abs(z2) + mp.gamma2) * m2, pump.epsilon * m1, std::sqrt(2 * mp.gamma20) * std::abs(fd.b2),
                     std::max(mp.gamma1, mp.gamma2) * 1e-3});
}

using Vec4 = Eigen::Vector4d;
using Mat4d = Eigen::Matrix4d;

Vec4 pack(cplx a1, cplx a2) { return {a1.real(), a1.imag(), a2.real(), a2.imag()}; }

Vec4 pack(const Residual& r) { return {r.r1.real(), r.r1.imag(), r.r2.real(), r.r2.imag()}; }

Mat4d jacobian(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd, cplx a1, cplx a2)
{
    auto [z1, z2] = effective_detunings(mp, pump, a1, a2);
    double ds = fd.delta_s, eps = pump.epsilon, al = mp.alpha;
    cplx p1 = ds + z1 + I * mp.gamma1;
    cplx p2 = -ds + z2 - I * mp.gamma2;
    cplx c1 = std::conj(a1), c2 = std::conj(a2);
    // Wirtinger derivatives d/dA and d/dA* of the two complex residuals
    cplx d1[4] = {p1 + mp.alpha1 * std::norm(a1), mp.alpha1 * a1 * a1, 2 * al * a1 * c2, eps + 2 * al * a1 * a2};
    cplx d2[4] = {eps + 2 * al * c1 * c2, 2 * al * a1 * c2, mp.alpha2 * c2 * c2, p2 + mp.alpha2 * std::norm(a2)};
    Mat4d J;
    for (int k = 0; k < 2; ++k) {
        cplx dz1 = d1[2 * k], dzc1 = d1[2 * k + 1];
        cplx dz2 = d2[2 * k], dzc2 = d2[2 * k + 1];
        cplx dx1 = dz1 + dzc1, dy1 = I * (dz1 - dzc1);
        cplx dx2 = dz2 + dzc2, dy2 = I * (dz2 - dzc2);
        J(0, 2 * k) = dx1.real();
        J(1, 2 * k) = dx1.imag();
        J(0, 2 * k + 1) = dy1.real();
        J(1, 2 * k + 1) = dy1.imag();
        J(2, 2 * k) = dx2.real();
        J(3, 2 * k) = dx2.imag();
        J(2, 2 * k + 1) = dy2.real();
        J(3, 2 * k + 1) = dy2.imag();
    }
    return J;
}

struct NewtonResult {
    bool ok = false;
    cplx a1, a2;
    double residual = 0.0;
};

NewtonResult newton(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd, cplx a1, cplx a2,
                    const SolveOptions& opt, double bound)
{
    Vec4 x = pack(a1, a2);
    auto eval = [&](const Vec4& v) { return pack(residual(mp, pump, fd, {v[0], v[1]}, {v[2], v[3]})); };
    Vec4 r = eval(x);
    double rn = r.lpNorm<Eigen::Infinity>();
    int polish = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        cplx b1{x[0], x[1]}, b2{x[2], x[3]};
        double tol = opt.tolerance * term_scale(mp, pump, fd, b1, b2);
        if (rn <= tol) {
            if (++polish > 2 || rn == 0) return {true, b1, b2, rn};
        }
        Mat4d J = jacobian(mp, pump, fd, b1, b2);
        Eigen::FullPivLU<Mat4d> lu(J);
        Vec4 dx = lu.isInvertible() ? Vec4(lu.solve(-r)) : Vec4(J.completeOrthogonalDecomposition().solve(-r));
        if (!dx.allFinite()) break;
        double t = 1.0;
        Vec4 xn;
        Vec4 rnew;
        double rnn = 0;
        for (int ls = 0; ls < 30; ++ls) {
            xn = x + t * dx;
            rnew = eval(xn);
            rnn = rnew.lpNorm<Eigen::Infinity>();
            if (rnn < (1 - 1e-4 * t) * rn) break;
            t *= 0.5;
        }
        if (!(rnn < rn)) {
            if (rn <= tol) return {true, b1, b2, rn};
            break;
        }
        x = xn;
        r = rnew;
        rn = rnn;
        if (x.lpNorm<Eigen::Infinity>() > bound) break;
    }
    cplx b1{x[0], x[1]}, b2{x[2], x[3]};
    double tol = opt.tolerance * term_scale(mp, pump, fd, b1, b2);
    return {rn <= tol, b1, b2, rn};
}

/// Solution of the static equations with fixed effective detunings.
std::pair<cplx, cplx> linear_solve(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd, double z1, double z2)
{
    double ds = fd.delta_s, eps = pump.epsilon;
    cplx m11 = ds + z1 + I * mp.gamma1, m22 = -ds + z2 - I * mp.gamma2;
    cplx s1 = std::sqrt(2 * mp.gamma10) * fd.b1;
    cplx s2 = std::sqrt(2 * mp.gamma20) * std::conj(fd.b2);
    cplx det = m11 * m22 - eps * eps;
    cplx a1 = (m22 * s1 - eps * s2) / det;
    cplx a2c = (m11 * s2 - eps * s1) / det;
    return {a1, std::conj(a2c)};
}

bool has_kerr(const ModePair& mp) { return mp.alpha1 > 0 || mp.alpha2 > 0; }

/// Coarse upper estimate of the intracavity amplitude (in sqrt-photon units).
double amplitude_bound(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd)
{
    double amin = std::min(mp.alpha1, mp.alpha2);
    if (!(amin > 0)) amin = std::max(mp.alpha1, mp.alpha2) * 1e-2;
    double c = 2 * std::abs(fd.delta_s) + 2 * std::abs(pump.delta) + 2 * pump.epsilon + mp.gamma1 + mp.gamma2;
    double b = std::sqrt(2 * mp.gamma10) * std::abs(fd.b1) + std::sqrt(2 * mp.gamma20) * std::abs(fd.b2);
    double r = std::max(std::sqrt(c / amin), std::cbrt(b / amin));
    return 3 * r;
}

void finalize(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd, CavityState& s)
{
    s.delta_s = fd.delta_s;
    std::tie(s.zeta1, s.zeta2) = effective_detunings(mp, pump, s.a1, s.a2);
    auto r = residual(mp, pump, fd, s.a1, s.a2);
    s.residual = std::max(std::abs(r.r1), std::abs(r.r2));
    s.stability = stability_of_state(mp, pump, s).label;
}

bool same_state(const CavityState& a, const CavityState& b)
{
    double s = std::max({1.0, std::abs(a.a1), std::abs(a.a2)});
    return std::abs(a.a1 - b.a1) <= 1e-7 * s && std::abs(a.a2 - b.a2) <= 1e-7 * s &&
           std::abs(a.delta_s - b.delta_s) <= 1e-9 * std::max(1.0, std::abs(a.delta_s));
}

void sort_states(std::vector<CavityState>& v)
{
    std::stable_sort(v.begin(), v.end(), [](const CavityState& a, const CavityState& b) {
        double na = std::norm(a.a1), nb = std::norm(b.a1);
        if (na != nb) return na > nb;
        return std::norm(a.a2) > std::norm(b.a2);
    });
}

/// Seeds from sign changes of the intensity self-consistency map on a sqrt-intensity grid.
std::vector<std::array<cplx, 2>> intensity_scan(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd,
                                                int cells, double bound)
{
    std::vector<std::array<cplx, 2>> seeds;
    if (cells <= 0) return seeds;
    int n = cells + 1;
    double h = bound / cells;
    std::vector<double> g1(n * n), g2(n * n);
    double d1 = pump.regime == Regime::amplification ? pump.delta : -pump.delta;
    auto zeta = [&](double i1, double i2) {
        return std::pair{d1 + mp.alpha1 * i1 + 2 * mp.alpha * i2, pump.delta + mp.alpha2 * i2 + 2 * mp.alpha * i1};
    };
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double i1 = (i * h) * (i * h), i2 = (j * h) * (j * h);
            auto [z1, z2] = zeta(i1, i2);
            auto [a1, a2] = linear_solve(mp, pump, fd, z1, z2);
            g1[i * n + j] = std::norm(a1) - i1;
            g2[i * n + j] = std::norm(a2) - i2;
        }
    auto mixed = [&](const std::vector<double>& g, int i, int j) {
        double v[4] = {g[i * n + j], g[(i + 1) * n + j], g[i * n + j + 1], g[(i + 1) * n + j + 1]};
        bool pos = false, neg = false;
        for (double x : v) {
            if (!std::isfinite(x)) return false;
            if (x >= 0) pos = true;
            if (x <= 0) neg = true;
        }
        return pos && neg;
    };
    for (int i = 0; i < cells; ++i)
        for (int j = 0; j < cells; ++j) {
            if (!mixed(g1, i, j) || !mixed(g2, i, j)) continue;
            double s1 = (i + 0.5) * h, s2 = (j + 0.5) * h;
            auto [z1, z2] = zeta(s1 * s1, s2 * s2);
            auto [a1, a2] = linear_solve(mp, pump, fd, z1, z2);
            // keep the phases of the linear solve but put the moduli on the cell centre
            double m1 = std::abs(a1), m2 = std::abs(a2);
            cplx u1 = m1 > 0 ? a1 / m1 : cplx(1.0), u2 = m2 > 0 ? a2 / m2 : cplx(1.0);
            seeds.push_back({u1 * s1, u2 * s2});
        }
    return seeds;
}

}  // namespace

double steady_state_residual(const ModePair& mp, const PumpConfig& pump, const FrameDrive& drive, cplx a1, cplx a2)
{
    auto r = residual(mp, pump, drive, a1, a2);
    return std::max(std::abs(r.r1), std::abs(r.r2));
}

StabilityReport stability_of_state(const ModePair& mp, const PumpConfig& pump, const CavityState& s)
{
    cplx a1 = s.a1, a2 = s.a2;
    double al = mp.alpha;
    double zb1 = pump.delta + 2 * mp.alpha1 * std::norm(a1) + 2 * al * std::norm(a2);
    double zb2 = pump.delta + 2 * mp.alpha2 * std::norm(a2) + 2 * al * std::norm(a1);
    Mat2 T, E;
    T << s.delta_s + zb1 + I * mp.gamma1, 2 * al * a1 * std::conj(a2), 2 * al * std::conj(a1) * a2,
        -s.delta_s + zb2 + I * mp.gamma2;
    cplx eb = pump.epsilon + 2 * al * a1 * a2;
    E << mp.alpha1 * a1 * a1, eb, eb, mp.alpha2 * a2 * a2;
    Mat4 K;
    K << -T, -E, E.conjugate(), T.conjugate();
    Eigen::ComplexEigenSolver<Mat4> es(K, false);
    StabilityReport rep;
    double tol = 1e-9 * std::sqrt(mp.gamma1 * mp.gamma2);
    int positive = 0;
    rep.max_growth = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 4; ++k) {
        rep.eigenvalues[k] = es.eigenvalues()[k];
        double g = rep.eigenvalues[k].imag();
        rep.max_growth = std::max(rep.max_growth, g);
        if (g > tol) ++positive;
        else if (std::abs(g) <= tol) ++rep.zero_modes;
    }
    std::sort(rep.eigenvalues.begin(), rep.eigenvalues.end(),
              [](cplx x, cplx y) { return x.imag() != y.imag() ? x.imag() > y.imag() : x.real() < y.real(); });
    if (positive > 0) rep.label = Stability::unstable;
    else if (rep.zero_modes == 0) rep.label = Stability::stable;
    else if (s.free_phase && rep.zero_modes == 1) rep.label = Stability::stable;
    else rep.label = Stability::marginal;
    return rep;
}

std::vector<CavityState> solve_steady_state(const ModePair& mp, const PumpConfig& pump,
                                            const std::vector<DriveTone>& drives, const SolveOptions& opt)
{
    return solve_steady_state(mp, pump, fold_drives(drives), opt);
}

std::vector<CavityState> solve_steady_state(const ModePair& mp, const PumpConfig& pump, const FrameDrive& fd,
                                            const SolveOptions& opt)
{
    if (pump.regime != Regime::amplification)
        throw DomainError("steady state: the amplification solver needs the amplification regime");
    validate(mp);
    if (!(pump.epsilon >= 0)) throw DomainError("steady state: epsilon must be non-negative");
    bool driven = std::abs(fd.b1) > 0 || std::abs(fd.b2) > 0;
    bool kerr = has_kerr(mp);
    bool above = pump.epsilon * pump.epsilon > mp.gamma1 * mp.gamma2;

    std::vector<OscillationState> oscs;
    if (above && kerr) {
        for (Branch b : {Branch::stable, Branch::unstable}) {
            try {
                oscs.push_back(oscillation_state(mp, pump, b));
            } catch (const DomainError&) {
            }
        }
    }

    std::vector<CavityState> out;
    if (!driven) {
        CavityState zero;
        finalize(mp, pump, fd, zero);
        out.push_back(zero);
        for (auto& o : oscs) {
            auto c = to_cavity_state(mp, pump, o, 0.0);
            c.stability = stability_of_state(mp, pump, c).label;
            out.push_back(c);
        }
        sort_states(out);
        return out;
    }

    if (!opt.allow_off_resonance && !oscs.empty() && oscs.front().branch == Branch::stable) {
        double d0 = oscs.front().delta0;
        if (std::abs(fd.delta_s - d0) > 1e-9 * std::max(mp.rate_scale(), std::abs(d0)))
            throw DomainError("steady state: driven response above threshold is only stationary at the oscillation "
                              "frequency (frame detuning " + std::to_string(d0) + ")");
    }

    auto [l1, l2] = linear_solve(mp, pump, fd, pump.delta, pump.delta);
    if (!kerr) {
        CavityState s;
        s.a1 = l1;
        s.a2 = l2;
        s.driven = true;
        finalize(mp, pump, fd, s);
        return {s};
    }

    double bound = amplitude_bound(mp, pump, fd);
    for (auto& o : oscs) bound = std::max(bound, 3 * std::max(o.r1, o.r2));

    std::vector<std::array<cplx, 2>> seeds{{l1, l2}};
    for (auto& s : opt.extra_seeds) seeds.push_back(s);
    double bscale = std::sqrt(2 * mp.gamma10) * std::abs(fd.b1) + std::sqrt(2 * mp.gamma20) * std::abs(fd.b2);
    for (auto& o : oscs) {
        for (int k = 0; k < opt.ring_seeds; ++k) {
            double psi = 4 * pi * k / opt.ring_seeds;  // psi and psi + 2 pi are distinct states
            auto c = to_cavity_state(mp, pump, o, psi);
            seeds.push_back({c.a1, c.a2});
            double f = std::min(0.5, bscale / (mp.gamma1 + mp.gamma2) / std::max(o.r1, 1e-300));
            seeds.push_back({c.a1 * (1 + f), c.a2 * (1 + f)});
            seeds.push_back({c.a1 * (1 - f), c.a2 * (1 - f)});
        }
    }

    auto run = [&](const std::vector<std::array<cplx, 2>>& sd, std::vector<CavityState>& found) {
        for (auto& s : sd) {
            auto r = newton(mp, pump, fd, s[0], s[1], opt, 10 * bound);
            if (!r.ok) continue;
            CavityState c;
            c.a1 = r.a1;
            c.a2 = r.a2;
            c.delta_s = fd.delta_s;
            bool dup = false;
            for (auto& f : found)
                if (same_state(f, c)) {
                    dup = true;
                    break;
                }
            if (!dup) found.push_back(c);
        }
    };

    run(seeds, out);
    run(intensity_scan(mp, pump, fd, opt.grid_cells, bound), out);
    if (out.size() % 2 == 0 && opt.grid_cells > 0) {
        spdlog::debug("steady state: even solution count {}, refining intensity scan", out.size());
        run(intensity_scan(mp, pump, fd, 4 * opt.grid_cells, bound), out);
    }
    if (out.size() % 2 == 0 && !oscs.empty()) {
        // a weak drive locks the ring at one phase; the partner state is (-A1, -A2), i.e. the
        // phase difference advanced by 2 pi, which coarse ring seeds tend to miss
        std::vector<std::array<cplx, 2>> near;
        for (auto& o : oscs)
            for (auto& s : out) {
                if (std::abs(std::abs(s.a1) - o.r1) > 0.5 * o.r1) continue;
                for (double f : {0.99, 1.0, 1.01}) {
                    near.push_back({-s.a1 * f, -s.a2 * f});
                    auto c = to_cavity_state(mp, pump, o, s.psi() + 2 * pi);
                    near.push_back({c.a1 * f, c.a2 * f});
                }
            }
        run(near, out);
    }
    if (out.empty()) throw NumericalError("steady state: no converged solution from any seed");
    for (auto& s : out) {
        s.driven = true;
        finalize(mp, pump, fd, s);
    }
    sort_states(out);
    return out;
}

std::pair<cplx, cplx> output_fields(const ModePair& mp, const FrameDrive& fd, const CavityState& s)
{
    return {fd.b1 - I * std::sqrt(2 * mp.gamma10) * s.a1, fd.b2 - I * std::sqrt(2 * mp.gamma20) * s.a2};
}

SweepAxis parse_axis(const std::string& s)
{
    if (s == "delta") return SweepAxis::delta;
    if (s == "epsilon") return SweepAxis::epsilon;
    if (s == "Delta" || s == "detuning") return SweepAxis::Delta;
    throw DomainError("unknown sweep axis '" + s + "'");
}

std::string to_string(SweepAxis a)
{
    switch (a) {
    case SweepAxis::delta: return "delta";
    case SweepAxis::epsilon: return "epsilon";
    case SweepAxis::Delta: return "Delta";
    }
    return "?";
}

void apply_axis(const SweepRequest& req, double value, PumpConfig& pump, FrameDrive& fd)
{
    pump = req.pump;
    fd = fold_drives(req.drives);
    if (req.axis == SweepAxis::delta) pump.delta = value;
    if (req.axis == SweepAxis::epsilon) pump.epsilon = value;
    if (req.axis == SweepAxis::Delta) {
        fd.delta_s = value;
        return;
    }
    if (req.frame != FrameMode::oscillator) return;
    const ModePair& mp = req.mode_pair;
    auto dth = detuning_threshold(mp, pump.epsilon);
    if (!dth) return;
    double q = (mp.gamma1 - mp.gamma2) / (mp.gamma1 + mp.gamma2);
    if (pump.delta < *dth && has_kerr(mp)) fd.delta_s = oscillation_state(mp, pump, Branch::stable).delta0;
    else fd.delta_s = *dth * q;
}

namespace {

std::vector<std::vector<CavityState>> solve_grid(const SweepRequest& req, bool parallel, int threads)
{
    const auto& grid = req.grid;
    std::vector<std::vector<CavityState>> pts(grid.size());
    std::vector<std::string> errors(grid.size());
    auto one = [&](std::size_t i) {
        PumpConfig pump;
        FrameDrive fd;
        try {
            apply_axis(req, grid[i], pump, fd);
            pts[i] = solve_steady_state(req.mode_pair, pump, fd, req.options);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    if (parallel) {
        long n = static_cast<long>(grid.size());
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads))
        for (long i = 0; i < n; ++i) one(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < grid.size(); ++i) one(i);
    }
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (!errors[i].empty())
            throw NumericalError("sweep: grid point " + std::to_string(grid[i]) + ": " + errors[i]);
    return pts;
}

/// Re-solve points whose count is suspicious, seeding from the neighbours (continuation).
void repair(const SweepRequest& req, std::vector<std::vector<CavityState>>& pts)
{
    const auto& grid = req.grid;
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::size_t best = pts[i].size();
            if (i > 0) best = std::max(best, pts[i - 1].size());
            if (i + 1 < grid.size()) best = std::max(best, pts[i + 1].size());
            bool even = pts[i].size() % 2 == 0 && pts[i].front().driven;
            if (!even && pts[i].size() >= best) continue;
            SolveOptions opt = req.options;
            for (std::size_t j : {i - 1, i + 1}) {
                if (j >= grid.size()) continue;
                for (auto& s : pts[j]) opt.extra_seeds.push_back({s.a1, s.a2});
            }
            PumpConfig pump;
            FrameDrive fd;
            apply_axis(req, grid[i], pump, fd);
            auto again = solve_steady_state(req.mode_pair, pump, fd, opt);
            if (again.size() > pts[i].size()) pts[i] = std::move(again);
        }
    }
}

BranchTable link(const SweepRequest& req, const std::vector<std::vector<CavityState>>& pts)
{
    BranchTable t;
    const auto& grid = req.grid;
    double iscale = 1.0;
    for (auto& p : pts)
        for (auto& s : p) iscale = std::max({iscale, std::norm(s.a1), std::norm(s.a2)});
    auto feature = [&](const CavityState& s) {
        double c = (std::abs(s.a1) > 0 && std::abs(s.a2) > 0) ? std::cos(s.theta_sum()) : 0.0;
        return std::array<double, 3>{std::norm(s.a1) / iscale, std::norm(s.a2) / iscale, c};
    };
    const double jump = 0.25;

    std::vector<std::pair<int, CavityState>> live;  // branch id, last state
    int next_id = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& cur = pts[i];
        std::vector<int> ids(cur.size(), -1);
        std::vector<bool> used(live.size(), false);
        struct Cand {
            double cost;
            std::size_t k, j;
        };
        std::vector<Cand> cands;
        for (std::size_t k = 0; k < live.size(); ++k) {
            auto fa = feature(live[k].second);
            for (std::size_t j = 0; j < cur.size(); ++j) {
                auto fb = feature(cur[j]);
                double c = std::abs(fa[0] - fb[0]) + std::abs(fa[1] - fb[1]) + 0.1 * std::abs(fa[2] - fb[2]);
                if (live[k].second.stability != cur[j].stability) c += 0.02;
                cands.push_back({c, k, j});
            }
        }
        std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.cost < b.cost; });
        for (auto& c : cands) {
            if (c.cost > jump || used[c.k] || ids[c.j] >= 0) continue;
            used[c.k] = true;
            ids[c.j] = live[c.k].first;
        }
        // an unchanged state count means no fold: steep but continuous branches still connect
        if (cur.size() == live.size())
            for (auto& c : cands) {
                if (used[c.k] || ids[c.j] >= 0) continue;
                used[c.k] = true;
                ids[c.j] = live[c.k].first;
            }
        std::vector<std::pair<int, CavityState>> next;
        for (std::size_t k = 0; k < live.size(); ++k)
            if (!used[k]) t.folds.push_back({grid[i - 1], live[k].first, false});
        for (std::size_t j = 0; j < cur.size(); ++j) {
            if (ids[j] < 0) {
                ids[j] = next_id++;
                if (i > 0) t.folds.push_back({grid[i], ids[j], true});
            }
            next.push_back({ids[j], cur[j]});
        }
        live = std::move(next);

        PumpConfig pump;
        FrameDrive fd;
        apply_axis(req, grid[i], pump, fd);
        std::vector<BranchRow> rows;
        for (std::size_t j = 0; j < cur.size(); ++j) {
            auto [c1, c2] = output_fields(req.mode_pair, fd, cur[j]);
            rows.push_back({grid[i], ids[j], cur[j], std::norm(c1), std::norm(c2)});
        }
        std::stable_sort(rows.begin(), rows.end(), [](auto& a, auto& b) { return a.branch_id < b.branch_id; });
        t.rows.insert(t.rows.end(), rows.begin(), rows.end());
        t.counts.push_back(static_cast<int>(cur.size()));
        if (cur.size() % 2 == 0 && !cur.empty() && cur.front().driven) t.parity_violations.push_back(grid[i]);
    }
    return t;
}

void check_grid(const std::vector<double>& g)
{
    if (g.size() < 2) throw DomainError("sweep: grid needs at least two points");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw DomainError("sweep: grid must be strictly increasing");
}

}  // namespace

BranchTable sweep_branches(const SweepRequest& req, int threads)
{
    check_grid(req.grid);
    auto pts = solve_grid(req, true, threads);
    repair(req, pts);
    return link(req, pts);
}

BranchTable sweep_branches_serial(const SweepRequest& req)
{
    check_grid(req.grid);
    auto pts = solve_grid(req, false, 1);
    repair(req, pts);
    return link(req, pts);
}

}  // namespace paramres
