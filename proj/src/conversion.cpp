#include "paramres/conversion.hpp"

#include <cmath>

#include <Eigen/LU>

#include "paramres/parallel.hpp"
#include "paramres/steadystate.hpp"

namespace paramres {

Mat2 conversion_matrix(const ModePair& mp, double epsilon, double zeta1, double zeta2, double Delta, cplx* det)
{
    cplx p1 = Delta + I * mp.gamma1 + zeta1;
    cplx p2 = Delta + I * mp.gamma2 + zeta2;
    cplx d = p1 * p2 - epsilon * epsilon;
    if (det) *det = d;
    cplx off = 2.0 * I * epsilon * std::sqrt(mp.gamma10 * mp.gamma20) / d;
    Mat2 V;
    V << 1.0 - 2.0 * I * mp.gamma10 * p2 / d, off, off, 1.0 - 2.0 * I * mp.gamma20 * p1 / d;
    return V;
}

namespace {

using Vec4 = Eigen::Vector4d;
using Mat4d = Eigen::Matrix4d;

struct Field {
    cplx a1, a2;
};

std::pair<cplx, cplx> residual(const ModePair& mp, const PumpConfig& pump, cplx s1, cplx s2, double D, Field f)
{
    auto [z1, z2] = effective_detunings(mp, pump, f.a1, f.a2);
    return {(D + z1 + I * mp.gamma1) * f.a1 + pump.epsilon * f.a2 - s1,
            (D + z2 + I * mp.gamma2) * f.a2 + pump.epsilon * f.a1 - s2};
}

Mat4d jacobian(const ModePair& mp, const PumpConfig& pump, double D, Field f)
{
    auto [z1, z2] = effective_detunings(mp, pump, f.a1, f.a2);
    cplx a1 = f.a1, a2 = f.a2, c1 = std::conj(a1), c2 = std::conj(a2);
    double al = mp.alpha, e = pump.epsilon;
    cplx p1 = D + z1 + I * mp.gamma1, p2 = D + z2 + I * mp.gamma2;
    // Wirtinger derivatives: {d/dA1, d/dA1*, d/dA2, d/dA2*}
    cplx d1[4] = {p1 + mp.alpha1 * std::norm(a1), mp.alpha1 * a1 * a1, e + 2 * al * a1 * c2, 2 * al * a1 * a2};
    cplx d2[4] = {e + 2 * al * a2 * c1, 2 * al * a2 * a1, p2 + mp.alpha2 * std::norm(a2), mp.alpha2 * a2 * a2};
    Mat4d J;
    for (int k = 0; k < 2; ++k)
        for (int row = 0; row < 2; ++row) {
            const cplx* d = row == 0 ? d1 : d2;
            cplx dx = d[2 * k] + d[2 * k + 1], dy = I * (d[2 * k] - d[2 * k + 1]);
            J(2 * row, 2 * k) = dx.real();
            J(2 * row + 1, 2 * k) = dx.imag();
            J(2 * row, 2 * k + 1) = dy.real();
            J(2 * row + 1, 2 * k + 1) = dy.imag();
        }
    return J;
}

}  // namespace

ConversionScattering conversion_scattering(const ModePair& mp, const PumpConfig& pump, cplx b1, cplx b2,
                                           double Delta, const ConversionOptions& opt)
{
    if (pump.regime != Regime::conversion) throw DomainError("conversion: pump must be in the conversion regime");
    validate(mp);
    if (!(pump.epsilon >= 0)) throw DomainError("conversion: epsilon must be non-negative");
    cplx s1 = std::sqrt(2 * mp.gamma10) * b1, s2 = std::sqrt(2 * mp.gamma20) * b2;

    // Kerr-free seed
    double z1 = -pump.delta, z2 = pump.delta;
    cplx p1 = Delta + z1 + I * mp.gamma1, p2 = Delta + z2 + I * mp.gamma2;
    cplx det0 = p1 * p2 - pump.epsilon * pump.epsilon;
    Field f{(p2 * s1 - pump.epsilon * s2) / det0, (p1 * s2 - pump.epsilon * s1) / det0};

    ConversionScattering out;
    bool kerr = mp.alpha1 > 0 || mp.alpha2 > 0;
    bool driven = std::abs(b1) > 0 || std::abs(b2) > 0;
    if (kerr && driven) {
        auto pack = [](const std::pair<cplx, cplx>& r) { return Vec4(r.first.real(), r.first.imag(), r.second.real(), r.second.imag()); };
        bool converged = false;
        double last_res = 0.0;
        for (int it = 0; it < opt.max_iterations; ++it) {
            Vec4 r = pack(residual(mp, pump, s1, s2, Delta, f));
            Vec4 dx = Eigen::PartialPivLU<Mat4d>(jacobian(mp, pump, Delta, f)).solve(-r);
            if (!dx.allFinite()) break;
            double rn = r.norm(), t = 1.0;
            Field trial = f;
            for (int ls = 0; ls < 40; ++ls) {
                trial = {f.a1 + t * cplx(dx[0], dx[1]), f.a2 + t * cplx(dx[2], dx[3])};
                if (pack(residual(mp, pump, s1, s2, Delta, trial)).norm() < (1 - 1e-4 * t) * rn || rn == 0) break;
                t *= 0.5;
            }
            double step = t * dx.norm();
            f = trial;
            out.iterations = it + 1;
            last_res = pack(residual(mp, pump, s1, s2, Delta, f)).norm();
            double size = std::max(std::hypot(std::abs(f.a1), std::abs(f.a2)), 1e-300);
            if (step <= opt.tolerance * size || last_res == 0) {
                converged = true;
                break;
            }
        }
        if (!converged)
            throw NumericalError("conversion: self-consistent Kerr solve did not converge after " +
                                 std::to_string(out.iterations) + " iterations (last residual " +
                                 std::to_string(last_res) + ", |A1| = " + std::to_string(std::abs(f.a1)) +
                                 "); strong drive may be multistable");
    }

    CavityState& st = out.state;
    st.a1 = f.a1;
    st.a2 = f.a2;
    st.delta_s = Delta;
    st.driven = driven;
    std::tie(st.zeta1, st.zeta2) = effective_detunings(mp, pump, f.a1, f.a2);
    auto r = residual(mp, pump, s1, s2, Delta, f);
    st.residual = std::max(std::abs(r.first), std::abs(r.second));
    out.V = conversion_matrix(mp, pump.epsilon, st.zeta1, st.zeta2, Delta, &out.det);
    out.unitarity_defect = (out.V * out.V.adjoint() - Mat2::Identity()).cwiseAbs().maxCoeff();
    double shift = std::max(std::abs(st.zeta1 + pump.delta), std::abs(st.zeta2 - pump.delta));
    out.quantum_valid = shift <= opt.quantum_tol * std::min(mp.gamma1, mp.gamma2);
    return out;
}

ConversionScattering conversion_scattering(const ModePair& mp, const PumpConfig& pump,
                                           const std::vector<DriveTone>& drives, const ConversionOptions& opt)
{
    cplx b[2] = {0.0, 0.0};
    std::optional<double> D;
    for (auto& d : drives) {
        if (d.mode != 1 && d.mode != 2) throw DomainError("drive: mode must be 1 or 2");
        if (D && std::abs(*D - d.detuning) > 1e-12 * std::max(1.0, std::abs(d.detuning)))
            throw DomainError("conversion: tones must share one detuning");
        D = d.detuning;
        b[d.mode - 1] += d.amplitude;
    }
    return conversion_scattering(mp, pump, b[0], b[1], D.value_or(0.0), opt);
}

FullConversion full_conversion_point(const ModePair& mp, double delta)
{
    if (!mp.is_lossless(1e-12)) throw DomainError("full conversion: requires lossless modes");
    double g1 = mp.gamma1, g2 = mp.gamma2, dg = g2 - g1;
    if (std::abs(dg) <= 1e-14 * (g1 + g2)) {
        if (delta != 0) throw DomainError("full conversion: no finite solution for equal damping and nonzero detuning");
        return {std::sqrt(g1 * g2), 0.0};
    }
    return {std::sqrt(g1 * g2 * (1 + 4 * delta * delta / (dg * dg))), delta * (g1 + g2) / dg};
}

namespace {

void check_grid(const std::vector<double>& g, const char* name)
{
    if (g.size() < 2) throw DomainError(std::string("conversion sweep: ") + name + " grid needs two points");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw DomainError(std::string("conversion sweep: ") + name + " grid must increase");
}

ConversionRow point(const ConversionSweep& req, double delta, double delta1)
{
    PumpConfig pump = req.pump;
    pump.delta = delta;
    pump.regime = Regime::conversion;
    double D = delta1 + delta;
    auto sc = conversion_scattering(req.mode_pair, pump, req.b1, 0.0, D, req.options);
    return {delta, delta1, 2 * delta + delta1, std::norm(sc.V(0, 0)), std::norm(sc.V(0, 1)), sc.unitarity_defect, false};
}

void mark_peaks(const ConversionSweep& req, ConversionMap& map)
{
    std::size_t n1 = req.delta1_grid.size();
    for (std::size_t i = 0; i < req.delta_grid.size(); ++i) {
        ConversionRow* row = &map.rows[i * n1];
        for (std::size_t j = 1; j + 1 < n1; ++j) {
            double fm = row[j - 1].conversion, f0 = row[j].conversion, fp = row[j + 1].conversion;
            if (!(f0 > fm && f0 > fp)) continue;
            row[j].max_conversion = true;
            double x0 = row[j - 1].delta1, x1 = row[j].delta1, x2 = row[j + 1].delta1;
            // vertex of the parabola through the three samples
            double num = (x1 - x0) * (x1 - x0) * (f0 - fp) - (x1 - x2) * (x1 - x2) * (f0 - fm);
            double den = (x1 - x0) * (f0 - fp) - (x1 - x2) * (f0 - fm);
            double xv = den != 0 ? x1 - 0.5 * num / den : x1;
            if (!(xv > x0 && xv < x2)) xv = x1;
            auto sc = point(req, req.delta_grid[i], xv);
            map.peaks.push_back({req.delta_grid[i], xv, std::max(sc.conversion, f0)});
        }
    }
}

ConversionMap sweep(const ConversionSweep& req, bool parallel, int threads)
{
    check_grid(req.delta_grid, "delta");
    check_grid(req.delta1_grid, "delta1");
    std::size_t n0 = req.delta_grid.size(), n1 = req.delta1_grid.size();
    ConversionMap map;
    map.rows.resize(n0 * n1);
    std::vector<std::string> errors(n0 * n1);
    auto one = [&](std::size_t k) {
        try {
            map.rows[k] = point(req, req.delta_grid[k / n1], req.delta1_grid[k % n1]);
        } catch (const std::exception& e) {
            errors[k] = e.what();
        }
    };
    long total = static_cast<long>(n0 * n1);
    if (parallel) {
#pragma omp parallel for schedule(static) num_threads(resolve_threads(threads))
        for (long k = 0; k < total; ++k) one(static_cast<std::size_t>(k));
    } else {
        for (long k = 0; k < total; ++k) one(static_cast<std::size_t>(k));
    }
    for (std::size_t k = 0; k < errors.size(); ++k)
        if (!errors[k].empty())
            throw NumericalError("conversion sweep at delta=" + std::to_string(req.delta_grid[k / n1]) +
                                 ", delta1=" + std::to_string(req.delta1_grid[k % n1]) + ": " + errors[k]);
    mark_peaks(req, map);
    return map;
}

}  // namespace

ConversionMap conversion_sweep(const ConversionSweep& req, int threads) { return sweep(req, true, threads); }

ConversionMap conversion_sweep_serial(const ConversionSweep& req) { return sweep(req, false, 1); }

}  // namespace paramres
