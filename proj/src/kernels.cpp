#include "paramres/kernels.hpp"

#include <cmath>

#include "paramres/parallel.hpp"

namespace paramres {

std::string to_string(GainSource s)
{
    switch (s) {
    case GainSource::automatic: return "auto";
    case GainSource::empty: return "empty";
    case GainSource::oscillator: return "oscillator";
    case GainSource::driven: return "driven";
    }
    return "?";
}

GainSource parse_gain_source(const std::string& s)
{
    if (s == "auto") return GainSource::automatic;
    if (s == "empty") return GainSource::empty;
    if (s == "oscillator") return GainSource::oscillator;
    if (s == "driven") return GainSource::driven;
    throw DomainError("unknown gain source '" + s + "' (auto, empty, oscillator, driven)");
}

namespace {

void check_grid(const std::vector<double>& g, const char* name)
{
    if (g.empty()) throw DomainError(std::string(name) + " grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw DomainError(std::string(name) + " grid must increase");
}

bool oscillation_exists(const ModePair& mp, const PumpConfig& pump)
{
    if (pump.epsilon * pump.epsilon <= mp.gamma1 * mp.gamma2) return false;
    return pump.delta < *detuning_threshold(mp, pump.epsilon);
}

struct Source {
    CavityState state;
    std::string label;
    bool oscillating = false;
};

Source pick_state(const GainMapRequest& req, const PumpConfig& pump)
{
    const auto& mp = req.mode_pair;
    GainSource src = req.source;
    if (src == GainSource::automatic) src = oscillation_exists(mp, pump) ? GainSource::oscillator : GainSource::empty;
    Source out;
    out.label = to_string(src);
    switch (src) {
    case GainSource::empty: break;
    case GainSource::oscillator:
        out.state = to_cavity_state(mp, pump, oscillation_state(mp, pump, Branch::stable));
        out.oscillating = true;
        break;
    case GainSource::driven: {
        auto states = solve_steady_state(mp, pump, req.drives, req.options);
        for (auto& s : states)
            if (s.stability == Stability::stable) {
                out.state = s;
                return out;
            }
        throw NumericalError("gain map: no stable driven state");
    }
    case GainSource::automatic: break;
    }
    return out;
}

/// One axis value: the state and its row of gains.
GainLocus axis_row(const GainMapRequest& req, std::size_t i, GainRow* rows)
{
    PumpConfig pump = req.pump;
    double v = req.axis_grid[i];
    if (req.axis == SweepAxis::delta) pump.delta = v;
    else pump.epsilon = v;
    Source src = pick_state(req, pump);

    GainLocus loc;
    loc.axis_value = v;
    loc.source = src.label;
    loc.oscillating = src.oscillating;
    loc.frame_shift = src.state.delta_s;
    loc.resonance = pump.delta + loc.frame_shift;
    loc.peak_gain = -1.0;
    for (std::size_t j = 0; j < req.delta1_grid.size(); ++j) {
        GainRow& r = rows[j];
        r.axis_value = v;
        r.delta1 = req.delta1_grid[j];
        r.Delta = r.delta1 - loc.resonance;
        r.gains = four_mode_gains(req.mode_pair, pump, src.state, r.Delta);
        double g = r.gains.divergent ? std::numeric_limits<double>::infinity() : r.gains.g12_m;
        if (g > loc.peak_gain) {
            loc.peak_gain = g;
            loc.peak_delta1 = r.delta1;
        }
    }
    return loc;
}

GainMap run_gain(const GainMapRequest& req, bool parallel, int threads)
{
    if (req.axis == SweepAxis::Delta) throw DomainError("gain map: axis must be delta or epsilon");
    check_grid(req.axis_grid, "axis");
    check_grid(req.delta1_grid, "delta1");
    std::size_t n0 = req.axis_grid.size(), n1 = req.delta1_grid.size();
    GainMap map;
    map.rows.resize(n0 * n1);
    map.loci.resize(n0);
    std::vector<std::string> errors(n0);
    auto one = [&](std::size_t i) {
        try {
            map.loci[i] = axis_row(req, i, &map.rows[i * n1]);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    };
    long total = static_cast<long>(n0);
    if (parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(resolve_threads(threads))
        for (long i = 0; i < total; ++i) one(static_cast<std::size_t>(i));
    } else {
        for (long i = 0; i < total; ++i) one(static_cast<std::size_t>(i));
    }
    for (std::size_t i = 0; i < n0; ++i)
        if (!errors[i].empty())
            throw NumericalError("gain map at " + to_string(req.axis) + "=" + std::to_string(req.axis_grid[i]) + ": " +
                                 errors[i]);
    return map;
}

SqueezePoint squeeze_point(const SqueezeMapRequest& req, double theta, double D)
{
    CavityState empty;
    const CavityState& s = req.state ? *req.state : empty;
    auto at = four_mode_bogoliubov(req.mode_pair, req.pump, s, D);
    auto mirror = four_mode_bogoliubov(req.mode_pair, req.pump, s, -D);
    if (at.divergent || mirror.divergent) throw SingularResponse("squeeze map: response diverges at Delta=" + std::to_string(D));
    SqueezePoint p;
    p.theta = theta;
    p.Delta = D;
    p.s = spectral_components(at.U, mirror.V, theta, theta);
    p.total = p.s.total(req.mode);
    return p;
}

std::vector<SqueezePoint> run_squeeze(const SqueezeMapRequest& req, bool parallel, int threads)
{
    if (!req.mode_pair.is_lossless(1e-12)) throw DomainError("squeeze map: lossless modes only");
    if (req.state && req.state->free_phase) throw OutOfRegime("squeeze map: oscillator noise needs separate treatment");
    if (!req.state && req.pump.epsilon >= instability_threshold(req.mode_pair, req.pump.delta).epsilon_th)
        throw OutOfRegime("squeeze map: empty cavity is above threshold");
    check_grid(req.theta_grid, "theta");
    check_grid(req.Delta_grid, "Delta");
    std::size_t n0 = req.theta_grid.size(), n1 = req.Delta_grid.size();
    std::vector<SqueezePoint> out(n0 * n1);
    std::vector<std::string> errors(n0 * n1);
    auto one = [&](std::size_t k) {
        try {
            out[k] = squeeze_point(req, req.theta_grid[k / n1], req.Delta_grid[k % n1]);
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
    for (auto& e : errors)
        if (!e.empty()) throw NumericalError(e);
    return out;
}

}  // namespace

GainMap gain_map(const GainMapRequest& req, int threads) { return run_gain(req, true, threads); }

GainMap gain_map_serial(const GainMapRequest& req) { return run_gain(req, false, 1); }

std::vector<SqueezePoint> squeeze_map(const SqueezeMapRequest& req, int threads) { return run_squeeze(req, true, threads); }

std::vector<SqueezePoint> squeeze_map_serial(const SqueezeMapRequest& req) { return run_squeeze(req, false, 1); }

}  // namespace paramres
