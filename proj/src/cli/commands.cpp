#include "paramres/cli/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Core>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "paramres/conversion.hpp"
#include "paramres/kernels.hpp"
#include "paramres/noise.hpp"
#include "paramres/parallel.hpp"
#include "paramres/response.hpp"

#ifndef PARAMRES_VERSION
#define PARAMRES_VERSION "dev"
#endif

namespace paramres::cli {

namespace fs = std::filesystem;

const std::vector<std::string>& subcommands()
{
    static const std::vector<std::string> names = {"threshold", "oscillator", "sweep", "gain", "squeeze", "convert"};
    return names;
}

namespace {

/// Column and value helpers; rates go out in the configured unit.
struct UnitLabels {
    std::string rate;
    explicit UnitLabels(const RunConfig& cfg) : rate(cfg.units == Units::normalized ? "sqrt(G1G2)" : "rad/s") {}
};

Cell num(double v) { return v; }
Cell flag(bool b) { return static_cast<long>(b); }
Cell opt(const std::optional<double>& v) { return v ? Cell(*v) : Cell(Blank{}); }
Cell finite_or_blank(double v) { return std::isnan(v) ? Cell(Blank{}) : Cell(v); }

void require_grid(const RunConfig& cfg, const std::string& name, const std::string& cmd)
{
    if (!has_grid(cfg, name)) throw ConfigError(cmd + ": needs [grid." + name + "]");
}

double axis_default(const RunConfig& cfg, SweepAxis a)
{
    switch (a) {
    case SweepAxis::delta: return cfg.pump.delta;
    case SweepAxis::epsilon: return cfg.pump.epsilon;
    case SweepAxis::Delta: return 0.0;
    }
    return 0.0;
}

cplx mode1_amplitude(const RunConfig& cfg)
{
    cplx b = 0.0;
    for (auto& d : cfg.drives)
        if (d.mode == 1) b += d.amplitude;
    return b;
}

std::vector<Table> cmd_threshold(const RunConfig& cfg)
{
    UnitLabels u(cfg);
    const auto& mp = cfg.mode_pair;
    std::vector<Table> out;
    Table t{"threshold", {{"delta", u.rate}, {"epsilon_th", u.rate}, {"delta0_th", u.rate}}, {}};
    for (double d : grid_or(cfg, "delta", cfg.pump.delta)) {
        auto th = instability_threshold(mp, d);
        t.rows.push_back({num(d), num(th.epsilon_th), num(th.delta_crit)});
    }
    out.push_back(std::move(t));
    if (has_grid(cfg, "epsilon")) {
        Table w{"detuning_threshold", {{"epsilon", u.rate}, {"delta_th", u.rate}}, {}};
        for (double e : grid_or(cfg, "epsilon", cfg.pump.epsilon))
            w.rows.push_back({num(e), opt(detuning_threshold(mp, e))});
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<Table> cmd_oscillator(const RunConfig& cfg)
{
    UnitLabels u(cfg);
    const auto& mp = cfg.mode_pair;
    Table t{"oscillator",
            {{"epsilon", u.rate}, {"delta", u.rate}, {"branch", ""}, {"abs_a1_sq", "photons"}, {"abs_a2_sq", "photons"},
             {"theta_sum", "rad"}, {"delta0", u.rate}, {"stability", ""}, {"max_growth", u.rate}},
            {}};
    for (double e : grid_or(cfg, "epsilon", cfg.pump.epsilon))
        for (double d : grid_or(cfg, "delta", cfg.pump.delta)) {
            PumpConfig pump = cfg.pump;
            pump.epsilon = e;
            pump.delta = d;
            pump.regime = Regime::amplification;
            bool any = false;
            for (Branch b : {Branch::stable, Branch::unstable}) {
                OscillationState osc;
                try {
                    osc = oscillation_state(mp, pump, b);
                } catch (const DomainError&) {
                    continue;
                }
                any = true;
                auto st = stability_of_state(mp, pump, to_cavity_state(mp, pump, osc));
                t.rows.push_back({num(e), num(d), to_string(b), num(osc.r1 * osc.r1), num(osc.r2 * osc.r2),
                                  num(osc.theta), num(osc.delta0), to_string(st.label), num(st.max_growth)});
            }
            if (!any)
                t.rows.push_back({num(e), num(d), std::string("none"), Blank{}, Blank{}, Blank{}, Blank{}, Blank{},
                                  Blank{}});
        }
    return {t};
}

std::vector<Table> cmd_sweep(const RunConfig& cfg, int threads)
{
    UnitLabels u(cfg);
    SweepRequest req;
    req.mode_pair = cfg.mode_pair;
    req.pump = cfg.pump;
    req.drives = cfg.drives;
    req.axis = cfg.axis;
    std::string ax = to_string(cfg.axis);
    require_grid(cfg, ax, "sweep");
    req.grid = grid_or(cfg, ax, 0.0);
    req.frame = cfg.frame;
    auto bt = sweep_branches(req, threads);

    Table rows{"sweep",
               {{ax, u.rate}, {"branch_id", ""}, {"abs_a1_sq", "photons"}, {"abs_a2_sq", "photons"}, {"arg_a1", "rad"},
                {"arg_a2", "rad"}, {"delta_s", u.rate}, {"zeta1", u.rate}, {"zeta2", u.rate}, {"stability", ""},
                {"residual", u.rate}, {"abs_c1_sq", u.rate}, {"abs_c2_sq", u.rate}},
               {}};
    for (auto& r : bt.rows) {
        auto& s = r.state;
        rows.rows.push_back({num(r.axis_value), static_cast<long>(r.branch_id), num(std::norm(s.a1)), num(std::norm(s.a2)),
                             num(std::arg(s.a1)), num(std::arg(s.a2)), num(s.delta_s), num(s.zeta1), num(s.zeta2),
                             to_string(s.stability), num(s.residual), num(r.out1), num(r.out2)});
    }
    Table counts{"sweep_counts", {{ax, u.rate}, {"states", ""}, {"stable", ""}}, {}};
    for (std::size_t i = 0; i < req.grid.size(); ++i) {
        long stable = 0;
        for (auto& r : bt.rows)
            if (r.axis_value == req.grid[i] && r.state.stability == Stability::stable) ++stable;
        counts.rows.push_back({num(req.grid[i]), static_cast<long>(bt.counts[i]), stable});
    }
    Table folds{"sweep_folds", {{ax, u.rate}, {"branch_id", ""}, {"event", ""}}, {}};
    for (auto& f : bt.folds)
        folds.rows.push_back({num(f.axis_value), static_cast<long>(f.branch_id), std::string(f.start ? "start" : "end")});
    return {rows, counts, folds};
}

std::vector<Table> cmd_gain(const RunConfig& cfg, int threads)
{
    UnitLabels u(cfg);
    require_grid(cfg, "delta1", "gain");
    if (cfg.axis == SweepAxis::Delta) throw ConfigError("gain: sweep.axis must be delta or epsilon");
    GainMapRequest req;
    req.mode_pair = cfg.mode_pair;
    req.pump = cfg.pump;
    req.drives = cfg.drives;
    req.axis = cfg.axis;
    std::string ax = to_string(cfg.axis);
    req.axis_grid = grid_or(cfg, ax, axis_default(cfg, cfg.axis));
    req.delta1_grid = grid_or(cfg, "delta1", 0.0);
    req.source = cfg.source;
    auto map = gain_map(req, threads);

    Table g{"gain",
            {{ax, u.rate}, {"delta1", u.rate}, {"Delta", u.rate}, {"G11(Delta)", ""}, {"G12(-Delta)", ""},
             {"G11(-Delta)", ""}, {"G12(Delta)", ""}, {"divergent", ""}},
            {}};
    for (auto& r : map.rows)
        g.rows.push_back({num(r.axis_value), num(r.delta1), num(r.Delta), finite_or_blank(r.gains.g11_p),
                          finite_or_blank(r.gains.g12_m), finite_or_blank(r.gains.g11_m), finite_or_blank(r.gains.g12_p),
                          flag(r.gains.divergent)});
    Table l{"gain_loci",
            {{ax, u.rate}, {"source", ""}, {"frame_shift", u.rate}, {"resonance_delta1", u.rate}, {"peak_delta1", u.rate},
             {"peak_G12(-Delta)", ""}, {"oscillating", ""}},
            {}};
    for (auto& p : map.loci)
        l.rows.push_back({num(p.axis_value), p.source, num(p.frame_shift), num(p.resonance), num(p.peak_delta1),
                          num(p.peak_gain), flag(p.oscillating)});
    return {g, l};
}

/// Strongest stable driven state of the configured drives.
CavityState driven_state(const RunConfig& cfg)
{
    auto states = solve_steady_state(cfg.mode_pair, cfg.pump, cfg.drives);
    for (auto& s : states)
        if (s.stability == Stability::stable) return s;
    throw NumericalError("no stable driven state for the configured drives");
}

Table snr_table(const RunConfig& cfg, const SnrResult& r, const std::string& model)
{
    UnitLabels u(cfg);
    Table t{"snr",
            {{"model", ""}, {"lo", ""}, {"theta", "rad"}, {"p0_bar", u.rate}, {"s_bar", u.rate}, {"s0", ""},
             {"snr", ""}, {"snr_bandwidth_over_b1sq", ""}, {"snr_bandwidth_over_b1sq_per_pi", ""}, {"bandwidth", u.rate},
             {"halfwidth", u.rate}, {"bandwidth_warning", ""}},
            {}};
    t.rows.push_back({model, to_string(cfg.homodyne.mode), num(r.theta), num(r.p0_bar), num(r.s_bar), num(r.s0),
                      num(r.snr), num(r.normalized), num(r.normalized / pi), num(r.bandwidth), num(r.halfwidth),
                      flag(r.bandwidth_warning)});
    return t;
}

std::vector<Table> cmd_squeeze(const RunConfig& cfg, int threads)
{
    UnitLabels u(cfg);
    const auto& mp = cfg.mode_pair;
    if (cfg.pump.regime != Regime::amplification) throw ConfigError("squeeze: needs pump.regime = amplification");
    bool kerr = mp.alpha1 > 0 || mp.alpha2 > 0;
    cplx b1 = mode1_amplitude(cfg);
    GainSource src = cfg.source;
    if (src == GainSource::automatic) src = (!cfg.drives.empty() && kerr) ? GainSource::driven : GainSource::empty;
    if (src == GainSource::oscillator)
        throw OutOfRegime("squeeze: quantum noise of the free-running oscillator needs separate treatment");

    std::optional<CavityState> state;
    if (src == GainSource::driven) state = driven_state(cfg);
    auto grid = grid_or(cfg, "Delta", 0.0);
    SqueezingSpectrum sp = state ? four_mode_spectrum(mp, cfg.pump, *state, cfg.homodyne, grid)
                                 : two_mode_spectrum(mp, cfg.pump, cfg.homodyne, grid);

    std::vector<Table> out;
    Table t{"squeeze",
            {{"Delta", u.rate}, {"theta", "rad"}, {"S11", ""}, {"S22", ""}, {"Re_S12", ""}, {"Im_S12", ""}, {"S_total", ""},
             {"S_plus", ""}, {"S_minus", ""}},
            {}};
    for (auto& r : sp.rows)
        t.rows.push_back({num(r.Delta), num(r.theta), finite_or_blank(r.s.s11), finite_or_blank(r.s.s22),
                          finite_or_blank(r.s.s12.real()), finite_or_blank(r.s.s12.imag()), finite_or_blank(r.total),
                          opt(r.supermode_plus), opt(r.supermode_minus)});
    out.push_back(std::move(t));

    if (std::abs(b1) > 0) {
        if (state) out.push_back(snr_table(cfg, snr_four_mode(mp, cfg.pump, *state, b1, cfg.homodyne, cfg.policy), "four_mode"));
        else out.push_back(snr_table(cfg, snr_linear(mp, cfg.pump, b1, cfg.homodyne, cfg.policy), "linear"));
    }

    if (has_grid(cfg, "theta")) {
        SqueezeMapRequest req{mp, cfg.pump, state, cfg.homodyne.mode, grid_or(cfg, "theta", 0.0), grid};
        Table m{"squeeze_map",
                {{"theta", "rad"}, {"Delta", u.rate}, {"S11", ""}, {"S22", ""}, {"Re_S12", ""}, {"Im_S12", ""}, {"S_total", ""}},
                {}};
        for (auto& p : squeeze_map(req, threads))
            m.rows.push_back({num(p.theta), num(p.Delta), num(p.s.s11), num(p.s.s22), num(p.s.s12.real()),
                              num(p.s.s12.imag()), num(p.total)});
        out.push_back(std::move(m));
        if (state && std::abs(b1) > 0) {
            Table s{"theta_scan",
                    {{"theta", "rad"}, {"p0_bar", u.rate}, {"s0", ""}, {"snr_bandwidth_over_b1sq", ""}, {"S_plus", ""},
                     {"S_minus", ""}},
                    {}};
            int n = cfg.grids.at("theta").count;
            for (auto& r : theta_scan_four_mode(mp, cfg.pump, *state, b1, cfg.homodyne, n))
                s.rows.push_back({num(r.theta), num(r.p0_bar), num(r.s0), num(r.snr_normalized), opt(r.supermode_plus),
                                  opt(r.supermode_minus)});
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Table> cmd_convert(const RunConfig& cfg, int threads)
{
    UnitLabels u(cfg);
    if (cfg.pump.regime != Regime::conversion) throw ConfigError("convert: needs pump.regime = \"conversion\"");
    require_grid(cfg, "delta", "convert");
    require_grid(cfg, "delta1", "convert");
    for (auto& d : cfg.drives)
        if (d.mode != 1) throw ConfigError("convert: the signal drive must address mode 1");
    ConversionSweep req;
    req.mode_pair = cfg.mode_pair;
    req.pump = cfg.pump;
    req.b1 = mode1_amplitude(cfg);
    req.delta_grid = grid_or(cfg, "delta", 0.0);
    req.delta1_grid = grid_or(cfg, "delta1", 0.0);
    auto map = conversion_sweep(req, threads);

    Table t{"conversion",
            {{"delta", u.rate}, {"delta1", u.rate}, {"delta2", u.rate}, {"abs_V11_sq", ""}, {"abs_V12_sq", ""},
             {"unitarity_defect", ""}, {"max_conversion", ""}},
            {}};
    for (auto& r : map.rows)
        t.rows.push_back({num(r.delta), num(r.delta1), num(r.delta2), num(r.reflection), num(r.conversion),
                          num(r.unitarity_defect), flag(r.max_conversion)});
    Table p{"conversion_peaks", {{"delta", u.rate}, {"delta1", u.rate}, {"abs_V12_sq", ""}}, {}};
    for (auto& k : map.peaks) p.rows.push_back({num(k.delta), num(k.delta1), num(k.value)});
    std::vector<Table> out{t, p};
    if (cfg.mode_pair.is_lossless(1e-12)) {
        Table f{"full_conversion", {{"delta", u.rate}, {"epsilon", u.rate}, {"Delta", u.rate}}, {}};
        for (double d : req.delta_grid) {
            try {
                auto fc = full_conversion_point(cfg.mode_pair, d);
                f.rows.push_back({num(d), num(fc.epsilon), num(fc.Delta)});
            } catch (const DomainError&) {
                f.rows.push_back({num(d), Blank{}, Blank{}});
            }
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::string versions_compiler()
{
#ifdef __VERSION__
    return __VERSION__;
#else
    return "unknown";
#endif
}

}  // namespace

std::vector<Table> compute(const std::string& sub, const RunConfig& cfg, int threads)
{
    if (sub == "threshold") return cmd_threshold(cfg);
    if (sub == "oscillator") return cmd_oscillator(cfg);
    if (sub == "sweep") return cmd_sweep(cfg, threads);
    if (sub == "gain") return cmd_gain(cfg, threads);
    if (sub == "squeeze") return cmd_squeeze(cfg, threads);
    if (sub == "convert") return cmd_convert(cfg, threads);
    throw ConfigError("unknown subcommand '" + sub + "'");
}

int run(const std::string& sub, const RunOptions& opt)
{
    auto t0 = std::chrono::steady_clock::now();
    fs::path out_dir(opt.out_dir);
    auto write_diagnostics = [&](const std::string& msg) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        std::ofstream d(out_dir / "diagnostics.txt");
        d << "subcommand: " << sub << "\nconfig: " << opt.config_path << "\nthreads: " << resolve_threads(opt.threads)
          << "\nerror: " << msg << "\n";
    };

    RunConfig cfg;
    std::vector<Table> tables;
    try {
        cfg = load_config(opt.config_path);
        tables = compute(sub, cfg, opt.threads);
    } catch (const ConfigError& e) {
        spdlog::error("config error: {}", e.what());
        return 2;
    } catch (const DomainError& e) {
        spdlog::error("config error: {}", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("numerical failure: {}", e.what());
        write_diagnostics(e.what());
        return 3;
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        spdlog::error("cannot create output directory {}: {}", out_dir.string(), ec.message());
        return 2;
    }

    nlohmann::ordered_json outputs = nlohmann::ordered_json::array();
    for (auto& t : tables) {
        std::string body = opt.format == Format::csv ? to_csv(t) : to_json(t);
        std::string file = t.name + (opt.format == Format::csv ? ".csv" : ".json");
        std::ofstream f(out_dir / file, std::ios::binary);
        f << body;
        if (!f) {
            spdlog::error("cannot write {}", (out_dir / file).string());
            return 2;
        }
        outputs.push_back({{"file", file}, {"rows", t.rows.size()}, {"bytes", body.size()}, {"sha256", sha256_hex(body)}});
        spdlog::info("wrote {} ({} rows)", file, t.rows.size());
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::ordered_json m;
    m["tool"] = "paramres";
    m["subcommand"] = sub;
    m["config_path"] = opt.config_path;
    m["config"] = nlohmann::ordered_json::parse(cfg.echo_json);
    m["units"] = cfg.units == Units::normalized ? "normalized" : "si";
    m["rate_unit_in_config_units"] = cfg.rate_unit;
    m["format"] = opt.format == Format::csv ? "csv" : "json";
    m["threads"] = resolve_threads(opt.threads);
    m["versions"] = {{"paramres", PARAMRES_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"spdlog", std::to_string(SPDLOG_VER_MAJOR) + "." + std::to_string(SPDLOG_VER_MINOR) + "." +
                                    std::to_string(SPDLOG_VER_PATCH)},
                     {"tomlplusplus", toml_version()},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"openmp", openmp_enabled()},
                     {"compiler", versions_compiler()}};
    m["timing"] = {{"wall_seconds", wall}};
    m["outputs"] = outputs;
    std::ofstream mf(out_dir / "manifest.json");
    mf << m.dump(2) << "\n";
    if (!mf) {
        spdlog::error("cannot write manifest");
        return 2;
    }
    return 0;
}

}  // namespace paramres::cli
