#include "paramres/cli/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "toml.hpp"

namespace paramres::cli {

std::vector<double> Grid::values() const
{
    std::vector<double> v(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        v[static_cast<std::size_t>(i)] = count == 1 ? start : start + (stop - start) * i / (count - 1);
    return v;
}

namespace {

void check_keys(const toml::table& t, const std::set<std::string>& allowed, const std::string& where)
{
    for (auto&& [k, v] : t)
        if (!allowed.count(std::string(k.str())))
            throw ConfigError(where + ": unknown key '" + std::string(k.str()) + "'");
}

double get_num(const toml::table& t, const char* key, const std::string& where)
{
    auto v = t[key].value<double>();
    if (!v) throw ConfigError(where + "." + key + ": missing or not a number");
    return *v;
}

std::optional<double> opt_num(const toml::table& t, const char* key, const std::string& where)
{
    if (!t.contains(key)) return std::nullopt;
    auto v = t[key].value<double>();
    if (!v) throw ConfigError(where + "." + key + ": not a number");
    return v;
}

const toml::table* sub_table(const toml::table& root, const char* key)
{
    if (!root.contains(key)) return nullptr;
    auto* t = root[key].as_table();
    if (!t) throw ConfigError(std::string(key) + ": expected a table");
    return t;
}

template <class F>
auto wrap(const std::string& where, F&& f)
{
    try {
        return f();
    } catch (const DomainError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

ModePair read_mode_pair(const toml::table& t)
{
    check_keys(t, {"gamma1", "gamma2", "gamma10", "gamma20", "alpha1", "alpha2", "alpha"}, "mode_pair");
    ModePair mp;
    mp.gamma1 = get_num(t, "gamma1", "mode_pair");
    mp.gamma2 = get_num(t, "gamma2", "mode_pair");
    mp.gamma10 = opt_num(t, "gamma10", "mode_pair").value_or(mp.gamma1);
    mp.gamma20 = opt_num(t, "gamma20", "mode_pair").value_or(mp.gamma2);
    mp.alpha1 = opt_num(t, "alpha1", "mode_pair").value_or(0.0);
    mp.alpha2 = opt_num(t, "alpha2", "mode_pair").value_or(0.0);
    mp.alpha = opt_num(t, "alpha", "mode_pair").value_or(std::sqrt(mp.alpha1 * mp.alpha2));
    return mp;
}

DeviceSource read_device(const toml::table& t)
{
    check_keys(t, {"gamma", "omega_scale", "flux_bias", "flux_amp", "coupling_ratio", "el_cav", "ej", "modes", "total_rates"},
               "device");
    DeviceSource d;
    auto& s = d.spec;
    s.gamma = opt_num(t, "gamma", "device").value_or(s.gamma);
    s.omega_scale = opt_num(t, "omega_scale", "device").value_or(s.omega_scale);
    s.flux_bias = opt_num(t, "flux_bias", "device").value_or(s.flux_bias);
    s.flux_amp = opt_num(t, "flux_amp", "device").value_or(s.flux_amp);
    s.coupling_ratio = opt_num(t, "coupling_ratio", "device").value_or(s.coupling_ratio);
    s.el_cav = opt_num(t, "el_cav", "device").value_or(s.el_cav);
    s.ej = opt_num(t, "ej", "device").value_or(s.ej);
    if (auto* m = t["modes"].as_array()) {
        if (m->size() != 2) throw ConfigError("device.modes: expected two mode indices");
        auto a = (*m)[0].value<int64_t>(), b = (*m)[1].value<int64_t>();
        if (!a || !b) throw ConfigError("device.modes: expected integers");
        d.modes = {static_cast<int>(*a), static_cast<int>(*b)};
    }
    if (auto* r = t["total_rates"].as_array()) {
        if (r->size() != 2) throw ConfigError("device.total_rates: expected two rates");
        auto a = (*r)[0].value<double>(), b = (*r)[1].value<double>();
        if (!a || !b) throw ConfigError("device.total_rates: expected numbers");
        d.total_rates = std::array<double, 2>{*a, *b};
    }
    s.n_modes = std::max({s.n_modes, d.modes.first, d.modes.second});
    for (auto& w : wrap("device", [&] { return validate(s); })) spdlog::warn("device: {}", w);
    return d;
}

Grid read_grid(const toml::table& t, const std::string& name)
{
    std::string where = "grid." + name;
    check_keys(t, {"start", "stop", "count"}, where);
    Grid g;
    g.start = get_num(t, "start", where);
    g.stop = get_num(t, "stop", where);
    auto c = t["count"].value<int64_t>();
    if (!c) throw ConfigError(where + ".count: missing or not an integer");
    if (*c < 2) throw ConfigError(where + ".count: sweep grids need at least two points");
    if (!(g.stop > g.start)) throw ConfigError(where + ": stop must exceed start");
    g.count = static_cast<int>(*c);
    return g;
}

std::string get_str(const toml::table& t, const char* key, const std::string& fallback)
{
    if (!t.contains(key)) return fallback;
    auto v = t[key].value<std::string>();
    if (!v) throw ConfigError(std::string(key) + ": expected a string");
    return *v;
}

const std::set<std::string> rate_grids = {"delta", "epsilon", "Delta", "delta1"};

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source_name)
{
    toml::table root;
    try {
        root = toml::parse(text, source_name);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e;
        throw ConfigError("TOML parse error: " + os.str());
    }
    check_keys(root, {"units", "mode_pair", "device", "pump", "drive", "homodyne", "grid", "sweep"}, "config");

    RunConfig cfg;
    std::string units = get_str(root, "units", "normalized");
    if (units == "normalized") cfg.units = Units::normalized;
    else if (units == "si") cfg.units = Units::si;
    else throw ConfigError("units: expected \"normalized\" or \"si\"");

    auto* mpt = sub_table(root, "mode_pair");
    auto* dvt = sub_table(root, "device");
    if ((mpt != nullptr) == (dvt != nullptr)) throw ConfigError("config: give exactly one of [mode_pair] or [device]");

    std::optional<double> device_eps;
    if (mpt) {
        cfg.mode_pair = read_mode_pair(*mpt);
    } else {
        cfg.device = read_device(*dvt);
        cfg.mode_pair = wrap("device", [&] {
            return derive_mode_pair(cfg.device->spec, cfg.device->modes, cfg.device->total_rates);
        });
        device_eps = wrap("device", [&] { return pump_strength(cfg.device->spec, cfg.mode_pair); });
    }
    wrap("mode_pair", [&] { validate(cfg.mode_pair); return 0; });

    if (auto* p = sub_table(root, "pump")) {
        check_keys(*p, {"epsilon", "delta", "regime"}, "pump");
        auto e = opt_num(*p, "epsilon", "pump");
        if (!e && !device_eps) throw ConfigError("pump.epsilon: missing");
        cfg.pump.epsilon = e ? *e : *device_eps;
        cfg.pump.delta = opt_num(*p, "delta", "pump").value_or(0.0);
        std::string r = get_str(*p, "regime", "amplification");
        if (r == "amplification") cfg.pump.regime = Regime::amplification;
        else if (r == "conversion") cfg.pump.regime = Regime::conversion;
        else throw ConfigError("pump.regime: expected \"amplification\" or \"conversion\"");
    } else if (device_eps) {
        cfg.pump.epsilon = *device_eps;
    } else {
        throw ConfigError("config: [pump] is required");
    }
    if (!(cfg.pump.epsilon >= 0)) throw ConfigError("pump.epsilon: must be non-negative");

    if (root.contains("drive")) {
        auto* arr = root["drive"].as_array();
        if (!arr) throw ConfigError("drive: expected [[drive]] entries");
        for (auto& node : *arr) {
            auto* t = node.as_table();
            if (!t) throw ConfigError("drive: expected a table");
            check_keys(*t, {"mode", "power", "phase", "detuning"}, "drive");
            DriveTone d;
            d.mode = static_cast<int>(t->get("mode") ? (*t)["mode"].value<int64_t>().value_or(0) : 1);
            if (d.mode != 1 && d.mode != 2) throw ConfigError("drive.mode: must be 1 or 2");
            double pw = get_num(*t, "power", "drive");
            if (!(pw >= 0)) throw ConfigError("drive.power: must be non-negative");
            d.amplitude = std::polar(std::sqrt(pw), opt_num(*t, "phase", "drive").value_or(0.0));
            d.detuning = opt_num(*t, "detuning", "drive").value_or(0.0);
            cfg.drives.push_back(d);
        }
    }

    if (auto* h = sub_table(root, "homodyne")) {
        check_keys(*h, {"theta1", "theta2", "theta", "lo", "bandwidth", "policy"}, "homodyne");
        auto th = opt_num(*h, "theta", "homodyne");
        cfg.homodyne.theta1 = opt_num(*h, "theta1", "homodyne").value_or(th.value_or(0.0));
        cfg.homodyne.theta2 = opt_num(*h, "theta2", "homodyne").value_or(th.value_or(cfg.homodyne.theta1));
        cfg.homodyne.mode = wrap("homodyne.lo", [&] { return parse_lo_mode(get_str(*h, "lo", "dual")); });
        cfg.homodyne.bandwidth = opt_num(*h, "bandwidth", "homodyne").value_or(0.0);
        if (!(cfg.homodyne.bandwidth >= 0)) throw ConfigError("homodyne.bandwidth: must be non-negative");
        std::string pol = get_str(*h, "policy", "max_snr");
        if (pol == "max_snr") cfg.policy = ThetaPolicy::max_snr;
        else if (pol == "max_amplification") cfg.policy = ThetaPolicy::max_amplification;
        else throw ConfigError("homodyne.policy: expected \"max_snr\" or \"max_amplification\"");
    }

    if (auto* g = sub_table(root, "grid")) {
        for (auto&& [k, v] : *g) {
            std::string name(k.str());
            if (!rate_grids.count(name) && name != "theta") throw ConfigError("grid: unknown axis '" + name + "'");
            auto* t = v.as_table();
            if (!t) throw ConfigError("grid." + name + ": expected a table");
            cfg.grids[name] = read_grid(*t, name);
        }
    }

    if (auto* s = sub_table(root, "sweep")) {
        check_keys(*s, {"axis", "frame", "source"}, "sweep");
        cfg.axis = wrap("sweep.axis", [&] { return parse_axis(get_str(*s, "axis", "delta")); });
        std::string fr = get_str(*s, "frame", "fixed");
        if (fr == "fixed") cfg.frame = FrameMode::fixed;
        else if (fr == "oscillator") cfg.frame = FrameMode::oscillator;
        else throw ConfigError("sweep.frame: expected \"fixed\" or \"oscillator\"");
        cfg.source = wrap("sweep.source", [&] { return parse_gain_source(get_str(*s, "source", "auto")); });
    }

    std::ostringstream echo;
    echo << toml::json_formatter{root};
    cfg.echo_json = echo.str();

    // Rescale every rate so that the library works in units of sqrt(G1 G2).
    if (cfg.units == Units::normalized) {
        double s = cfg.mode_pair.rate_scale();
        cfg.rate_unit = s;
        auto& mp = cfg.mode_pair;
        for (double* r : {&mp.gamma1, &mp.gamma2, &mp.gamma10, &mp.gamma20, &mp.alpha1, &mp.alpha2, &mp.alpha})
            *r /= s;
        if (mp.omega1) *mp.omega1 /= s;
        if (mp.omega2) *mp.omega2 /= s;
        cfg.pump.epsilon /= s;
        cfg.pump.delta /= s;
        for (auto& d : cfg.drives) {
            d.amplitude /= std::sqrt(s);
            d.detuning /= s;
        }
        cfg.homodyne.bandwidth /= s;
        for (auto& [name, g] : cfg.grids)
            if (rate_grids.count(name)) {
                g.start /= s;
                g.stop /= s;
            }
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string toml_version()
{
    return std::to_string(TOML_LIB_MAJOR) + "." + std::to_string(TOML_LIB_MINOR) + "." + std::to_string(TOML_LIB_PATCH);
}

bool has_grid(const RunConfig& cfg, const std::string& name) { return cfg.grids.count(name) > 0; }

std::vector<double> grid_or(const RunConfig& cfg, const std::string& name, double fallback)
{
    auto it = cfg.grids.find(name);
    if (it == cfg.grids.end()) return {fallback};
    return it->second.values();
}

}  // namespace paramres::cli
