#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "paramres/device.hpp"
#include "paramres/kernels.hpp"
#include "paramres/noise.hpp"
#include "paramres/steadystate.hpp"
#include "paramres/types.hpp"

namespace paramres::cli {

/// Malformed or inconsistent configuration (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Units { normalized, si };

struct Grid {
    double start = 0.0, stop = 0.0;
    int count = 0;
    std::vector<double> values() const;
};

struct DeviceSource {
    DeviceSpec spec;
    std::pair<int, int> modes{1, 2};
    std::optional<std::array<double, 2>> total_rates;
};

struct RunConfig {
    Units units = Units::normalized;
    /// Rate unit of all inputs and outputs: sqrt(G1 G2) when normalized, 1 rad/s for SI.
    double rate_unit = 1.0;

    ModePair mode_pair;
    std::optional<DeviceSource> device;
    PumpConfig pump;
    std::vector<DriveTone> drives;
    HomodyneConfig homodyne;
    ThetaPolicy policy = ThetaPolicy::max_snr;

    std::map<std::string, Grid> grids;  ///< delta, epsilon, Delta, delta1, theta

    SweepAxis axis = SweepAxis::delta;
    FrameMode frame = FrameMode::fixed;
    GainSource source = GainSource::automatic;

    std::string echo_json;  ///< the parsed config, serialized
};

/// Parse a TOML config. Rates are rescaled so that the library sees normalized
/// values when `units = "normalized"`.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& toml_text, const std::string& source_name = "<string>");

/// Grid values for `name` (rescaled to computation units), or a single point when absent.
std::vector<double> grid_or(const RunConfig& cfg, const std::string& name, double fallback);
bool has_grid(const RunConfig& cfg, const std::string& name);

/// Version of the TOML parser.
std::string toml_version();

}  // namespace paramres::cli
