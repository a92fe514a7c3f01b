#pragma once

#include <string>
#include <vector>

#include "paramres/noise.hpp"
#include "paramres/steadystate.hpp"
#include "paramres/types.hpp"

namespace paramres {

/// Which intracavity state the linear response is taken about.
enum class GainSource {
    automatic,   ///< stable oscillation where it exists, empty cavity elsewhere
    empty,
    oscillator,
    driven,      ///< most intense stable state of the configured drives
};

std::string to_string(GainSource s);
GainSource parse_gain_source(const std::string& s);

struct GainMapRequest {
    ModePair mode_pair;
    PumpConfig pump;
    std::vector<DriveTone> drives;   ///< used by the driven source only
    SweepAxis axis = SweepAxis::delta;
    std::vector<double> axis_grid;   ///< pump detuning or pump strength
    std::vector<double> delta1_grid; ///< signal detuning from mode 1
    GainSource source = GainSource::automatic;
    SolveOptions options;
};

struct GainRow {
    double axis_value = 0.0;
    double delta1 = 0.0;
    double Delta = 0.0;  ///< delta1 - delta - frame shift
    FourModeGains gains;
};

/// Per axis value: the state used and where the signal meets its frame.
struct GainLocus {
    double axis_value = 0.0;
    std::string source;
    double frame_shift = 0.0;     ///< oscillation frequency shift (zero for the empty cavity)
    double resonance = 0.0;       ///< delta + frame_shift
    double peak_delta1 = 0.0;     ///< grid argmax of the primary idler gain
    double peak_gain = 0.0;
    bool oscillating = false;
};

struct GainMap {
    std::vector<GainRow> rows;  ///< axis-major order
    std::vector<GainLocus> loci;
};

/// Signal and idler gains over (axis, delta1).
GainMap gain_map(const GainMapRequest& req, int threads = 0);

/// Reference with the axis values processed in order on one thread.
GainMap gain_map_serial(const GainMapRequest& req);

struct SqueezeMapRequest {
    ModePair mode_pair;
    PumpConfig pump;
    std::optional<CavityState> state;  ///< strong field; empty cavity when absent
    LoMode mode = LoMode::dual;
    std::vector<double> theta_grid;    ///< common LO phase
    std::vector<double> Delta_grid;
};

struct SqueezePoint {
    double theta = 0.0, Delta = 0.0;
    SpectralComponents s;
    double total = 0.0;
};

/// Noise spectrum over (theta, Delta), theta-major.
std::vector<SqueezePoint> squeeze_map(const SqueezeMapRequest& req, int threads = 0);

/// Reference evaluated in order on one thread.
std::vector<SqueezePoint> squeeze_map_serial(const SqueezeMapRequest& req);

}  // namespace paramres
