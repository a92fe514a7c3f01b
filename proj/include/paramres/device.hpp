#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "paramres/types.hpp"

namespace paramres {

/// Physical parameters of the SQUID-terminated quarter-wave cavity.
struct DeviceSpec {
    double gamma = 0.05;           ///< inductive participation ratio
    double omega_scale = 1.0;      ///< v/d = 1/sqrt(L_cav C_cav), rad/s
    double flux_bias = 0.0;        ///< static flux F, rad
    double flux_amp = 0.0;         ///< modulation depth (delta f)
    double coupling_ratio = 0.0;   ///< C_c / C_cav
    double el_cav = 1.0;           ///< E_L,cav / hbar, rad/s
    double ej = 0.0;               ///< E_J / hbar, rad/s (0 = not given)
    int n_modes = 2;
};

/// Throws DomainError on violated invariants, returns warnings otherwise.
std::vector<std::string> validate(const DeviceSpec& spec);

/// The n_modes smallest positive roots of x tan x = 1/gamma.
std::vector<double> solve_mode_spectrum(double gamma, int n_modes);

/// Resonance-approximation coefficients of modes (n, m), 1-based.
/// `total_rates` overrides the total damping (internal losses); default lossless.
ModePair derive_mode_pair(const DeviceSpec& spec, std::pair<int, int> modes,
                          std::optional<std::array<double, 2>> total_rates = std::nullopt);

/// Flux-pump coupling rate for the pair; needs kd and omegas from derive_mode_pair.
double pump_strength(const DeviceSpec& spec, const ModePair& mp);

enum class Verdict { pass, warn, fail, skipped };
std::string to_string(Verdict v);

struct RatioCheck {
    std::string name;
    double value = 0.0;
    Verdict verdict = Verdict::pass;
};

struct ValidityThresholds {
    double pass = 0.1;
    double warn = 0.3;
};

struct ValidityReport {
    std::vector<RatioCheck> checks;
    bool above_threshold_capable = false;
    bool flux_near_half_pi = false;  ///< tan F > 10
    Verdict overall() const;
};

/// Ratios of slow rates to the mode frequencies. `spec` may be absent when the
/// mode pair was given directly; omega-dependent checks are skipped without omegas.
ValidityReport validate_regime(const DeviceSpec* spec, const ModePair& mp, const PumpConfig& pump,
                               double photon_scale, ValidityThresholds th = {});

}  // namespace paramres
