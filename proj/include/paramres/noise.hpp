#pragma once

#include <optional>
#include <vector>

#include "paramres/response.hpp"
#include "paramres/types.hpp"

namespace paramres {

enum class LoMode { single, dual };
std::string to_string(LoMode m);
LoMode parse_lo_mode(const std::string& s);

struct HomodyneConfig {
    double theta1 = 0.0, theta2 = 0.0;  ///< local-oscillator phases, rad
    LoMode mode = LoMode::dual;
    double bandwidth = 0.0;             ///< SNR integration width; 0 picks the default
};

/// S_nm components at one detuning. Vacuum gives s11 = s22 = 1.
struct SpectralComponents {
    double s11 = 0.0, s22 = 0.0;
    cplx s12, s21;
    double total(LoMode m) const;
};

/// Components from U(Delta) and V(-Delta) for local-oscillator phases (theta1, theta2).
SpectralComponents spectral_components(const Mat2& u, const Mat2& v_mirror, double theta1, double theta2);

struct SqueezingRow {
    double Delta = 0.0;
    double theta = 0.0;
    SpectralComponents s;
    double total = 0.0;
    std::optional<double> supermode_plus, supermode_minus;
};

struct SqueezingSpectrum {
    std::vector<SqueezingRow> rows;
    bool has_supermodes = false;
};

/// Squeezing parameter and interference phase of the two-mode map.
struct TwoModeSqueezing {
    double r = 0.0;    ///< |v1(Delta)| = sinh r
    double chi = 0.0;  ///< arg[u1(Delta) v2(-Delta)]
};

TwoModeSqueezing two_mode_squeezing(const ModePair& mp, const PumpConfig& pump, double Delta);

/// Dual-LO total for equal phases in closed form (sum over +-Delta).
double two_mode_total_closed(const ModePair& mp, const PumpConfig& pump, double theta, double Delta);

/// Two-mode spectrum below threshold; lossy pairs are refused.
SqueezingSpectrum two_mode_spectrum(const ModePair& mp, const PumpConfig& pump, const HomodyneConfig& hom,
                                    const std::vector<double>& grid);

/// Maximal-squeezing phase pi/2 + chi(0)/2, reported in [0, pi).
double optimal_squeezing_phase(const ModePair& mp, const PumpConfig& pump);

struct FourModeNoiseOptions {
    bool allow_free_phase = false;  ///< permit the undriven oscillation ring (outside the model)
    SupermodeOptions supermode;
};

/// Four-mode spectrum about a strong driven state; balanced pairs also get the supermode split.
SqueezingSpectrum four_mode_spectrum(const ModePair& mp, const PumpConfig& pump, const CavityState& state,
                                     const HomodyneConfig& hom, const std::vector<double>& grid,
                                     const FourModeNoiseOptions& opt = {});

/// Supermode contributions to S11 (single LO) at one detuning and common LO phase.
std::pair<double, double> supermode_s11(const SupermodeCoeffs& at, const SupermodeCoeffs& mirror, double theta);

/// Supermode contributions to the dual-LO total at one detuning and common LO phase.
std::pair<double, double> supermode_total(const SupermodeCoeffs& at, const SupermodeCoeffs& mirror, double theta);

enum class ThetaPolicy { max_amplification, max_snr };

struct SnrResult {
    double theta = 0.0;      ///< LO phase used, in [0, pi)
    double p0_bar = 0.0;     ///< weight of the coherent delta peak
    double s_bar = 0.0;      ///< noise integrated over the bandwidth
    double s0 = 0.0;         ///< noise density at Delta = 0
    double snr = 0.0;
    double normalized = 0.0; ///< snr * bandwidth / |B1|^2
    double bandwidth = 0.0;
    double halfwidth = 0.0;  ///< estimated gain-peak half-width
    bool bandwidth_warning = false;
};

/// SNR of the linear two-mode amplifier for a weak on-resonance tone B1.
SnrResult snr_linear(const ModePair& mp, const PumpConfig& pump, cplx b1, const HomodyneConfig& hom,
                     ThetaPolicy policy = ThetaPolicy::max_amplification);

/// SNR of the four-mode amplifier about the driven state generated by B1.
SnrResult snr_four_mode(const ModePair& mp, const PumpConfig& pump, const CavityState& state, cplx b1,
                        const HomodyneConfig& hom, ThetaPolicy policy = ThetaPolicy::max_snr);

/// Idealized balanced four-mode single-LO SNR with the analytic amplitude, gain and phases.
SnrResult snr_analytic_four_mode(const ModePair& mp, const PumpConfig& pump, cplx b1, double bandwidth);

struct ThetaScanRow {
    double theta = 0.0;
    double p0_bar = 0.0;
    double s0 = 0.0;
    double snr_normalized = 0.0;
    std::optional<double> supermode_plus, supermode_minus;
};

/// P0, S(0) and SNR against the common LO phase for the four-mode amplifier.
std::vector<ThetaScanRow> theta_scan_four_mode(const ModePair& mp, const PumpConfig& pump, const CavityState& state,
                                               cplx b1, const HomodyneConfig& hom, int points);

struct PairAmplitudeRow {
    double Delta = 0.0;
    double r = 0.0, rho = 0.0;
    cplx g;
    double eta1 = 0.0, eta2 = 0.0;  ///< arg u_1, arg u_2 (four-mode: arg u_+, arg u_-), recorded only
    double norm = 0.0;              ///< sum_n |g|^2n / cosh^2 r
    // four-mode only
    std::optional<cplx> g_plus, g_minus, same_mode, cross_mode;
};

/// Pair amplitudes of the squeezed vacuum; `state` selects the four-mode form (balanced only).
std::vector<PairAmplitudeRow> squeezed_vacuum_amplitudes(const ModePair& mp, const PumpConfig& pump,
                                                         const CavityState* state, const std::vector<double>& grid);

/// Half-width at half maximum of a peak centred at zero, searched outward from `start`.
double peak_halfwidth(const std::function<double(double)>& f, double start, double limit);

}  // namespace paramres
