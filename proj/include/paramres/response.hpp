#pragma once

#include <functional>
#include <optional>

#include "paramres/steadystate.hpp"
#include "paramres/types.hpp"

namespace paramres {

/// Input-output map of the strong tone: (C1(D), C2*(-D)) = V (B1(D), B2*(-D)).
struct NonlinearIO {
    Mat2 V;
    cplx det;
    double g11 = 0.0;  ///< |V11|^2
    double g12 = 0.0;  ///< |V21|^2, idler gain at the mirrored detuning
};

/// Map at detuning `Delta` with the effective detunings taken from `state`.
NonlinearIO nonlinear_io(const ModePair& mp, const PumpConfig& pump, const CavityState& state, double Delta);

/// Same map for given effective detunings (Kerr-free when zeta1 = zeta2 = delta).
NonlinearIO io_matrix(const ModePair& mp, double epsilon, double zeta1, double zeta2, double Delta);

struct TwoModeBogoliubov {
    cplx u1, v1, u2, v2;
    bool divergent = false;        ///< evaluated on (or numerically at) a pole
    bool above_threshold = false;  ///< pump above the empty-cavity threshold
};

/// Linear two-mode coefficients; mode 2 follows by exchanging the mode labels.
TwoModeBogoliubov two_mode_uv(const ModePair& mp, const PumpConfig& pump, double Delta);

struct NearThreshold {
    double a1_abs = 0.0, a2_abs = 0.0;
    double g11 = 0.0, g12 = 0.0;
    bool balanced = false;
    std::optional<double> arg_a1, arg_a2;  ///< balanced modes only
    double lower_ratio = 0.0;              ///< left side of the input window over |B1|^2/Gamma1
    double upper_ratio = 0.0;              ///< (alpha1/Gamma1 * |B1|^2/Gamma1)^(1/3)
};

/// Strong-amplification asymptotics at the minimal threshold with an on-resonance input.
/// Throws OutOfRegime when either window ratio reaches `window_limit`.
NearThreshold near_threshold_asymptotics(const ModePair& mp, const PumpConfig& pump, const DriveTone& b1,
                                         double window_limit = 0.3);

struct FourModeMatrices {
    Mat2 T;  ///< hybridization block at detuning Delta
    Mat2 E;  ///< coupling to the conjugate pair
};

FourModeMatrices four_mode_matrices(const ModePair& mp, const PumpConfig& pump, const CavityState& state,
                                    double Delta);

struct FourModeBogoliubov {
    Mat2 U, V;
    double psi = 0.0;    ///< phase difference of the strong field
    double theta = 0.0;  ///< phase sum of the strong field
    bool divergent = false;
    double condition = 0.0;  ///< 2-norm condition number of the 4x4 system
};

/// c(D) = U(D) b(D) + V(D) b*(-D) about the strong state. U, V are NaN when divergent.
FourModeBogoliubov four_mode_bogoliubov(const ModePair& mp, const PumpConfig& pump, const CavityState& state,
                                        double Delta, double pole_condition = 1e12);

struct FourModeGains {
    double g11_p = 0.0;  ///< signal |U11(D)|^2
    double g12_m = 0.0;  ///< primary idler |V21(-D)|^2
    double g11_m = 0.0;  ///< secondary idler |V11(-D)|^2
    double g12_p = 0.0;  ///< secondary idler |U21(D)|^2
    bool divergent = false;
};

FourModeGains four_mode_gains(const ModePair& mp, const PumpConfig& pump, const CavityState& state, double Delta);

struct SupermodeOptions {
    /// Use |A|^2 = (|A1|^2 + |A2|^2)/2 instead of requiring equal moduli.
    bool average_intensity = false;
    double imbalance_tol = 1e-6;
};

struct SupermodeCoeffs {
    cplx u_plus, v_plus, u_minus, v_minus;
    double zeta_plus = 0.0, zeta_minus = 0.0;
    cplx eps_plus, eps_minus;
    cplx det_plus, det_minus;
    double psi = 0.0, theta = 0.0;
    double intensity = 0.0;  ///< |A|^2 used
};

/// Supermode coefficients of a balanced pair about a state with equal moduli.
SupermodeCoeffs supermode_coeffs(const ModePair& mp, const PumpConfig& pump, const CavityState& state, double Delta,
                                 const SupermodeOptions& opt = {});

/// U, V in the mode basis rebuilt from the supermode coefficients at the same Delta.
FourModeBogoliubov supermode_bogoliubov(const SupermodeCoeffs& c);

/// Four gains from supermode coefficients at +Delta and -Delta.
FourModeGains supermode_gains(const ModePair& mp, const PumpConfig& pump, const CavityState& state, double Delta,
                              const SupermodeOptions& opt = {});

struct SupermodePair {
    cplx u_plus, v_plus, u_minus, v_minus;
};

/// Approximate supermode coefficients at threshold (delta = 0) for Kerr shift zeta = 3 alpha |A|^2.
SupermodePair supermode_threshold_approx(double gamma, double zeta, double Delta);

struct OscillatorDeterminants {
    cplx det_plus, det_minus;
};

/// Closed-form supermode determinants about the balanced oscillation state.
OscillatorDeterminants oscillator_determinants(const ModePair& mp, const PumpConfig& pump, double Delta);

/// Common large-pump asymptote of all four gains about the oscillation state.
double oscillator_gain_asymptote(double gamma, double epsilon, double Delta);

/// Large-pump asymptote of u_-(Delta) and v_-(Delta).
cplx oscillator_minus_asymptote(double gamma, double epsilon, double Delta);

struct PhaseLock {
    double psi = 0.0;     ///< locked phase difference, in (-pi, pi]
    cplx q;               ///< zeta_- + i Gamma
    double theta0 = 0.0;  ///< phase sum of the free oscillation
    bool free_phase = false;
    cplx b_minus;         ///< "-" supermode input at the locked phase
    cplx a_minus_bar;     ///< linearized "-" amplitude in the oscillation frame (real when locked)
    cplx c_minus_closed;  ///< (Q + Q*)/(2Q) b_-
    cplx c_minus_io;      ///< b_- - i sqrt(2 Gamma) a_-
};

/// Relative phase locked by on-resonance inputs and the regular "-" supermode output.
PhaseLock phase_lock(const ModePair& mp, const PumpConfig& pump, cplx b1, cplx b2 = 0.0);

struct DetunedResponse {
    cplx c_minus;
    bool locked = false;
    double lock_defect = 0.0;  ///< |Q* b(0) - Q e^{i Theta0} b*(0)| / (|Q| |b(0)|)
};

using Spectrum = std::function<cplx(double)>;

/// Regularized "-" output for a smooth input spectrum b_-(Delta). Unlocked inputs fall back to
/// the exact transform, which diverges as Delta -> 0.
DetunedResponse regularized_detuned_response(const ModePair& mp, const PumpConfig& pump, const Spectrum& b_minus,
                                             double Delta, double step = 0.0, double lock_tol = 1e-9);

/// Exact "-" supermode transform about the oscillation state (singular at Delta = 0).
cplx detuned_response_exact(const ModePair& mp, const PumpConfig& pump, const Spectrum& b_minus, double Delta);

}  // namespace paramres
