#pragma once

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace paramres {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

inline constexpr cplx I{0.0, 1.0};
inline constexpr double pi = 3.14159265358979323846;

/// Invalid or inconsistent input (maps to CLI exit code 2).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A solver failed to converge or hit a singular system (CLI exit code 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Response matrix evaluated at (or numerically on top of) a pole.
struct SingularResponse : NumericalError {
    using NumericalError::NumericalError;
};

/// Requested quantity is outside the validity window of the model.
struct OutOfRegime : DomainError {
    using DomainError::DomainError;
};

enum class Regime { amplification, conversion };
enum class Stability { stable, unstable, marginal };
enum class Branch { stable, unstable };

std::string to_string(Stability s);
std::string to_string(Branch b);

/// Damping, coupling and Kerr coefficients of the resonant mode pair.
/// Rates in the units chosen by the caller (rad/s, or normalized).
struct ModePair {
    double gamma1 = 1.0, gamma2 = 1.0;    ///< total damping
    double gamma10 = 1.0, gamma20 = 1.0;  ///< external coupling
    double alpha1 = 0.0, alpha2 = 0.0;    ///< self-Kerr
    double alpha = 0.0;                   ///< cross-Kerr, sqrt(alpha1*alpha2)
    std::optional<double> omega1, omega2;
    std::optional<std::array<double, 2>> kd;  ///< wavenumbers k_n d when derived from a device

    /// Lossless pair with cross-Kerr fixed by the geometric mean.
    static ModePair lossless(double g1, double g2, double a1, double a2);
    static ModePair lossy(double g1, double g2, double g10, double g20, double a1, double a2);

    bool is_lossless(double rtol = 1e-14) const;
    bool is_balanced(double rtol = 1e-12) const;
    double rate_scale() const;  ///< sqrt(gamma1*gamma2)
};

/// Throws DomainError if the invariants of ModePair are violated.
void validate(const ModePair& mp);

struct PumpConfig {
    double epsilon = 0.0;
    double delta = 0.0;
    Regime regime = Regime::amplification;
};

/// Coherent input tone. For mode 1 `detuning` is the signal detuning; a mode-2
/// tone in the amplification frame sits at the mirrored detuning.
struct DriveTone {
    int mode = 1;
    cplx amplitude{0.0, 0.0};
    double detuning = 0.0;

    double phase() const { return std::arg(amplitude); }
    double power() const { return std::norm(amplitude); }
};

struct CavityState {
    cplx a1{0.0, 0.0}, a2{0.0, 0.0};
    double delta_s = 0.0;  ///< frame detuning of the strong field
    double zeta1 = 0.0, zeta2 = 0.0;
    Stability stability = Stability::stable;
    double residual = 0.0;
    bool free_phase = false;  ///< representative of the undriven oscillation ring
    bool driven = false;

    double theta_sum() const { return std::arg(a1) + std::arg(a2); }
    double psi() const { return std::arg(a1) - std::arg(a2); }
};

struct OscillationState {
    double r1 = 0.0, r2 = 0.0;
    double theta = 0.0;   ///< phase sum
    double delta0 = 0.0;  ///< oscillation frequency shift
    Branch branch = Branch::stable;
};

}  // namespace paramres
