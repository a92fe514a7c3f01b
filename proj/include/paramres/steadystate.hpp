#pragma once

#include <optional>
#include <string>
#include <vector>

#include "paramres/types.hpp"

namespace paramres {

struct Threshold {
    double epsilon_th = 0.0;
    double delta_crit = 0.0;
};

/// Pump strength at which the empty cavity loses stability for pump detuning `delta`.
Threshold instability_threshold(const ModePair& mp, double delta);

/// Half-width of the oscillation region in pump detuning; empty below the minimal threshold.
std::optional<double> detuning_threshold(const ModePair& mp, double epsilon);

/// Free oscillation state (moduli, phase sum, frequency shift) on the requested branch.
OscillationState oscillation_state(const ModePair& mp, const PumpConfig& pump, Branch branch);

/// Cavity amplitudes of an oscillation state for phase difference `psi`.
CavityState to_cavity_state(const ModePair& mp, const PumpConfig& pump, const OscillationState& osc,
                            double psi = 0.0);

/// Effective detunings of the amplification (or conversion) frame.
std::pair<double, double> effective_detunings(const ModePair& mp, const PumpConfig& pump, cplx a1, cplx a2);

/// Drive amplitudes (B1, B2) folded onto a common frame detuning.
struct FrameDrive {
    cplx b1{0.0, 0.0}, b2{0.0, 0.0};
    double delta_s = 0.0;
};

/// Checks that all tones share one frame detuning (mode-2 tones sit at the mirrored detuning).
FrameDrive fold_drives(const std::vector<DriveTone>& drives, std::optional<double> delta_s = std::nullopt);

/// Max-norm residual of the static equations at frame detuning `delta_s`.
double steady_state_residual(const ModePair& mp, const PumpConfig& pump, const FrameDrive& drive, cplx a1, cplx a2);

struct StabilityReport {
    Stability label = Stability::stable;
    std::array<cplx, 4> eigenvalues{};  ///< fluctuation frequencies; Im > 0 grows
    double max_growth = 0.0;
    int zero_modes = 0;
};

/// Eigenvalues of the linearized fluctuation dynamics about `state`.
StabilityReport stability_of_state(const ModePair& mp, const PumpConfig& pump, const CavityState& state);

struct SolveOptions {
    int grid_cells = 48;       ///< intensity-plane scan resolution per axis (0 disables)
    int ring_seeds = 8;        ///< phase samples on the oscillation ring
    int max_iterations = 100;
    double tolerance = 1e-13;  ///< relative residual
    std::vector<std::array<cplx, 2>> extra_seeds;
    /// Allow a driven above-threshold solve at a frame other than the oscillation frequency.
    bool allow_off_resonance = false;
};

/// All steady states for the given drives, sorted by |A1|^2 descending.
std::vector<CavityState> solve_steady_state(const ModePair& mp, const PumpConfig& pump,
                                            const std::vector<DriveTone>& drives, const SolveOptions& opt = {});

/// Same as above with the drives already folded onto the frame.
std::vector<CavityState> solve_steady_state(const ModePair& mp, const PumpConfig& pump, const FrameDrive& drive,
                                            const SolveOptions& opt = {});

/// Output amplitudes C_n = B_n - i sqrt(2 Gamma_n0) A_n.
std::pair<cplx, cplx> output_fields(const ModePair& mp, const FrameDrive& drive, const CavityState& s);

enum class SweepAxis { delta, epsilon, Delta };
enum class FrameMode { fixed, oscillator };

SweepAxis parse_axis(const std::string& s);
std::string to_string(SweepAxis a);

struct BranchRow {
    double axis_value = 0.0;
    int branch_id = 0;
    CavityState state;
    double out1 = 0.0, out2 = 0.0;  ///< |C1|^2, |C2|^2
};

struct FoldEvent {
    double axis_value = 0.0;
    int branch_id = 0;
    bool start = false;  ///< branch appears (true) or ends (false) inside the grid
};

struct BranchTable {
    std::vector<BranchRow> rows;
    std::vector<FoldEvent> folds;
    std::vector<int> counts;                 ///< number of states per grid point
    std::vector<double> parity_violations;   ///< grid points with an even state count
};

struct SweepRequest {
    ModePair mode_pair;
    PumpConfig pump;
    std::vector<DriveTone> drives;
    SweepAxis axis = SweepAxis::delta;
    std::vector<double> grid;
    /// `oscillator`: put the frame on the oscillation frequency where an oscillation
    /// exists and on its threshold value elsewhere.
    FrameMode frame = FrameMode::fixed;
    SolveOptions options;
};

/// Per-point solve on the grid (independent), then serial repair and branch linking.
BranchTable sweep_branches(const SweepRequest& req, int threads = 0);

/// Reference with the per-point solves done in order on one thread.
BranchTable sweep_branches_serial(const SweepRequest& req);

/// Drive set and pump for grid point `value` of a sweep.
void apply_axis(const SweepRequest& req, double value, PumpConfig& pump, FrameDrive& drive);

}  // namespace paramres
