#pragma once

#include <vector>

#include "paramres/types.hpp"

namespace paramres {

struct ConversionOptions {
    int max_iterations = 200;
    double tolerance = 1e-12;    ///< relative step on the amplitudes
    double quantum_tol = 1e-2;   ///< largest Kerr shift, relative to min(Gamma), still called linear
};

struct ConversionScattering {
    Mat2 V;
    cplx det;
    double unitarity_defect = 0.0;  ///< max |V V^+ - I|
    CavityState state;              ///< self-consistent field; delta_s holds Delta
    bool quantum_valid = false;     ///< Kerr shifts negligible, linear map applies to operators
    int iterations = 0;
};

/// Scattering matrix (C1, C2) = V (B1, B2) for inputs at common detuning `Delta`, with the
/// Kerr shifts of the self-consistent intracavity field.
ConversionScattering conversion_scattering(const ModePair& mp, const PumpConfig& pump, cplx b1, cplx b2,
                                           double Delta, const ConversionOptions& opt = {});

/// Same, with the drives given as tones (all must share one detuning).
ConversionScattering conversion_scattering(const ModePair& mp, const PumpConfig& pump,
                                           const std::vector<DriveTone>& drives, const ConversionOptions& opt = {});

/// Scattering matrix for fixed effective detunings.
Mat2 conversion_matrix(const ModePair& mp, double epsilon, double zeta1, double zeta2, double Delta, cplx* det = nullptr);

struct FullConversion {
    double epsilon = 0.0;
    double Delta = 0.0;
};

/// Pump strength and detuning of zero reflection in the linear regime (lossless pairs).
FullConversion full_conversion_point(const ModePair& mp, double delta);

struct ConversionRow {
    double delta = 0.0, delta1 = 0.0, delta2 = 0.0;
    double reflection = 0.0;  ///< |V11|^2
    double conversion = 0.0;  ///< |V12|^2
    double unitarity_defect = 0.0;
    bool max_conversion = false;
};

struct ConversionPeak {
    double delta = 0.0;
    double delta1 = 0.0;  ///< parabola-refined position
    double value = 0.0;
};

struct ConversionMap {
    std::vector<ConversionRow> rows;  ///< delta-major order
    std::vector<ConversionPeak> peaks;
};

struct ConversionSweep {
    ModePair mode_pair;
    PumpConfig pump;
    cplx b1{0.0, 0.0};
    std::vector<double> delta_grid, delta1_grid;
    ConversionOptions options;
};

/// Reflection and conversion maps over (delta, delta1) with local conversion maxima marked.
ConversionMap conversion_sweep(const ConversionSweep& req, int threads = 0);

/// Reference with the grid evaluated in order on one thread.
ConversionMap conversion_sweep_serial(const ConversionSweep& req);

}  // namespace paramres
