#pragma once

namespace paramres {

/// Thread count for grid kernels: `requested` if positive, else the OpenMP default.
int resolve_threads(int requested);

/// Whether the library was built with OpenMP.
bool openmp_enabled();

}  // namespace paramres
