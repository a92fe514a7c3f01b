// Serial reference vs OpenMP kernels on figure-sized grids.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "paramres/conversion.hpp"
#include "paramres/kernels.hpp"
#include "paramres/parallel.hpp"

using namespace paramres;

namespace {

std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

double best_of(int reps, const std::function<void()>& f)
{
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void report(const char* name, double serial, double parallel, int threads)
{
    std::printf("%-14s serial %8.4f s   parallel(%d) %8.4f s   speedup %5.2f\n", name, serial, threads, parallel,
                serial / parallel);
}

}  // namespace

int main(int argc, char** argv)
{
    int threads = argc > 1 ? std::atoi(argv[1]) : 0;
    int reps = argc > 2 ? std::atoi(argv[2]) : 3;
    int used = resolve_threads(threads);
    std::printf("openmp %s, threads %d\n", openmp_enabled() ? "on" : "off", used);

    double s = std::sqrt(1.8 * 4.0);
    auto lossy = ModePair::lossy(1.8 / s, 4.0 / s, 1.0 / s, 3.0 / s, std::sqrt(3.0) / 100 / s, 3 * std::sqrt(3.0) / 100 / s);

    GainMapRequest g;
    g.mode_pair = lossy;
    g.pump = {2.0, 0.0, Regime::amplification};
    g.axis = SweepAxis::delta;
    g.axis_grid = linspace(-3, 4, 120);
    g.delta1_grid = linspace(-5, 6, 300);
    report("gain_map", best_of(reps, [&] { gain_map_serial(g); }), best_of(reps, [&] { gain_map(g, threads); }), used);

    ConversionSweep c;
    c.mode_pair = lossy;
    c.pump = {2.0, 0.0, Regime::conversion};
    c.b1 = 0.05;
    c.delta_grid = linspace(-4, 4, 80);
    c.delta1_grid = linspace(-10, 10, 400);
    report("conversion", best_of(reps, [&] { conversion_sweep_serial(c); }),
           best_of(reps, [&] { conversion_sweep(c, threads); }), used);

    SqueezeMapRequest q;
    q.mode_pair = ModePair::lossless(1.0, 1.0, 0.01, 0.01);
    q.pump = {0.95, 0.0, Regime::amplification};
    q.theta_grid = linspace(0, 3.1, 100);
    q.Delta_grid = linspace(-3, 3, 200);
    report("squeeze_map", best_of(reps, [&] { squeeze_map_serial(q); }), best_of(reps, [&] { squeeze_map(q, threads); }),
           used);
    return 0;
}
