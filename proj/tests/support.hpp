#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "paramres/types.hpp"

namespace testing {

using paramres::cplx;
using paramres::I;

inline std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
    return v;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// Plain bisection for a sign change on [a, b].
inline double bisect(const std::function<double(double)>& f, double a, double b, int iters = 200)
{
    double fa = f(a);
    for (int i = 0; i < iters; ++i) {
        double m = 0.5 * (a + b), fm = f(m);
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

/// Largest growth rate of the empty cavity: i d/dt (a1, a2*) = M (a1, a2*).
inline double empty_growth(double g1, double g2, double delta, double eps)
{
    Eigen::Matrix2cd M;
    M << -delta - I * g1, -eps, eps, delta - I * g2;
    Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(M);
    return std::max(es.eigenvalues()(0).imag(), es.eigenvalues()(1).imag());
}

/// Threshold from the eigenvalue crossing of the linearized dynamics.
inline double threshold_oracle(double g1, double g2, double delta)
{
    double hi = 1.0;
    while (empty_growth(g1, g2, delta, hi) < 0) hi *= 2;
    return bisect([&](double e) { return empty_growth(g1, g2, delta, e); }, 0.0, hi);
}

/// Static equations with drive, written out independently of the library.
inline std::pair<cplx, cplx> static_residual(const paramres::ModePair& mp, double eps, double delta, double Ds,
                                             cplx a1, cplx a2, cplx b1 = 0.0, cplx b2 = 0.0)
{
    double n1 = std::norm(a1), n2 = std::norm(a2);
    double z1 = delta + mp.alpha1 * n1 + 2 * mp.alpha * n2;
    double z2 = delta + mp.alpha2 * n2 + 2 * mp.alpha * n1;
    cplx r1 = (Ds + z1 + I * mp.gamma1) * a1 + eps * std::conj(a2) - std::sqrt(2 * mp.gamma10) * b1;
    cplx r2 = (-Ds + z2 - I * mp.gamma2) * std::conj(a2) + eps * a1 - std::sqrt(2 * mp.gamma20) * std::conj(b2);
    return {r1, r2};
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(unsigned long seed) : gen(seed) {}
    double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
};

}  // namespace testing
