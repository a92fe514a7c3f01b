#include "paramres/types.hpp"

#include <cmath>

namespace paramres {

std::string to_string(Stability s)
{
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
    }
    return "?";
}

std::string to_string(Branch b) { return b == Branch::stable ? "stable" : "unstable"; }

ModePair ModePair::lossless(double g1, double g2, double a1, double a2)
{
    return lossy(g1, g2, g1, g2, a1, a2);
}

ModePair ModePair::lossy(double g1, double g2, double g10, double g20, double a1, double a2)
{
    ModePair mp;
    mp.gamma1 = g1;
    mp.gamma2 = g2;
    mp.gamma10 = g10;
    mp.gamma20 = g20;
    mp.alpha1 = a1;
    mp.alpha2 = a2;
    mp.alpha = std::sqrt(a1 * a2);
    return mp;
}

bool ModePair::is_lossless(double rtol) const
{
    return std::abs(gamma1 - gamma10) <= rtol * gamma1 && std::abs(gamma2 - gamma20) <= rtol * gamma2;
}

bool ModePair::is_balanced(double rtol) const
{
    double g = std::max(gamma1, gamma2);
    double a = std::max({alpha1, alpha2, 1e-300});
    return std::abs(gamma1 - gamma2) <= rtol * g && std::abs(alpha1 - alpha2) <= rtol * a;
}

double ModePair::rate_scale() const { return std::sqrt(gamma1 * gamma2); }

void validate(const ModePair& mp)
{
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(mp.gamma1) || !finite(mp.gamma2) || !finite(mp.gamma10) || !finite(mp.gamma20) ||
        !finite(mp.alpha1) || !finite(mp.alpha2) || !finite(mp.alpha))
        throw DomainError("mode pair: non-finite coefficient");
    if (!(mp.gamma10 > 0 && mp.gamma20 > 0))
        throw DomainError("mode pair: external coupling rates must be positive");
    // allow a few ulps so that g10 = g20 derived through different arithmetic still passes
    if (mp.gamma10 > mp.gamma1 * (1 + 1e-14) || mp.gamma20 > mp.gamma2 * (1 + 1e-14))
        throw DomainError("mode pair: external coupling exceeds total damping");
    if (mp.alpha1 < 0 || mp.alpha2 < 0)
        throw DomainError("mode pair: negative self-Kerr coefficient");
    double ref = std::sqrt(mp.alpha1 * mp.alpha2);
    if (std::abs(mp.alpha - ref) > 1e-14 * std::max(ref, 1e-300) && !(ref == 0 && mp.alpha == 0))
        throw DomainError("mode pair: cross-Kerr must equal sqrt(alpha1*alpha2)");
    if (mp.omega1 && mp.omega2 && !(*mp.omega2 > *mp.omega1))
        throw DomainError("mode pair: omega2 must exceed omega1");
}

}  // namespace paramres
