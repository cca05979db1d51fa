#include "planesel/core.hpp"

#include <cmath>

namespace planesel {

void TrapParams::validate() const
{
    if (!(lamb_dicke >= 0.0))
        throw ConfigError("trap: Lamb-Dicke parameter must be >= 0");
    if (fock_cutoff < 1)
        throw ConfigError("trap: Fock cutoff must be >= 1");
    if (!(mean_phonon >= 0.0))
        throw ConfigError("trap: mean phonon number must be >= 0");
    if (!(trap_frequency_hz >= 0.0))
        throw ConfigError("trap: trap frequency must be >= 0");
}

double ThermalWeights::mean_phonon() const
{
    double m = 0.0;
    for (std::size_t n = 0; n < weights.size(); ++n)
        m += static_cast<double>(n) * weights[n];
    return m;
}

bool ThermalWeights::truncation_warning() const
{
    return !weights.empty() && weights.back() > kTruncationWarnLevel;
}

ThermalWeights thermal_weights(double mean_phonon, int fock_cutoff)
{
    if (!(mean_phonon >= 0.0))
        throw DomainError("thermal_weights: mean phonon number must be >= 0");
    if (fock_cutoff < 1)
        throw DomainError("thermal_weights: Fock cutoff must be >= 1");

    ThermalWeights out;
    out.weights.assign(static_cast<std::size_t>(fock_cutoff) + 1, 0.0);
    if (mean_phonon == 0.0) {
        out.weights[0] = 1.0;
        return out;
    }
    const double ratio = mean_phonon / (mean_phonon + 1.0);
    double p = 1.0;
    double total = 0.0;
    for (auto& w : out.weights) {
        w = p;
        total += p;
        p *= ratio;
    }
    for (auto& w : out.weights)
        w /= total;
    return out;
}

double fwhm_to_sigma(double fwhm)
{
    if (!(fwhm >= 0.0))
        throw DomainError("fwhm_to_sigma: width must be >= 0");
    return fwhm / kFwhmPerSigma;
}

double sigma_to_fwhm(double sigma)
{
    if (!(sigma >= 0.0))
        throw DomainError("sigma_to_fwhm: width must be >= 0");
    return sigma * kFwhmPerSigma;
}

}  // namespace planesel
