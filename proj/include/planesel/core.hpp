#pragma once

// Shared units, error types and thermal motional statistics.
//
// Unit conventions used across the library:
//   frequencies  ordinary Hz (never angular) unless a name says "angular"
//   field        gauss, gradient gauss/cm
//   length       micrometres
//   trap depth   microkelvin (millikelvin where a name says so)
//   time         seconds
// The single factor of 2*pi is applied when a Hamiltonian is assembled.

#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace planesel {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// 2*sqrt(2 ln 2): ratio of a Gaussian's FWHM to its standard deviation.
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

inline constexpr double kCmPerUm = 1.0e-4;

/// Input outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid configuration or parameters (bad step size, unknown key, ...).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure detected at run time (norm drift, non-unitary step).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Degenerate input that makes an estimator undefined.
class DegenerateInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrapParams {
    double trap_frequency_hz = 28.0e3;
    double lamb_dicke = 0.4;
    double mean_phonon = 0.59;
    int fock_cutoff = 10;  // highest Fock level N'; the basis is 0..N'
    double depth_uk = 50.0;

    int fock_dim() const { return fock_cutoff + 1; }
    void validate() const;
};

/// Level occupation above which the consumer warns about Fock truncation.
inline constexpr double kTruncationWarnLevel = 1.0e-3;

struct ThermalWeights {
    std::vector<double> weights;  // over Fock levels 0..N'

    std::size_t size() const { return weights.size(); }
    double operator[](std::size_t n) const { return weights[n]; }
    double mean_phonon() const;
    /// True when the top level carries more than kTruncationWarnLevel.
    bool truncation_warning() const;
};

/// Truncated, renormalized geometric (Boltzmann) distribution with ratio
/// nbar/(nbar+1). Throws DomainError for nbar < 0 or cutoff < 1.
ThermalWeights thermal_weights(double mean_phonon, int fock_cutoff);

double fwhm_to_sigma(double fwhm);
double sigma_to_fwhm(double sigma);

/// Converts a decay rate in 1/s to the equivalent ordinary-Hz linewidth.
inline double rate_to_hz(double rate_per_s) { return rate_per_s / kTwoPi; }

}  // namespace planesel
