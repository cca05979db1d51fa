#pragma once

// Steady-state saturated sideband spectra, half-maximum width extraction,
// Gaussian broadening and the three-peak synthetic spectrum.

#include "planesel/core.hpp"

#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace planesel {

struct SpectrumTrace {
    std::vector<double> detunings_hz;  // strictly increasing
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    void validate() const;
};

struct LineModel {
    double linewidth_hz = 7600.0 / kTwoPi;  // effective excited-state linewidth
    double rabi_hz = 10.0e3;
    TrapParams trap;

    void validate() const;
};

/// Half-maximum width could not be assigned uniquely.
class AmbiguityError : public std::runtime_error {
public:
    AmbiguityError(const std::string& what, std::vector<double> candidates)
        : std::runtime_error(what), candidate_widths(std::move(candidates))
    {
    }
    std::vector<double> candidate_widths;
};

/// Uniform grid from -half_span to +half_span inclusive.
std::vector<double> detuning_grid(double half_span_hz = 250.0e3, double pitch_hz = 100.0);

/// One saturated Lorentzian of the thermal double sum.
struct LorentzTerm {
    double weight;      // thermal weight of the initial level
    double center_hz;   // (n_e - n_g) * trap frequency
    double saturation;  // (Omega_{ng,ne} / Gamma)^2
};

/// All (n_g, n_e) terms over 0..N'; restricted to n_e - n_g == order when given.
std::vector<LorentzTerm> steady_state_terms(const LineModel& model,
                                            std::optional<int> sideband_order = std::nullopt);

double evaluate_terms(const std::vector<LorentzTerm>& terms, double linewidth_hz,
                      double detuning_hz);

SpectrumTrace steady_state_spectrum(const LineModel& model, const std::vector<double>& grid,
                                    std::optional<int> sideband_order = std::nullopt);

/// Right minus left linearly interpolated half-maximum crossing.
double fwhm(const SpectrumTrace& trace);

/// Convolution with a unit-sum Gaussian kernel truncated at +-5 sigma.
SpectrumTrace convolve_gaussian(const SpectrumTrace& trace, double fwhm_hz);

/// Thermal mean of (Omega_{n,n+1}/Omega_{n,n})^2 and (Omega_{n,n-1}/Omega_{n,n})^2,
/// averaged over the two sidebands.
double thermal_sideband_height(const TrapParams& trap);

/// Carrier Lorentzian plus two sidebands at +-trap frequency with relative
/// height `relative_height`; the maximum is scaled to `peak_norm`.
SpectrumTrace synth_triple_lorentzian(double carrier_fwhm_hz, double sideband_fwhm_hz,
                                      double trap_hz, double relative_height, double peak_norm,
                                      const std::vector<double>& grid);

void write_trace_csv(std::ostream& os, const SpectrumTrace& trace);

}  // namespace planesel
