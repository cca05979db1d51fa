#pragma once

// Plane-selective addressing: per-plane spectra in a field gradient and the
// false excitation of non-target planes versus interplane distance.

#include "planesel/core.hpp"
#include "planesel/fields.hpp"
#include "planesel/lineshape.hpp"

#include <ostream>
#include <vector>

namespace planesel {

struct AddressingScenario {
    ArrayGeometry geometry;
    FieldConfig field;
    double noise_g = 100.0e-6;        // FWHM of the shot-to-shot field noise
    double m_f = 1.5;
    double rabi_hz = 1.0e3;
    double spontaneous_hz = 14.6e-3;  // natural linewidth of the upper state
    TrapParams trap{28.0e3, 0.4, 0.2, 10, 50.0};
    int target_plane = 0;

    void validate() const;
    double noise_fwhm_hz() const;
};

/// Large-array defaults: 11 planes, 300 G/cm on a 500 G bias, centre plane targeted.
AddressingScenario default_scenario(int nx, int ny, double dz_um);

enum class ExcitationMethod {
    SteadyState,  // saturated steady-state lineshape, normalized to its resonant value
    PiPulse,      // coherent square pi pulse at the thermal-ground carrier Rabi frequency
};

/// Site-averaged response of one plane versus laser detuning from the target
/// plane's carrier, in units of the resonant single-site excitation.
SpectrumTrace plane_spectrum(const AddressingScenario& scenario, int plane,
                             const std::vector<double>& grid);

struct CrosstalkResult {
    std::vector<double> per_plane;  // site average, zero for the target plane
    double total = 0.0;             // sum of per_plane
    double worst_site_total = 0.0;  // sum over planes of the worst site
    double site_sum_total = 0.0;    // sum over every non-target site
};

CrosstalkResult crosstalk_error(const AddressingScenario& scenario,
                                ExcitationMethod method = ExcitationMethod::SteadyState);

struct SweepSpec {
    std::vector<double> dz_um;
    std::vector<double> noise_g;
    std::vector<std::pair<int, int>> sizes;  // (nx, ny)
};

struct SweepRow {
    double dz_um;
    double noise_g;
    int nx;
    int ny;
    int planes;
    double total;
};

/// Regenerates the cuboid of `base` at each (size, dz) and evaluates every noise level.
std::vector<SweepRow> distance_sweep(const AddressingScenario& base, const SweepSpec& spec,
                                     ExcitationMethod method = ExcitationMethod::SteadyState);

/// Largest dz in [dz_lo, dz_hi] at which the total error still reaches
/// `threshold`, refined by bisection; NaN when it never does.
double threshold_crossing(const AddressingScenario& base, double threshold, double dz_lo,
                          double dz_hi, double coarse_step);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace planesel
