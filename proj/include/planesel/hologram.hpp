#pragma once

// Phase-mask synthesis for 3D tweezer arrays: grating-plus-Fresnel-lens
// elementary phases, random-phase superposition, scalar focal-plane
// propagation and closed-loop spot homogenization.

#include "planesel/core.hpp"
#include "planesel/fields.hpp"

#include <complex>
#include <cstdint>
#include <ostream>
#include <vector>

namespace planesel {

struct OpticsParams {
    double magnification = 5.0 / 3.0;
    double focal_length_mm = 20.0;
    double wavelength_nm = 532.0;

    void validate() const;
};

/// Row-major phase mask; pixel (row, col) sits at
/// x = (col - (W-1)/2) * pitch, y = (row - (H-1)/2) * pitch.
struct SlmGrid {
    double pitch_um = 12.5;
    int width = 1024;
    int height = 1024;
    std::vector<double> phase;

    static SlmGrid blank(int width, int height, double pitch_um);
    double x_um(int col) const { return (col - 0.5 * (width - 1)) * pitch_um; }
    double y_um(int row) const { return (row - 0.5 * (height - 1)) * pitch_um; }
    double at(int row, int col) const { return phase[static_cast<std::size_t>(row) * width + col]; }
    void validate() const;
};

/// Unwrapped phase, same layout as SlmGrid.
struct PhaseMap {
    int width = 0;
    int height = 0;
    std::vector<double> values;
};

struct SiteWeights {
    std::vector<std::complex<double>> w;

    static SiteWeights uniform(std::size_t n);
    void validate() const;
};

/// Focal-plane sampling interval lambda f / (M * pitch * W), micrometres.
double focal_pixel_um(const SlmGrid& grid, const OpticsParams& optics);

PhaseMap elementary_phase(const Vec3& site_um, const SlmGrid& grid, const OpticsParams& optics);

/// Wraps into [0, 2 pi).
SlmGrid wrap_phase(const PhaseMap& map, double pitch_um);

enum class PhaseInit { Random, Zero };

/// arg(sum_m w_m exp(i(phase_m + phi_m))) with phi_m drawn from `seed`.
SlmGrid superpose(const std::vector<Vec3>& sites, const SiteWeights& weights,
                  const SlmGrid& grid, const OpticsParams& optics, std::uint64_t seed,
                  PhaseInit init = PhaseInit::Random);

struct FieldGrid {
    int width = 0;
    int height = 0;
    double pixel_um = 0.0;  // focal-plane sampling
    std::vector<std::complex<double>> values;
};

struct IntensityGrid {
    int width = 0;
    int height = 0;
    double pixel_um = 0.0;
    std::vector<double> values;

    double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
    /// Focal-plane coordinates of a pixel; the zero-frequency bin is (H/2, W/2).
    double x_um(int col) const { return (col - width / 2) * pixel_um; }
    double y_um(int row) const { return (row - height / 2) * pixel_um; }
};

/// Unitary focal-plane field of a uniformly illuminated mask, with a
/// thin-lens defocus of z_um applied before the transform.
FieldGrid propagate_field(const SlmGrid& mask, double z_um, const OpticsParams& optics);

/// |field|^2 normalized to unit total power.
IntensityGrid propagate(const SlmGrid& mask, double z_um, const OpticsParams& optics);

struct SpotReport {
    int found = 0;
    std::vector<bool> matched;
    std::vector<Vec3> positions;  // detected (x, y) per expected site; z copied
    std::vector<double> peaks;    // matched peak intensity, 0 when missing
    std::vector<std::size_t> missing;
    double uniformity = 0.0;      // (max - min) / (max + min) over matched peaks
};

/// Local maxima above a tenth of the global maximum, matched to expected
/// lateral positions within `tolerance_um`.
SpotReport verify_spots(const IntensityGrid& intensity, const std::vector<Vec3>& expected,
                        double tolerance_um);

/// w' = w (<I>/I)^gamma, renormalized to unit total power.
SiteWeights homogenize(const SiteWeights& weights, const std::vector<double>& intensities,
                       double gamma = 0.5);

struct HomogenizeLoop {
    SiteWeights weights;
    SlmGrid mask;
    std::vector<double> uniformity;  // before each update, then after the last
};

/// Alternates synthesis, propagation to each site plane, and homogenize().
/// Spot power is the 3x3-pixel sum at each site; between rounds each weight
/// takes the phase of its site's focal field.
HomogenizeLoop homogenize_loop(const std::vector<Vec3>& sites, const SlmGrid& grid,
                               const OpticsParams& optics, std::uint64_t seed, int iterations,
                               double gamma = 0.5, double tolerance_um = 0.0);

/// Binary P5, maxval 65535, big-endian; phase 0..2pi maps to 0..65535.
void write_phase_pgm(std::ostream& os, const SlmGrid& mask);
/// Binary P5 scaled so the maximum maps to 65535.
void write_intensity_pgm(std::ostream& os, const IntensityGrid& intensity);
/// Columns: row, col, phase_rad.
void write_phase_csv(std::ostream& os, const SlmGrid& mask);

}  // namespace planesel
