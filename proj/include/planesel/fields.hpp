#pragma once

// Quadrupole-plus-bias field geometry, Zeeman shifts and per-site detuning
// maps for tweezer arrays.

#include "planesel/core.hpp"

#include <istream>
#include <vector>

namespace planesel {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

struct FieldConfig {
    double bias_g = 0.9;
    double gradient_g_per_cm = 20.5;
    Vec3 array_offset_um;                 // array centre relative to the field centre
    double zeeman_per_mf_hz_per_g = 2.5e6;

    void validate() const;
};

struct ArrayGeometry {
    std::vector<Vec3> sites;   // micrometres
    std::vector<int> plane_of; // plane index per site, planes ordered by z
    double dxy_um = 0.0;
    double dz_um = 0.0;

    int plane_count() const;
    std::vector<std::size_t> sites_in_plane(int plane) const;
    Vec3 centroid() const;
    void validate() const;
};

/// nx * ny sites per plane, `planes` planes, centred on the origin.
ArrayGeometry make_cuboid(int nx, int ny, int planes, double dxy_um, double dz_um);

/// Columns: site_id, x_um, y_um, z_um, plane.
ArrayGeometry read_geometry_csv(std::istream& is);

/// |B| in gauss at a position in micrometres.
double field_magnitude(const Vec3& pos_um, const FieldConfig& cfg);

/// Linear Zeeman shift in Hz.
double zeeman_shift(double field_g, double m_f, const FieldConfig& cfg);

/// Axial detuning slope in Hz per micrometre.
double plane_sensitivity(double gradient_g_per_cm, double m_f, const FieldConfig& cfg);

/// Per-site Zeeman shift relative to the shift at the array centroid.
std::vector<double> site_detuning_map(const ArrayGeometry& geom, const FieldConfig& cfg,
                                      double m_f);

/// FWHM-equivalent (2 sqrt(2 ln 2) sigma) of a set of shifts; population sigma.
double inhomogeneity_fwhm(const std::vector<double>& shifts_hz);

/// Same, restricted to the sites of one plane.
double inhomogeneity_fwhm(const std::vector<double>& shifts_hz, const ArrayGeometry& geom,
                          int plane);

/// FWHM broadening from a relative field fluctuation of a given field magnitude.
double ripple_broadening(double relative_sd, double fluctuating_field_g, double m_f,
                         const FieldConfig& cfg);

}  // namespace planesel
