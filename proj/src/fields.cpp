#include "planesel/fields.hpp"

#include "planesel/csv.hpp"

#include <algorithm>
#include <cmath>

namespace planesel {

void FieldConfig::validate() const
{
    if (!(gradient_g_per_cm >= 0.0))
        throw ConfigError("field: gradient must be >= 0");
    if (!(zeeman_per_mf_hz_per_g > 0.0))
        throw ConfigError("field: Zeeman coefficient must be > 0");
}

int ArrayGeometry::plane_count() const
{
    if (plane_of.empty())
        return 0;
    return *std::max_element(plane_of.begin(), plane_of.end()) + 1;
}

std::vector<std::size_t> ArrayGeometry::sites_in_plane(int plane) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < plane_of.size(); ++i)
        if (plane_of[i] == plane)
            out.push_back(i);
    return out;
}

Vec3 ArrayGeometry::centroid() const
{
    Vec3 c;
    if (sites.empty())
        return c;
    for (const auto& s : sites) {
        c.x += s.x;
        c.y += s.y;
        c.z += s.z;
    }
    const double n = static_cast<double>(sites.size());
    return {c.x / n, c.y / n, c.z / n};
}

void ArrayGeometry::validate() const
{
    if (sites.empty())
        throw ConfigError("geometry: no sites");
    if (plane_of.size() != sites.size())
        throw ConfigError("geometry: every site needs exactly one plane");
    const int planes = plane_count();
    std::vector<double> lo(static_cast<std::size_t>(planes), INFINITY);
    std::vector<double> hi(static_cast<std::size_t>(planes), -INFINITY);
    for (std::size_t i = 0; i < sites.size(); ++i) {
        if (plane_of[i] < 0)
            throw ConfigError("geometry: negative plane index");
        auto p = static_cast<std::size_t>(plane_of[i]);
        lo[p] = std::min(lo[p], sites[i].z);
        hi[p] = std::max(hi[p], sites[i].z);
    }
    for (std::size_t p = 0; p < lo.size(); ++p) {
        if (lo[p] == INFINITY)
            throw ConfigError("geometry: plane " + std::to_string(p) + " has no sites");
        if (p > 0 && !(lo[p] > hi[p - 1]))
            throw ConfigError("geometry: planes are not ordered by z");
    }
}

ArrayGeometry make_cuboid(int nx, int ny, int planes, double dxy_um, double dz_um)
{
    if (nx < 1 || ny < 1 || planes < 1)
        throw ConfigError("geometry: cuboid dimensions must be >= 1");
    if (!(dxy_um > 0.0) || !(dz_um > 0.0))
        throw ConfigError("geometry: spacings must be > 0");
    ArrayGeometry g;
    g.dxy_um = dxy_um;
    g.dz_um = dz_um;
    const auto n = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
                   static_cast<std::size_t>(planes);
    g.sites.reserve(n);
    g.plane_of.reserve(n);
    for (int k = 0; k < planes; ++k)
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                g.sites.push_back({(i - 0.5 * (nx - 1)) * dxy_um, (j - 0.5 * (ny - 1)) * dxy_um,
                                   (k - 0.5 * (planes - 1)) * dz_um});
                g.plane_of.push_back(k);
            }
    return g;
}

ArrayGeometry read_geometry_csv(std::istream& is)
{
    const CsvTable t = read_csv(is);
    const auto cx = t.column("x_um");
    const auto cy = t.column("y_um");
    const auto cz = t.column("z_um");
    const auto cp = t.column("plane");
    t.column("site_id");
    ArrayGeometry g;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        g.sites.push_back({t.number(r, cx), t.number(r, cy), t.number(r, cz)});
        const double p = t.number(r, cp);
        if (p != std::floor(p))
            throw ConfigError("geometry: plane index must be an integer");
        g.plane_of.push_back(static_cast<int>(p));
    }
    g.validate();
    return g;
}

double field_magnitude(const Vec3& pos_um, const FieldConfig& cfg)
{
    const double b = cfg.gradient_g_per_cm * kCmPerUm;  // G/um
    const double dx = pos_um.x - cfg.array_offset_um.x;
    const double dy = pos_um.y - cfg.array_offset_um.y;
    const double dz = pos_um.z - cfg.array_offset_um.z;
    const double axial = b * dz + cfg.bias_g;
    return std::sqrt(0.25 * b * b * (dx * dx + dy * dy) + axial * axial);
}

double zeeman_shift(double field_g, double m_f, const FieldConfig& cfg)
{
    if (!(field_g >= 0.0))
        throw DomainError("zeeman_shift: field magnitude must be >= 0");
    return m_f * cfg.zeeman_per_mf_hz_per_g * field_g;
}

double plane_sensitivity(double gradient_g_per_cm, double m_f, const FieldConfig& cfg)
{
    if (!(gradient_g_per_cm >= 0.0))
        throw DomainError("plane_sensitivity: gradient must be >= 0");
    return m_f * cfg.zeeman_per_mf_hz_per_g * gradient_g_per_cm * kCmPerUm;
}

std::vector<double> site_detuning_map(const ArrayGeometry& geom, const FieldConfig& cfg,
                                      double m_f)
{
    geom.validate();
    cfg.validate();
    const double ref = zeeman_shift(field_magnitude(geom.centroid(), cfg), m_f, cfg);
    std::vector<double> out;
    out.reserve(geom.sites.size());
    for (const auto& s : geom.sites)
        out.push_back(zeeman_shift(field_magnitude(s, cfg), m_f, cfg) - ref);
    return out;
}

double inhomogeneity_fwhm(const std::vector<double>& shifts_hz)
{
    if (shifts_hz.size() < 2)
        throw DegenerateInputError("inhomogeneity_fwhm: need at least two sites");
    double mean = 0.0;
    for (double v : shifts_hz)
        mean += v;
    mean /= static_cast<double>(shifts_hz.size());
    double ss = 0.0;
    for (double v : shifts_hz)
        ss += (v - mean) * (v - mean);
    return sigma_to_fwhm(std::sqrt(ss / static_cast<double>(shifts_hz.size())));
}

double inhomogeneity_fwhm(const std::vector<double>& shifts_hz, const ArrayGeometry& geom,
                          int plane)
{
    if (shifts_hz.size() != geom.sites.size())
        throw ConfigError("inhomogeneity_fwhm: map does not match geometry");
    std::vector<double> in_plane;
    for (auto i : geom.sites_in_plane(plane))
        in_plane.push_back(shifts_hz[i]);
    return inhomogeneity_fwhm(in_plane);
}

double ripple_broadening(double relative_sd, double fluctuating_field_g, double m_f,
                         const FieldConfig& cfg)
{
    if (!(relative_sd >= 0.0) || !(fluctuating_field_g >= 0.0))
        throw DomainError("ripple_broadening: inputs must be >= 0");
    return kFwhmPerSigma * relative_sd * fluctuating_field_g * m_f * cfg.zeeman_per_mf_hz_per_g;
}

}  // namespace planesel
