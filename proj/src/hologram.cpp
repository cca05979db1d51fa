#include "planesel/hologram.hpp"

#include "planesel/csv.hpp"
#include "planesel/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace planesel {

namespace {

using cplx = std::complex<double>;

double wavelength_um(const OpticsParams& o) { return o.wavelength_nm * 1e-3; }
double focal_um(const OpticsParams& o) { return o.focal_length_mm * 1e3; }

double wrap(double p)
{
    double w = std::fmod(p, kTwoPi);
    if (w < 0.0)
        w += kTwoPi;
    if (w >= kTwoPi)
        w = 0.0;
    return w;
}

// FFTW planning is not thread safe.
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

void put_u16(std::ostream& os, std::uint16_t v)
{
    os.put(static_cast<char>(v >> 8));
    os.put(static_cast<char>(v & 0xFF));
}

}  // namespace

void OpticsParams::validate() const
{
    if (!(magnification > 0.0) || !(focal_length_mm > 0.0) || !(wavelength_nm > 0.0))
        throw ConfigError("optics: magnification, focal length and wavelength must be > 0");
}

SlmGrid SlmGrid::blank(int width, int height, double pitch_um)
{
    SlmGrid g;
    g.width = width;
    g.height = height;
    g.pitch_um = pitch_um;
    g.phase.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0);
    g.validate();
    return g;
}

void SlmGrid::validate() const
{
    if (width < 1 || height < 1 || !(pitch_um > 0.0))
        throw ConfigError("slm: dimensions and pitch must be positive");
    if (phase.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw ConfigError("slm: phase array does not match dimensions");
}

SiteWeights SiteWeights::uniform(std::size_t n)
{
    SiteWeights s;
    s.w.assign(n, cplx(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
    return s;
}

void SiteWeights::validate() const
{
    for (const auto& v : w)
        if (std::abs(v) > 0.0)
            return;
    throw DomainError("site weights: at least one weight must be nonzero");
}

double focal_pixel_um(const SlmGrid& grid, const OpticsParams& optics)
{
    return wavelength_um(optics) * focal_um(optics) /
           (optics.magnification * grid.pitch_um * grid.width);
}

PhaseMap elementary_phase(const Vec3& site_um, const SlmGrid& grid, const OpticsParams& optics)
{
    optics.validate();
    const double lf = wavelength_um(optics) * focal_um(optics);
    const double m = optics.magnification;
    const double grating = kTwoPi * m / lf;
    const double lens = std::numbers::pi * m * m * site_um.z / (lf * focal_um(optics));
    PhaseMap out;
    out.width = grid.width;
    out.height = grid.height;
    out.values.resize(static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height));
    for (int r = 0; r < grid.height; ++r) {
        const double ys = grid.y_um(r);
        for (int c = 0; c < grid.width; ++c) {
            const double xs = grid.x_um(c);
            out.values[static_cast<std::size_t>(r) * grid.width + c] =
                grating * (site_um.x * xs + site_um.y * ys) + lens * (xs * xs + ys * ys);
        }
    }
    return out;
}

SlmGrid wrap_phase(const PhaseMap& map, double pitch_um)
{
    SlmGrid g;
    g.width = map.width;
    g.height = map.height;
    g.pitch_um = pitch_um;
    g.phase.resize(map.values.size());
    std::transform(map.values.begin(), map.values.end(), g.phase.begin(), wrap);
    g.validate();
    return g;
}

SlmGrid superpose(const std::vector<Vec3>& sites, const SiteWeights& weights,
                  const SlmGrid& grid, const OpticsParams& optics, std::uint64_t seed,
                  PhaseInit init)
{
    if (sites.empty())
        throw ConfigError("superpose: need at least one site");
    if (weights.w.size() != sites.size())
        throw ConfigError("superpose: one weight per site required");
    weights.validate();
    optics.validate();

    std::vector<cplx> coeff(sites.size());
    for (std::size_t m = 0; m < sites.size(); ++m) {
        const double phi = init == PhaseInit::Random ? kTwoPi * CounterRng(seed, m).uniform() : 0.0;
        coeff[m] = weights.w[m] * std::polar(1.0, phi);
    }

    const std::size_t n = static_cast<std::size_t>(grid.width) * static_cast<std::size_t>(grid.height);
    std::vector<cplx> field(n, cplx(0.0, 0.0));
    for (std::size_t m = 0; m < sites.size(); ++m) {
        if (coeff[m] == cplx(0.0, 0.0))
            continue;
        const PhaseMap pm = elementary_phase(sites[m], grid, optics);
        for (std::size_t i = 0; i < n; ++i)
            field[i] += coeff[m] * std::polar(1.0, pm.values[i]);
    }

    SlmGrid out = SlmGrid::blank(grid.width, grid.height, grid.pitch_um);
    for (std::size_t i = 0; i < n; ++i)
        out.phase[i] = wrap(std::arg(field[i]));
    return out;
}

FieldGrid propagate_field(const SlmGrid& mask, double z_um, const OpticsParams& optics)
{
    mask.validate();
    optics.validate();
    const int w = mask.width;
    const int h = mask.height;
    const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    const double defocus = -std::numbers::pi * optics.magnification * optics.magnification * z_um /
                           (wavelength_um(optics) * focal_um(optics) * focal_um(optics));

    fftw_complex* buf = fftw_alloc_complex(n);
    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_2d(h, w, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (int r = 0; r < h; ++r) {
        const double ys = mask.y_um(r);
        for (int c = 0; c < w; ++c) {
            const double xs = mask.x_um(c);
            const std::size_t i = static_cast<std::size_t>(r) * w + c;
            const cplx a = std::polar(1.0, mask.phase[i] + defocus * (xs * xs + ys * ys));
            buf[i][0] = a.real();
            buf[i][1] = a.imag();
        }
    }
    fftw_execute(plan);

    FieldGrid out;
    out.width = w;
    out.height = h;
    out.pixel_um = focal_pixel_um(mask, optics);
    out.values.resize(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    // fftshift: frequency bin k lands at (k + N/2) mod N.
    for (int r = 0; r < h; ++r) {
        const int rr = (r + h / 2) % h;
        for (int c = 0; c < w; ++c) {
            const int cc = (c + w / 2) % w;
            const std::size_t src = static_cast<std::size_t>(r) * w + c;
            out.values[static_cast<std::size_t>(rr) * w + cc] =
                scale * cplx(buf[src][0], buf[src][1]);
        }
    }
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);
    return out;
}

IntensityGrid propagate(const SlmGrid& mask, double z_um, const OpticsParams& optics)
{
    const FieldGrid f = propagate_field(mask, z_um, optics);
    IntensityGrid out;
    out.width = f.width;
    out.height = f.height;
    out.pixel_um = f.pixel_um;
    out.values.resize(f.values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        out.values[i] = std::norm(f.values[i]);
        total += out.values[i];
    }
    for (auto& v : out.values)
        v /= total;
    return out;
}

SpotReport verify_spots(const IntensityGrid& intensity, const std::vector<Vec3>& expected,
                        double tolerance_um)
{
    if (!(tolerance_um >= intensity.pixel_um))
        throw ConfigError("verify_spots: tolerance must be at least one focal pixel");
    const int w = intensity.width;
    const int h = intensity.height;
    const double global = *std::max_element(intensity.values.begin(), intensity.values.end());
    const double floor = 0.1 * global;

    struct Peak {
        double x, y, value;
    };
    std::vector<Peak> peaks;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double v = intensity.at(r, c);
            if (v < floor)
                continue;
            bool is_max = true;
            for (int dr = -1; dr <= 1 && is_max; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0)
                        continue;
                    const int rr = r + dr;
                    const int cc = c + dc;
                    if (rr < 0 || rr >= h || cc < 0 || cc >= w)
                        continue;
                    const double u = intensity.at(rr, cc);
                    // Ties go to the first pixel in row-major order.
                    if (u > v || (u == v && (dr < 0 || (dr == 0 && dc < 0)))) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max)
                peaks.push_back({intensity.x_um(c), intensity.y_um(r), v});
        }
    }

    SpotReport rep;
    rep.matched.assign(expected.size(), false);
    rep.positions.resize(expected.size());
    rep.peaks.assign(expected.size(), 0.0);
    double lo = INFINITY;
    double hi = 0.0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        double best = INFINITY;
        const Peak* hit = nullptr;
        for (const auto& p : peaks) {
            const double d = std::hypot(p.x - expected[i].x, p.y - expected[i].y);
            if (d <= tolerance_um && d < best) {
                best = d;
                hit = &p;
            }
        }
        rep.positions[i].z = expected[i].z;
        if (!hit) {
            rep.missing.push_back(i);
            continue;
        }
        rep.matched[i] = true;
        rep.positions[i].x = hit->x;
        rep.positions[i].y = hit->y;
        rep.peaks[i] = hit->value;
        lo = std::min(lo, hit->value);
        hi = std::max(hi, hit->value);
        ++rep.found;
    }
    rep.uniformity = rep.found > 0 ? (hi - lo) / (hi + lo) : 0.0;
    return rep;
}

SiteWeights homogenize(const SiteWeights& weights, const std::vector<double>& intensities,
                       double gamma)
{
    if (intensities.size() != weights.w.size())
        throw ConfigError("homogenize: one intensity per site required");
    double mean = 0.0;
    for (double v : intensities) {
        if (!(v > 0.0))
            throw DomainError("homogenize: intensities must be positive");
        mean += v;
    }
    mean /= static_cast<double>(intensities.size());

    SiteWeights out = weights;
    double power = 0.0;
    for (std::size_t i = 0; i < out.w.size(); ++i) {
        out.w[i] *= std::pow(mean / intensities[i], gamma);
        power += std::norm(out.w[i]);
    }
    if (!(power > 0.0))
        throw DomainError("homogenize: all weights vanish");
    const double s = 1.0 / std::sqrt(power);
    for (auto& v : out.w)
        v *= s;
    return out;
}

HomogenizeLoop homogenize_loop(const std::vector<Vec3>& sites, const SlmGrid& grid,
                               const OpticsParams& optics, std::uint64_t seed, int iterations,
                               double gamma, double tolerance_um)
{
    if (iterations < 0)
        throw ConfigError("homogenize_loop: iterations must be >= 0");
    const double tol = tolerance_um > 0.0 ? tolerance_um : 2.0 * focal_pixel_um(grid, optics);

    // Group sites by plane so each focal plane is propagated once.
    std::map<double, std::vector<std::size_t>> planes;
    for (std::size_t i = 0; i < sites.size(); ++i)
        planes[sites[i].z].push_back(i);

    auto measure = [&](const SlmGrid& mask, std::vector<double>& out) {
        out.assign(sites.size(), 0.0);
        for (const auto& [z, idx] : planes) {
            const IntensityGrid img = propagate(mask, z, optics);
            std::vector<Vec3> expect;
            for (auto i : idx)
                expect.push_back(sites[i]);
            const SpotReport rep = verify_spots(img, expect, tol);
            for (std::size_t k = 0; k < idx.size(); ++k) {
                // Spot power: 3x3 window around the detected (or expected) pixel.
                const Vec3& at = rep.matched[k] ? rep.positions[k] : expect[k];
                const int c = static_cast<int>(std::lround(at.x / img.pixel_um)) + img.width / 2;
                const int r = static_cast<int>(std::lround(at.y / img.pixel_um)) + img.height / 2;
                double v = 0.0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        v += img.at(std::clamp(r + dr, 0, img.height - 1),
                                    std::clamp(c + dc, 0, img.width - 1));
                out[idx[k]] = v;
            }
        }
        const auto [mn, mx] = std::minmax_element(out.begin(), out.end());
        return (*mx - *mn) / (*mx + *mn);
    };

    HomogenizeLoop loop;
    loop.weights = SiteWeights::uniform(sites.size());
    std::vector<double> intensities;
    for (int it = 0; it <= iterations; ++it) {
        loop.mask = superpose(sites, loop.weights, grid, optics, seed);
        loop.uniformity.push_back(measure(loop.mask, intensities));
        if (it < iterations) {
            loop.weights = homogenize(loop.weights, intensities, gamma);
            // Keep each site's current focal phase so the next synthesis
            // does not reshuffle the interference between sites.
            for (std::size_t m = 0; m < sites.size(); ++m) {
                const PhaseMap pm = elementary_phase(sites[m], grid, optics);
                cplx overlap(0.0, 0.0);
                for (std::size_t i = 0; i < pm.values.size(); ++i)
                    overlap += std::polar(1.0, loop.mask.phase[i] - pm.values[i]);
                const double phi = kTwoPi * CounterRng(seed, m).uniform();
                loop.weights.w[m] =
                    std::polar(std::abs(loop.weights.w[m]), std::arg(overlap) - phi);
            }
        }
    }
    return loop;
}

void write_phase_pgm(std::ostream& os, const SlmGrid& mask)
{
    mask.validate();
    os << "P5\n" << mask.width << ' ' << mask.height << "\n65535\n";
    for (double p : mask.phase) {
        const double v = std::clamp(std::round(p / kTwoPi * 65535.0), 0.0, 65535.0);
        put_u16(os, static_cast<std::uint16_t>(v));
    }
}

void write_intensity_pgm(std::ostream& os, const IntensityGrid& intensity)
{
    os << "P5\n" << intensity.width << ' ' << intensity.height << "\n65535\n";
    const double peak = *std::max_element(intensity.values.begin(), intensity.values.end());
    for (double v : intensity.values) {
        const double q = peak > 0.0 ? std::round(v / peak * 65535.0) : 0.0;
        put_u16(os, static_cast<std::uint16_t>(std::clamp(q, 0.0, 65535.0)));
    }
}

void write_phase_csv(std::ostream& os, const SlmGrid& mask)
{
    CsvWriter csv(os);
    csv.header({"row", "col", "phase_rad"});
    for (int r = 0; r < mask.height; ++r)
        for (int c = 0; c < mask.width; ++c)
            csv.row({static_cast<double>(r), static_cast<double>(c), mask.at(r, c)});
}

}  // namespace planesel
