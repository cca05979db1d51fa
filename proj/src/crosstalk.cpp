#include "planesel/crosstalk.hpp"

#include "planesel/csv.hpp"
#include "planesel/fockdyn.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace planesel {

namespace {

constexpr int kNoiseNodes = 40;

// Probabilists' Gauss-Hermite rule (Golub-Welsch), weights summing to one.
struct Quadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
};

const Quadrature& gauss_hermite()
{
    static const Quadrature q = [] {
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(kNoiseNodes, kNoiseNodes);
        for (int k = 1; k < kNoiseNodes; ++k) {
            j(k - 1, k) = std::sqrt(static_cast<double>(k));
            j(k, k - 1) = j(k - 1, k);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
        Quadrature out;
        double total = 0.0;
        for (int k = 0; k < kNoiseNodes; ++k) {
            out.nodes.push_back(es.eigenvalues()(k));
            const double v = es.eigenvectors()(0, k);
            out.weights.push_back(v * v);
            total += v * v;
        }
        for (auto& w : out.weights)
            w /= total;
        return out;
    }();
    return q;
}

// Noise-averaged single-site response versus laser detuning from the site's
// own carrier.
class SiteResponse {
public:
    SiteResponse(const AddressingScenario& sc, ExcitationMethod method)
        : sigma_(fwhm_to_sigma(sc.noise_fwhm_hz()))
    {
        if (method == ExcitationMethod::SteadyState) {
            const LineModel model{sc.spontaneous_hz, sc.rabi_hz, sc.trap};
            const auto terms = steady_state_terms(model);
            const double gamma = sc.spontaneous_hz;
            bare_ = [terms, gamma](double d) { return evaluate_terms(terms, gamma, d); };
            scale_ = 1.0 / (*this)(0.0);
        } else {
            const TrapParams trap = sc.trap;
            const double rabi = sc.rabi_hz;
            const double t_pi = 0.5 / sideband_rabi(rabi, trap.lamb_dicke, 0, 0);
            bare_ = [trap, rabi, t_pi](double d) {
                return square_pulse_excitation(trap, rabi, d, t_pi);
            };
        }
    }

    double operator()(double detuning_hz) const
    {
        if (sigma_ == 0.0)
            return scale_ * bare_(detuning_hz);
        const auto& q = gauss_hermite();
        double acc = 0.0;
        for (std::size_t k = 0; k < q.nodes.size(); ++k)
            acc += q.weights[k] * bare_(detuning_hz + sigma_ * q.nodes[k]);
        return scale_ * acc;
    }

    /// Normalized response without noise averaging.
    double bare(double detuning_hz) const { return scale_ * bare_(detuning_hz); }
    double noise_sigma() const { return sigma_; }

private:
    double sigma_;
    double scale_ = 1.0;
    std::function<double(double)> bare_;
};

// Site resonance offsets from the target plane's carrier, in Hz.
std::vector<double> resonance_offsets(const AddressingScenario& sc)
{
    const auto map = site_detuning_map(sc.geometry, sc.field, sc.m_f);
    const auto target_sites = sc.geometry.sites_in_plane(sc.target_plane);
    // Reference: the field at the target plane's centroid.
    Vec3 c;
    for (auto i : target_sites) {
        c.x += sc.geometry.sites[i].x;
        c.y += sc.geometry.sites[i].y;
        c.z += sc.geometry.sites[i].z;
    }
    const double n = static_cast<double>(target_sites.size());
    c = {c.x / n, c.y / n, c.z / n};
    const double ref =
        zeeman_shift(field_magnitude(c, sc.field), sc.m_f, sc.field) -
        zeeman_shift(field_magnitude(sc.geometry.centroid(), sc.field), sc.m_f, sc.field);
    std::vector<double> out(map.size());
    for (std::size_t i = 0; i < map.size(); ++i)
        out[i] = map[i] - ref;
    return out;
}

}  // namespace

void AddressingScenario::validate() const
{
    geometry.validate();
    field.validate();
    trap.validate();
    if (!(rabi_hz > 0.0))
        throw ConfigError("crosstalk: Rabi frequency must be > 0");
    if (!(spontaneous_hz > 0.0))
        throw ConfigError("crosstalk: spontaneous linewidth must be > 0");
    if (!(noise_g >= 0.0))
        throw ConfigError("crosstalk: magnetic noise must be >= 0");
    if (target_plane < 0 || target_plane >= geometry.plane_count())
        throw ConfigError("crosstalk: target plane out of range");
}

double AddressingScenario::noise_fwhm_hz() const
{
    return noise_g * m_f * field.zeeman_per_mf_hz_per_g;
}

AddressingScenario default_scenario(int nx, int ny, double dz_um)
{
    AddressingScenario sc;
    sc.geometry = make_cuboid(nx, ny, 11, 4.0, dz_um);
    sc.field.bias_g = 500.0;
    sc.field.gradient_g_per_cm = 300.0;
    sc.target_plane = 5;
    return sc;
}

SpectrumTrace plane_spectrum(const AddressingScenario& scenario, int plane,
                             const std::vector<double>& grid)
{
    scenario.validate();
    if (plane < 0 || plane >= scenario.geometry.plane_count())
        throw ConfigError("plane_spectrum: plane out of range");
    if (grid.size() < 2)
        throw ConfigError("plane_spectrum: grid needs at least two points");

    const auto offsets = resonance_offsets(scenario);
    std::map<double, int> groups;
    for (auto i : scenario.geometry.sites_in_plane(plane))
        ++groups[offsets[i]];
    const double lo_off = groups.begin()->first;
    const double hi_off = groups.rbegin()->first;

    // Tabulate the single-site response once and interpolate shifted copies.
    // The noise average is a discrete Gaussian convolution of the bare line:
    // quadrature nodes undersample a line much narrower than the noise.
    const SiteResponse resp(scenario, ExcitationMethod::SteadyState);
    const double line_width =
        std::max(scenario.spontaneous_hz, std::sqrt(2.0) * scenario.rabi_hz *
                                              std::exp(-0.5 * scenario.trap.lamb_dicke *
                                                       scenario.trap.lamb_dicke));
    double grid_pitch = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < grid.size(); ++i)
        grid_pitch = std::min(grid_pitch, grid[i] - grid[i - 1]);
    const double pitch = std::min(grid_pitch, line_width / 20.0);
    const double sigma = resp.noise_sigma();
    const auto half_kernel = static_cast<std::size_t>(std::ceil(5.0 * sigma / pitch));
    const double base_lo = grid.front() - hi_off - pitch;
    const double base_hi = grid.back() - lo_off + pitch;
    const auto count = static_cast<std::size_t>(std::ceil((base_hi - base_lo) / pitch)) + 1;
    std::vector<double> base(count);
    if (half_kernel < 2) {
        for (std::size_t k = 0; k < count; ++k)
            base[k] = resp(base_lo + static_cast<double>(k) * pitch);
    } else {
        std::vector<double> kernel(2 * half_kernel + 1);
        double norm = 0.0;
        for (std::size_t j = 0; j < kernel.size(); ++j) {
            const double u = (static_cast<double>(j) - static_cast<double>(half_kernel)) * pitch / sigma;
            kernel[j] = std::exp(-0.5 * u * u);
            norm += kernel[j];
        }
        std::vector<double> bare(count + 2 * half_kernel);
        const double bare_lo = base_lo - static_cast<double>(half_kernel) * pitch;
        for (std::size_t k = 0; k < bare.size(); ++k)
            bare[k] = resp.bare(bare_lo + static_cast<double>(k) * pitch);
        for (std::size_t k = 0; k < count; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < kernel.size(); ++j)
                acc += kernel[j] * bare[k + j];
            base[k] = acc / norm;
        }
    }

    auto lookup = [&](double d) {
        const double u = (d - base_lo) / pitch;
        const auto k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(u))), count - 2);
        const double f = u - static_cast<double>(k);
        return base[k] * (1.0 - f) + base[k + 1] * f;
    };

    const double n_sites = static_cast<double>(scenario.geometry.sites_in_plane(plane).size());
    SpectrumTrace out;
    out.detunings_hz = grid;
    out.values.assign(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double acc = 0.0;
        for (const auto& [off, mult] : groups)
            acc += mult * lookup(grid[i] - off);
        out.values[i] = std::clamp(acc / n_sites, 0.0, 1.0);
    }
    out.validate();
    return out;
}

CrosstalkResult crosstalk_error(const AddressingScenario& scenario, ExcitationMethod method)
{
    scenario.validate();
    const int planes = scenario.geometry.plane_count();
    CrosstalkResult r;
    r.per_plane.assign(static_cast<std::size_t>(planes), 0.0);
    if (planes < 2)
        return r;

    const auto offsets = resonance_offsets(scenario);
    const SiteResponse resp(scenario, method);
    for (int p = 0; p < planes; ++p) {
        if (p == scenario.target_plane)
            continue;
        std::map<double, int> groups;
        const auto sites = scenario.geometry.sites_in_plane(p);
        for (auto i : sites)
            ++groups[offsets[i]];
        double sum = 0.0;
        double worst = 0.0;
        for (const auto& [off, mult] : groups) {
            const double v = resp(-off);
            sum += mult * v;
            worst = std::max(worst, v);
        }
        r.per_plane[static_cast<std::size_t>(p)] = sum / static_cast<double>(sites.size());
        r.total += r.per_plane[static_cast<std::size_t>(p)];
        r.worst_site_total += worst;
        r.site_sum_total += sum;
    }
    return r;
}

std::vector<SweepRow> distance_sweep(const AddressingScenario& base, const SweepSpec& spec,
                                     ExcitationMethod method)
{
    for (std::size_t i = 0; i < spec.dz_um.size(); ++i) {
        if (!(spec.dz_um[i] > 0.0))
            throw ConfigError("distance_sweep: dz values must be positive");
        if (i > 0 && !(spec.dz_um[i] > spec.dz_um[i - 1]))
            throw ConfigError("distance_sweep: dz values must be ascending");
    }
    const int planes = base.geometry.plane_count();
    const double dxy = base.geometry.dxy_um > 0.0 ? base.geometry.dxy_um : 4.0;
    std::vector<SweepRow> rows;
    for (const auto& [nx, ny] : spec.sizes) {
        for (double noise : spec.noise_g) {
            for (double dz : spec.dz_um) {
                AddressingScenario sc = base;
                sc.geometry = make_cuboid(nx, ny, planes, dxy, dz);
                sc.noise_g = noise;
                rows.push_back({dz, noise, nx, ny, planes, crosstalk_error(sc, method).total});
            }
        }
    }
    return rows;
}

double threshold_crossing(const AddressingScenario& base, double threshold, double dz_lo,
                          double dz_hi, double coarse_step)
{
    if (!(dz_lo > 0.0) || !(dz_hi > dz_lo) || !(coarse_step > 0.0))
        throw ConfigError("threshold_crossing: invalid dz range");
    const int planes = base.geometry.plane_count();
    const double dxy = base.geometry.dxy_um;
    const auto nx = [&] {
        auto s = base.geometry.sites_in_plane(0);
        std::map<double, int> xs;
        for (auto i : s)
            xs[base.geometry.sites[i].x] = 1;
        return static_cast<int>(xs.size());
    }();
    const int ny = static_cast<int>(base.geometry.sites_in_plane(0).size()) / nx;
    auto excess = [&](double dz) {
        AddressingScenario sc = base;
        sc.geometry = make_cuboid(nx, ny, planes, dxy, dz);
        return crosstalk_error(sc).total - threshold;
    };

    const auto steps = static_cast<int>(std::ceil((dz_hi - dz_lo) / coarse_step));
    double upper = dz_hi;
    if (excess(upper) >= 0.0)
        return upper;
    for (int k = 1; k <= steps; ++k) {
        const double dz = std::max(dz_lo, dz_hi - k * coarse_step);
        if (excess(dz) >= 0.0) {
            double a = dz;
            double b = upper;
            for (int it = 0; it < 40; ++it) {
                const double m = 0.5 * (a + b);
                (excess(m) >= 0.0 ? a : b) = m;
            }
            return 0.5 * (a + b);
        }
        upper = dz;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    CsvWriter csv(os);
    csv.header({"dz_um", "noise_G", "nx", "ny", "nplanes", "crosstalk_total"});
    for (const auto& r : rows)
        csv.row({r.dz_um, r.noise_g, static_cast<double>(r.nx), static_cast<double>(r.ny),
                 static_cast<double>(r.planes), r.total});
}

}  // namespace planesel
