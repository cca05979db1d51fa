#include "commands.hpp"

#include "planesel/budget.hpp"
#include "planesel/crosstalk.hpp"
#include "planesel/csv.hpp"
#include "planesel/hologram.hpp"
#include "planesel/inference.hpp"
#include "planesel/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace planesel::cli {

namespace fs = std::filesystem;

namespace {

class Outputs {
public:
    Outputs(const RunConfig& cfg, const fs::path& dir) : dir_(dir)
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec)
            throw ConfigError("cannot create output directory '" + dir_.string() + "'");
        cfg.write(open("config_resolved.toml"));
        close();
    }

    std::ofstream& open(const std::string& name, bool binary = false)
    {
        close();
        const fs::path p = dir_ / name;
        file_.open(p, binary ? std::ios::binary | std::ios::out : std::ios::out);
        if (!file_)
            throw ConfigError("cannot write '" + p.string() + "'");
        result.files.push_back(p);
        return file_;
    }

    void close()
    {
        if (file_.is_open())
            file_.close();
    }

    CommandResult result;

private:
    fs::path dir_;
    std::ofstream file_;
};

void key_value(CsvWriter& csv, const std::string& key, double v)
{
    csv.row({key, format_number(v)});
}

NoiseBudget budget_from(const RunConfig& cfg)
{
    NoiseBudget b = default_budget();
    const char* keys[] = {"budget.power_carrier_Hz",         "budget.power_sideband_Hz",
                          "budget.magnetic_inhomogeneity_Hz", "budget.coil_ripple_Hz",
                          "budget.stray_field_Hz",           "budget.depth_inhomogeneity_Hz",
                          "budget.depth_fluctuation_Hz"};
    for (std::size_t i = 0; i < b.components.size(); ++i)
        b.components[i].fwhm_hz = cfg.number(keys[i]);
    return b;
}

SourceModel source_model_from(const RunConfig& cfg)
{
    const std::string& m = cfg.text("budget.source_model");
    if (m == "dressed")
        return SourceModel::DressedCarrier;
    if (m == "full")
        return SourceModel::FullMotion;
    throw ConfigError("budget.source_model must be \"dressed\" or \"full\"");
}

std::string plane_file(const std::string& stem, int plane, const char* ext)
{
    return stem + std::to_string(plane) + ext;
}

double fwhm_or_nan(const SpectrumTrace& t)
{
    try {
        return fwhm(t);
    } catch (const AmbiguityError&) {
        return std::nan("");
    }
}

}  // namespace

TrapParams trap_from(const RunConfig& cfg)
{
    TrapParams t;
    t.trap_frequency_hz = cfg.number("trap.trap_frequency_Hz");
    t.lamb_dicke = cfg.number("trap.lamb_dicke");
    t.mean_phonon = cfg.number("trap.mean_phonon");
    t.fock_cutoff = cfg.integer("trap.fock_cutoff");
    t.depth_uk = cfg.number("trap.depth_uK");
    t.validate();
    return t;
}

FieldConfig field_from(const RunConfig& cfg)
{
    FieldConfig f;
    f.bias_g = cfg.number("field.bias_G");
    f.gradient_g_per_cm = cfg.number("field.gradient_G_per_cm");
    f.array_offset_um = {cfg.number("field.offset_x_um"), cfg.number("field.offset_y_um"),
                         cfg.number("field.offset_z_um")};
    f.zeeman_per_mf_hz_per_g = cfg.number("field.zeeman_per_mF_Hz_per_G");
    f.validate();
    return f;
}

CommandResult cmd_spectrum(const RunConfig& cfg, const fs::path& out)
{
    Outputs o(cfg, out);
    const TrapParams trap = trap_from(cfg);
    const double m_f = cfg.number("field.mF");

    AddressingScenario sc;
    sc.geometry = make_cuboid(cfg.integer("array.nx"), cfg.integer("array.ny"),
                              cfg.integer("array.planes"), cfg.number("array.dxy_um"),
                              cfg.number("array.dz_um"));
    sc.field = field_from(cfg);
    sc.m_f = m_f;
    // Negative: the carrier detuning-error budget in quadrature.
    double noise_hz = cfg.number("spectrum.noise_fwhm_Hz");
    if (noise_hz < 0.0) {
        NoiseBudget errors;
        for (const auto& c : budget_from(cfg).components)
            if (c.detuning_error && c.kind != LineKind::Sideband)
                errors.components.push_back(c);
        noise_hz = quadrature_total(errors, LineKind::Carrier);
    }
    sc.noise_g = noise_hz / (m_f * sc.field.zeeman_per_mf_hz_per_g);
    sc.rabi_hz = cfg.number("spectrum.rabi_Hz");
    sc.spontaneous_hz = rate_to_hz(cfg.number("spectrum.linewidth_rate_per_s"));
    sc.trap = trap;
    sc.target_plane = sc.geometry.plane_count() / 2;

    const auto grid =
        detuning_grid(cfg.number("spectrum.grid_half_span_Hz"), cfg.number("spectrum.grid_pitch_Hz"));
    std::ostringstream summary;
    {
        std::vector<std::pair<double, double>> planes;
        for (int p = 0; p < sc.geometry.plane_count(); ++p) {
            const SpectrumTrace t = plane_spectrum(sc, p, grid);
            write_trace_csv(o.open(plane_file("spectrum_plane", p, ".csv")), t);
            const auto k = static_cast<std::size_t>(
                std::max_element(t.values.begin(), t.values.end()) - t.values.begin());
            planes.emplace_back(t.detunings_hz[k], fwhm_or_nan(t));
        }
        CsvWriter csv(o.open("spectrum_planes.csv"));
        csv.header({"plane", "peak_detuning_Hz", "fwhm_Hz"});
        for (std::size_t p = 0; p < planes.size(); ++p)
            csv.row({static_cast<double>(p), planes[p].first, planes[p].second});
        for (std::size_t p = 0; p < planes.size(); ++p)
            summary << "plane " << p << ": peak " << format_number(planes[p].first * 1e-3)
                    << " kHz\n";
    }

    const LineModel model{sc.spontaneous_hz, sc.rabi_hz, trap};
    const double carrier = fwhm(steady_state_spectrum(model, grid, 0));
    const double sideband = fwhm(steady_state_spectrum(model, grid, 1));

    const NoiseBudget budget = budget_from(cfg);
    const double synth_carrier = quadrature_total(budget, LineKind::Carrier);
    const double synth_sideband = quadrature_total(budget, LineKind::Sideband);
    double height = cfg.number("spectrum.sideband_height");
    if (height < 0.0)
        height = thermal_sideband_height(trap);
    const SpectrumTrace synth = synth_triple_lorentzian(synth_carrier, synth_sideband,
                                                        trap.trap_frequency_hz, height, 1.0, grid);
    write_trace_csv(o.open("spectrum_synth.csv"), synth);
    const double total = fwhm(synth);

    const auto shifts = site_detuning_map(sc.geometry, sc.field, m_f);
    {
        CsvWriter csv(o.open("spectrum_summary.csv"));
        csv.header({"quantity", "value"});
        key_value(csv, "detuning_noise_fwhm_Hz", noise_hz);
        key_value(csv, "carrier_component_fwhm_Hz", carrier);
        key_value(csv, "sideband_component_fwhm_Hz", sideband);
        key_value(csv, "synth_carrier_fwhm_Hz", synth_carrier);
        key_value(csv, "synth_sideband_fwhm_Hz", synth_sideband);
        key_value(csv, "synth_sideband_height", height);
        key_value(csv, "synth_total_fwhm_Hz", total);
        key_value(csv, "plane_sensitivity_Hz_per_um",
                  plane_sensitivity(sc.field.gradient_g_per_cm, m_f, sc.field));
        key_value(csv, "inhomogeneity_fwhm_Hz",
                  inhomogeneity_fwhm(shifts, sc.geometry, sc.target_plane));
    }
    o.close();
    summary << "carrier component FWHM " << format_number(carrier * 1e-3) << " kHz, sideband "
            << format_number(sideband * 1e-3) << " kHz\n"
            << "synthesized total linewidth " << format_number(total * 1e-3) << " kHz\n";
    o.result.summary = summary.str();
    return o.result;
}

CommandResult cmd_budget(const RunConfig& cfg, const fs::path& out)
{
    Outputs o(cfg, out);
    const TrapParams trap = trap_from(cfg);
    const NoiseBudget budget = budget_from(cfg);
    BudgetReportOptions opt;
    opt.rabi_hz = cfg.number("budget.rabi_Hz");
    opt.samples = cfg.integer("run.samples");
    opt.seed = static_cast<std::uint64_t>(cfg.integer("run.seed"));
    opt.threads = cfg.integer("run.threads");
    opt.model = source_model_from(cfg);

    const auto rows = budget_report(budget, trap, opt);
    write_budget_csv(o.open("budget.csv"), rows);

    const double ion =
        ionization_rate(trap.depth_uk * 1e-3, cfg.number("budget.ionization_beta_Hz_per_mK2"));
    {
        CsvWriter csv(o.open("budget_summary.csv"));
        csv.header({"quantity", "value"});
        key_value(csv, "seed", static_cast<double>(opt.seed));
        key_value(csv, "samples", opt.samples);
        key_value(csv, "carrier_total_kHz", quadrature_total(budget, LineKind::Carrier) * 1e-3);
        key_value(csv, "sideband_total_kHz", quadrature_total(budget, LineKind::Sideband) * 1e-3);
        for (const auto& r : rows)
            if (r.label == "total (carrier)")
                key_value(csv, "pi_pulse_fidelity_pct", (1.0 - r.infidelity) * 100.0);
        key_value(csv, "ionization_rate_Hz", ion);
    }
    o.close();

    std::ostringstream s;
    for (const auto& r : rows) {
        s << r.label;
        if (r.has_broadening)
            s << ": " << format_number(r.broadening_hz * 1e-3) << " kHz";
        if (r.has_infidelity)
            s << ", infidelity " << format_number(r.infidelity * 100.0) << "("
              << format_number(r.std_error * 100.0) << ") %";
        s << '\n';
    }
    o.result.summary = s.str();
    return o.result;
}

CommandResult cmd_crosstalk(const RunConfig& cfg, const fs::path& out)
{
    Outputs o(cfg, out);
    const auto& sizes = cfg.list("crosstalk.sizes");
    const auto& noises = cfg.list("crosstalk.noise_G");
    if (sizes.empty() || noises.empty())
        throw ConfigError("crosstalk.sizes and crosstalk.noise_G must not be empty");
    const std::string& method_name = cfg.text("crosstalk.method");
    ExcitationMethod method = ExcitationMethod::SteadyState;
    if (method_name == "pi_pulse")
        method = ExcitationMethod::PiPulse;
    else if (method_name != "steady_state")
        throw ConfigError("crosstalk.method must be \"steady_state\" or \"pi_pulse\"");

    const int planes = cfg.integer("crosstalk.planes");
    const double dxy = cfg.number("crosstalk.dxy_um");
    const double ref_dz = cfg.number("crosstalk.reference_dz_um");
    auto scenario = [&](int n, double dz, double noise) {
        AddressingScenario sc;
        sc.geometry = make_cuboid(n, n, planes, dxy, dz);
        sc.field.bias_g = cfg.number("crosstalk.bias_G");
        sc.field.gradient_g_per_cm = cfg.number("crosstalk.gradient_G_per_cm");
        sc.field.zeeman_per_mf_hz_per_g = cfg.number("field.zeeman_per_mF_Hz_per_G");
        sc.m_f = cfg.number("field.mF");
        sc.noise_g = noise;
        sc.rabi_hz = cfg.number("crosstalk.rabi_Hz");
        sc.spontaneous_hz = cfg.number("crosstalk.spontaneous_Hz");
        sc.trap = trap_from(cfg);
        sc.trap.mean_phonon = cfg.number("crosstalk.mean_phonon");
        sc.target_plane = planes / 2;
        return sc;
    };
    auto size_of = [](double v) {
        if (v < 1.0 || v != std::floor(v))
            throw ConfigError("crosstalk.sizes entries must be positive integers");
        return static_cast<int>(v);
    };

    SweepSpec spec;
    spec.dz_um = cfg.list("crosstalk.dz_um");
    spec.noise_g = noises;
    for (double n : sizes)
        spec.sizes.emplace_back(size_of(n), size_of(n));
    const auto rows = distance_sweep(scenario(size_of(sizes[0]), ref_dz, noises[0]), spec, method);
    write_sweep_csv(o.open("crosstalk_sweep.csv"), rows);

    std::ostringstream s;
    {
        CsvWriter csv(o.open("crosstalk_summary.csv"));
        csv.header({"nx", "ny", "noise_G", "dz_um", "total_site_average", "total_worst_site",
                    "total_site_sum", "threshold_crossing_um"});
        for (double n : sizes) {
            const int k = size_of(n);
            const auto sc = scenario(k, ref_dz, noises[0]);
            const CrosstalkResult r = crosstalk_error(sc, method);
            const double crossing =
                threshold_crossing(sc, cfg.number("crosstalk.threshold"),
                                   cfg.number("crosstalk.crossing_min_um"),
                                   cfg.number("crosstalk.crossing_max_um"), 0.05);
            csv.row({static_cast<double>(k), static_cast<double>(k), noises[0], ref_dz, r.total,
                      r.worst_site_total, r.site_sum_total, crossing});
            s << k << "x" << k << " at " << format_number(ref_dz)
              << " um: crosstalk " << format_number(r.total) << ", threshold crossing "
              << format_number(crossing) << " um\n";
        }
    }

    // Per-plane spectra of the first array size at the reference distance.
    const auto sc = scenario(size_of(sizes[0]), ref_dz, noises[0]);
    const double sens = plane_sensitivity(sc.field.gradient_g_per_cm, sc.m_f, sc.field);
    for (int p = 0; p < planes; ++p) {
        const double centre = (p - sc.target_plane) * ref_dz * sens;
        std::vector<double> grid;
        for (int k = -1000; k <= 1000; ++k)
            grid.push_back(centre + 50.0 * k);
        write_trace_csv(o.open(plane_file("crosstalk_plane", p, ".csv")), plane_spectrum(sc, p, grid));
    }
    o.close();
    o.result.summary = s.str();
    return o.result;
}

CommandResult cmd_hologram(const RunConfig& cfg, const fs::path& out)
{
    Outputs o(cfg, out);
    OpticsParams optics;
    optics.magnification = cfg.number("hologram.magnification");
    optics.focal_length_mm = cfg.number("hologram.focal_length_mm");
    optics.wavelength_nm = cfg.number("hologram.wavelength_nm");
    optics.validate();
    const SlmGrid grid = SlmGrid::blank(cfg.integer("hologram.width"), cfg.integer("hologram.height"),
                                        cfg.number("hologram.pitch_um"));
    const ArrayGeometry geom =
        make_cuboid(cfg.integer("hologram.nx"), cfg.integer("hologram.ny"),
                    cfg.integer("hologram.planes"), cfg.number("hologram.dxy_um"),
                    cfg.number("hologram.dz_um"));
    const double tol = cfg.number("hologram.tolerance_um");
    const auto seed = static_cast<std::uint64_t>(cfg.integer("run.seed"));

    const HomogenizeLoop loop = homogenize_loop(geom.sites, grid, optics, seed,
                                                cfg.integer("hologram.iterations"),
                                                cfg.number("hologram.gamma"), tol);
    write_phase_pgm(o.open("mask.pgm", true), loop.mask);
    if (cfg.boolean("hologram.write_csv"))
        write_phase_csv(o.open("mask.csv"), loop.mask);

    int found = 0;
    {
        std::vector<std::vector<double>> rows;
        for (int p = 0; p < geom.plane_count(); ++p) {
            const auto idx = geom.sites_in_plane(p);
            const double z = geom.sites[idx.front()].z;
            const IntensityGrid img = propagate(loop.mask, z, optics);
            write_intensity_pgm(o.open(plane_file("intensity_plane", p, ".pgm"), true), img);
            std::vector<Vec3> expect;
            for (auto i : idx)
                expect.push_back(geom.sites[i]);
            const SpotReport rep = verify_spots(img, expect, tol);
            found += rep.found;
            for (std::size_t k = 0; k < idx.size(); ++k)
                rows.push_back({static_cast<double>(idx[k]), expect[k].x, expect[k].y, expect[k].z,
                                rep.matched[k] ? 1.0 : 0.0, rep.positions[k].x, rep.positions[k].y,
                                rep.peaks[k]});
        }
        CsvWriter csv(o.open("spots.csv"));
        csv.header({"site", "x_um", "y_um", "z_um", "found", "detected_x_um", "detected_y_um",
                    "peak_intensity"});
        for (const auto& r : rows)
            csv.row({r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7]});
    }
    {
        CsvWriter csv(o.open("homogenize.csv"));
        csv.header({"iteration", "uniformity"});
        for (std::size_t i = 0; i < loop.uniformity.size(); ++i)
            csv.row({static_cast<double>(i), loop.uniformity[i]});
    }
    o.close();
    std::ostringstream s;
    s << "spots found " << found << "/" << geom.sites.size() << ", uniformity "
      << format_number(loop.uniformity.front()) << " -> " << format_number(loop.uniformity.back())
      << ", focal pixel " << format_number(focal_pixel_um(grid, optics)) << " um\n";
    o.result.summary = s.str();
    return o.result;
}

CommandResult cmd_fit(const RunConfig& cfg, const fs::path& data, const fs::path& out)
{
    std::ifstream in(data);
    if (!in)
        throw ConfigError("cannot read data file '" + data.string() + "'");
    const auto points = read_fit_data(in);
    Outputs o(cfg, out);
    std::ostringstream s;
    const std::string& model = cfg.text("fit.model");
    CsvWriter csv(o.open("fit_report.csv"));
    csv.header({"parameter", "value", "std_error"});
    if (model == "shelved_rabi") {
        const ShelvedRabiFit f =
            fit_shelved_rabi(points, cfg.number("fit.survival"), cfg.number("fit.repump"));
        csv.row({"P_3P2", format_number(f.params.p_3p2), format_number(f.p_3p2_error)});
        csv.row({"rabi_Hz", format_number(f.params.rabi_hz), format_number(f.rabi_error)});
        csv.row({"phase_rad", format_number(f.params.phase_rad), format_number(f.phase_error)});
        csv.row({"chi2", format_number(f.chi2), ""});
        csv.row({"dof", std::to_string(f.dof), ""});
        csv.row({"rabi_undetermined", f.rabi_undetermined ? "1" : "0", ""});
        s << "P_3P2 = " << format_number(f.params.p_3p2) << " +- " << format_number(f.p_3p2_error)
          << ", Omega = " << format_number(f.params.rabi_hz) << " Hz"
          << (f.rabi_undetermined ? " (undetermined)" : "") << '\n';
    } else if (model == "rb") {
        const RbFit f = rb_decay_fit(points);
        csv.row({"p", format_number(f.p), format_number(f.p_error)});
        csv.row({"A0", format_number(f.a0), format_number(f.a0_error)});
        csv.row({"fidelity", format_number(f.fidelity), format_number(f.fidelity_error)});
        csv.row({"chi2", format_number(f.chi2), ""});
        s << "average gate fidelity " << format_number(f.fidelity) << " +- "
          << format_number(f.fidelity_error) << '\n';
    } else {
        throw ConfigError("fit.model must be \"shelved_rabi\" or \"rb\"");
    }
    o.close();
    o.result.summary = s.str();
    return o.result;
}

}  // namespace planesel::cli
