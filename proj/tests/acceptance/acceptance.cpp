// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "planesel/budget.hpp"
#include "planesel/core.hpp"
#include "planesel/crosstalk.hpp"
#include "planesel/fields.hpp"
#include "planesel/fockdyn.hpp"
#include "planesel/hologram.hpp"
#include "planesel/inference.hpp"
#include "planesel/lineshape.hpp"
#include "planesel/rng.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

using namespace planesel;

namespace {

int failures = 0;

void report(const std::string& id, bool ok, const std::string& detail)
{
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

void info(const std::string& id, const std::string& detail)
{
    std::printf("INFO %s: %s\n", id.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool within(double x, double target, double tol)
{
    return std::abs(x - target) <= tol;
}

TrapParams paper_trap()
{
    return TrapParams{28.0e3, 0.4, 0.59, 10, 50.0};
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void totals()
{
    const NoiseBudget b = default_budget();
    const double c = quadrature_total(b, LineKind::Carrier);
    const double s = quadrature_total(b, LineKind::Sideband);
    report("1 quadrature totals", within(c, 53.1e3, 50.0) && within(s, 51.7e3, 50.0),
           fmt("carrier %.3f kHz, sideband %.3f kHz", c * 1e-3, s * 1e-3));
}

void pi_pulse_mc()
{
    const auto t0 = std::chrono::steady_clock::now();
    const McResult r = pi_pulse_fidelity_mc(paper_trap(), 10.0e3, DetuningNoise{53.1e3, 1, 1000});
    const double dt = seconds_since(t0);
    report("2 pi-pulse fidelity", within(r.fidelity, 0.363, 0.027),
           fmt("%.2f%% +- %.2f%% (target 36.3 +- 2.7)", 100.0 * r.fidelity, 100.0 * r.std_error));
    report("2 pi-pulse runtime", dt < 60.0, fmt("%.1f s for 1000 samples (limit 60 s)", dt));
}

void per_source()
{
    const TrapParams t = paper_trap();
    const Infidelity ripple = per_source_infidelity(51.4e3, t, 10.0e3, 1000, 1);
    report("3 ripple infidelity", within(ripple.value, 0.563, 0.027),
           fmt("%.2f%% +- %.2f%% (target 56.3 +- 2.7)", 100.0 * ripple.value, 100.0 * ripple.std_error));
    const Infidelity stray = per_source_infidelity(2.5e3, t, 10.0e3, 1000, 1);
    report("3 stray-field infidelity", within(stray.value, 0.0131, 0.003),
           fmt("%.2f%% +- %.2f%% (target 1.31 +- 0.3)", 100.0 * stray.value, 100.0 * stray.std_error));
    const Infidelity floor = motional_dephasing_infidelity(t, 10.0e3);
    report("3 motional floor", within(floor.value, 0.0605, 0.005),
           fmt("%.2f%% (target 6.05 +- 0.5)", 100.0 * floor.value));
}

void high_drive()
{
    const TrapParams t{28.0e3, 0.4, 0.2, 10, 50.0};
    const McResult r = pi_pulse_fidelity_mc(t, 200.0e3, DetuningNoise{2.5e3, 1, 1000});
    report("4 high-drive fidelity", r.fidelity >= 0.995,
           fmt("%.3f%% (limit >= 99.5)", 100.0 * r.fidelity));
}

void crosstalk_study()
{
    const double dz_ref = 3.0;
    const CrosstalkResult at3 = crosstalk_error(default_scenario(40, 40, dz_ref));
    report("5 crosstalk at 3 um", at3.total < 1e-3,
           fmt("total %.4e (worst-site %.4e, site-sum %.4e; limit 1e-3)", at3.total,
               at3.worst_site_total, at3.site_sum_total));

    const double crossing = threshold_crossing(default_scenario(40, 40, dz_ref), 1e-3, 0.5, 5.0, 0.05);
    report("5 threshold crossing", within(crossing, 2.0, 0.5),
           fmt("%.3f um (target 2.0 +- 0.5)", crossing));

    SweepSpec spec;
    spec.dz_um = {1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 15.0, 20.0, 30.0};
    spec.noise_g = {100e-6, 1e-3};
    spec.sizes = {{4, 4}, {40, 40}};
    const auto rows = distance_sweep(default_scenario(40, 40, dz_ref), spec);
    std::map<std::tuple<double, int, double>, double> table;
    for (const auto& r : rows)
        table[{r.noise_g, r.nx, r.dz_um}] = r.total;
    bool monotone = true;
    bool ordered = true;
    for (double noise : spec.noise_g) {
        for (const auto& [nx, ny] : spec.sizes)
            for (std::size_t i = 1; i < spec.dz_um.size(); ++i)
                monotone = monotone && table[{noise, nx, spec.dz_um[i]}] <=
                                           table[{noise, nx, spec.dz_um[i - 1]}];
        for (double dz : spec.dz_um)
            ordered = ordered && table[{noise, 40, dz}] >= table[{noise, 4, dz}];
    }
    report("5 sweep monotone in dz", monotone, fmt("%.0f sweep points", static_cast<double>(rows.size())));
    report("5 sweep 40x40 >= 4x4", ordered, fmt("%.0f sweep points", static_cast<double>(rows.size())));

    // Same study with the drive read as an angular frequency.
    AddressingScenario angular = default_scenario(40, 40, dz_ref);
    angular.rabi_hz *= kTwoPi;
    const double crossing_ang = threshold_crossing(angular, 1e-3, 0.5, 5.0, 0.05);
    angular.geometry = make_cuboid(40, 40, 11, 4.0, 30.0);
    info("5 angular-drive reading",
         fmt("crossing %.3f um, total at 30 um %.3e", crossing_ang, crosstalk_error(angular).total));
}

void field_checks()
{
    FieldConfig f;
    f.array_offset_um = {0.0, 0.0, -1200.0};
    const double s = plane_sensitivity(20.5, 1.5, f);
    report("6 plane sensitivity", within(s, 7687.5, 1e-6), fmt("%.4f Hz/um (formula 7687.5)", s));
    const ArrayGeometry g = make_cuboid(4, 4, 3, 10.0, 30.0);
    const auto shifts = site_detuning_map(g, f, 1.5);
    const double inh = inhomogeneity_fwhm(shifts, g, 1);
    report("6 in-plane inhomogeneity", within(inh, 300.0, 100.0),
           fmt("%.1f Hz (target 300 +- 100)", inh));
}

void spectrum_synthesis()
{
    const auto grid = detuning_grid(500.0e3, 100.0);
    const TrapParams t = paper_trap();
    const SpectrumTrace synth =
        synth_triple_lorentzian(53.1e3, 51.7e3, t.trap_frequency_hz, thermal_sideband_height(t), 1.0, grid);
    const double total = fwhm(synth);
    report("7 merged envelope", within(total, 77.0e3, 3.0e3), fmt("%.2f kHz (target 77 +- 3)", total * 1e-3));

    const LineModel model{rate_to_hz(7600.0), 10.0e3, t};
    const double carrier = fwhm(steady_state_spectrum(model, grid, 0));
    const double sideband = fwhm(steady_state_spectrum(model, grid, 1));
    report("7 carrier power broadening", within(carrier, 13.1e3, 0.15 * 13.1e3),
           fmt("%.2f kHz (target 13.1 +- 15%%)", carrier * 1e-3));
    report("7 sideband power broadening", within(sideband, 4.7e3, 0.15 * 4.7e3),
           fmt("%.2f kHz (target 4.7 +- 15%%)", sideband * 1e-3));
}

void properties()
{
    const TrapParams t = paper_trap();
    double unitarity = 0.0;
    for (double delta : {-60e3, 0.0, 25e3})
        for (double dt : {1e-7, 1e-6, 1e-5}) {
            const Eigen::MatrixXcd u = frozen_propagator(build_hamiltonian(delta, 10.0e3, t), dt);
            unitarity = std::max(unitarity,
                                 (u.adjoint() * u - Eigen::MatrixXcd::Identity(u.rows(), u.cols()))
                                     .cwiseAbs()
                                     .maxCoeff());
        }
    report("8 unitarity", unitarity < 1e-10, fmt("max deviation %.2e", unitarity));

    {
        TrapParams small = t;
        small.fock_cutoff = 2;
        const SquarePulse p0{70e-6, 10e3, 4e3};
        const double dt = max_stable_step(p0, small);
        const SquarePulse p{dt * std::ceil(p0.duration_s / dt - 1e-9), p0.rabi_hz, p0.detuning_hz};
        const Trajectory tr = evolve(SpinMotionState::ground(0, 2), p, small, dt);
        const Eigen::MatrixXcd h = build_hamiltonian(p.detuning_hz, p.rabi_hz, small);
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(h.rows());
        psi(0) = 1.0;
        const Eigen::MatrixXcd gen = std::complex<double>(0.0, -p.duration_s) * h;
        psi = gen.exp() * psi;
        const double err = (tr.states.back().amplitudes - psi).cwiseAbs().maxCoeff();
        report("8 brute-force propagator", err < 1e-6, fmt("max amplitude error %.2e", err));
    }

    {
        double worst = 0.0;
        for (double ps : {0.6, 0.744, 0.95})
            for (double p3 : {0.1, 0.72, 0.99})
                for (double a : {0.05, 0.2}) {
                    const double b = raw_fraction_b(a, ps, p3);
                    worst = std::max(worst, std::abs(excitation_fidelity({a, 0}, {b, 0}, {ps, 0}).value - p3));
                    for (double pr : {0.5, 0.982}) {
                        const double aa = raw_fraction_a(0.02, ps, p3, pr);
                        worst = std::max(worst, std::abs(repump_fidelity({aa, 0}, {0.02, 0}, {ps, 0}, {p3, 0}).value - pr));
                    }
                }
        report("8 correction round-trips", worst < 1e-12, fmt("max error %.2e", worst));
    }

    {
        const OpticsParams o;
        const SlmGrid g = SlmGrid::blank(256, 256, 50.0);
        double worst = 0.0;
        double px = 0.0;
        for (double xm : {-20.0, 4.0, 11.3}) {
            const auto img = propagate(wrap_phase(elementary_phase({xm, -3.0, 0.0}, g, o), g.pitch_um), 0.0, o);
            px = img.pixel_um;
            const auto k = static_cast<int>(std::max_element(img.values.begin(), img.values.end()) -
                                            img.values.begin());
            worst = std::max({worst, std::abs(img.x_um(k % img.width) - xm), std::abs(img.y_um(k / img.width) + 3.0)});
        }
        report("8 Fourier-shift spot placement", worst <= px, fmt("max offset %.3f um, pixel %.3f um", worst, px));
    }

    {
        const DetuningNoise noise{53.1e3, 7, 64};
        const double f1 = pi_pulse_fidelity_mc(t, 10.0e3, noise, 1).fidelity;
        const double f2 = pi_pulse_fidelity_mc(t, 10.0e3, noise, 2).fidelity;
        const double f8 = pi_pulse_fidelity_mc(t, 10.0e3, noise, 8).fidelity;
        report("8 worker-count determinism", f1 == f2 && f1 == f8, fmt("%.17g %.17g %.17g", f1, f2, f8));
    }
}

void substitutes()
{
    const TrapParams t = paper_trap();
    const DetuningNoise noise{53.1e3, 1, 200};
    const McResult sq = pi_pulse_fidelity_mc(t, 10.0e3, noise);
    const McResult hs = hs1_fidelity_mc(t, Hs1Pulse{}, noise);
    report("9 HS1 beats square pulse", hs.fidelity > sq.fidelity,
           fmt("HS1 %.2f%%, square %.2f%%", 100.0 * hs.fidelity, 100.0 * sq.fidelity));

    const double p1 = pumping_markov(0.832, 0.5, 0.0, 20).p1;
    report("9 pumping bound", p1 >= 0.953, fmt("P1(20) = %.6f (limit >= 0.953)", p1));

    const double p = 0.9942;
    CounterRng rng(2024, 0);
    std::vector<DataPoint> data;
    for (int m : {1, 10, 25, 50, 100, 150, 200, 300, 400, 500})
        data.push_back({static_cast<double>(m), 0.5 * (std::pow(p, m) + 0.5) + 0.01 * rng.normal(), 0.01});
    const RbFit fit = rb_decay_fit(data);
    report("9 benchmarking fit", within(fit.fidelity, 0.9971, 5e-4),
           fmt("F = %.5f +- %.5f (target 0.9971 +- 0.0005)", fit.fidelity, fit.fidelity_error));
}

}  // namespace

int main()
{
    const auto t0 = std::chrono::steady_clock::now();
    totals();
    pi_pulse_mc();
    per_source();
    high_drive();
    crosstalk_study();
    field_checks();
    spectrum_synthesis();
    properties();
    substitutes();
    std::printf("%d failing line(s), %.1f s\n", failures, seconds_since(t0));
    return failures == 0 ? 0 : 1;
}
