#include "planesel/budget.hpp"

#include "planesel/csv.hpp"

#include <cmath>
#include <set>

namespace planesel {

void NoiseBudget::validate() const
{
    std::set<std::string> seen;
    for (const auto& c : components) {
        if (!(c.fwhm_hz >= 0.0))
            throw ConfigError("budget: component '" + c.label + "' has negative width");
        if (!seen.insert(c.label).second)
            throw ConfigError("budget: duplicate label '" + c.label + "'");
    }
}

NoiseBudget default_budget()
{
    NoiseBudget b;
    b.components = {
        {"power broadening (carrier)", 13.1e3, LineKind::Carrier, false},
        {"power broadening (1st sideband)", 4.7e3, LineKind::Sideband, false},
        {"magnetic inhomogeneity", 0.3e3, LineKind::Both, true},
        {"gradient coil ripple", 51.4e3, LineKind::Both, true},
        {"stray field fluctuation", 2.5e3, LineKind::Both, true},
        {"trap depth inhomogeneity", 0.2e3, LineKind::Both, true},
        {"trap depth fluctuation", 0.3e3, LineKind::Both, true},
    };
    return b;
}

double quadrature_total(const NoiseBudget& budget, LineKind kind)
{
    budget.validate();
    double ss = 0.0;
    int count = 0;
    for (const auto& c : budget.components) {
        if (kind != LineKind::Both && c.kind != LineKind::Both && c.kind != kind)
            continue;
        ss += c.fwhm_hz * c.fwhm_hz;
        ++count;
    }
    if (count == 0)
        throw DegenerateInputError("quadrature_total: no component of the requested kind");
    return std::sqrt(ss);
}

Infidelity per_source_infidelity(double source_fwhm_hz, const TrapParams& trap, double rabi_hz,
                                 int samples, std::uint64_t seed, int threads, SourceModel model)
{
    TrapParams t = trap;
    double rabi = rabi_hz;
    if (model == SourceModel::DressedCarrier) {
        rabi = sideband_rabi(rabi_hz, trap.lamb_dicke, 0, 0);
        t.lamb_dicke = 0.0;
        t.mean_phonon = 0.0;
        t.fock_cutoff = 1;
    }
    const McResult r = pi_pulse_fidelity_mc(t, rabi, {source_fwhm_hz, seed, samples}, threads);
    return {1.0 - r.fidelity, r.std_error};
}

Infidelity motional_dephasing_infidelity(const TrapParams& trap, double rabi_hz)
{
    const McResult r = pi_pulse_fidelity_mc(trap, rabi_hz, {0.0, 1, 1});
    return {1.0 - r.fidelity, 0.0};
}

Infidelity total_infidelity(const NoiseBudget& budget, const TrapParams& trap, double rabi_hz,
                            int samples, std::uint64_t seed, int threads)
{
    const double total = quadrature_total(budget, LineKind::Carrier);
    const McResult r = pi_pulse_fidelity_mc(trap, rabi_hz, {total, seed, samples}, threads);
    return {1.0 - r.fidelity, r.std_error};
}

std::vector<BudgetRow> budget_report(const NoiseBudget& budget, const TrapParams& trap,
                                     const BudgetReportOptions& opt)
{
    budget.validate();
    std::vector<BudgetRow> rows;
    for (const auto& c : budget.components) {
        BudgetRow row;
        row.label = c.label;
        row.broadening_hz = c.fwhm_hz;
        if (c.detuning_error) {
            const Infidelity inf = per_source_infidelity(c.fwhm_hz, trap, opt.rabi_hz, opt.samples,
                                                         opt.seed, opt.threads, opt.model);
            row.infidelity = inf.value;
            row.std_error = inf.std_error;
        } else {
            row.has_infidelity = false;
        }
        rows.push_back(row);
    }

    BudgetRow motion;
    motion.label = "motional dephasing";
    motion.has_broadening = false;
    const Infidelity floor = motional_dephasing_infidelity(trap, opt.rabi_hz);
    motion.infidelity = floor.value;
    rows.push_back(motion);

    BudgetRow carrier;
    carrier.label = "total (carrier)";
    carrier.broadening_hz = quadrature_total(budget, LineKind::Carrier);
    const Infidelity tot =
        total_infidelity(budget, trap, opt.rabi_hz, opt.samples, opt.seed, opt.threads);
    carrier.infidelity = tot.value;
    carrier.std_error = tot.std_error;
    rows.push_back(carrier);

    BudgetRow sideband;
    sideband.label = "total (1st sideband)";
    sideband.broadening_hz = quadrature_total(budget, LineKind::Sideband);
    sideband.has_infidelity = false;
    rows.push_back(sideband);
    return rows;
}

void write_budget_csv(std::ostream& os, const std::vector<BudgetRow>& rows)
{
    CsvWriter csv(os);
    csv.header({"label", "broadening_kHz", "infidelity_pct", "stderr_pct"});
    for (const auto& r : rows) {
        csv.row({r.label, r.has_broadening ? format_number(r.broadening_hz * 1e-3) : "",
                 r.has_infidelity ? format_number(r.infidelity * 100.0) : "",
                 r.has_infidelity ? format_number(r.std_error * 100.0) : ""});
    }
}

double ionization_rate(double depth_mk, double beta_hz_per_mk2)
{
    if (!(depth_mk >= 0.0))
        throw DomainError("ionization_rate: trap depth must be >= 0");
    return beta_hz_per_mk2 * depth_mk * depth_mk;
}

}  // namespace planesel
