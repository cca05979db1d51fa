#pragma once

// Linewidth budget: quadrature combination of named broadenings, the
// per-source pi-pulse infidelity ledger and the two-photon ionization law.

#include "planesel/core.hpp"
#include "planesel/fockdyn.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace planesel {

enum class LineKind { Carrier, Sideband, Both };

struct BudgetComponent {
    std::string label;
    double fwhm_hz = 0.0;
    LineKind kind = LineKind::Both;
    /// False for broadenings that are not shot-to-shot detuning errors.
    bool detuning_error = true;
};

struct NoiseBudget {
    std::vector<BudgetComponent> components;

    void validate() const;
};

/// Broadenings of the shelving line at the default operating point.
NoiseBudget default_budget();

/// sqrt(sum fwhm^2) over components of `kind` (Both counts for either line).
double quadrature_total(const NoiseBudget& budget, LineKind kind);

enum class SourceModel {
    /// Two-level atom at the thermal-ground carrier Rabi frequency
    /// Omega*exp(-eta^2/2); isolates the detuning error from motional dephasing.
    DressedCarrier,
    /// Full spin-motion model with the trap's thermal state.
    FullMotion,
};

struct Infidelity {
    double value = 0.0;
    double std_error = 0.0;
};

Infidelity per_source_infidelity(double source_fwhm_hz, const TrapParams& trap, double rabi_hz,
                                 int samples, std::uint64_t seed, int threads = 1,
                                 SourceModel model = SourceModel::DressedCarrier);

/// Noise-free infidelity of the full thermal model.
Infidelity motional_dephasing_infidelity(const TrapParams& trap, double rabi_hz);

/// Single full-model run with the combined carrier FWHM.
Infidelity total_infidelity(const NoiseBudget& budget, const TrapParams& trap, double rabi_hz,
                            int samples, std::uint64_t seed, int threads = 1);

struct BudgetRow {
    std::string label;
    double broadening_hz = 0.0;
    bool has_broadening = true;
    double infidelity = 0.0;
    double std_error = 0.0;
    bool has_infidelity = true;
};

struct BudgetReportOptions {
    double rabi_hz = 10.0e3;
    int samples = 1000;
    std::uint64_t seed = 1;
    int threads = 1;
    SourceModel model = SourceModel::DressedCarrier;
};

/// One row per component, then motional dephasing and the carrier/sideband totals.
std::vector<BudgetRow> budget_report(const NoiseBudget& budget, const TrapParams& trap,
                                     const BudgetReportOptions& opt);

/// Columns: label, broadening_kHz, infidelity_pct, stderr_pct; blanks where undefined.
void write_budget_csv(std::ostream& os, const std::vector<BudgetRow>& rows);

/// beta * U0^2 with U0 in mK and beta in Hz/mK^2.
double ionization_rate(double depth_mk, double beta_hz_per_mk2);

}  // namespace planesel
