#include "planesel/lineshape.hpp"

#include "planesel/csv.hpp"
#include "planesel/fockdyn.hpp"

#include <algorithm>
#include <cmath>

namespace planesel {

void SpectrumTrace::validate() const
{
    if (detunings_hz.size() != values.size())
        throw ConfigError("trace: detuning and value arrays differ in length");
    for (std::size_t i = 1; i < detunings_hz.size(); ++i)
        if (!(detunings_hz[i] > detunings_hz[i - 1]))
            throw ConfigError("trace: detuning grid is not strictly increasing");
}

void LineModel::validate() const
{
    if (!(linewidth_hz > 0.0))
        throw ConfigError("line model: linewidth must be > 0");
    if (!(rabi_hz >= 0.0))
        throw ConfigError("line model: Rabi frequency must be >= 0");
    trap.validate();
}

std::vector<double> detuning_grid(double half_span_hz, double pitch_hz)
{
    if (!(half_span_hz > 0.0) || !(pitch_hz > 0.0))
        throw ConfigError("detuning grid: span and pitch must be > 0");
    const auto half = static_cast<long>(std::llround(half_span_hz / pitch_hz));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(2 * half + 1));
    for (long k = -half; k <= half; ++k)
        grid.push_back(static_cast<double>(k) * pitch_hz);
    return grid;
}

std::vector<LorentzTerm> steady_state_terms(const LineModel& model,
                                            std::optional<int> sideband_order)
{
    model.validate();
    const ThermalWeights w = thermal_weights(model.trap.mean_phonon, model.trap.fock_cutoff);
    std::vector<LorentzTerm> terms;
    const int top = model.trap.fock_cutoff;
    for (int ng = 0; ng <= top; ++ng) {
        if (w[static_cast<std::size_t>(ng)] == 0.0)
            continue;
        for (int ne = 0; ne <= top; ++ne) {
            if (sideband_order && ne - ng != *sideband_order)
                continue;
            const double omega = sideband_rabi(model.rabi_hz, model.trap.lamb_dicke, ng, ne);
            const double s = (omega / model.linewidth_hz) * (omega / model.linewidth_hz);
            if (s == 0.0)
                continue;
            terms.push_back({w[static_cast<std::size_t>(ng)],
                             (ne - ng) * model.trap.trap_frequency_hz, s});
        }
    }
    return terms;
}

double evaluate_terms(const std::vector<LorentzTerm>& terms, double linewidth_hz,
                      double detuning_hz)
{
    double sum = 0.0;
    for (const auto& t : terms) {
        const double x = 2.0 * (detuning_hz - t.center_hz) / linewidth_hz;
        sum += t.weight * t.saturation / (1.0 + x * x + 2.0 * t.saturation);
    }
    return sum;
}

SpectrumTrace steady_state_spectrum(const LineModel& model, const std::vector<double>& grid,
                                    std::optional<int> sideband_order)
{
    const auto terms = steady_state_terms(model, sideband_order);
    SpectrumTrace out;
    out.detunings_hz = grid;
    out.values.reserve(grid.size());
    for (double x : grid)
        out.values.push_back(evaluate_terms(terms, model.linewidth_hz, x));
    out.validate();
    return out;
}

namespace {

double crossing(double x0, double y0, double x1, double y1, double level)
{
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0);
}

}  // namespace

double fwhm(const SpectrumTrace& trace)
{
    trace.validate();
    const auto& x = trace.detunings_hz;
    const auto& y = trace.values;
    if (y.size() < 3)
        throw DegenerateInputError("fwhm: trace too short");
    const auto peak_it = std::max_element(y.begin(), y.end());
    const double peak = *peak_it;
    if (!(peak > 0.0))
        throw DegenerateInputError("fwhm: trace has no positive maximum");
    const auto k = static_cast<std::size_t>(peak_it - y.begin());
    const double half = 0.5 * peak;

    if (k == 0 || k + 1 == y.size())
        throw AmbiguityError("fwhm: maximum lies on the grid edge", {});

    std::size_t l = k;
    while (l > 0 && y[l] > half)
        --l;
    std::size_t r = k;
    while (r + 1 < y.size() && y[r] > half)
        ++r;
    if (y[l] > half || y[r] > half)
        throw AmbiguityError("fwhm: half maximum not reached inside the grid", {});
    const double left = crossing(x[l], y[l], x[l + 1], y[l + 1], half);
    const double right = crossing(x[r - 1], y[r - 1], x[r], y[r], half);
    const double main_width = right - left;

    // Other regions above half maximum make the width ambiguous.
    std::size_t first = 0;
    while (y[first] <= half)
        ++first;
    std::size_t last = y.size() - 1;
    while (y[last] <= half)
        --last;
    if (first < l || last > r) {
        const double outer_left =
            first == 0 ? x.front() : crossing(x[first - 1], y[first - 1], x[first], y[first], half);
        const double outer_right = last + 1 == y.size()
                                       ? x.back()
                                       : crossing(x[last], y[last], x[last + 1], y[last + 1], half);
        throw AmbiguityError("fwhm: several disjoint regions above half maximum",
                             {main_width, outer_right - outer_left});
    }
    return main_width;
}

SpectrumTrace convolve_gaussian(const SpectrumTrace& trace, double fwhm_hz)
{
    trace.validate();
    const double sigma = fwhm_to_sigma(fwhm_hz);
    if (sigma == 0.0 || trace.size() < 2)
        return trace;

    const auto& x = trace.detunings_hz;
    const double pitch = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs((x[i] - x[i - 1]) - pitch) > 1e-6 * pitch)
            throw ConfigError("convolve_gaussian: detuning grid is not uniform");

    const auto half = static_cast<long>(std::floor(5.0 * sigma / pitch));
    if (half == 0)
        return trace;
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double norm = 0.0;
    for (long j = -half; j <= half; ++j) {
        const double u = static_cast<double>(j) * pitch / sigma;
        const double v = std::exp(-0.5 * u * u);
        kernel[static_cast<std::size_t>(j + half)] = v;
        norm += v;
    }
    for (auto& v : kernel)
        v /= norm;

    const auto n = static_cast<long>(x.size());
    SpectrumTrace out;
    out.detunings_hz = x;
    out.values.assign(x.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        const long jlo = std::max(-half, i - (n - 1));
        const long jhi = std::min(half, i);
        for (long j = jlo; j <= jhi; ++j)
            acc += kernel[static_cast<std::size_t>(j + half)] *
                   trace.values[static_cast<std::size_t>(i - j)];
        out.values[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

double thermal_sideband_height(const TrapParams& trap)
{
    trap.validate();
    const ThermalWeights w = thermal_weights(trap.mean_phonon, trap.fock_cutoff);
    double blue = 0.0;
    double red = 0.0;
    for (int n = 0; n <= trap.fock_cutoff; ++n) {
        const double carrier = sideband_rabi(1.0, trap.lamb_dicke, n, n);
        if (std::abs(carrier) < 1e-12)
            continue;
        const double wn = w[static_cast<std::size_t>(n)];
        const double up = sideband_rabi(1.0, trap.lamb_dicke, n, n + 1) / carrier;
        blue += wn * up * up;
        if (n >= 1) {
            const double down = sideband_rabi(1.0, trap.lamb_dicke, n, n - 1) / carrier;
            red += wn * down * down;
        }
    }
    return 0.5 * (blue + red);
}

SpectrumTrace synth_triple_lorentzian(double carrier_fwhm_hz, double sideband_fwhm_hz,
                                      double trap_hz, double relative_height, double peak_norm,
                                      const std::vector<double>& grid)
{
    if (!(carrier_fwhm_hz > 0.0) || !(sideband_fwhm_hz > 0.0))
        throw DomainError("synth_triple_lorentzian: widths must be > 0");
    if (!(relative_height >= 0.0) || !(peak_norm > 0.0))
        throw DomainError("synth_triple_lorentzian: heights must be non-negative");
    auto lorentz = [](double x, double c, double w) {
        const double u = 2.0 * (x - c) / w;
        return 1.0 / (1.0 + u * u);
    };
    SpectrumTrace out;
    out.detunings_hz = grid;
    out.values.reserve(grid.size());
    for (double x : grid)
        out.values.push_back(lorentz(x, 0.0, carrier_fwhm_hz) +
                             relative_height * (lorentz(x, -trap_hz, sideband_fwhm_hz) +
                                                lorentz(x, trap_hz, sideband_fwhm_hz)));
    out.validate();
    const double peak = *std::max_element(out.values.begin(), out.values.end());
    for (auto& v : out.values)
        v *= peak_norm / peak;
    return out;
}

void write_trace_csv(std::ostream& os, const SpectrumTrace& trace)
{
    CsvWriter csv(os);
    csv.header({"detuning_Hz", "excitation_probability"});
    for (std::size_t i = 0; i < trace.size(); ++i)
        csv.row({trace.detunings_hz[i], trace.values[i]});
}

}  // namespace planesel
