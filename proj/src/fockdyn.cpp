#include "planesel/fockdyn.hpp"

#include "planesel/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace planesel {

namespace {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

// i^n
cplx gauge_phase(int n)
{
    static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    return table[n & 3];
}

MatrixXd position_quadrature(int fock_cutoff)
{
    const int d = fock_cutoff + 1;
    MatrixXd x = MatrixXd::Zero(d, d);
    for (int n = 0; n + 1 < d; ++n) {
        x(n, n + 1) = std::sqrt(n + 1.0);
        x(n + 1, n) = x(n, n + 1);
    }
    return x;
}

// Under S = diag(i^n) the displacement operator becomes real:
// S^dagger exp(i eta X) S = exp(-eta Y) with Y real antisymmetric.
MatrixXd real_gauge_coupling(double eta, int fock_cutoff)
{
    const MatrixXcd d_op = lamb_dicke_operator(eta, fock_cutoff);
    const int d = fock_cutoff + 1;
    MatrixXd r(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            r(i, j) = (std::conj(gauge_phase(i)) * d_op(i, j) * gauge_phase(j)).real();
    return r;
}

// Real symmetric H/hbar (rad/s) in the gauge basis.
MatrixXd real_hamiltonian(double detuning_hz, double rabi_hz, double trap_hz,
                          const MatrixXd& coupling)
{
    const int d = static_cast<int>(coupling.rows());
    MatrixXd h = MatrixXd::Zero(2 * d, 2 * d);
    for (int n = 0; n < d; ++n) {
        const double ladder = trap_hz * (n + 0.5);
        h(n, n) = ladder;
        h(d + n, d + n) = ladder - detuning_hz;
    }
    h.block(d, 0, d, d) = 0.5 * rabi_hz * coupling;
    h.block(0, d, d, d) = 0.5 * rabi_hz * coupling.transpose();
    return kTwoPi * h;
}

VectorXcd to_gauge(const VectorXcd& psi, int d)
{
    VectorXcd out(psi.size());
    for (int k = 0; k < psi.size(); ++k)
        out(k) = std::conj(gauge_phase(k % d)) * psi(k);
    return out;
}

VectorXcd from_gauge(const VectorXcd& psi, int d)
{
    VectorXcd out(psi.size());
    for (int k = 0; k < psi.size(); ++k)
        out(k) = gauge_phase(k % d) * psi(k);
    return out;
}

// V diag(exp(-i lambda t)) V^T applied to a complex vector.
VectorXcd apply_real_spectral(const MatrixXd& v, const VectorXd& lambda, double t,
                              const VectorXcd& psi)
{
    VectorXcd coeff = v.transpose() * psi;
    for (int k = 0; k < lambda.size(); ++k)
        coeff(k) *= std::polar(1.0, -lambda(k) * t);
    return v * coeff;
}

// Thermal populations in |g,n> folded in as sqrt(w_n) column scales.
struct ThermalColumns {
    std::vector<int> levels;
    std::vector<double> amplitude;
};

ThermalColumns thermal_columns(const ThermalWeights& w)
{
    ThermalColumns out;
    for (std::size_t n = 0; n < w.size(); ++n) {
        if (w[n] > 0.0) {
            out.levels.push_back(static_cast<int>(n));
            out.amplitude.push_back(std::sqrt(w[n]));
        }
    }
    return out;
}

// Eigendecomposition of one Monte-Carlo sample's square-pulse Hamiltonian,
// reduced to what the excited population needs.
struct SampleSpectrum {
    VectorXd lambda;
    MatrixXd excited_rows;  // d x 2d
    MatrixXd start;         // 2d x m, V^T applied to weighted initial states
};

SampleSpectrum sample_spectrum(const MatrixXd& h, int d, const ThermalColumns& cols)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    if (es.info() != Eigen::Success)
        throw NumericalError("eigendecomposition failed");
    SampleSpectrum s;
    s.lambda = es.eigenvalues();
    const MatrixXd& v = es.eigenvectors();
    s.excited_rows = v.bottomRows(d);
    s.start.resize(v.cols(), static_cast<Eigen::Index>(cols.levels.size()));
    for (std::size_t j = 0; j < cols.levels.size(); ++j)
        s.start.col(static_cast<Eigen::Index>(j)) =
            cols.amplitude[j] * v.row(cols.levels[j]).transpose();
    return s;
}

double excited_population(const SampleSpectrum& s, double t)
{
    const Eigen::ArrayXd phase = s.lambda.array() * t;
    const VectorXd c = phase.cos().matrix();
    const VectorXd sn = phase.sin().matrix();
    const double re = (s.excited_rows * c.asDiagonal() * s.start).squaredNorm();
    const double im = (s.excited_rows * sn.asDiagonal() * s.start).squaredNorm();
    return re + im;
}

double sample_detuning(const DetuningNoise& noise, std::size_t index)
{
    if (noise.fwhm_hz == 0.0)
        return 0.0;
    CounterRng rng(noise.seed, index);
    return fwhm_to_sigma(noise.fwhm_hz) * rng.normal();
}

void validate_noise(const DetuningNoise& noise)
{
    if (!(noise.fwhm_hz >= 0.0))
        throw ConfigError("noise: FWHM must be >= 0");
    if (noise.samples < 1)
        throw ConfigError("noise: samples must be >= 1");
}

// Mean and standard error of the mean, reduced in index order.
std::pair<double, double> mean_and_sem(const std::vector<double>& x)
{
    double sum = 0.0;
    for (double v : x)
        sum += v;
    const double n = static_cast<double>(x.size());
    const double mean = sum / n;
    if (x.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

constexpr double kNormDriftLimit = 1.0e-6;
constexpr int kPiScanPoints = 600;
constexpr double kPiScanSpan = 1.5;

}  // namespace

SpinMotionState SpinMotionState::ground(int n, int fock_cutoff)
{
    if (fock_cutoff < 1 || n < 0 || n > fock_cutoff)
        throw DomainError("SpinMotionState::ground: level outside 0..N'");
    SpinMotionState s;
    s.fock_cutoff = fock_cutoff;
    s.amplitudes = VectorXcd::Zero(2 * (fock_cutoff + 1));
    s.amplitudes(n) = 1.0;
    return s;
}

double SpinMotionState::excited_population() const
{
    const int d = fock_dim();
    return amplitudes.tail(d).squaredNorm();
}

double Hs1Pulse::rabi_at(double t) const
{
    const double x = beta * (2.0 * t / duration_s - 1.0);
    return peak_rabi_hz / std::cosh(x);
}

double Hs1Pulse::detuning_at(double t) const
{
    const double x = beta * (2.0 * t / duration_s - 1.0);
    return center_detuning_hz + sweep_half_range_hz * std::tanh(x) / std::tanh(beta);
}

double Hs1Pulse::max_sweep_rate() const
{
    return std::abs(sweep_half_range_hz) * 2.0 * beta / (duration_s * std::tanh(beta));
}

void validate(const PulseShape& pulse)
{
    if (const auto* sq = std::get_if<SquarePulse>(&pulse)) {
        if (!(sq->duration_s > 0.0))
            throw ConfigError("pulse: duration must be > 0");
        if (!(sq->rabi_hz >= 0.0))
            throw ConfigError("pulse: Rabi frequency must be >= 0");
        return;
    }
    const auto& hs = std::get<Hs1Pulse>(pulse);
    if (!(hs.duration_s > 0.0))
        throw ConfigError("pulse: duration must be > 0");
    if (!(hs.peak_rabi_hz >= 0.0))
        throw ConfigError("pulse: peak Rabi frequency must be >= 0");
    if (!(hs.beta > 0.0))
        throw ConfigError("pulse: HS1 truncation beta must be > 0");
}

double pulse_duration(const PulseShape& pulse)
{
    return std::visit([](const auto& p) { return p.duration_s; }, pulse);
}

Eigen::MatrixXcd lamb_dicke_operator(double eta, int fock_cutoff)
{
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(position_quadrature(fock_cutoff));
    const MatrixXd& v = es.eigenvectors();
    VectorXcd phase(v.cols());
    for (int k = 0; k < v.cols(); ++k)
        phase(k) = std::polar(1.0, eta * es.eigenvalues()(k));
    return v.cast<cplx>() * phase.asDiagonal() * v.transpose().cast<cplx>();
}

Eigen::MatrixXcd build_hamiltonian(double detuning_hz, double rabi_hz, const TrapParams& trap)
{
    trap.validate();
    const int d = trap.fock_dim();
    const MatrixXcd d_op = lamb_dicke_operator(trap.lamb_dicke, trap.fock_cutoff);
    MatrixXcd h = MatrixXcd::Zero(2 * d, 2 * d);
    for (int n = 0; n < d; ++n) {
        const double ladder = trap.trap_frequency_hz * (n + 0.5);
        h(n, n) = ladder;
        h(d + n, d + n) = ladder - detuning_hz;
    }
    h.block(d, 0, d, d) = 0.5 * rabi_hz * d_op;
    h.block(0, d, d, d) = 0.5 * rabi_hz * d_op.adjoint();
    return kTwoPi * h;
}

double generalized_laguerre(int n, double alpha, double x)
{
    if (n < 0)
        throw DomainError("generalized_laguerre: degree must be >= 0");
    if (n == 0)
        return 1.0;
    double prev = 1.0;
    double cur = 1.0 + alpha - x;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

double sideband_rabi(double rabi_hz, double eta, int n_g, int n_e)
{
    if (n_g < 0 || n_e < 0)
        throw DomainError("sideband_rabi: Fock levels must be >= 0");
    const int lo = std::min(n_g, n_e);
    const int hi = std::max(n_g, n_e);
    const int dn = hi - lo;
    const double eta2 = eta * eta;
    // sqrt(lo!/hi!) * eta^dn as a running product keeps large levels finite.
    double scale = 1.0;
    for (int k = lo + 1; k <= hi; ++k)
        scale *= eta / std::sqrt(static_cast<double>(k));
    return std::abs(rabi_hz * std::exp(-0.5 * eta2) * scale * generalized_laguerre(lo, dn, eta2));
}

Eigen::MatrixXcd frozen_propagator(const Eigen::MatrixXcd& h_angular, double dt)
{
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h_angular);
    if (es.info() != Eigen::Success)
        throw NumericalError("frozen_propagator: eigendecomposition failed");
    VectorXcd phase(es.eigenvalues().size());
    for (int k = 0; k < phase.size(); ++k)
        phase(k) = std::polar(1.0, -es.eigenvalues()(k) * dt);
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

double max_stable_step(const PulseShape& pulse, const TrapParams& trap)
{
    validate(pulse);
    double fastest = trap.trap_frequency_hz;
    double limit = std::numeric_limits<double>::infinity();
    if (const auto* sq = std::get_if<SquarePulse>(&pulse)) {
        fastest = std::max({fastest, sq->rabi_hz, std::abs(sq->detuning_hz)});
    } else {
        const auto& hs = std::get<Hs1Pulse>(pulse);
        fastest = std::max({fastest, hs.peak_rabi_hz,
                            std::abs(hs.center_detuning_hz) + std::abs(hs.sweep_half_range_hz)});
        if (hs.peak_rabi_hz > 0.0)
            fastest = std::max(fastest, hs.max_sweep_rate() / hs.peak_rabi_hz);
        limit = hs.duration_s / 2000.0;
    }
    if (fastest > 0.0)
        limit = std::min(limit, 1.0 / (50.0 * fastest));
    return std::min(limit, pulse_duration(pulse));
}

Trajectory evolve(const SpinMotionState& initial, const PulseShape& pulse,
                  const TrapParams& trap, double dt)
{
    trap.validate();
    validate(pulse);
    const int d = trap.fock_dim();
    if (initial.fock_cutoff != trap.fock_cutoff || initial.amplitudes.size() != 2 * d)
        throw ConfigError("evolve: state dimension does not match trap Fock cutoff");
    if (std::abs(initial.norm() - 1.0) > 1e-9)
        throw DomainError("evolve: initial state is not normalized");
    if (!(dt > 0.0) || dt > max_stable_step(pulse, trap) * (1.0 + 1e-9))
        throw ConfigError("evolve: time step violates the stability rule (max " +
                          std::to_string(max_stable_step(pulse, trap)) + " s)");

    const double total = pulse_duration(pulse);
    const auto steps = static_cast<std::size_t>(std::ceil(total / dt - 1e-9));
    const MatrixXd coupling = real_gauge_coupling(trap.lamb_dicke, trap.fock_cutoff);

    Trajectory out;
    out.times.reserve(steps + 1);
    out.states.reserve(steps + 1);
    out.times.push_back(0.0);
    out.states.push_back(initial);

    auto record = [&](double t, const VectorXcd& gauge_state) {
        if (std::abs(gauge_state.norm() - 1.0) > kNormDriftLimit)
            throw NumericalError("evolve: norm drift exceeds tolerance");
        SpinMotionState s;
        s.fock_cutoff = trap.fock_cutoff;
        s.amplitudes = from_gauge(gauge_state, d);
        out.times.push_back(t);
        out.states.push_back(std::move(s));
    };

    const VectorXcd psi0 = to_gauge(initial.amplitudes, d);
    if (const auto* sq = std::get_if<SquarePulse>(&pulse)) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(
            real_hamiltonian(sq->detuning_hz, sq->rabi_hz, trap.trap_frequency_hz, coupling));
        for (std::size_t k = 1; k <= steps; ++k) {
            const double t = std::min(total, static_cast<double>(k) * dt);
            record(t, apply_real_spectral(es.eigenvectors(), es.eigenvalues(), t, psi0));
        }
        return out;
    }

    const auto& hs = std::get<Hs1Pulse>(pulse);
    VectorXcd psi = psi0;
    double t = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t_next = std::min(total, static_cast<double>(k) * dt);
        const double mid = 0.5 * (t + t_next);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(real_hamiltonian(
            hs.detuning_at(mid), hs.rabi_at(mid), trap.trap_frequency_hz, coupling));
        psi = apply_real_spectral(es.eigenvectors(), es.eigenvalues(), t_next - t, psi);
        t = t_next;
        record(t, psi);
    }
    return out;
}

double square_pulse_excitation(const TrapParams& trap, double rabi_hz, double detuning_hz,
                               double duration_s)
{
    trap.validate();
    const ThermalColumns cols = thermal_columns(thermal_weights(trap.mean_phonon, trap.fock_cutoff));
    const MatrixXd coupling = real_gauge_coupling(trap.lamb_dicke, trap.fock_cutoff);
    const MatrixXd h = real_hamiltonian(detuning_hz, rabi_hz, trap.trap_frequency_hz, coupling);
    return excited_population(sample_spectrum(h, trap.fock_dim(), cols), duration_s);
}

McResult pi_pulse_fidelity_mc(const TrapParams& trap, double rabi_hz,
                              const DetuningNoise& noise, int threads)
{
    trap.validate();
    validate_noise(noise);
    if (!(rabi_hz > 0.0))
        throw ConfigError("pi pulse: Rabi frequency must be > 0");

    const ThermalWeights weights = thermal_weights(trap.mean_phonon, trap.fock_cutoff);
    const ThermalColumns cols = thermal_columns(weights);
    const MatrixXd coupling = real_gauge_coupling(trap.lamb_dicke, trap.fock_cutoff);
    const int d = trap.fock_dim();
    // Noise-free runs are deterministic; one sample suffices.
    const std::size_t samples =
        noise.fwhm_hz == 0.0 ? 1 : static_cast<std::size_t>(noise.samples);

    const double effective_rabi =
        rabi_hz * std::exp(-0.5 * trap.lamb_dicke * trap.lamb_dicke);
    const double t_max = kPiScanSpan / effective_rabi;
    std::vector<double> grid(kPiScanPoints);
    for (int k = 0; k < kPiScanPoints; ++k)
        grid[static_cast<std::size_t>(k)] = t_max * k / (kPiScanPoints - 1);

    std::vector<SampleSpectrum> spectra(samples);
    std::vector<std::vector<double>> pops(samples);
    parallel_for(samples, threads, [&](std::size_t s) {
        const MatrixXd h = real_hamiltonian(sample_detuning(noise, s), rabi_hz,
                                            trap.trap_frequency_hz, coupling);
        spectra[s] = sample_spectrum(h, d, cols);
        pops[s].resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k)
            pops[s][k] = excited_population(spectra[s], grid[k]);
    });

    std::vector<double> mean(grid.size(), 0.0);
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t k = 0; k < grid.size(); ++k)
            mean[k] += pops[s][k];
    const auto best =
        static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());

    std::vector<double> at_t(samples);
    auto averaged = [&](double t) {
        parallel_for(samples, threads,
                     [&](std::size_t s) { at_t[s] = excited_population(spectra[s], t); });
        double sum = 0.0;
        for (double v : at_t)
            sum += v;
        return sum / static_cast<double>(samples);
    };

    // Golden-section refinement between the grid neighbours of the maximum.
    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min(best + 1, grid.size() - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = averaged(x1);
    double f2 = averaged(x2);
    for (int it = 0; it < 60 && hi - lo > 1e-12 * t_max; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = averaged(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = averaged(x1);
        }
    }
    double t_best = 0.5 * (lo + hi);
    if (averaged(t_best) < mean[best] / static_cast<double>(samples))
        t_best = grid[best];

    averaged(t_best);
    const auto [fid, sem] = mean_and_sem(at_t);

    McResult r;
    r.fidelity = std::clamp(fid, 0.0, 1.0);
    r.std_error = sem;
    r.time_s = t_best;
    r.truncation_warning = weights.truncation_warning();
    return r;
}

McResult hs1_fidelity_mc(const TrapParams& trap, const Hs1Pulse& pulse,
                         const DetuningNoise& noise, int threads)
{
    trap.validate();
    validate_noise(noise);
    validate(PulseShape{pulse});

    const ThermalWeights weights = thermal_weights(trap.mean_phonon, trap.fock_cutoff);
    const ThermalColumns cols = thermal_columns(weights);
    const MatrixXd coupling = real_gauge_coupling(trap.lamb_dicke, trap.fock_cutoff);
    const int d = trap.fock_dim();
    const auto m = static_cast<Eigen::Index>(cols.levels.size());
    const std::size_t samples =
        noise.fwhm_hz == 0.0 ? 1 : static_cast<std::size_t>(noise.samples);

    std::vector<double> finals(samples);
    parallel_for(samples, threads, [&](std::size_t s) {
        Hs1Pulse shot = pulse;
        shot.center_detuning_hz += sample_detuning(noise, s);
        const double dt_max = max_stable_step(PulseShape{shot}, trap);
        const auto steps = static_cast<int>(std::ceil(shot.duration_s / dt_max - 1e-9));
        const double dt = shot.duration_s / steps;

        // Real and imaginary parts of the weighted initial columns.
        MatrixXd re = MatrixXd::Zero(2 * d, m);
        MatrixXd im = MatrixXd::Zero(2 * d, m);
        for (Eigen::Index j = 0; j < m; ++j)
            re(cols.levels[static_cast<std::size_t>(j)], j) = cols.amplitude[static_cast<std::size_t>(j)];

        Eigen::SelfAdjointEigenSolver<MatrixXd> es(2 * d);
        for (int k = 0; k < steps; ++k) {
            const double mid = (k + 0.5) * dt;
            es.compute(real_hamiltonian(shot.detuning_at(mid), shot.rabi_at(mid),
                                        trap.trap_frequency_hz, coupling));
            const MatrixXd& v = es.eigenvectors();
            const Eigen::ArrayXd phase = es.eigenvalues().array() * dt;
            const Eigen::ArrayXd c = phase.cos();
            const Eigen::ArrayXd sn = phase.sin();
            const MatrixXd pr = v.transpose() * re;
            const MatrixXd pi = v.transpose() * im;
            // (c - i s)(pr + i pi)
            const MatrixXd nr = c.matrix().asDiagonal() * pr + sn.matrix().asDiagonal() * pi;
            const MatrixXd ni = c.matrix().asDiagonal() * pi - sn.matrix().asDiagonal() * pr;
            re.noalias() = v * nr;
            im.noalias() = v * ni;
        }
        const double norm2 = re.squaredNorm() + im.squaredNorm();
        if (std::abs(norm2 - 1.0) > kNormDriftLimit)
            throw NumericalError("hs1_fidelity_mc: norm drift exceeds tolerance");
        finals[s] = re.bottomRows(d).squaredNorm() + im.bottomRows(d).squaredNorm();
    });

    const auto [fid, sem] = mean_and_sem(finals);
    McResult r;
    r.fidelity = std::clamp(fid, 0.0, 1.0);
    r.std_error = sem;
    r.time_s = pulse.duration_s;
    r.truncation_warning = weights.truncation_warning();
    return r;
}

}  // namespace planesel
