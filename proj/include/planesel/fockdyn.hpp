#pragma once

// Coherent spin-motion dynamics of one atom on a narrow optical transition in
// a 1D harmonic trap, and Monte-Carlo pulse fidelities under shot-to-shot
// detuning noise.
//
// Basis ordering: (g, n = 0..N') followed by (e, n = 0..N').

#include "planesel/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <variant>
#include <vector>

namespace planesel {

struct SpinMotionState {
    int fock_cutoff = 0;
    Eigen::VectorXcd amplitudes;

    /// |g, n>
    static SpinMotionState ground(int n, int fock_cutoff);
    int fock_dim() const { return fock_cutoff + 1; }
    double excited_population() const;
    double norm() const { return amplitudes.norm(); }
};

struct SquarePulse {
    double duration_s = 0.0;
    double rabi_hz = 0.0;
    double detuning_hz = 0.0;
};

/// Hyperbolic-secant amplitude with a tanh detuning sweep.
struct Hs1Pulse {
    double duration_s = 1.0e-3;
    double peak_rabi_hz = 10.0e3;
    double sweep_half_range_hz = 30.0e3;
    double beta = 5.3;
    double center_detuning_hz = 0.0;

    double rabi_at(double t) const;
    double detuning_at(double t) const;
    /// Largest |d(Delta)/dt| over the pulse, in Hz/s.
    double max_sweep_rate() const;
};

using PulseShape = std::variant<SquarePulse, Hs1Pulse>;

void validate(const PulseShape& pulse);
double pulse_duration(const PulseShape& pulse);

struct DetuningNoise {
    double fwhm_hz = 0.0;
    std::uint64_t seed = 1;
    int samples = 1;
};

/// exp(i*eta*(a + a^dagger)) on Fock levels 0..N'.
Eigen::MatrixXcd lamb_dicke_operator(double eta, int fock_cutoff);

/// H/hbar in rad/s for detuning and Rabi frequency given in Hz.
Eigen::MatrixXcd build_hamiltonian(double detuning_hz, double rabi_hz, const TrapParams& trap);

/// |Omega_{ng,ne}| from the closed-form Laguerre expression, in Hz.
double sideband_rabi(double rabi_hz, double eta, int n_g, int n_e);

/// Generalized Laguerre polynomial L_n^alpha(x) by upward recurrence.
double generalized_laguerre(int n, double alpha, double x);

/// Exact propagator exp(-i H dt) of a frozen Hamiltonian (H in rad/s).
Eigen::MatrixXcd frozen_propagator(const Eigen::MatrixXcd& h_angular, double dt);

/// Largest time step accepted by evolve() for this pulse.
double max_stable_step(const PulseShape& pulse, const TrapParams& trap);

struct Trajectory {
    std::vector<double> times;
    std::vector<SpinMotionState> states;
};

/// Piecewise-frozen exact stepping; states[0] is the initial state and the
/// last entry is at the end of the pulse.
Trajectory evolve(const SpinMotionState& initial, const PulseShape& pulse,
                  const TrapParams& trap, double dt);

struct McResult {
    double fidelity = 0.0;
    double std_error = 0.0;
    double time_s = 0.0;  // optimal pulse time (square) or pulse duration (HS1)
    bool truncation_warning = false;
};

/// Thermally averaged excited population after a square pulse of fixed
/// duration, starting in the ground state.
double square_pulse_excitation(const TrapParams& trap, double rabi_hz, double detuning_hz,
                               double duration_s);

/// Max over time of the sample-averaged excited population for a square
/// drive of Rabi frequency rabi_hz.
McResult pi_pulse_fidelity_mc(const TrapParams& trap, double rabi_hz,
                              const DetuningNoise& noise, int threads = 1);

/// Final-time excited population after an HS1 pulse, sample averaged.
McResult hs1_fidelity_mc(const TrapParams& trap, const Hs1Pulse& pulse,
                         const DetuningNoise& noise, int threads = 1);

}  // namespace planesel
