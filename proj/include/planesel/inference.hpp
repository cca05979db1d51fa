#pragma once

// Measurement-correction algebra for shelving experiments, the shelved Rabi
// fit, randomized-benchmarking decay fit and the optical-pumping cycle model.

#include "planesel/core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace planesel {

/// A fraction or probability with its standard error.
struct Measured {
    double value = 0.0;
    double std_error = 0.0;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    bool out_of_range = false;  // value outside [0, 1]; reported, never clipped
};

/// Least-squares fit that did not converge from any start.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, std::vector<double> residuals)
        : std::runtime_error(what), residuals(std::move(residuals))
    {
    }
    std::vector<double> residuals;
};

/// 1 - (B - A) / P_s
Estimate excitation_fidelity(const Measured& a, const Measured& b, const Measured& p_s);

/// (A - C) / (P_s P_3P2 - C)
Estimate repump_fidelity(const Measured& a, const Measured& c, const Measured& p_s,
                         const Measured& p_3p2);

/// E / D
Estimate init_population(const Measured& e, const Measured& d);

/// Forward relations the corrections invert.
double raw_fraction_b(double a, double p_s, double p_3p2);
double raw_fraction_a(double c, double p_s, double p_3p2, double p_r);

/// Parametric bootstrap: resample every input from a Gaussian of its
/// standard error and report the spread of f.
Estimate bootstrap_estimate(const std::function<double(const std::vector<double>&)>& f,
                            const std::vector<Measured>& inputs, int samples,
                            std::uint64_t seed);

struct ShelvedRabiParams {
    double p_s = 1.0;
    double p_3p2 = 0.0;
    double p_r = 1.0;
    double rabi_hz = 1.0;
    double phase_rad = 0.0;

    void validate() const;
};

/// P_s P_3P2 P_r + P_s (1 - P_3P2)(1 + sin(2 pi Omega t + phi)) / 2
double shelved_rabi_model(double t_s, const ShelvedRabiParams& p);

struct DataPoint {
    double x = 0.0;  // time in seconds, or sequence depth
    double y = 0.0;
    double sigma = 1.0;
};

struct ShelvedRabiFit {
    ShelvedRabiParams params;
    Eigen::Matrix3d covariance;  // order: P_3P2, Omega, phi
    double p_3p2_error = 0.0;
    double rabi_error = 0.0;
    double phase_error = 0.0;
    double chi2 = 0.0;
    int dof = 0;
    bool rabi_undetermined = false;  // oscillation amplitude too small to fix Omega
};

/// Weighted fit of {P_3P2, Omega, phi} with P_s and P_r held fixed.
ShelvedRabiFit fit_shelved_rabi(const std::vector<DataPoint>& data, double p_s, double p_r);

struct RbFit {
    double p = 1.0;
    double a0 = 0.0;
    double fidelity = 1.0;
    double p_error = 0.0;
    double a0_error = 0.0;
    double fidelity_error = 0.0;
    double chi2 = 0.0;
};

/// P(m) = A0 (p^m + 1/2) with p constrained to [0, 1]; F = (p + 1) / 2.
RbFit rb_decay_fit(const std::vector<DataPoint>& data);
RbFit rb_decay_fit(const std::vector<int>& depths, const std::vector<double>& survivals);

struct PumpingResult {
    double p1 = 0.0;
    double survival = 1.0;
};

/// State |1> is dark to the excitation: P1(N) = 1 - (1 - p_exc b)^N and
/// survival (1 - p_loss)^N.
PumpingResult pumping_markov(double p_exc, double branch_to_1, double p_loss_per_cycle, int cycles);

/// Columns (in order): t_or_depth, value, sigma.
std::vector<DataPoint> read_fit_data(std::istream& is);

}  // namespace planesel
