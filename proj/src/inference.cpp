#include "planesel/inference.hpp"

#include "planesel/csv.hpp"
#include "planesel/rng.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace planesel {

namespace {

bool outside_unit(double v) { return v < 0.0 || v > 1.0; }

double quad(std::initializer_list<std::pair<double, double>> terms)
{
    double s = 0.0;
    for (const auto& [deriv, err] : terms)
        s += deriv * deriv * err * err;
    return std::sqrt(s);
}

struct ShelvedResidual {
    const std::vector<DataPoint>& data;
    double p_s;
    double p_r;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(data.size()); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const
    {
        const ShelvedRabiParams p{p_s, x(0), p_r, x(1), x(2)};
        for (std::size_t i = 0; i < data.size(); ++i)
            fvec(static_cast<Eigen::Index>(i)) =
                (shelved_rabi_model(data[i].x, p) - data[i].y) / data[i].sigma;
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& fjac) const
    {
        for (std::size_t i = 0; i < data.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double t = data[i].x;
            const double theta = kTwoPi * x(1) * t + x(2);
            const double amp = 0.5 * p_s * (1.0 - x(0));
            const double inv = 1.0 / data[i].sigma;
            fjac(r, 0) = inv * (p_s * p_r - 0.5 * p_s * (1.0 + std::sin(theta)));
            fjac(r, 1) = inv * amp * std::cos(theta) * kTwoPi * t;
            fjac(r, 2) = inv * amp * std::cos(theta);
        }
        return 0;
    }
};

bool converged(Eigen::LevenbergMarquardtSpace::Status s)
{
    using namespace Eigen::LevenbergMarquardtSpace;
    switch (s) {
    case RelativeReductionTooSmall:
    case RelativeErrorTooSmall:
    case RelativeErrorAndReductionTooSmall:
    case CosinusTooSmall:
    case FtolTooSmall:
    case XtolTooSmall:
    case GtolTooSmall:
        return true;
    default:
        return false;
    }
}

// Weighted sinusoid scan: best frequency and (offset, sin, cos) amplitudes.
struct SineGuess {
    double freq;
    double offset;
    double s;
    double c;
};

SineGuess scan_frequency(const std::vector<DataPoint>& data)
{
    double t_lo = INFINITY;
    double t_hi = -INFINITY;
    for (const auto& d : data) {
        t_lo = std::min(t_lo, d.x);
        t_hi = std::max(t_hi, d.x);
    }
    const double span = t_hi - t_lo;
    const double n = static_cast<double>(data.size());
    const double f_lo = 0.25 / span;
    const double f_hi = 0.5 * n / span;
    const double df = 0.05 / span;

    SineGuess best{f_lo, 0.0, 0.0, 0.0};
    double best_chi2 = INFINITY;
    for (double f = f_lo; f <= f_hi; f += df) {
        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Eigen::Vector3d aty = Eigen::Vector3d::Zero();
        for (const auto& d : data) {
            const double w = 1.0 / (d.sigma * d.sigma);
            const Eigen::Vector3d row(1.0, std::sin(kTwoPi * f * d.x), std::cos(kTwoPi * f * d.x));
            ata += w * row * row.transpose();
            aty += w * d.y * row;
        }
        const Eigen::Vector3d coef = ata.ldlt().solve(aty);
        double chi2 = 0.0;
        for (const auto& d : data) {
            const double m = coef(0) + coef(1) * std::sin(kTwoPi * f * d.x) +
                             coef(2) * std::cos(kTwoPi * f * d.x);
            chi2 += (m - d.y) * (m - d.y) / (d.sigma * d.sigma);
        }
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best = {f, coef(0), coef(1), coef(2)};
        }
    }
    return best;
}

void validate_points(const std::vector<DataPoint>& data)
{
    for (const auto& d : data)
        if (!(d.sigma > 0.0) || !std::isfinite(d.x) || !std::isfinite(d.y))
            throw ConfigError("fit data: sigma must be > 0 and values finite");
}

}  // namespace

Estimate excitation_fidelity(const Measured& a, const Measured& b, const Measured& p_s)
{
    if (!(p_s.value > 0.0))
        throw DomainError("excitation_fidelity: survival probability must be > 0");
    const double ps = p_s.value;
    const double v = 1.0 - (b.value - a.value) / ps;
    const double err = quad({{1.0 / ps, a.std_error},
                             {-1.0 / ps, b.std_error},
                             {(b.value - a.value) / (ps * ps), p_s.std_error}});
    return {v, err, outside_unit(v)};
}

Estimate repump_fidelity(const Measured& a, const Measured& c, const Measured& p_s,
                         const Measured& p_3p2)
{
    const double num = a.value - c.value;
    const double den = p_s.value * p_3p2.value - c.value;
    if (std::abs(den) < 1e-15)
        throw DegenerateInputError("repump_fidelity: P_s P_3P2 - C vanishes");
    const double v = num / den;
    const double err = quad({{1.0 / den, a.std_error},
                             {(num - den) / (den * den), c.std_error},
                             {-num * p_3p2.value / (den * den), p_s.std_error},
                             {-num * p_s.value / (den * den), p_3p2.std_error}});
    return {v, err, outside_unit(v)};
}

Estimate init_population(const Measured& e, const Measured& d)
{
    if (!(d.value > 0.0))
        throw DomainError("init_population: D must be > 0");
    const double v = e.value / d.value;
    const double err =
        quad({{1.0 / d.value, e.std_error}, {-e.value / (d.value * d.value), d.std_error}});
    return {v, err, outside_unit(v)};
}

double raw_fraction_b(double a, double p_s, double p_3p2)
{
    return a + p_s * (1.0 - p_3p2);
}

double raw_fraction_a(double c, double p_s, double p_3p2, double p_r)
{
    return c + p_r * (p_s * p_3p2 - c);
}

Estimate bootstrap_estimate(const std::function<double(const std::vector<double>&)>& f,
                            const std::vector<Measured>& inputs, int samples,
                            std::uint64_t seed)
{
    if (samples < 2)
        throw ConfigError("bootstrap: need at least two resamples");
    std::vector<double> nominal;
    for (const auto& m : inputs)
        nominal.push_back(m.value);
    const double centre = f(nominal);

    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(samples));
    std::vector<double> x(inputs.size());
    for (int s = 0; s < samples; ++s) {
        CounterRng rng(seed, static_cast<std::uint64_t>(s));
        for (std::size_t i = 0; i < inputs.size(); ++i)
            x[i] = inputs[i].value + inputs[i].std_error * rng.normal();
        try {
            draws.push_back(f(x));
        } catch (const DomainError&) {
        } catch (const DegenerateInputError&) {
        }
    }
    if (draws.size() < 2)
        throw DegenerateInputError("bootstrap: estimator undefined for almost every resample");
    double mean = 0.0;
    for (double v : draws)
        mean += v;
    mean /= static_cast<double>(draws.size());
    double ss = 0.0;
    for (double v : draws)
        ss += (v - mean) * (v - mean);
    return {centre, std::sqrt(ss / static_cast<double>(draws.size() - 1)), outside_unit(centre)};
}

void ShelvedRabiParams::validate() const
{
    for (double p : {p_s, p_3p2, p_r})
        if (outside_unit(p))
            throw DomainError("shelved Rabi: probabilities must lie in [0, 1]");
    if (!(rabi_hz > 0.0))
        throw DomainError("shelved Rabi: Rabi frequency must be > 0");
}

double shelved_rabi_model(double t_s, const ShelvedRabiParams& p)
{
    return p.p_s * p.p_3p2 * p.p_r +
           0.5 * p.p_s * (1.0 - p.p_3p2) * (1.0 + std::sin(kTwoPi * p.rabi_hz * t_s + p.phase_rad));
}

ShelvedRabiFit fit_shelved_rabi(const std::vector<DataPoint>& data, double p_s, double p_r)
{
    if (data.size() < 5)
        throw DegenerateInputError("fit_shelved_rabi: need at least 5 points");
    validate_points(data);
    if (!(p_s > 0.0))
        throw DomainError("fit_shelved_rabi: P_s must be > 0");

    const SineGuess guess = scan_frequency(data);
    const double amp = std::hypot(guess.s, guess.c);
    const double p3_start = std::clamp(1.0 - 2.0 * amp / p_s, 0.0, 1.0);

    ShelvedResidual functor{data, p_s, p_r};
    Eigen::VectorXd best;
    double best_chi2 = INFINITY;
    Eigen::VectorXd last_residual(static_cast<Eigen::Index>(data.size()));
    for (double phi0 : {0.0, 0.5 * std::numbers::pi, std::numbers::pi, 1.5 * std::numbers::pi}) {
        Eigen::VectorXd x(3);
        x << p3_start, guess.freq, phi0;
        Eigen::LevenbergMarquardt<ShelvedResidual> lm(functor);
        lm.parameters.maxfev = 2000;
        const auto status = lm.minimize(x);
        Eigen::VectorXd fvec(static_cast<Eigen::Index>(data.size()));
        functor(x, fvec);
        last_residual = fvec;
        if (!converged(status) || !x.allFinite())
            continue;
        const double chi2 = fvec.squaredNorm();
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best = x;
        }
    }
    if (best.size() == 0)
        throw FitError("fit_shelved_rabi: no start converged",
                       std::vector<double>(last_residual.data(),
                                           last_residual.data() + last_residual.size()));

    // Canonical form: positive frequency, phase in [0, 2 pi).
    if (best(1) < 0.0) {
        best(1) = -best(1);
        best(2) = std::numbers::pi - best(2);
    }
    best(2) = std::fmod(best(2), kTwoPi);
    if (best(2) < 0.0)
        best(2) += kTwoPi;

    Eigen::MatrixXd jac(static_cast<Eigen::Index>(data.size()), 3);
    functor.df(best, jac);
    const Eigen::Matrix3d info = jac.transpose() * jac;
    Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix3d> cod(info);
    cod.setThreshold(1e-12);

    ShelvedRabiFit fit;
    fit.params = {p_s, best(0), p_r, best(1), best(2)};
    fit.chi2 = best_chi2;
    fit.dof = static_cast<int>(data.size()) - 3;
    if (cod.rank() < 3) {
        fit.covariance = cod.pseudoInverse();
        fit.rabi_undetermined = true;
        fit.p_3p2_error = std::sqrt(std::max(0.0, fit.covariance(0, 0)));
        fit.rabi_error = std::numeric_limits<double>::infinity();
        fit.phase_error = std::numeric_limits<double>::infinity();
        return fit;
    }
    fit.covariance = info.inverse();
    fit.p_3p2_error = std::sqrt(fit.covariance(0, 0));
    fit.rabi_error = std::sqrt(fit.covariance(1, 1));
    fit.phase_error = std::sqrt(fit.covariance(2, 2));
    fit.rabi_undetermined = !(fit.rabi_error < fit.params.rabi_hz);
    return fit;
}

RbFit rb_decay_fit(const std::vector<DataPoint>& data)
{
    validate_points(data);
    std::set<double> depths;
    for (const auto& d : data) {
        if (d.x < 0.0)
            throw DomainError("rb_decay_fit: depths must be >= 0");
        depths.insert(d.x);
    }
    if (depths.size() < 3)
        throw DegenerateInputError("rb_decay_fit: need at least 3 distinct depths");

    // For fixed p the amplitude is linear; profile it out and minimize over p.
    auto profile = [&](double p, double& a0) {
        double sgy = 0.0;
        double sgg = 0.0;
        for (const auto& d : data) {
            const double w = 1.0 / (d.sigma * d.sigma);
            const double g = std::pow(p, d.x) + 0.5;
            sgy += w * g * d.y;
            sgg += w * g * g;
        }
        a0 = sgy / sgg;
        double chi2 = 0.0;
        for (const auto& d : data) {
            const double r = d.y - a0 * (std::pow(p, d.x) + 0.5);
            chi2 += r * r / (d.sigma * d.sigma);
        }
        return chi2;
    };

    constexpr int kGrid = 4000;
    double a0 = 0.0;
    int best_k = 0;
    double best_chi2 = INFINITY;
    for (int k = 0; k <= kGrid; ++k) {
        const double chi2 = profile(static_cast<double>(k) / kGrid, a0);
        if (chi2 < best_chi2) {
            best_chi2 = chi2;
            best_k = k;
        }
    }
    double lo = std::max(0, best_k - 1) / static_cast<double>(kGrid);
    double hi = std::min(kGrid, best_k + 1) / static_cast<double>(kGrid);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = profile(x1, a0);
    double f2 = profile(x2, a0);
    for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
        if (f1 > f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = profile(x2, a0);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = profile(x1, a0);
        }
    }
    double p = 0.5 * (lo + hi);
    double chi2 = profile(p, a0);
    const double grid_p = static_cast<double>(best_k) / kGrid;
    double grid_a0 = 0.0;
    if (profile(grid_p, grid_a0) <= chi2) {
        p = grid_p;
        chi2 = profile(p, a0);
    }

    Eigen::MatrixXd jac(static_cast<Eigen::Index>(data.size()), 2);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double m = data[i].x;
        const double inv = 1.0 / data[i].sigma;
        jac(r, 0) = inv * (std::pow(p, m) + 0.5);
        jac(r, 1) = inv * (m > 0.0 ? a0 * m * std::pow(p, m - 1.0) : 0.0);
    }
    const Eigen::Matrix2d cov = (jac.transpose() * jac).inverse();

    RbFit fit;
    fit.p = p;
    fit.a0 = a0;
    fit.fidelity = 0.5 * (p + 1.0);
    fit.a0_error = std::sqrt(cov(0, 0));
    fit.p_error = std::sqrt(cov(1, 1));
    fit.fidelity_error = 0.5 * fit.p_error;
    fit.chi2 = chi2;
    return fit;
}

RbFit rb_decay_fit(const std::vector<int>& depths, const std::vector<double>& survivals)
{
    if (depths.size() != survivals.size())
        throw ConfigError("rb_decay_fit: depths and survivals differ in length");
    std::vector<DataPoint> data;
    for (std::size_t i = 0; i < depths.size(); ++i)
        data.push_back({static_cast<double>(depths[i]), survivals[i], 1.0});
    RbFit fit = rb_decay_fit(data);
    // Unweighted input: scale the covariance by the residual variance.
    const auto dof = static_cast<double>(data.size()) - 2.0;
    if (dof > 0.0) {
        const double s = std::sqrt(fit.chi2 / dof);
        fit.a0_error *= s;
        fit.p_error *= s;
        fit.fidelity_error *= s;
    }
    return fit;
}

PumpingResult pumping_markov(double p_exc, double branch_to_1, double p_loss_per_cycle, int cycles)
{
    for (double p : {p_exc, branch_to_1, p_loss_per_cycle})
        if (outside_unit(p))
            throw DomainError("pumping_markov: probabilities must lie in [0, 1]");
    if (cycles < 0)
        throw DomainError("pumping_markov: cycle count must be >= 0");
    const double n = static_cast<double>(cycles);
    return {1.0 - std::pow(1.0 - p_exc * branch_to_1, n), std::pow(1.0 - p_loss_per_cycle, n)};
}

std::vector<DataPoint> read_fit_data(std::istream& is)
{
    const CsvTable t = read_csv(is);
    if (t.header.size() < 3)
        throw ConfigError("fit data: expected columns t_or_depth, value, sigma");
    std::vector<DataPoint> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        out.push_back({t.number(r, 0), t.number(r, 1), t.number(r, 2)});
    validate_points(out);
    return out;
}

}  // namespace planesel
