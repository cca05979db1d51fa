#include <doctest.h>

#include "planesel/inference.hpp"
#include "planesel/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace planesel;

namespace {

std::vector<DataPoint> rabi_data(const ShelvedRabiParams& p, int n, double t_max, double noise,
                                 std::uint64_t seed)
{
    CounterRng rng(seed, 0);
    std::vector<DataPoint> out;
    for (int k = 0; k < n; ++k) {
        const double t = t_max * k / (n - 1);
        const double y = shelved_rabi_model(t, p) + noise * rng.normal();
        out.push_back({t, y, noise > 0.0 ? noise : 1e-3});
    }
    return out;
}

// Finite-difference delta method, used as an independent route to the errors.
double numeric_error(const std::function<double(const std::vector<double>&)>& f,
                     const std::vector<Measured>& in)
{
    std::vector<double> x;
    for (const auto& m : in)
        x.push_back(m.value);
    double var = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double h = 1e-6;
        auto up = x, dn = x;
        up[i] += h;
        dn[i] -= h;
        const double d = (f(up) - f(dn)) / (2.0 * h);
        var += d * d * in[i].std_error * in[i].std_error;
    }
    return std::sqrt(var);
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("excitation fidelity")
{
    CHECK(excitation_fidelity({0.4, 0.01}, {0.4, 0.01}, {0.9, 0.01}).value == doctest::Approx(1.0));
    CHECK(excitation_fidelity({0.1, 0.0}, {0.9, 0.0}, {0.8, 0.0}).value == doctest::Approx(0.0));
    CHECK(excitation_fidelity({0.5, 0.0}, {0.59, 0.0}, {0.9, 0.0}).value == doctest::Approx(0.9));
    CHECK_THROWS_AS(excitation_fidelity({0.5, 0.0}, {0.59, 0.0}, {0.0, 0.0}), DomainError);
    const auto over = excitation_fidelity({0.5, 0.0}, {0.45, 0.0}, {0.9, 0.0});
    CHECK(over.out_of_range);
    CHECK(over.value > 1.0);
}

TEST_CASE("repump fidelity")
{
    const auto a = repump_fidelity({0.3, 0.0}, {0.0, 0.0}, {0.8, 0.0}, {0.75, 0.0});
    CHECK(a.value == doctest::Approx(0.3 / 0.6));
    CHECK(repump_fidelity({0.2, 0.0}, {0.2, 0.0}, {0.8, 0.0}, {0.75, 0.0}).value == 0.0);
    CHECK(repump_fidelity({0.6, 0.0}, {0.0, 0.0}, {0.8, 0.0}, {0.75, 0.0}).value == doctest::Approx(1.0));
    CHECK_THROWS_AS(repump_fidelity({0.6, 0.0}, {0.6, 0.0}, {0.8, 0.0}, {0.75, 0.0}),
                    DegenerateInputError);
}

TEST_CASE("initialization population")
{
    CHECK(init_population({0.63, 0.0}, {0.63, 0.0}).value == 1.0);
    CHECK(init_population({0.0, 0.0}, {0.63, 0.0}).value == 0.0);
    CHECK(std::abs(init_population({0.60, 0.0}, {0.63, 0.0}).value - 0.952) < 5e-4);
    CHECK(init_population({0.7, 0.0}, {0.63, 0.0}).out_of_range);
    CHECK_THROWS_AS(init_population({0.1, 0.0}, {0.0, 0.0}), DomainError);
}

TEST_CASE("corrections invert their forward relations")
{
    for (double ps : {0.6, 0.744, 0.95})
        for (double p3 : {0.1, 0.72, 0.99})
            for (double a : {0.05, 0.2}) {
                const double b = raw_fraction_b(a, ps, p3);
                CHECK(std::abs(excitation_fidelity({a, 0.0}, {b, 0.0}, {ps, 0.0}).value - p3) < 1e-12);
                for (double pr : {0.5, 0.982})
                    for (double c : {0.0, 0.03}) {
                        const double aa = raw_fraction_a(c, ps, p3, pr);
                        CHECK(std::abs(repump_fidelity({aa, 0.0}, {c, 0.0}, {ps, 0.0}, {p3, 0.0}).value -
                                       pr) < 1e-12);
                    }
            }
}

TEST_CASE("propagated errors match finite differences")
{
    const std::vector<Measured> in{{0.30, 0.02}, {0.41, 0.015}, {0.744, 0.035}};
    const auto est = excitation_fidelity(in[0], in[1], in[2]);
    const auto f = [](const std::vector<double>& x) { return 1.0 - (x[1] - x[0]) / x[2]; };
    CHECK(est.std_error == doctest::Approx(numeric_error(f, in)).epsilon(1e-6));

    const std::vector<Measured> r{{0.5, 0.02}, {0.02, 0.005}, {0.744, 0.035}, {0.72, 0.025}};
    const auto rep = repump_fidelity(r[0], r[1], r[2], r[3]);
    const auto g = [](const std::vector<double>& x) { return (x[0] - x[1]) / (x[2] * x[3] - x[1]); };
    CHECK(rep.std_error == doctest::Approx(numeric_error(g, r)).epsilon(1e-6));
}

TEST_CASE("bootstrap agrees with the delta method for small errors")
{
    const std::vector<Measured> in{{0.60, 0.004}, {0.63, 0.004}};
    const auto f = [](const std::vector<double>& x) { return x[0] / x[1]; };
    const auto boot = bootstrap_estimate(f, in, 4000, 5);
    const auto delta = init_population(in[0], in[1]);
    CHECK(boot.value == doctest::Approx(delta.value));
    CHECK(std::abs(boot.std_error / delta.std_error - 1.0) < 0.1);
    CHECK_THROWS_AS(bootstrap_estimate(f, in, 1, 5), ConfigError);
}

TEST_CASE("shelved Rabi model")
{
    ShelvedRabiParams p{0.744, 1.0, 0.982, 5e3, 0.3};
    for (double t : {0.0, 1e-5, 7e-5})
        CHECK(shelved_rabi_model(t, p) == doctest::Approx(0.744 * 0.982));

    ShelvedRabiParams q{1.0, 0.0, 1.0, 1e3, std::numbers::pi / 2};
    CHECK(shelved_rabi_model(0.0, q) == doctest::Approx(1.0));
    CHECK(std::abs(shelved_rabi_model(0.5e-3, q)) < 1e-12);

    ShelvedRabiParams r{0.744, 0.720, 0.982, 5e3, 0.0};
    const double hi = shelved_rabi_model(0.25 / 5e3, r);
    const double lo = shelved_rabi_model(0.75 / 5e3, r);
    CHECK(std::abs((hi - lo) - 0.744 * 0.28) < 1e-12);
    CHECK(std::abs((hi - lo) - 0.208) < 1e-3);
}

TEST_CASE("model mean over a period")
{
    ShelvedRabiParams p{0.744, 0.72, 0.982, 5e3, 1.1};
    const int n = 4000;
    const double period = 1.0 / p.rabi_hz;
    double s = 0.0;
    for (int k = 0; k < n; ++k)
        s += shelved_rabi_model((k + 0.5) * period / n, p);
    CHECK(std::abs(s / n - (p.p_s * p.p_3p2 * p.p_r + 0.5 * p.p_s * (1.0 - p.p_3p2))) < 1e-9);
}

TEST_CASE("noise-free fit recovers the parameters")
{
    const ShelvedRabiParams truth{0.744, 0.35, 0.982, 6.2e3, 2.0};
    const auto fit = fit_shelved_rabi(rabi_data(truth, 40, 5e-4, 0.0, 1), 0.744, 0.982);
    CHECK(std::abs(fit.params.p_3p2 - truth.p_3p2) < 1e-6);
    CHECK(std::abs(fit.params.rabi_hz / truth.rabi_hz - 1.0) < 1e-6);
    CHECK(std::abs(fit.params.phase_rad - truth.phase_rad) < 1e-6);
    CHECK_FALSE(fit.rabi_undetermined);
    CHECK(fit.dof == 37);
}

TEST_CASE("fit coverage on noisy data")
{
    const ShelvedRabiParams truth{0.744, 0.72, 0.982, 5e3, 0.7};
    int covered = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto data = rabi_data(truth, 30, 6e-4, 0.02, 1000 + static_cast<std::uint64_t>(trial));
        const auto fit = fit_shelved_rabi(data, truth.p_s, truth.p_r);
        if (std::abs(fit.params.p_3p2 - truth.p_3p2) <= 3.0 * fit.p_3p2_error)
            ++covered;
    }
    CHECK(covered >= 95);
}

TEST_CASE("flat data pins P_3P2 and flags the frequency")
{
    std::vector<DataPoint> data;
    for (int k = 0; k < 20; ++k)
        data.push_back({k * 2e-5, 0.744 * 0.982, 0.01});
    const auto fit = fit_shelved_rabi(data, 0.744, 0.982);
    CHECK(std::abs(fit.params.p_3p2 - 1.0) < 1e-3);
    CHECK(fit.rabi_undetermined);
    CHECK_THROWS_AS(fit_shelved_rabi({data.begin(), data.begin() + 4}, 0.744, 0.982),
                    DegenerateInputError);
}

TEST_CASE("benchmarking decay fit")
{
    const std::vector<int> depths{0, 1, 10, 25, 50, 100, 150, 200, 300, 400, 500};
    // Depth 0 separates p = 1 from p = 0 on flat data.
    std::vector<double> flat;
    for (std::size_t i = 0; i < depths.size(); ++i)
        flat.push_back(0.5 * 1.5);
    const auto perfect = rb_decay_fit(depths, flat);
    CHECK(perfect.p == doctest::Approx(1.0));
    CHECK(perfect.fidelity == doctest::Approx(1.0));

    const double p = 0.9942;
    CounterRng rng(21, 0);
    std::vector<DataPoint> data;
    for (int m : depths)
        data.push_back({static_cast<double>(m), 0.5 * (std::pow(p, m) + 0.5) + 0.01 * rng.normal(), 0.01});
    const auto fit = rb_decay_fit(data);
    CHECK(std::abs(fit.fidelity - 0.9971) < 5e-4);
    CHECK(fit.p >= 0.0);
    CHECK(fit.p <= 1.0);
    CHECK(fit.fidelity == doctest::Approx(0.5 * (fit.p + 1.0)));

    CHECK_THROWS_AS(rb_decay_fit(std::vector<int>{1, 5, 1, 5}, std::vector<double>{0.7, 0.6, 0.7, 0.6}),
                    DegenerateInputError);
}

TEST_CASE("pumping cycle model")
{
    CHECK(pumping_markov(0.83, 0.5, 0.01, 0).p1 == 0.0);
    CHECK(pumping_markov(1.0, 1.0, 0.0, 1).p1 == 1.0);
    const auto r = pumping_markov(0.83, 0.5, 0.0, 20);
    CHECK(std::abs(r.p1 - (1.0 - std::pow(0.585, 20))) < 1e-12);
    CHECK(r.p1 > 0.9999);
    CHECK(pumping_markov(0.83, 0.5, 0.01, 10).survival == doctest::Approx(std::pow(0.99, 10)));
    double prev = -1.0;
    for (int n = 0; n < 30; ++n) {
        const double v = pumping_markov(0.3, 0.5, 0.0, n).p1;
        CHECK(v >= prev);
        prev = v;
    }
    CHECK(pumping_markov(0.6, 0.5, 0.0, 5).p1 > pumping_markov(0.3, 0.5, 0.0, 5).p1);
    CHECK_THROWS_AS(pumping_markov(1.2, 0.5, 0.0, 5), DomainError);
}

TEST_CASE("fit data ingestion")
{
    std::istringstream in("t_s,value,sigma\n0,0.5,0.01\n1e-5,0.6,0.02\n");
    const auto d = read_fit_data(in);
    REQUIRE(d.size() == 2);
    CHECK(d[1].x == 1e-5);
    CHECK(d[1].sigma == 0.02);
    std::istringstream bad("t_s,value,sigma\n0,0.5,0\n");
    CHECK_THROWS_AS(read_fit_data(bad), ConfigError);
}

}  // TEST_SUITE inference
