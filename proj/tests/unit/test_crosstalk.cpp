#include <doctest.h>

#include "planesel/crosstalk.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace planesel;

namespace {

std::size_t peak_index(const SpectrumTrace& t)
{
    return static_cast<std::size_t>(std::max_element(t.values.begin(), t.values.end()) -
                                    t.values.begin());
}

}  // namespace

TEST_SUITE("crosstalk") {

TEST_CASE("default scenario")
{
    const auto sc = default_scenario(4, 4, 3.0);
    CHECK_NOTHROW(sc.validate());
    CHECK(sc.geometry.plane_count() == 11);
    CHECK(sc.target_plane == 5);
    CHECK(sc.noise_fwhm_hz() == doctest::Approx(375.0));
}

TEST_CASE("single plane has no crosstalk")
{
    auto sc = default_scenario(4, 4, 3.0);
    sc.geometry = make_cuboid(4, 4, 1, 4.0, 3.0);
    sc.target_plane = 0;
    const auto r = crosstalk_error(sc);
    CHECK(r.total == 0.0);
    CHECK(r.per_plane.size() == 1);
}

TEST_CASE("zero gradient gives identical plane spectra")
{
    auto sc = default_scenario(2, 2, 3.0);
    sc.geometry = make_cuboid(2, 2, 3, 4.0, 3.0);
    sc.target_plane = 1;
    sc.field.gradient_g_per_cm = 0.0;
    const auto grid = detuning_grid(5e3, 50.0);
    const auto a = plane_spectrum(sc, 0, grid);
    for (int p = 1; p < 3; ++p) {
        const auto b = plane_spectrum(sc, p, grid);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(std::abs(a.values[i] - b.values[i]) < 1e-12);
    }
}

TEST_CASE("adjacent planes are split by the plane sensitivity")
{
    auto sc = default_scenario(2, 2, 3.0);
    std::vector<double> grid;
    for (int k = -3000; k <= 3000; ++k)
        grid.push_back(337.5e3 + 1.0 * k);
    const auto t = plane_spectrum(sc, sc.target_plane + 1, grid);
    CHECK(std::abs(t.detunings_hz[peak_index(t)] - 337.5e3) < 100.0);
    const auto target = plane_spectrum(sc, sc.target_plane, detuning_grid(3e3, 1.0));
    // Off-axis sites carry a small second-order shift; the peak follows the plane mean.
    const auto shifts = site_detuning_map(sc.geometry, sc.field, sc.m_f);
    const auto members = sc.geometry.sites_in_plane(sc.target_plane);
    double mean = 0.0;
    for (auto i : members)
        mean += shifts[i] / static_cast<double>(members.size());
    CHECK(std::abs(target.detunings_hz[peak_index(target)] - mean) < 2.0);
    for (double v : t.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("weakly driven single-site planes show the natural width")
{
    AddressingScenario sc;
    sc.geometry = make_cuboid(1, 1, 2, 4.0, 3.0);
    sc.field.bias_g = 500.0;
    sc.field.gradient_g_per_cm = 300.0;
    sc.noise_g = 0.0;
    sc.spontaneous_hz = 100.0;
    sc.rabi_hz = 1.0;
    sc.trap.lamb_dicke = 0.0;
    const auto t = plane_spectrum(sc, 0, detuning_grid(2e3, 1.0));
    CHECK(std::abs(fwhm(t) / sc.spontaneous_hz - 1.0) < 0.02);
}

TEST_CASE("far-separated planes have negligible crosstalk")
{
    CHECK(crosstalk_error(default_scenario(4, 4, 30.0)).total < 1e-6);
}

TEST_CASE("crosstalk falls with distance and grows with noise and array size")
{
    auto base = default_scenario(4, 4, 3.0);
    SweepSpec spec;
    spec.dz_um = {1.5, 2.0, 3.0, 5.0, 8.0, 15.0, 30.0};
    spec.noise_g = {1e-4, 1e-3};
    spec.sizes = {{4, 4}, {40, 40}};
    const auto rows = distance_sweep(base, spec);
    REQUIRE(rows.size() == 2 * 2 * spec.dz_um.size());
    auto at = [&](int n, double noise, std::size_t k) {
        for (const auto& r : rows)
            if (r.nx == n && r.noise_g == noise && r.dz_um == spec.dz_um[k])
                return r.total;
        FAIL("missing sweep row");
        return 0.0;
    };
    for (std::size_t k = 0; k < spec.dz_um.size(); ++k) {
        for (int n : {4, 40})
            for (double noise : spec.noise_g)
                if (k > 0)
                    CHECK(at(n, noise, k) <= at(n, noise, k - 1));
        for (double noise : spec.noise_g)
            CHECK(at(40, noise, k) >= at(4, noise, k));
        for (int n : {4, 40})
            CHECK(at(n, 1e-3, k) > at(n, 1e-4, k));
    }
}

TEST_CASE("crosstalk falls as the gradient steepens")
{
    auto sc = default_scenario(4, 4, 3.0);
    double prev = 1.0;
    for (double b : {50.0, 100.0, 200.0, 300.0, 600.0}) {
        sc.field.gradient_g_per_cm = b;
        const double e = crosstalk_error(sc).total;
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("site order does not change the result")
{
    auto sc = default_scenario(3, 3, 2.5);
    const auto ref = crosstalk_error(sc);
    auto shuffled = sc;
    std::vector<std::size_t> order(sc.geometry.sites.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = (i * 37) % order.size();
    for (std::size_t i = 0; i < order.size(); ++i) {
        shuffled.geometry.sites[i] = sc.geometry.sites[order[i]];
        shuffled.geometry.plane_of[i] = sc.geometry.plane_of[order[i]];
    }
    const auto r = crosstalk_error(shuffled);
    CHECK(r.total == doctest::Approx(ref.total).epsilon(1e-14));
    for (std::size_t p = 0; p < ref.per_plane.size(); ++p)
        CHECK(r.per_plane[p] == doctest::Approx(ref.per_plane[p]).epsilon(1e-14));
    double sum = 0.0;
    for (double v : ref.per_plane)
        sum += v;
    CHECK(sum == doctest::Approx(ref.total).epsilon(1e-14));
}

TEST_CASE("aggregation alternatives are ordered")
{
    const auto r = crosstalk_error(default_scenario(10, 10, 2.0));
    CHECK(r.worst_site_total >= r.total);
    CHECK(r.site_sum_total >= r.worst_site_total);
    CHECK(r.total <= 10.0);
}

TEST_CASE("weak-drive tail matches the Lorentzian closed form")
{
    AddressingScenario sc;
    sc.geometry = make_cuboid(1, 1, 5, 4.0, 1.0);
    sc.field.bias_g = 500.0;
    sc.field.gradient_g_per_cm = 1.0;
    sc.noise_g = 0.0;
    sc.spontaneous_hz = 1000.0;
    sc.rabi_hz = 10.0;
    sc.trap.lamb_dicke = 0.0;
    sc.trap.mean_phonon = 0.0;
    sc.target_plane = 2;
    const auto r = crosstalk_error(sc);
    // Axial field is linear here, so the offset is m_F * g * b * dz.
    const double slope = sc.m_f * sc.field.zeeman_per_mf_hz_per_g * sc.field.gradient_g_per_cm * 1e-4;
    for (int p = 0; p < 5; ++p) {
        if (p == 2)
            continue;
        const double delta = slope * (p - 2) * 1.0;
        const double u = 2.0 * delta / sc.spontaneous_hz;
        const double expect = 1.0 / (1.0 + u * u);
        CHECK(std::abs(r.per_plane[static_cast<std::size_t>(p)] / expect - 1.0) < 0.1);
    }
}

TEST_CASE("pi-pulse comparison method")
{
    const auto sc = default_scenario(4, 4, 3.0);
    const auto r = crosstalk_error(sc, ExcitationMethod::PiPulse);
    CHECK(r.total >= 0.0);
    CHECK(r.total <= 10.0);
    CHECK(crosstalk_error(default_scenario(4, 4, 30.0), ExcitationMethod::PiPulse).total <
          r.total + 1e-12);
}

TEST_CASE("threshold crossing brackets the threshold")
{
    const auto sc = default_scenario(4, 4, 3.0);
    const double dz = threshold_crossing(sc, 1e-3, 0.5, 5.0, 0.05);
    REQUIRE(std::isfinite(dz));
    auto at = [&](double d) { return crosstalk_error(default_scenario(4, 4, d)).total; };
    CHECK(at(dz - 1e-3) >= 1e-3);
    CHECK(at(dz + 1e-3) < 1e-3);
    CHECK(std::isnan(threshold_crossing(sc, 10.0, 0.5, 5.0, 0.5)));
}

TEST_CASE("sweep validation and export")
{
    SweepSpec spec;
    spec.dz_um = {3.0, 2.0};
    spec.noise_g = {1e-4};
    spec.sizes = {{2, 2}};
    CHECK_THROWS_AS(distance_sweep(default_scenario(2, 2, 3.0), spec), ConfigError);
    std::ostringstream os;
    write_sweep_csv(os, {{3.0, 1e-4, 2, 2, 11, 0.5}});
    CHECK(os.str() == "dz_um,noise_G,nx,ny,nplanes,crosstalk_total\n3,0.0001,2,2,11,0.5\n");
}

}  // TEST_SUITE crosstalk
