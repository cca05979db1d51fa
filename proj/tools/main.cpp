// planesel: batch front end. Reads a sectioned config, applies flag
// overrides and runs one command, writing its artifacts to --out.

#include "commands.hpp"

#include "planesel/core.hpp"
#include "planesel/inference.hpp"
#include "planesel/lineshape.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace cli = planesel::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Plane-selective addressing simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::optional<int> threads;
    std::string data_path;

    app.add_option("--config", config_path, "Run configuration (TOML subset)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--samples", samples, "Monte-Carlo samples")->check(CLI::PositiveNumber);
    app.add_option("--threads", threads, "Worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);

    auto* spectrum = app.add_subcommand("spectrum", "Per-plane spectra and linewidth summary");
    auto* budget = app.add_subcommand("budget", "Linewidth and pi-pulse infidelity budget");
    auto* crosstalk = app.add_subcommand("crosstalk", "Crosstalk versus interplane distance");
    auto* hologram = app.add_subcommand("hologram", "Phase mask synthesis and spot verification");
    auto* fit = app.add_subcommand("fit", "Fit shelved-Rabi or benchmarking data");
    fit->add_option("--data", data_path, "Data CSV: t_or_depth, value, sigma")
        ->required()
        ->check(CLI::ExistingFile);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        cli::RunConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            cfg = cli::RunConfig::parse(in, config_path);
        }
        if (out_dir)
            cfg.set("run.out_dir", *out_dir);
        if (seed)
            cfg.set("run.seed", static_cast<double>(*seed));
        if (samples)
            cfg.set("run.samples", static_cast<double>(*samples));
        if (threads)
            cfg.set("run.threads", static_cast<double>(*threads));
        const std::filesystem::path out = cfg.text("run.out_dir");

        cli::CommandResult r;
        if (*spectrum)
            r = cli::cmd_spectrum(cfg, out);
        else if (*budget)
            r = cli::cmd_budget(cfg, out);
        else if (*crosstalk)
            r = cli::cmd_crosstalk(cfg, out);
        else if (*hologram)
            r = cli::cmd_hologram(cfg, out);
        else
            r = cli::cmd_fit(cfg, data_path, out);

        std::cout << r.summary;
        for (const auto& f : r.files)
            std::cout << "wrote " << f.string() << '\n';
        return 0;
    } catch (const planesel::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const planesel::DomainError& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return 2;
    } catch (const planesel::DegenerateInputError& e) {
        std::cerr << "degenerate input: " << e.what() << '\n';
        return 2;
    } catch (const planesel::AmbiguityError& e) {
        std::cerr << "ambiguous linewidth: " << e.what() << '\n';
        return 2;
    } catch (const planesel::FitError& e) {
        std::cerr << "fit failed: " << e.what() << '\n';
        return 3;
    } catch (const planesel::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
