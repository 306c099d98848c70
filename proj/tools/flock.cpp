#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "flock/commands.hpp"
#include "flock/error.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Cucker-Smale flocking with singular weights: simulation and verification"};
    app.require_subcommand(1);

    std::string sim_config;
    auto* sim = app.add_subcommand("simulate", "integrate one configuration and write trajectory and diagnostics");
    sim->add_option("config", sim_config, "flat JSON configuration")->required();

    std::string mu_path, nu_path;
    auto* dist = app.add_subcommand("distance", "print the bounded-Lipschitz distance of two measure files");
    dist->add_option("mu", mu_path, "measure or ensemble JSON")->required();
    dist->add_option("nu", nu_path, "measure or ensemble JSON")->required();

    std::string conv_config;
    auto* conv = app.add_subcommand("converge", "run the mean-field convergence study of a configuration");
    conv->add_option("config", conv_config, "flat JSON configuration")->required();

    bool fast = false;
    std::string report = "verify.json";
    auto* ver = app.add_subcommand("verify", "run the acceptance suite");
    ver->add_flag("--fast", fast, "skip the slow mean-field study");
    ver->add_option("--out", report, "pass/fail JSON report path")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim || *conv) {
            const auto cfg = flock::load_config(*sim ? sim_config : conv_config);
            const std::string wanted = *sim ? "simulate" : "converge";
            if (!cfg.kind.empty() && cfg.kind != wanted) {
                std::cerr << "error: configuration is for '" << cfg.kind << "', not '" << wanted << "'\n";
                return 2;
            }
            return *sim ? flock::commands::simulate(cfg, std::cout) : flock::commands::converge(cfg, std::cout);
        }
        if (*dist)
            return flock::commands::distance(mu_path, nu_path, std::cout);
        return flock::commands::verify(fast, report, std::cout);
    } catch (const flock::Error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
}
