#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rfan/rfan.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Two-stage adaptive trial simulation engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    int seeds_override = 0;
    int jobs = 1;

    CLI::App* run = app.add_subcommand("run", "Run the experiments in a config file");
    run->add_option("config", config_path, "Experiment config file")->required();
    run->add_option("--out", out_override, "Output directory (overrides config)");
    run->add_option("--seeds", seeds_override, "Number of seeds (overrides config)");
    run->add_option("--jobs", jobs, "Trials to run concurrently")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    rfan::ExperimentSpec spec;
    try {
        spec = rfan::parse_experiment_file(config_path);
        if (!out_override.empty()) spec.out_dir = out_override;
        if (seeds_override > 0) spec.n_seeds = seeds_override;
        spec.validate();
    } catch (const rfan::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const auto outcomes = rfan::run_experiment_spec(spec, jobs, std::cout);
        rfan::write_outputs(outcomes, spec);
        std::cout << "wrote " << spec.out_dir << "/results.csv and results.json\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
