// Command-line runner for the verification experiments.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fdelab/cli.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Fast diffusion verification lab"};
    app.require_subcommand(1);

    std::string config, key, values, out;

    auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("--config", config, "config file")->required();
    run->add_option("--out", out, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run an experiment once per value of a numeric key");
    sweep->add_option("--config", config, "config file")->required();
    sweep->add_option("--key", key, "numeric config key")->required();
    sweep->add_option("--values", values, "comma-separated values")->required();
    sweep->add_option("--out", out, "output directory");

    auto* list = app.add_subcommand("list", "list experiments and their anchors");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return fdelab::cli::kExitError;
    }

    const std::optional<std::string> out_dir = out.empty() ? std::nullopt : std::optional<std::string>(out);
    if (*run) return fdelab::cli::run_command(config, out_dir, std::cout, std::cerr);
    if (*sweep) return fdelab::cli::sweep_command(config, key, values, out_dir, std::cout, std::cerr);
    if (*list) return fdelab::cli::list_command(std::cout);
    return fdelab::cli::kExitError;
}
