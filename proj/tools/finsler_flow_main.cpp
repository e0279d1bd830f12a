#include "finsler_flow/report.hpp"
#include "finsler_flow/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Structure checks, flows and level-set geometry for cooperative systems with a first integral"};
    app.set_version_flag("--version", finsler_flow::artifact_version());
    app.require_subcommand(1);

    std::string run_config;
    auto* run = app.add_subcommand("run", "Run every task in a configuration and write the report");
    run->add_option("config", run_config, "Configuration file (JSON)")->required();

    std::string check_config;
    auto* check = app.add_subcommand("check", "Print the structure report for the configured system");
    check->add_option("config", check_config, "Configuration file (JSON)")->required();

    app.add_subcommand("schema", "Print the report JSON schema");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*run)
        return finsler_flow::run_command(run_config, std::cout, std::cerr);
    if (*check)
        return finsler_flow::check_command(check_config, std::cout, std::cerr);
    std::cout << finsler_flow::report_schema();
    return 0;
}
