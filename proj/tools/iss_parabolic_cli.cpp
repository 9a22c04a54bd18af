// iss-parabolic: run scenario files and suites.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "iss_parabolic/scenario.hpp"

namespace {

void report_failures(const issp::ScenarioResult& r) {
    if (!r.error.empty()) {
        std::cerr << r.name << ": error: " << r.error << '\n';
        return;
    }
    for (const auto& c : r.checks) {
        if (!c.pass) {
            std::cerr << r.name << ": check failed: " << c.id << " (min_margin=" << c.margin
                      << ")\n";
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulate parabolic PDEs with boundary inputs and certify ISS estimates"};
    app.require_subcommand(1);

    std::optional<std::string> out;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
    bool no_plots = false;
    app.add_option("--out", out, "Output root directory (default: $ISS_PARABOLIC_OUT or ./out)");
    app.add_option("--tol", tol, "Relative tolerance for the estimate checks")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "Seed overriding the scenario seeds");
    app.add_flag("--no-plots", no_plots, "Skip plot.svg");

    std::string file;
    auto* run = app.add_subcommand("run", "Run one scenario file");
    run->add_option("file", file, "Scenario file")->required();
    run->fallthrough();

    std::string dir;
    auto* suite = app.add_subcommand("suite", "Run every *.scn file of a directory");
    suite->add_option("dir", dir, "Scenario directory")->required();
    suite->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    issp::RunOptions options;
    options.out_root = issp::resolve_out_root(out ? std::optional<std::filesystem::path>(*out)
                                                  : std::nullopt);
    options.tolerance = tol;
    options.seed = seed;
    options.plots = !no_plots;

    if (run->parsed()) {
        const auto r = issp::run_scenario_file(file, options);
        issp::write_suite_header(std::cout);
        issp::write_suite_row(std::cout, r);
        report_failures(r);
        return r.exit_code;
    }

    const auto result = issp::run_suite(dir, options);
    if (result.rows.empty()) {
        std::cerr << "suite: no *.scn files in " << dir << '\n';
        return 2;
    }
    issp::write_suite_header(std::cout);
    for (const auto& r : result.rows) {
        issp::write_suite_row(std::cout, r);
        std::cout.flush();
        report_failures(r);
    }
    return result.exit_code;
}
