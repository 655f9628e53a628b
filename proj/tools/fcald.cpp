#include <cstdlib>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "fcald/experiment.hpp"

using namespace fcald;

int main(int argc, char** argv) {
    CLI::App app{"fcald: semilinear Calderon laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;

    app.add_option("--config", config_path, "experiment config JSON");
    app.add_option("--jobs", jobs, "parallel workers for independent solves");
    app.add_option("--out", out_dir, "output directory (or env FCALD_OUT)");

    auto* c_forward = app.add_subcommand("forward", "solve one semilinear Dirichlet problem");
    auto* c_synth = app.add_subcommand("synth", "write ground-truth fields and spec");
    auto* c_dnmap = app.add_subcommand("dnmap", "run the measurement campaign, persist DN data");
    auto* c_verify = app.add_subcommand("verify-identity", "integral identity check");
    auto* c_recon = app.add_subcommand("reconstruct", "recover coefficients from DN data");
    auto* c_report = app.add_subcommand("report", "aggregate run reports into a CSV table");

    std::vector<std::string> report_inputs;
    std::string report_out = "summary.csv";
    c_report->add_option("inputs", report_inputs, "report.json files")->required();
    c_report->add_option("--csv", report_out, "output CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 4;
    }

    if (out_dir.empty()) {
        const char* env = std::getenv("FCALD_OUT");
        out_dir = env ? env : "out";
    }

    try {
        if (c_report->parsed()) return static_cast<int>(cmd_report(report_inputs, report_out));

        if (config_path.empty()) throw ConfigError("--config is required");
        ExperimentConfig cfg = ExperimentConfig::load(config_path);

        ExitCode code = ExitCode::ConfigFail;
        if (c_forward->parsed()) code = cmd_forward(cfg, out_dir, jobs);
        else if (c_synth->parsed()) code = cmd_synth(cfg, out_dir, jobs);
        else if (c_dnmap->parsed()) code = cmd_dnmap(cfg, out_dir, jobs);
        else if (c_verify->parsed()) code = cmd_verify_identity(cfg, out_dir, jobs);
        else if (c_recon->parsed()) code = cmd_reconstruct(cfg, out_dir, jobs);
        return static_cast<int>(code);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
