#pragma once

#include <string>

#include <json.hpp>

#include "fcald/reconstruction.hpp"

namespace fcald {

/// CI-friendly exit code contract.
enum class ExitCode : int {
    Ok = 0,
    ThresholdFail = 2,
    SolverFail = 3,
    ConfigFail = 4,
};

/// Parsed experiment configuration; one JSON file drives every subcommand.
struct ExperimentConfig {
    nlohmann::json raw;
    GridSpec grid;
    uint64_t seed = 1;
    std::string experiment;  ///< "forward" | "verify-identity" | "reconstruct"

    static ExperimentConfig parse(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);

    NonlinearitySpec nonlinearity() const;         ///< ground-truth side
    ForwardOptions forward_options() const;
    EpsilonLadder ladder() const;
    uint64_t config_fingerprint() const;
    uint64_t grid_fingerprint() const;
    uint64_t spec_fingerprint() const;
};

/// Orchestration entry points used by the CLI; each writes its artifacts under
/// out_dir and returns the exit code. Timings go to a separate timing.json so
/// the numeric reports stay byte-deterministic.
ExitCode cmd_forward(const ExperimentConfig& cfg, const std::string& out_dir, int jobs);
ExitCode cmd_synth(const ExperimentConfig& cfg, const std::string& out_dir, int jobs);
ExitCode cmd_dnmap(const ExperimentConfig& cfg, const std::string& out_dir, int jobs);
ExitCode cmd_verify_identity(const ExperimentConfig& cfg, const std::string& out_dir, int jobs);
ExitCode cmd_reconstruct(const ExperimentConfig& cfg, const std::string& out_dir, int jobs);
ExitCode cmd_report(const std::vector<std::string>& report_paths, const std::string& out_csv);

}  // namespace fcald
