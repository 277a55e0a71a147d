#pragma once

// Batch front end: executes one command (approx / solve / spectrum / scan /
// weyl) against a validated config, persists CSV/JSON outputs under a
// content-addressed run directory, and aggregates runs into a summary.

#include <filesystem>

#include "fg/config.hpp"

namespace fg {

inline constexpr const char* kVersion = "fglab 1.0.0";

struct RunArtifact {
    std::string id;
    std::filesystem::path dir;
    json result;
};

RunArtifact run_command(const std::string& cmd, const ExperimentConfig& cfg,
                        const std::filesystem::path& outdir, int jobs = 1);

// Aggregates the "checks" arrays of prior runs into one summary; throws
// MissingRun for unknown ids. Returns {summary json, all_pass flag}.
std::pair<json, bool> aggregate_report(const std::vector<std::string>& run_ids,
                                       const std::filesystem::path& outdir);

}  // namespace fg
