#pragma once

// Experiment configuration: strict-schema JSON ingestion (unknown keys
// rejected, physical constraints checked eagerly) and construction of the
// geometry / field / numerics objects the commands run on.

#include <nlohmann/json.hpp>

#include "fg/ansatz.hpp"
#include "fg/geometry.hpp"

namespace fg {

using json = nlohmann::json;

struct ExperimentConfig {
    json raw;  // validated snapshot

    DomainSpec domain;
    InterfaceSpec interface_;
    CoefficientField field;
    double tube_halfwidth = 0.0;

    AnsatzOptions numerics;  // k, S, hs, ny, gamma, taylor_order
    int nx = 0, nz = 0;      // solver / pencil grid

    json block(const std::string& name) const {
        return raw.contains(name) ? raw.at(name) : json::object();
    }
};

// Parses and validates; throws ConfigError on schema violations or physical
// constraint failures (b > 0, tube fits, extents ordered, ...).
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::string& path);

FermiChart make_chart(const ExperimentConfig& cfg);
FermiChart make_chart(const ExperimentConfig& cfg, int ny);

}  // namespace fg
