#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bpdet/errors.hpp"
#include "bpdet/graph.hpp"
#include "bpdet/scenario.hpp"

namespace bpdet {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    int line_number;
};

// Minimal INI-style file: [section] headers, key = value pairs, '#' or ';'
// comments, blank lines ignored. Values keep internal whitespace.
struct ConfigEntry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
};
using ConfigSection = std::map<std::string, ConfigEntry>;
using ParsedConfig = std::map<std::string, ConfigSection>;

ParsedConfig parse_config_text(const std::string& text);
ParsedConfig load_config_file(const std::string& path);

enum class Recipe { dsnr_vs_iterations, roc_faulty_nodes, custom };

struct EngineConfig {
    bool linear = false;
    int iterations = 50;
};

struct ExperimentConfig {
    Recipe recipe = Recipe::custom;
    std::string name = "custom";
    long trials = 10000;
    std::uint64_t seed = 1;
    std::vector<int> iteration_grid;   // DSNR recipe x-axis
    int calibration_slots = 10000;
    int adaptation_window = 2500;      // T
    int link_copies = 10;              // L
    double roc_pf_point = 0.1;
    int roc_thresholds = 200;
};

struct ExperimentSpec {
    Topology topology{1, {}};
    CouplingSet couplings{Topology{1, {}}, 0.0};
    ScenarioConfig scenario;
    ErrorConfig errors;
    EngineConfig engine;
    ExperimentConfig experiment;
};

// Five-node ring-plus-chord reference network: two transmitters, energy-style
// coverage with per-node SNRs (-5,-8,-10,-8,-5) dB, K=100, J=0.4,
// faulty-node error preset left error-free (recipes override).
ExperimentSpec figure1_preset();

// Assemble and validate a full spec; throws ConfigError with line context.
ExperimentSpec spec_from_config(const ParsedConfig& config);

// Lint: returns human-readable problems (empty = valid). Unknown keys are
// reported as warnings prefixed "warning:".
std::vector<std::string> validate_config(const ParsedConfig& config);

}  // namespace bpdet
