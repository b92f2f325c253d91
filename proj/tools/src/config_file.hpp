#pragma once

#include <string>

#include "seqscore/simulation.hpp"

namespace seqscore::cli {

/// Reads a simulation config. Recognized keys: family, scheme, theta0,
/// beta_true, beta0, alpha, tau, batch, cap_n, replications, seed, method.
/// Unknown keys and malformed values raise ConfigError.
ExperimentConfig parse_experiment(const std::string& yaml_text);

/// The simulation keys plus m, effect_b (number or list) and reps.
MultipleStudyConfig parse_multiple_study(const std::string& yaml_text);

std::string read_text_file(const std::string& path);

}  // namespace seqscore::cli
