#ifndef SELDYN_EXPERIMENT_HPP
#define SELDYN_EXPERIMENT_HPP

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "seldyn/control.hpp"
#include "seldyn/dynamics.hpp"

namespace seldyn {

/// Parsed-and-resolved experiment: everything a command needs, with
/// all referenced CSV data loaded.  `echo` carries the normalized
/// configuration document that reports embed, so a run can be
/// reproduced from its report alone.
struct Experiment {
  Grid grid = Grid::make_uniform(2, {0.0, 1.0});
  TimeGrid time;
  Activation act = Activation::tanh();
  Field f_I;
  ControlParams controls;
  std::optional<RankOneSpec> rank_one;  // set when the kernel source is rank-one
  std::optional<LossSpec> loss;
  std::optional<TrainConfig> train;
  int analyze_triples = 4;
  std::string output_dir = "out";
  nlohmann::json echo;
};

/// Parses the configuration document.  Relative CSV paths are resolved
/// against base_dir.  Throws ConfigError for structural problems and
/// file issues.
Experiment parse_experiment(const nlohmann::json& config,
                            const std::filesystem::path& base_dir);

/// Loads and parses a configuration file.
Experiment load_experiment(const std::filesystem::path& config_path);

const char* to_string(TrainAlgo algo);

}  // namespace seldyn

#endif
