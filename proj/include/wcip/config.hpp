#pragma once

#include "wcip/datagen.hpp"
#include "wcip/inversion.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace wcip {

/// Time axis of a run. Either `n_steps` at the stable step, or the stable grid over (0, T].
struct TimeConfig {
  double T = 12.0;
  std::optional<Index> n_steps;
  double cfl = 0.3;
};

struct RunConfig {
  DomainSpec domain;
  TimeConfig time;
  SourceSpec source;
  SolverOptions solver;
  PhantomSpec phantom;
  double zeta_fraction = 0.1;
  int fine_level = 1;
  int inversion_level = 0;
  bool allow_inverse_crime = false;
  TikhonovParams tikhonov;
  StoppingCriteria stopping;
  RefinementConfig refinement;
  std::optional<double> alpha0_eps, alpha0_sigma;
  NoiseSpec noise;
  std::filesystem::path output = "wcip_out";
  Index snapshot_every = 0;
};

/// Parses a JSON document; unknown keys are rejected. Relative phantom file
/// paths resolve against `base_dir`.
RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError on out-of-range parameters.
void validate(const RunConfig& config);

/// Time grid for a forward run on `domain`.
TimeGrid time_grid(const RunConfig& config, const HybridDomain& domain, double eps_max);

}  // namespace wcip
