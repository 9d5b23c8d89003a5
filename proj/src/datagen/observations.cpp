#include "wcip/datagen.hpp"

#include <random>

namespace wcip {

GeneratedData generate_observations(const HybridDomain& domain, const PhantomSpec& phantom, const SourceSpec& source,
                                    const SolverOptions& solver, const DataGenOptions& options) {
  if (options.fine_level <= options.inversion_level && !options.allow_inverse_crime)
    throw InverseCrimeError("data mesh level " + std::to_string(options.fine_level) +
                            " is not finer than the inversion level " + std::to_string(options.inversion_level) +
                            " (inverse crime); pass the override to proceed");
  GeneratedData out;
  out.domain = data_domain(domain, phantom, options.fine_level);
  out.material = build_phantom(phantom, out.domain);
  if (options.n_steps) {
    out.grid.dt = stable_dt(out.domain, out.material.eps_max, solver.cfl);
    out.grid.n_steps = *options.n_steps;
    out.grid.T = out.grid.dt * double(out.grid.n_steps);
  } else {
    out.grid = stable_time_grid(out.domain, out.material.eps_max, options.T, solver.cfl);
  }

  ForwardOptions run;
  if (options.snapshot && options.snapshot_every > 0) {
    run.snapshot_every = options.snapshot_every;
    const HybridDomain* d = &out.domain;
    run.snapshot = [&options, d](Index n, const VectorField& u) { options.snapshot(n, *d, u); };
  }
  ForwardResult fwd = run_forward(out.domain, out.material, out.grid, source, solver, run);
  out.obs = make_observation_set(out.domain, std::move(fwd.trace), options.zeta_fraction);
  return out;
}

ObservationSet add_noise(const ObservationSet& obs, const NoiseSpec& noise) {
  if (noise.delta < 0.0) throw ConfigError("noise level must be nonnegative");
  ObservationSet out = obs;
  out.noise_level = noise.delta;
  out.seed = noise.seed;
  if (noise.delta == 0.0) return out;
  std::mt19937_64 rng(noise.seed);
  // Samples are drawn in payload order: step, node, component.
  double* v = out.trace.values.data();
  const Index n = out.trace.values.size();
  for (Index i = 0; i < n; ++i) {
    const double u = double(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
    v[i] *= 1.0 + noise.delta * u;
  }
  return out;
}

}  // namespace wcip
