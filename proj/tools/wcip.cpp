#include "wcip/config.hpp"
#include "wcip/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace wcip;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kGeneric = 1;
constexpr int kConfig = 2;
constexpr int kInverseCrime = 3;
constexpr int kFileFormat = 4;
constexpr int kInstability = 5;

struct Flags {
  std::string config;
  std::string obs;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::optional<double> omega;
  std::optional<Index> levels;
  std::optional<double> beta_tilde;
  bool allow_inverse_crime = false;
  std::optional<Index> snapshot_every;
};

RunConfig load(const Flags& f) {
  if (f.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(f.config);
  if (!f.out.empty()) c.output = f.out;
  if (f.seed) c.noise.seed = *f.seed;
  if (f.noise) c.noise.delta = *f.noise;
  if (f.omega) c.source.omega = *f.omega;
  if (f.levels) c.stopping.max_refinements = *f.levels;
  if (f.beta_tilde) {
    c.refinement.beta_tilde_eps = *f.beta_tilde;
    c.refinement.beta_tilde_sigma = *f.beta_tilde;
  }
  if (f.allow_inverse_crime) c.allow_inverse_crime = true;
  if (f.snapshot_every) c.snapshot_every = *f.snapshot_every;
  validate(c);
  fs::create_directories(c.output);
  return c;
}

std::string step_name(const std::string& prefix, Index n, const char* ext) {
  std::ostringstream ss;
  ss << prefix << std::setw(6) << std::setfill('0') << n << ext;
  return ss.str();
}

/// Inversion mesh: the structured mesh refined `levels` times away from the overlap shell.
HybridDomain inversion_domain(const RunConfig& c) {
  HybridDomain d = build_hybrid_domain(c.domain);
  for (int level = 0; level < c.inversion_level; ++level) {
    std::vector<Index> marked;
    for (Index k = 0; k < d.fem.tet_count(); ++k) {
      bool pinned = false;
      for (Index v : d.fem.tets[static_cast<std::size_t>(k)]) pinned = pinned || d.fem_pinned[static_cast<std::size_t>(v)];
      if (!pinned) marked.push_back(k);
    }
    try {
      d = with_fem_mesh(d, refine_local(d.fem, marked, interface_vertices(d)));
    } catch (const MeshError& e) {
      throw ConfigError(std::string("inversion mesh refinement failed: ") + e.what());
    }
  }
  return d;
}

DataGenOptions datagen_options(const RunConfig& c, const fs::path& snapshot_dir) {
  DataGenOptions o;
  o.fine_level = c.fine_level;
  o.inversion_level = c.inversion_level;
  o.allow_inverse_crime = c.allow_inverse_crime;
  o.T = c.time.T;
  o.n_steps = c.time.n_steps;
  o.zeta_fraction = c.zeta_fraction;
  if (c.snapshot_every > 0 && !snapshot_dir.empty()) {
    fs::create_directories(snapshot_dir);
    o.snapshot_every = c.snapshot_every;
    o.snapshot = [snapshot_dir](Index n, const HybridDomain& d, const VectorField& u) {
      write_vtk(snapshot_dir / step_name("E_", n, ".vtk"), d.fem, {{"E_magnitude", magnitude(u), 1}, {"E", u, 3}});
    };
  }
  return o;
}

void write_phantom(const fs::path& path, const GeneratedData& data) {
  write_vtk(path, data.domain.fem, {{"eps", data.material.eps, 1}, {"sigma", data.material.sigma, 1}});
}

int cmd_forward(const Flags& f) {
  RunConfig c = load(f);
  DataGenOptions o = datagen_options(c, c.output / "snapshots");
  o.allow_inverse_crime = true;
  const GeneratedData data = generate_observations(build_hybrid_domain(c.domain), c.phantom, c.source, c.solver, o);
  write_observation_file(c.output / "forward.wcip", to_observation_file(data.domain, data.obs));
  write_phantom(c.output / "phantom.vtk", data);
  std::cout << "forward: " << data.grid.n_steps << " steps, dt " << data.grid.dt << ", "
            << data.obs.trace.nodes.size() << " nodes -> " << (c.output / "forward.wcip").string() << '\n';
  return kOk;
}

int cmd_generate(const Flags& f) {
  RunConfig c = load(f);
  const GeneratedData data = generate_observations(build_hybrid_domain(c.domain), c.phantom, c.source, c.solver,
                                                   datagen_options(c, c.output / "snapshots"));
  const ObservationSet noisy = add_noise(data.obs, c.noise);
  write_observation_file(c.output / "observations.wcip", to_observation_file(data.domain, noisy));
  write_phantom(c.output / "phantom.vtk", data);
  std::cout << "generate: " << data.grid.n_steps << " steps, noise " << c.noise.delta << ", seed " << c.noise.seed
            << " -> " << (c.output / "observations.wcip").string() << '\n';
  return kOk;
}

ObservationSet load_obs(const Flags& f, const RunConfig& c, const HybridDomain& domain) {
  if (f.obs.empty()) throw ConfigError("--obs is required");
  if (!fs::exists(f.obs)) throw ConfigError("observation file " + f.obs + " does not exist");
  return to_observation_set(domain, read_observation_file(f.obs), c.zeta_fraction);
}

CgaOptions cga_options(const RunConfig& c, std::ofstream& log) {
  CgaOptions o;
  o.alpha0_eps = c.alpha0_eps;
  o.alpha0_sigma = c.alpha0_sigma;
  o.on_iteration = [&log](const IterationLog& it) {
    log << it.m << ',' << it.J << ',' << it.norm_g_eps << ',' << it.norm_g_sigma << ','
        << it.alpha_eps << ',' << it.alpha_sigma << ',' << it.gamma_eps << ',' << it.gamma_sigma << '\n';
    log.flush();
  };
  return o;
}

std::ofstream open_log(const fs::path& path, bool with_level) {
  std::ofstream log(path);
  if (!log) throw Error("cannot open " + path.string());
  log << std::setprecision(17);
  log << (with_level ? "level," : "") << "m,J,norm_g_eps,norm_g_sigma,alpha_eps,alpha_sigma,gamma_eps,gamma_sigma\n";
  return log;
}

void write_level(const fs::path& dir, Index level, const HybridDomain& domain, const MaterialField& m) {
  write_vtk(dir / step_name("eps_level_", level, ".vtk"), domain.fem, {{"eps", m.eps, 1}});
  write_vtk(dir / step_name("sigma_level_", level, ".vtk"), domain.fem, {{"sigma", m.sigma, 1}});
}

void write_summary(const fs::path& path, const HybridDomain& domain, const CgaResult& r, Index levels) {
  const MaterialField& m = r.material;
  const double eps_max = m.eps.maxCoeff(), sigma_max = m.sigma.maxCoeff();
  // Centroid of the contrast above half its maximum, weighted by contrast and lumped mass.
  const Eigen::VectorXd mass = fem_geometry(domain.fem).lumped_mass;
  Vec3 centroid = Vec3::Zero();
  double weight = 0.0;
  for (Index v = 0; v < m.eps.size(); ++v) {
    const double c = m.eps(v) - 1.0;
    if (eps_max > 1.0 && c >= 0.5 * (eps_max - 1.0)) {
      centroid += c * mass(v) * domain.fem.vertices[static_cast<std::size_t>(v)];
      weight += c * mass(v);
    }
  }
  std::ofstream out(path);
  out << std::setprecision(17);
  out << "{\n  \"max_eps\": " << eps_max << ",\n  \"max_sigma\": " << sigma_max << ",\n  \"centroid\": ";
  if (weight > 0.0) {
    centroid /= weight;
    out << '[' << centroid(0) << ", " << centroid(1) << ", " << centroid(2) << ']';
  } else {
    out << "null";
  }
  out << ",\n  \"final_J\": " << r.final_J << ",\n  \"iterations\": " << r.log.size() << ",\n  \"levels\": " << levels
      << ",\n  \"converged\": " << (r.converged ? "true" : "false") << "\n}\n";
  std::cout << "max eps " << eps_max << ", max sigma " << sigma_max << ", final J " << r.final_J << '\n';
}

int cmd_invert(const Flags& f) {
  RunConfig c = load(f);
  const HybridDomain domain = inversion_domain(c);
  const ObservationSet obs = load_obs(f, c, domain);
  Problem problem;
  problem.domain = &domain;
  problem.grid = stable_time_grid(domain, c.phantom.eps_max, obs.end_time(), c.time.cfl);
  problem.source = c.source;
  problem.solver = c.solver;
  problem.obs = resample_observations(obs, problem.grid);
  std::ofstream log = open_log(c.output / "log.csv", false);
  const MaterialField initial = background_material(domain.fem, c.phantom.eps_max, c.phantom.sigma_max);
  const CgaResult r = cga_run(problem, initial, c.tikhonov, c.stopping, cga_options(c, log));
  write_level(c.output, 0, domain, r.material);
  write_summary(c.output / "summary.json", domain, r, 1);
  return kOk;
}

int cmd_invert_adaptive(const Flags& f) {
  RunConfig c = load(f);
  const HybridDomain domain = inversion_domain(c);
  const ObservationSet obs = load_obs(f, c, domain);
  std::ofstream log = open_log(c.output / "log.csv", true);
  AcgaOptions o;
  o.T = obs.end_time();
  Index level = 0;
  o.cga.alpha0_eps = c.alpha0_eps;
  o.cga.alpha0_sigma = c.alpha0_sigma;
  o.cga.on_iteration = [&log, &level](const IterationLog& it) {
    log << level << ',' << it.m << ',' << it.J << ',' << it.norm_g_eps << ',' << it.norm_g_sigma << ','
        << it.alpha_eps << ',' << it.alpha_sigma << ',' << it.gamma_eps << ',' << it.gamma_sigma << '\n';
    log.flush();
  };
  o.on_level = [&c, &level](Index i, const LevelResult& r) {
    write_level(c.output, i, r.domain, r.cga.material);
    std::cout << "level " << i << ": " << r.domain.fem.tet_count() << " tets, J " << r.cga.final_J << ", marked "
              << r.marked.size() << '\n';
    level = i + 1;
  };
  const MaterialField initial = background_material(domain.fem, c.phantom.eps_max, c.phantom.sigma_max);
  const AcgaResult r =
      acga_run(domain, obs, c.source, c.solver, initial, c.tikhonov, c.stopping, c.refinement, o);
  if (r.levels.empty()) throw Error("adaptive run produced no levels");
  if (r.partial) std::cerr << "warning: partial result: " << r.stop_reason << '\n';
  const LevelResult& last = r.levels.back();
  write_summary(c.output / "summary.json", last.domain, last.cga, static_cast<Index>(r.levels.size()));
  return kOk;
}

int cmd_gradcheck(const Flags& f) {
  RunConfig c = load(f);
  const HybridDomain domain = inversion_domain(c);
  DataGenOptions o = datagen_options(c, {});
  o.fine_level = 0;  // `domain` is already at the inversion level
  o.allow_inverse_crime = true;
  const GeneratedData data = generate_observations(domain, c.phantom, c.source, c.solver, o);
  Problem problem;
  problem.domain = &domain;
  problem.grid = data.grid;
  problem.source = c.source;
  problem.solver = c.solver;
  problem.obs = add_noise(data.obs, c.noise);
  // Interior base point, so that q +- tau d stays inside the boxes.
  MaterialField q = background_material(domain.fem, c.phantom.eps_max, c.phantom.sigma_max);
  for (Index v = 0; v < q.eps.size(); ++v) {
    if (domain.fem_pinned[static_cast<std::size_t>(v)]) continue;
    q.eps(v) = 0.5 * (1.0 + q.eps_max);
    q.sigma(v) = 0.25 * q.sigma_max;
  }

  std::mt19937_64 rng(c.noise.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec3 lo = c.domain.fem_lo.array() + 2.5 * c.domain.h_fdm, hi = c.domain.fem_hi.array() - 2.5 * c.domain.h_fdm;
  const Vec3 center = lo.array() + (hi - lo).array() * Vec3(u(rng), u(rng), u(rng)).array();
  const NodalField d_eps = bump_direction(domain, center, 1.5);
  const NodalField d_sigma = 0.1 * bump_direction(domain, center, 1.5);

  const std::vector<double> taus{1e-2, 1e-3, 1e-4};
  const DirectionalCheck check =
      directional_derivative_oracle(problem, q, c.tikhonov, c.tikhonov.gamma_eps, c.tikhonov.gamma_sigma, d_eps,
                                    d_sigma, taus);
  std::cout << std::setprecision(10) << "adjoint inner product " << check.inner_product << '\n';
  std::cout << "tau,fd_estimate,relative_error\n";
  for (std::size_t i = 0; i < taus.size(); ++i)
    std::cout << check.tau[i] << ',' << check.fd_estimate[i] << ',' << check.relative_error[i]
              << (i == check.plateau() ? ",plateau" : "") << '\n';
  return kOk;
}

void apply_threads() {
  if (const char* env = std::getenv("WCIP_THREADS")) {
    const int n = std::atoi(env);
    if (n <= 0) throw ConfigError("WCIP_THREADS must be a positive integer");
    Eigen::setNbThreads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wcip: time-domain microwave coefficient inversion"};
  app.require_subcommand(1);
  Flags flags;
  auto common = [&flags](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--seed", flags.seed, "Noise seed");
    sub->add_option("--noise", flags.noise, "Multiplicative noise level");
    sub->add_option("--omega", flags.omega, "Source frequency");
    sub->add_option("--levels", flags.levels, "Maximum adaptive refinement levels");
    sub->add_option("--beta-tilde", flags.beta_tilde, "Marking threshold for eps and sigma");
    sub->add_flag("--allow-inverse-crime", flags.allow_inverse_crime, "Permit data on the inversion mesh");
    sub->add_option("--snapshot-every", flags.snapshot_every, "VTK snapshot cadence in steps");
  };
  CLI::App* forward = app.add_subcommand("forward", "Forward simulation of the configured phantom");
  CLI::App* generate = app.add_subcommand("generate", "Noisy synthetic observations");
  CLI::App* invert = app.add_subcommand("invert", "CGA reconstruction on the initial mesh");
  CLI::App* adaptive = app.add_subcommand("invert-adaptive", "Adaptive reconstruction");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Adjoint gradient against finite differences");
  for (CLI::App* sub : {forward, generate, invert, adaptive, gradcheck}) common(sub);
  for (CLI::App* sub : {invert, adaptive}) sub->add_option("--obs", flags.obs, "Observation file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    apply_threads();
    if (*forward) return cmd_forward(flags);
    if (*generate) return cmd_generate(flags);
    if (*invert) return cmd_invert(flags);
    if (*adaptive) return cmd_invert_adaptive(flags);
    if (*gradcheck) return cmd_gradcheck(flags);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const InverseCrimeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInverseCrime;
  } catch (const FileFormatError& e) {
    std::cerr << "observation file error: " << e.what() << '\n';
    return kFileFormat;
  } catch (const InstabilityError& e) {
    std::cerr << "solver instability at step " << e.step << ": " << e.what() << '\n';
    return kInstability;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneric;
  }
  return kGeneric;
}
