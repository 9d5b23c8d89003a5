#include "wcip/config.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <sstream>

namespace wcip {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in '" + where + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void read_vec3(const json& j, const char* key, Vec3& out) {
  if (!j.contains(key)) return;
  std::vector<double> v;
  read(j, key, v);
  if (v.size() != 3) throw ConfigError(std::string("'") + key + "' must have 3 entries");
  out = Vec3(v[0], v[1], v[2]);
}

void read_index(const json& j, const char* key, Index& out) {
  if (!j.contains(key)) return;
  long long v = 0;
  read(j, key, v);
  out = static_cast<Index>(v);
}

Inclusion parse_inclusion(const json& j) {
  check_keys(j, "inclusion", {"shape", "center", "radius", "radii", "eps", "sigma", "stage"});
  Inclusion t;
  std::string shape = "sphere";
  read(j, "shape", shape);
  if (shape == "sphere") {
    t.shape = Inclusion::Shape::sphere;
    double r = 1.0;
    read(j, "radius", r);
    t.radii = Vec3::Constant(r);
  } else if (shape == "ellipsoid") {
    t.shape = Inclusion::Shape::ellipsoid;
    read_vec3(j, "radii", t.radii);
  } else {
    throw ConfigError("inclusion shape must be 'sphere' or 'ellipsoid'");
  }
  if (!j.contains("center")) throw ConfigError("inclusion needs a center");
  read_vec3(j, "center", t.center);
  read(j, "eps", t.eps);
  read(j, "sigma", t.sigma);
  read(j, "stage", t.stage);
  return t;
}

PhantomSpec parse_phantom(const json& j, const DomainSpec& domain, const std::filesystem::path& base_dir) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name.ends_with(".json")) {
      const std::filesystem::path p = base_dir.empty() ? std::filesystem::path(name) : base_dir / name;
      std::ifstream in(p);
      if (!in) throw ConfigError("phantom file " + p.string() + " does not exist");
      json inner;
      try {
        inner = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("phantom file " + p.string() + ": " + e.what());
      }
      PhantomSpec spec = parse_phantom(inner, domain, p.parent_path());
      if (spec.name.empty()) spec.name = p.stem().string();
      return spec;
    }
    return phantom_preset(name, domain);
  }
  check_keys(j, "phantom", {"name", "preset", "background_eps", "background_sigma", "layers", "inclusion", "eps_max",
                            "sigma_max"});
  PhantomSpec p;
  if (j.contains("preset")) p = phantom_preset(j.at("preset").get<std::string>(), domain);
  read(j, "name", p.name);
  read(j, "background_eps", p.background_eps);
  read(j, "background_sigma", p.background_sigma);
  read(j, "eps_max", p.eps_max);
  read(j, "sigma_max", p.sigma_max);
  if (j.contains("layers")) {
    p.layers.clear();
    for (const json& l : j.at("layers")) {
      check_keys(l, "layers", {"depth_lo", "depth_hi", "eps", "sigma"});
      Layer layer;
      read(l, "depth_lo", layer.depth_lo);
      read(l, "depth_hi", layer.depth_hi);
      read(l, "eps", layer.eps);
      read(l, "sigma", layer.sigma);
      p.layers.push_back(layer);
    }
  }
  if (j.contains("inclusion")) {
    if (j.at("inclusion").is_null())
      p.tumor.reset();
    else
      p.tumor = parse_inclusion(j.at("inclusion"));
  }
  return p;
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"domain", "time", "source", "solver", "phantom", "data", "inversion", "noise", "output",
                           "snapshot_every"});
  RunConfig c;
  if (j.contains("domain")) {
    const json& d = j.at("domain");
    check_keys(d, "domain", {"omega_lo", "omega_hi", "fem_lo", "fem_hi", "h"});
    read_vec3(d, "omega_lo", c.domain.omega_lo);
    read_vec3(d, "omega_hi", c.domain.omega_hi);
    read_vec3(d, "fem_lo", c.domain.fem_lo);
    read_vec3(d, "fem_hi", c.domain.fem_hi);
    read(d, "h", c.domain.h_fdm);
  }
  if (j.contains("time")) {
    const json& t = j.at("time");
    check_keys(t, "time", {"T", "n_steps", "cfl"});
    read(t, "T", c.time.T);
    if (t.contains("n_steps")) {
      Index n = 0;
      read_index(t, "n_steps", n);
      c.time.n_steps = n;
    }
    read(t, "cfl", c.time.cfl);
  }
  c.solver.cfl = c.time.cfl;
  if (j.contains("source")) {
    const json& s = j.at("source");
    check_keys(s, "source", {"omega", "t1", "amplitude", "component"});
    read(s, "omega", c.source.omega);
    read(s, "t1", c.source.t1);
    read(s, "amplitude", c.source.amplitude);
    read(s, "component", c.source.component);
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, "solver", {"boundary", "memory_cap_bytes", "nan_check_every"});
    std::string model = "model1";
    read(s, "boundary", model);
    if (model == "model1")
      c.solver.model = BoundaryModel::model1;
    else if (model == "absorbing_all")
      c.solver.model = BoundaryModel::absorbing_all;
    else
      throw ConfigError("solver.boundary must be 'model1' or 'absorbing_all'");
    read(s, "memory_cap_bytes", c.solver.memory_cap_bytes);
    read_index(s, "nan_check_every", c.solver.nan_check_every);
  }
  c.phantom = parse_phantom(j.contains("phantom") ? j.at("phantom") : json("homogeneous"), c.domain, base_dir);
  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"fine_level", "inversion_level", "allow_inverse_crime", "zeta_fraction"});
    read(d, "fine_level", c.fine_level);
    read(d, "inversion_level", c.inversion_level);
    read(d, "allow_inverse_crime", c.allow_inverse_crime);
    read(d, "zeta_fraction", c.zeta_fraction);
  }
  if (j.contains("inversion")) {
    const json& v = j.at("inversion");
    check_keys(v, "inversion",
               {"gamma_eps", "gamma_sigma", "p", "max_iters", "max_levels", "beta_tilde", "beta_tilde_eps",
                "beta_tilde_sigma", "beta_tilde_eps_per_level", "beta_tilde_sigma_per_level", "element_cap",
                "eta_eps", "eta_sigma", "theta_eps", "theta_sigma", "alpha0_eps", "alpha0_sigma"});
    read(v, "gamma_eps", c.tikhonov.gamma_eps);
    read(v, "gamma_sigma", c.tikhonov.gamma_sigma);
    read(v, "p", c.tikhonov.p);
    read_index(v, "max_iters", c.stopping.max_iters);
    read_index(v, "max_levels", c.stopping.max_refinements);
    if (v.contains("beta_tilde")) {
      read(v, "beta_tilde", c.refinement.beta_tilde_eps);
      c.refinement.beta_tilde_sigma = c.refinement.beta_tilde_eps;
    }
    read(v, "beta_tilde_eps", c.refinement.beta_tilde_eps);
    read(v, "beta_tilde_sigma", c.refinement.beta_tilde_sigma);
    read(v, "beta_tilde_eps_per_level", c.refinement.beta_tilde_eps_per_level);
    read(v, "beta_tilde_sigma_per_level", c.refinement.beta_tilde_sigma_per_level);
    read_index(v, "element_cap", c.refinement.element_cap);
    auto pair = [&](const char* key, double& a, double& b) {
      if (!v.contains(key)) return;
      std::vector<double> x;
      read(v, key, x);
      if (x.size() != 2) throw ConfigError(std::string("'") + key + "' must have 2 entries");
      a = x[0];
      b = x[1];
    };
    pair("eta_eps", c.stopping.eta_eps_1, c.stopping.eta_eps_2);
    pair("eta_sigma", c.stopping.eta_sigma_1, c.stopping.eta_sigma_2);
    pair("theta_eps", c.stopping.theta_eps_1, c.stopping.theta_eps_2);
    pair("theta_sigma", c.stopping.theta_sigma_1, c.stopping.theta_sigma_2);
    if (v.contains("alpha0_eps")) c.alpha0_eps = v.at("alpha0_eps").get<double>();
    if (v.contains("alpha0_sigma")) c.alpha0_sigma = v.at("alpha0_sigma").get<double>();
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    check_keys(n, "noise", {"delta", "seed"});
    read(n, "delta", c.noise.delta);
    read(n, "seed", c.noise.seed);
  }
  if (j.contains("output")) {
    std::string out;
    read(j, "output", out);
    c.output = out;
  }
  read_index(j, "snapshot_every", c.snapshot_every);
  validate(c);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config file " + path.string() + " does not exist");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void validate(const RunConfig& c) {
  validate(c.domain);
  validate(c.source);
  validate(c.phantom, c.domain);
  validate(c.tikhonov);
  validate(c.stopping);
  validate(c.refinement);
  if (!(c.time.T > 0.0)) throw ConfigError("time.T must be positive");
  if (c.time.n_steps && *c.time.n_steps < 0) throw ConfigError("time.n_steps must be nonnegative");
  if (!(c.time.cfl > 0.0 && c.time.cfl <= 1.0)) throw ConfigError("time.cfl must lie in (0, 1]");
  if (c.noise.delta < 0.0) throw ConfigError("noise.delta must be nonnegative");
  if (c.zeta_fraction < 0.0 || c.zeta_fraction >= 1.0) throw ConfigError("data.zeta_fraction must lie in [0, 1)");
  if (c.fine_level < 0 || c.inversion_level < 0) throw ConfigError("mesh levels must be nonnegative");
  if (c.snapshot_every < 0) throw ConfigError("snapshot_every must be nonnegative");
  if (c.solver.nan_check_every <= 0) throw ConfigError("solver.nan_check_every must be positive");
  if (c.alpha0_eps && !(*c.alpha0_eps > 0.0)) throw ConfigError("alpha0_eps must be positive");
  if (c.alpha0_sigma && !(*c.alpha0_sigma > 0.0)) throw ConfigError("alpha0_sigma must be positive");
}

TimeGrid time_grid(const RunConfig& config, const HybridDomain& domain, double eps_max) {
  if (config.time.n_steps) {
    TimeGrid g;
    g.dt = stable_dt(domain, eps_max, config.time.cfl);
    g.n_steps = *config.time.n_steps;
    g.T = g.dt * static_cast<double>(g.n_steps);
    return g;
  }
  return stable_time_grid(domain, eps_max, config.time.T, config.time.cfl);
}

}  // namespace wcip
