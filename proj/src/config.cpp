#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "matchprior/run.hpp"

namespace matchprior::run {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_grid(const json& j, GridSpec& g) {
  read(j, "lo", g.lo);
  read(j, "hi", g.hi);
  read(j, "n", g.n);
  read(j, "layout", g.layout);
}

void parse_region(const json& j, RegionConfig<double>& r) {
  if (j.contains("kind")) r.kind = parse_region_kind(j.at("kind").get<std::string>());
  read(j, "alpha", r.alpha);
  read(j, "beta", r.beta);
  read(j, "delta", r.delta);
  read(j, "eta", r.eta);
  read(j, "gamma", r.gamma);
  read(j, "n_z", r.n_z);
  read(j, "bisect_tol", r.bisect_tol);
  read(j, "posterior_map_C", r.posterior_map_C);
  read(j, "extension_margin", r.extension_margin);
}

void parse_solver(const json& j, RunConfig& cfg) {
  auto& s = cfg.solver;
  read(j, "damping", s.damping);
  read(j, "max_iters", s.max_iters);
  read(j, "tol", s.tol);
  read(j, "restarts", s.restarts);
  if (j.contains("plus_convention")) s.convention = parse_plus_convention(j.at("plus_convention").get<std::string>());
  if (j.contains("init")) {
    const auto& init = j.at("init");
    if (init.is_string()) {
      if (init.get<std::string>() != "uniform") throw ConfigError("solver.init must be \"uniform\" or a mass list");
    } else {
      cfg.init_mass = init.get<std::vector<double>>();
    }
  }
}

void parse_demo(const json& j, DemoSpec& d) {
  read(j, "c_min", d.c_min);
  read(j, "c_max", d.c_max);
  read(j, "c_step", d.c_step);
  read(j, "c", d.c);
  read(j, "cell", d.cell);
  read(j, "alpha", d.alpha);
  read(j, "beta", d.beta);
  read(j, "delta", d.delta);
  read(j, "eta", d.eta);
  read(j, "n", d.n);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    if (j.contains("grid")) parse_grid(j.at("grid"), cfg.model.grid);
    read(j, "model", cfg.model.kind);
    if (j.contains("sample_space")) {
      read(j.at("sample_space"), "labels", cfg.model.labels);
      read(j.at("sample_space"), "nu", cfg.model.nu);
    }
    read(j, "q", cfg.model.q);
    if (j.contains("region")) parse_region(j.at("region"), cfg.region);
    if (j.contains("schedule")) {
      ScheduleSpec s;
      read(j.at("schedule"), "a", s.a);
      read(j.at("schedule"), "eps", s.eps);
      cfg.schedule = s;
    }
    if (j.contains("perturbation")) {
      const auto& p = j.at("perturbation");
      if (p.contains("kind")) {
        const auto k = p.at("kind").get<std::string>();
        if (k == "trivial")
          cfg.perturbation.kind = PerturbationKind::Trivial;
        else if (k == "convolution")
          cfg.perturbation.kind = PerturbationKind::Convolution;
        else
          throw ConfigError("unknown perturbation kind '" + k + "'");
      }
      if (p.contains("gamma")) {
        cfg.perturbation.gamma = p.at("gamma").get<double>();
        cfg.perturbation_gamma_set = true;
      }
    }
    if (j.contains("solver")) parse_solver(j.at("solver"), cfg);
    if (j.contains("seed")) cfg.solver.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("demo")) parse_demo(j.at("demo"), cfg.demo);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open configuration " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void finalize(RunConfig& cfg, const Overrides& o) {
  if (o.alpha) cfg.region.alpha = *o.alpha;
  if (o.a) {
    if (!cfg.schedule) cfg.schedule = ScheduleSpec{};
    cfg.schedule->a = *o.a;
  }
  if (o.tol) cfg.solver.tol = *o.tol;
  if (o.max_iters) cfg.solver.max_iters = *o.max_iters;
  if (o.damping) cfg.solver.damping = *o.damping;
  if (o.seed) cfg.solver.seed = *o.seed;

  if (cfg.schedule) {
    if (!(cfg.schedule->eps > 0)) throw ConfigError("schedule.eps is required with a schedule");
    const double C = std::isnan(cfg.region.posterior_map_C) ? 0.0 : cfg.region.posterior_map_C;
    apply_schedule(cfg.region, param_schedule(cfg.schedule->a, cfg.region.alpha, cfg.schedule->eps, C));
  }
  if (!cfg.perturbation_gamma_set) cfg.perturbation.gamma = cfg.region.gamma;
  cfg.region.validate();
  cfg.perturbation.validate();
  cfg.solver.validate();
}

Grid build_grid(const GridSpec& g) {
  if (g.layout == "uniform") return Grid::uniform(g.lo, g.hi, g.n);
  if (g.layout == "cell-centered") return Grid::cell_centered(g.lo, g.hi, g.n);
  throw ConfigError("unknown grid layout '" + g.layout + "'");
}

Model<double> build_model(const ModelSpec& spec) {
  const Grid grid = build_grid(spec.grid);
  if (spec.kind == "bernoulli") return bernoulli_model(grid);
  if (spec.kind != "table") throw ConfigError("unknown model '" + spec.kind + "'");
  const Index nx = Index(spec.labels.size());
  if (nx == 0) throw ConfigError("table model needs sample_space.labels");
  SampleSpace<double> space;
  space.points = Eigen::Map<const Vector<double>>(spec.labels.data(), nx);
  if (spec.nu.empty())
    space.nu = Vector<double>::Ones(nx);
  else if (Index(spec.nu.size()) == nx)
    space.nu = Eigen::Map<const Vector<double>>(spec.nu.data(), nx);
  else
    throw ConfigError("sample_space.nu must match labels");
  if (Index(spec.q.size()) != grid.size()) throw ConfigError("q must have one row per grid point");
  Matrix<double> q(grid.size(), nx);
  for (Index i = 0; i < grid.size(); ++i) {
    if (Index(spec.q[std::size_t(i)].size()) != nx) throw ConfigError("q rows must have one entry per label");
    for (Index j = 0; j < nx; ++j) q(i, j) = spec.q[std::size_t(i)][std::size_t(j)];
  }
  return model_from_table(grid, std::move(space), std::move(q));
}

DiscreteMeasure<double> initial_prior(const RunConfig& cfg, const Grid& grid) {
  if (!cfg.init_mass) return Measure::uniform(grid);
  if (Index(cfg.init_mass->size()) != grid.size()) throw ConfigError("solver.init must have one mass per grid point");
  return Measure::normalized(grid, Eigen::Map<const Vector<double>>(cfg.init_mass->data(), grid.size()));
}

RegionFamily<double> build_family(const RunConfig& cfg, const Model<double>& m) {
  if (cfg.region.kind == RegionKind::Trivial) return trivial_family(m.grid(), cfg.region.alpha);
  return make_family(m, cfg.region, cfg.perturbation);
}

}  // namespace matchprior::run
