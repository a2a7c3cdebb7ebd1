#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "matchprior/run.hpp"

namespace matchprior::run {

using nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  for (std::size_t k = 0; k < t.header.size(); ++k) out << (k ? "," : "") << t.header[k];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << fmt(row[k]);
    out << '\n';
  }
}

Table coverage_table(const Grid& grid, const CoverageReport<double>& r) {
  Table t{{"theta", "coverage", "z"}, {}};
  for (Index i = 0; i < grid.size(); ++i) t.rows.push_back({grid.point(i), r.coverage[i], r.z[i]});
  return t;
}

Table prior_table(const DiscreteMeasure<double>& prior) {
  Table t{{"theta", "mass"}, {}};
  for (Index i = 0; i < prior.size(); ++i) t.rows.push_back({prior.grid().point(i), prior.mass(i)});
  return t;
}

Table trace_table(const std::vector<TraceEntry<double>>& trace) {
  Table t{{"iter", "max_z", "w1_step"}, {}};
  // Iteration numbers run on across restarts.
  Index offset = 0, last = 0;
  int attempt = 0;
  for (const auto& e : trace) {
    if (e.attempt != attempt) {
      offset += last + 1;
      attempt = e.attempt;
    }
    last = e.iter;
    t.rows.push_back({double(offset + e.iter), e.max_z, e.w1_step});
  }
  return t;
}

namespace {

ordered_json params_json(const RunConfig& cfg) {
  const auto& r = cfg.region;
  ordered_json p;
  p["model"] = cfg.model.kind;
  p["grid"] = {{"lo", cfg.model.grid.lo}, {"hi", cfg.model.grid.hi}, {"n", cfg.model.grid.n},
               {"layout", cfg.model.grid.layout}};
  p["region"] = to_string(r.kind);
  p["alpha"] = r.alpha;
  p["beta"] = r.beta;
  p["delta"] = r.delta;
  p["eta"] = r.eta;
  p["gamma"] = r.gamma;
  p["n_z"] = r.n_z;
  if (cfg.schedule) p["schedule"] = {{"a", cfg.schedule->a}, {"eps", cfg.schedule->eps}};
  p["perturbation"] = cfg.perturbation.kind == PerturbationKind::Trivial ? "trivial" : "convolution";
  p["damping"] = cfg.solver.damping;
  p["max_iters"] = cfg.solver.max_iters;
  p["tol"] = cfg.solver.tol;
  p["restarts"] = cfg.solver.restarts;
  p["plus_convention"] = to_string(cfg.solver.convention);
  return p;
}

void write_json(const std::filesystem::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int run_solve(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  const auto m = build_model(cfg.model);
  const auto family = build_family(cfg, m);
  auto scfg = cfg.solver;
  scfg.init = initial_prior(cfg, m.grid());
  const auto result = solve_matching(m, family, scfg);

  write_csv(cfg.out / "prior.csv", prior_table(result.prior));
  write_csv(cfg.out / "coverage.csv", coverage_table(m.grid(), result.report));
  write_csv(cfg.out / "trace.csv", trace_table(result.trace));
  ordered_json s;
  s["converged"] = result.converged;
  s["max_z"] = result.report.max_z;
  s["iters"] = result.iterations;
  s["attempts"] = result.attempts;
  s["params"] = params_json(cfg);
  s["seed"] = cfg.solver.seed;
  write_json(cfg.out / "summary.json", s);
  return result.converged ? 0 : 1;
}

int run_coverage(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  const auto m = build_model(cfg.model);
  const auto prior = initial_prior(cfg, m.grid());
  const auto report = z_map(m, build_family(cfg, m), prior);
  write_csv(cfg.out / "coverage.csv", coverage_table(m.grid(), report));
  ordered_json s;
  s["matching"] = is_matching(report, cfg.solver.tol);
  s["max_z"] = report.max_z;
  s["argmax_theta"] = m.grid().point(report.argmax_theta);
  s["prior_average_z"] = prior_average_z(report, prior);
  s["params"] = params_json(cfg);
  s["seed"] = cfg.solver.seed;
  write_json(cfg.out / "summary.json", s);
  return 0;
}

int run_region(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  const auto m = build_model(cfg.model);
  const auto prior = initial_prior(cfg, m.grid());
  const auto fields = fields_by_datum(m, build_family(cfg, m), prior);
  Table t{{"theta"}, {}};
  for (Index x = 0; x < m.num_x(); ++x) t.header.push_back("psi_" + fmt(m.sample_space().points[x]));
  for (Index i = 0; i < m.grid().size(); ++i) {
    std::vector<double> row{m.grid().point(i)};
    for (const auto& f : fields) row.push_back(f ? f->psi(i) : 0.0);
    t.rows.push_back(std::move(row));
  }
  write_csv(cfg.out / "region.csv", t);
  return 0;
}

}  // namespace matchprior::run
