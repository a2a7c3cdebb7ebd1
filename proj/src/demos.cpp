#include <cmath>
#include <numbers>

#include "matchprior/run.hpp"

namespace matchprior::run {

namespace {

Index cell_count(double lo, double hi, double cell) {
  if (!(cell > 0)) throw ConfigError("demo cell must be positive");
  return Index(std::ceil((hi - lo) / cell - 1e-9));
}

}  // namespace

std::vector<BallJumpRow> ball_jump(const DemoSpec& d) {
  if (!(d.c_step > 0) || d.c_max < d.c_min) throw ConfigError("bad c scan");
  const Grid grid = Grid::cell_centered(-11.0, 11.0, cell_count(-11.0, 11.0, d.cell));
  std::vector<BallJumpRow> rows;
  const auto steps = Index(std::floor((d.c_max - d.c_min) / d.c_step + 1e-9));
  for (Index k = 0; k <= steps; ++k) {
    const double c = d.c_min + double(k) * d.c_step;
    Vector<double> rho(grid.size());
    for (Index i = 0; i < grid.size(); ++i) {
      const double t = std::abs(grid.point(i));
      rho[i] = t <= 0.1 ? (1 - c) / 0.2 : (t >= 10 && t <= 11 ? c / 2 : 0.0);
    }
    const auto b = credible_ball(Density::normalized(grid, std::move(rho)), d.alpha);
    rows.push_back({c, b.radius});
  }
  return rows;
}

HpdFlip hpd_flip(const DemoSpec& d) {
  const double two_pi = 2 * std::numbers::pi;
  const Grid grid = Grid::cell_centered(0.0, two_pi, cell_count(0.0, two_pi, d.cell));
  Vector<double> up(grid.size()), down(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    up[i] = 2 + d.c * std::sin(grid.point(i));
    down[i] = 2 - d.c * std::sin(grid.point(i));
  }
  auto h1 = hpd_region(Density::normalized(grid, std::move(up)), d.alpha);
  auto h2 = hpd_region(Density::normalized(grid, std::move(down)), d.alpha);
  return {grid, h1.indicator.psi(), h2.indicator.psi()};
}

Figure1 figure1(const DemoSpec& d) {
  const Grid grid = Grid::uniform(-1.0, 1.0, d.n);
  const auto flat = Density::uniform(grid);
  const auto ball = credible_ball(flat, d.alpha);
  const auto family = relaxed_ball_family(grid, Vector<double>(flat.masses()), d.beta, grid);
  const double level = family.level(d.alpha, 1e-12);
  const auto quad = LevelQuadrature<double>::make(d.delta, d.eta, 33);
  const auto averaged = level_averaged(family, d.alpha, quad, 1e-12);
  const double r = correction_R(averaged, flat, d.alpha, 1e-12);
  return {grid, ball.indicator.psi(), family.field_at_level(level), corrected(averaged, r).psi(), level, r};
}

int run_demo(const std::string& kind, const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  const auto& d = cfg.demo;
  if (kind == "ball-jump") {
    Table t{{"c", "radius"}, {}};
    for (const auto& row : ball_jump(d)) t.rows.push_back({row.c, row.radius});
    write_csv(cfg.out / "ball_jump.csv", t);
  } else if (kind == "hpd-flip") {
    const auto h = hpd_flip(d);
    Table t{{"theta", "psi_1", "psi_2"}, {}};
    for (Index i = 0; i < h.grid.size(); ++i) t.rows.push_back({h.grid.point(i), h.psi_1[i], h.psi_2[i]});
    write_csv(cfg.out / "hpd_flip.csv", t);
  } else if (kind == "figure1") {
    const auto f = figure1(d);
    Table t{{"theta", "psi_ball", "psi_relaxed", "psi_perturbed"}, {}};
    for (Index i = 0; i < f.grid.size(); ++i)
      t.rows.push_back({f.grid.point(i), f.psi_ball[i], f.psi_relaxed[i], f.psi_perturbed[i]});
    write_csv(cfg.out / "figure1.csv", t);
  } else {
    throw ConfigError("unknown demo '" + kind + "'");
  }
  return 0;
}

}  // namespace matchprior::run
