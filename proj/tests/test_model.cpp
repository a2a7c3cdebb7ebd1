#include <random>
#include <span>

#include "doctest.h"
#include "matchprior/matchprior.hpp"
#include "oracles.hpp"

using namespace matchprior;

TEST_SUITE("model") {
  TEST_CASE("bernoulli densities") {
    const auto g = Grid::from_points(Vector<double>{{0.0, 0.3, 1.0}}, 0, 1);
    const auto m = bernoulli_model(g);
    CHECK(m.q(1, 1) == doctest::Approx(0.3));
    CHECK(m.q(1, 0) == doctest::Approx(0.7));
    for (Index i = 0; i < 3; ++i) CHECK(m.q(i, 0) + m.q(i, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(bernoulli_model(Grid::uniform(-0.5, 1, 5)), DomainError);
    CHECK(model_lipschitz_constant(m) == doctest::Approx(1.0));
  }

  TEST_CASE("table models") {
    const auto g = Grid::uniform(0, 1, 2);
    const auto space = SampleSpace<double>::counting(Vector<double>{{0.0, 1.0}});
    Matrix<double> ok(2, 2);
    ok << 0.5, 0.5, 0.2, 0.8;
    CHECK_NOTHROW(model_from_table(g, space, ok));
    Matrix<double> bad(2, 2);
    bad << 0.5, 0.6, 0.2, 0.8;
    CHECK_THROWS_AS(model_from_table(g, space, bad), InvalidDensity);

    const auto fine = Grid::uniform(0, 1, 17);
    Matrix<double> tab(17, 2);
    for (Index i = 0; i < 17; ++i) tab.row(i) << 1 - fine.point(i), fine.point(i);
    const auto a = model_from_table(fine, space, tab);
    const auto b = bernoulli_model(fine);
    CHECK((a.q() - b.q()).cwiseAbs().maxCoeff() == 0.0);

    Matrix<double> flat = Matrix<double>::Constant(17, 2, 0.5);
    CHECK(model_lipschitz_constant(model_from_table(fine, space, flat)) == 0.0);
    Matrix<double> ramp(17, 2);
    for (Index i = 0; i < 17; ++i) {
      ramp(i, 1) = 0.4 * std::min(1.0, 2 * fine.point(i));
      ramp(i, 0) = 1 - ramp(i, 1);
    }
    CHECK(model_lipschitz_constant(model_from_table(fine, space, ramp)) == doctest::Approx(0.8));
  }

  TEST_CASE("mcshane examples") {
    const auto target = Grid::uniform(-1, 2, 7);  // -1, -0.5, 0, 0.5, 1, 1.5, 2
    std::vector<double> base{0.0, 1.0}, f{0.0, 0.0};
    const auto out = mcshane_extend<double>(base, f, 2.0, target);
    CHECK(out[0] == doctest::Approx(2.0));
    CHECK(out[3] == doctest::Approx(1.0));
    CHECK(out[6] == doctest::Approx(2.0));

    std::vector<double> single{0.5}, c{3.0};
    const auto lin = mcshane_extend<double>(single, c, 1.5, target);
    for (Index i = 0; i < target.size(); ++i)
      CHECK(lin[i] == doctest::Approx(3.0 + 1.5 * std::abs(target.point(i) - 0.5)));

    std::vector<double> pts(target.points().data(), target.points().data() + target.size());
    std::vector<double> vals{1, 2, 1.5, 0.5, 1, 2, 1};
    const auto same = mcshane_extend<double>(pts, vals, 10.0, target);
    for (Index i = 0; i < target.size(); ++i) CHECK(same[i] == vals[std::size_t(i)]);

    std::vector<double> empty;
    CHECK_THROWS_AS(mcshane_extend<double>(empty, empty, 1.0, target), EmptyExtensionBase);
  }

  TEST_CASE("mcshane against brute force") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    const auto target = Grid::uniform(-1, 2, 301);
    for (int k = 0; k < 10; ++k) {
      std::vector<double> base, f;
      for (Index i = 0; i < target.size(); i += 7 + k) {
        base.push_back(target.point(i));
        f.push_back(u(rng));
      }
      const double M = 20.0;
      const auto out = mcshane_extend<double>(base, f, M, target);
      std::vector<double> tp(target.points().data(), target.points().data() + target.size());
      const auto ref = oracle::mcshane(base, f, M, tp);
      for (Index i = 0; i < target.size(); ++i) CHECK(out[i] == doctest::Approx(ref[std::size_t(i)]).epsilon(1e-14));
    }
  }

  TEST_CASE("supermodel extension") {
    const auto g = Grid::uniform(0.2, 0.8, 13);
    const auto m = bernoulli_model(g);
    const auto self = supermodel_extend(m, g);
    CHECK((self.q() - m.q()).cwiseAbs().maxCoeff() == 0.0);

    const auto ext = extend_grid(g, 0.2);
    const auto s = supermodel_extend(m, ext.grid);
    for (Index i = 0; i < g.size(); ++i)
      for (Index x = 0; x < 2; ++x) CHECK(s.q(ext.offset + i, x) == m.q(i, x));
    // Off the original grid: q_hat = min(q(e) + |t - e|) per column, then
    // rows renormalized. At t < 0.2 the nearest base is 0.2.
    const Index first = 0;
    const double t = ext.grid.point(first);
    const double q1 = 0.2 + (0.2 - t), q0 = 0.8 + (0.2 - t);
    CHECK(s.q(first, 1) == doctest::Approx(q1 / (q0 + q1)));
    CHECK(s.q(first, 0) == doctest::Approx(q0 / (q0 + q1)));

    const auto space = SampleSpace<double>::counting(Vector<double>{{0.0, 1.0, 2.0}});
    Matrix<double> flat = Matrix<double>::Constant(13, 3, 1.0 / 3);
    const auto cm = supermodel_extend(model_from_table(g, space, flat), ext.grid);
    CHECK((cm.q().array() - 1.0 / 3).abs().maxCoeff() <= 1e-15);

    CHECK_THROWS_AS(supermodel_extend(bernoulli_model(Grid::uniform(0, 1, 5)), extend_grid(Grid::uniform(0, 1, 5), 0.5).grid),
                    UnboundedLogDensity);
  }
}
