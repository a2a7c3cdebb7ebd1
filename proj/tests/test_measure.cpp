#include <random>

#include "doctest.h"
#include "matchprior/matchprior.hpp"
#include "oracles.hpp"

using namespace matchprior;

namespace {

Measure random_measure(const Grid& g, std::mt19937_64& rng) {
  auto w = oracle::random_weights(rng, std::size_t(g.size()));
  return Measure::normalized(g, Eigen::Map<Vector<double>>(w.data(), g.size()));
}

std::vector<std::pair<double, double>> pairs_of(const Measure& m) {
  std::vector<std::pair<double, double>> out;
  for (Index i = 0; i < m.size(); ++i)
    if (m.mass(i) > 0) out.push_back({m.grid().point(i), m.mass(i)});
  return out;
}

}  // namespace

TEST_SUITE("measure") {
  TEST_CASE("grid invariants") {
    const auto g = Grid::uniform(0, 1, 11);
    CHECK(g.size() == 11);
    CHECK(g.weights().sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(g.weight(0) == doctest::Approx(0.05));
    CHECK(g.weight(5) == doctest::Approx(0.1));
    const auto c = Grid::cell_centered(0, 1, 4);
    CHECK(c.point(0) == doctest::Approx(0.125));
    CHECK(c.weight(2) == doctest::Approx(0.25));
    CHECK_THROWS_AS(Grid::from_points(Vector<double>{{0.0, 0.5, 0.5}}, 0, 1), DomainError);
    CHECK(g.index_of(0.3).has_value() == false);
    CHECK(*g.index_of(g.point(3)) == 3);
    CHECK(g == g);
    CHECK(g == Grid::uniform(0, 1, 11));
    CHECK_FALSE(g == Grid::uniform(0, 1, 12));
  }

  TEST_CASE("measure validation") {
    const auto g = Grid::uniform(0, 1, 3);
    CHECK_THROWS_AS(Measure(g, Vector<double>{{0.5, 0.6, 0.0}}), InvalidMeasure);
    CHECK_THROWS_AS(Measure(g, Vector<double>{{1.5, -0.5, 0.0}}), InvalidMeasure);
    CHECK_THROWS_AS(Density(g, Vector<double>{{1.0, 2.0, 1.0}}), InvalidDensity);
    CHECK_NOTHROW(Density::uniform(g));
  }

  TEST_CASE("w1 examples") {
    const auto g = Grid::uniform(0, 1, 3);
    CHECK(w1_1d(Measure::dirac(g, 0), Measure::dirac(g, 2)) == doctest::Approx(1.0));
    const auto u = Measure::uniform(g);
    CHECK(w1_1d(u, u) == 0.0);
    CHECK(w1_1d(u, Measure::dirac(g, 1)) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    CHECK_THROWS_AS(w1_1d(u, Measure::uniform(Grid::uniform(0, 1, 4))), GridMismatch);
  }

  TEST_CASE("w1 metric axioms on random triples") {
    std::mt19937_64 rng(11);
    const auto g = Grid::uniform(-2, 3, 64);
    for (int k = 0; k < 20; ++k) {
      auto a = random_measure(g, rng), b = random_measure(g, rng), c = random_measure(g, rng);
      const double ab = w1_1d(a, b), ba = w1_1d(b, a), bc = w1_1d(b, c), ac = w1_1d(a, c);
      CHECK(ab >= 0);
      CHECK(std::abs(ab - ba) <= 1e-12);
      CHECK(ac <= ab + bc + 1e-9);
      CHECK(std::abs(ab - oracle::w1_sweep(pairs_of(a), pairs_of(b))) <= 1e-12);
    }
  }

  TEST_CASE("w1_flow examples and oracle agreement") {
    using A = Atom<double>;
    std::vector<A> a{{Vector<double>::Constant(1, 0.0), 1.0}};
    std::vector<A> b{{Vector<double>::Constant(1, 1.0), 1.0}};
    CHECK(w1_flow(a, b) == doctest::Approx(1.0));
    CHECK(w1_flow(a, a) == doctest::Approx(0.0));
    std::vector<A> half{{Vector<double>::Constant(1, 1.0), 0.5}};
    CHECK_THROWS_AS(w1_flow(a, half), UnbalancedTransport);

    // Two-dimensional atoms: unit square corners to its center.
    std::vector<A> corners, center{{Vector<double>{{0.5, 0.5}}, 1.0}};
    for (double x : {0.0, 1.0})
      for (double y : {0.0, 1.0}) corners.push_back({Vector<double>{{x, y}}, 0.25});
    CHECK(w1_flow(corners, center) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    std::mt19937_64 rng(5);
    const auto g = Grid::uniform(0, 1, 40);
    for (int k = 0; k < 10; ++k) {
      auto p = random_measure(g, rng), q = random_measure(g, rng);
      CHECK(std::abs(w1_flow(atoms_of(p), atoms_of(q)) - oracle::w1_sweep(pairs_of(p), pairs_of(q))) <= 1e-9);
    }
  }

  TEST_CASE("fatten_indices") {
    const auto g = Grid::uniform(0, 1, 11);
    const IndexSet s{5};
    CHECK(fatten_indices(g, s, 0.0) == s);
    CHECK(fatten_indices(g, s, 0.15) == IndexSet{4, 5, 6});
    IndexSet all(11);
    std::iota(all.begin(), all.end(), Index(0));
    CHECK(fatten_indices(g, all, 0.3) == all);
    CHECK(fatten_indices(g, IndexSet{}, 0.3).empty());
    // Monotone in eps and subset.
    const auto f1 = fatten_indices(g, s, 0.15), f2 = fatten_indices(g, s, 0.25);
    CHECK(std::includes(f2.begin(), f2.end(), f1.begin(), f1.end()));
    const auto f3 = fatten_indices(g, IndexSet{5, 9}, 0.15);
    CHECK(std::includes(f3.begin(), f3.end(), f1.begin(), f1.end()));
  }

  TEST_CASE("lipschitz_quotient") {
    const auto g = Grid::uniform(-1, 1, 2001);
    CHECK(lipschitz_quotient(g, Vector<double>::Constant(g.size(), 0.3)) == 0.0);
    CHECK(lipschitz_quotient(g, g.points()) == doctest::Approx(1.0).epsilon(1e-12));
    Vector<double> tent = (2.0 - 4.0 * g.points().array().abs()).max(0.0).min(1.0).matrix();
    CHECK(std::abs(lipschitz_quotient(g, tent) - 4.0) <= 1e-9);
  }

  TEST_CASE("mean_of") {
    const auto g = Grid::uniform(0, 1, 1001);
    CHECK(mean_of(Measure::dirac(g, 250)) == doctest::Approx(0.25));
    CHECK(mean_of(Density::uniform(g)) == doctest::Approx(0.5).epsilon(1e-12));
    const auto lin = Density::normalized(g, 2.0 * g.points());
    CHECK(mean_of(lin) == doctest::Approx(2.0 / 3).epsilon(1e-5));
  }

  TEST_CASE("grid extension keeps original points") {
    const auto g = Grid::uniform(0, 1, 101);
    const auto ext = extend_grid(g, 0.5);
    CHECK(ext.grid.lo() <= -0.5);
    CHECK(ext.grid.hi() >= 1.5);
    for (Index i = 0; i < g.size(); ++i) CHECK(ext.grid.point(ext.offset + i) == g.point(i));
    const auto m = embed(Measure::uniform(g), ext.grid);
    CHECK(m.mass().sum() == doctest::Approx(1.0));
    CHECK(m.mass(ext.offset) == doctest::Approx(1.0 / 101));
  }

  TEST_CASE("total variation") {
    const auto g = Grid::uniform(0, 1, 3);
    CHECK(total_variation(Measure::dirac(g, 0), Measure::dirac(g, 2)) == doctest::Approx(1.0));
  }
}
