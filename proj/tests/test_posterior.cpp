#include <random>

#include "doctest.h"
#include "matchprior/matchprior.hpp"
#include "oracles.hpp"

using namespace matchprior;

TEST_SUITE("posterior") {
  TEST_CASE("marginals") {
    const auto g = Grid::uniform(0, 1, 101);
    const auto m = bernoulli_model(g);
    CHECK(marginal(m, Measure::uniform(g))[1] == doctest::Approx(0.5).epsilon(1e-12));
    const auto row = marginal(m, Measure::dirac(g, 30));
    CHECK(row[1] == doctest::Approx(0.3));
    CHECK(row[0] == doctest::Approx(0.7));
    CHECK(marginal(m, Measure::dirac(g, 0))[1] == 0.0);
  }

  TEST_CASE("discrete posteriors") {
    const auto g = Grid::uniform(0, 1, 101);
    const auto m = bernoulli_model(g);
    const auto d = posterior(m, Measure::dirac(g, 40), 1);
    CHECK(d.mass(40) == 1.0);
    const auto beta21 = posterior(m, Measure::uniform(g), 1);
    const double total = g.points().sum();
    for (Index i = 0; i < g.size(); i += 10) CHECK(beta21.mass(i) == doctest::Approx(g.point(i) / total));
    CHECK_THROWS_AS(posterior(m, Measure::dirac(g, 0), 1), PosteriorUndefined);
  }

  TEST_CASE("posterior densities") {
    const auto g = Grid::uniform(0, 1, 2001);
    const auto m = bernoulli_model(g);
    const auto once = posterior_density(m, Density::uniform(g), 1);
    for (Index i = 0; i < g.size(); i += 200) CHECK(once.value(i) == doctest::Approx(2 * g.point(i)).epsilon(1e-5));
    const auto twice = posterior_density(m, once, 1);
    for (Index i = 0; i < g.size(); i += 200)
      CHECK(twice.value(i) == doctest::Approx(3 * g.point(i) * g.point(i)).epsilon(1e-5));

    const auto space = SampleSpace<double>::counting(Vector<double>{{0.0, 1.0}});
    const auto flat = model_from_table(g, space, Matrix<double>(Matrix<double>::Constant(g.size(), 2, 0.5)));
    const auto prior = Density::normalized(g, (1.0 + g.points().array()).matrix());
    CHECK((posterior_density(flat, prior, 0).values() - prior.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("triangular convolution of a point mass") {
    const auto g = Grid::uniform(0, 1, 1001);
    const auto d = Measure::dirac(g, 500);
    const auto p = convolve_prior(d, 0.1, g);
    CHECK(p.value(500) == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(p.value(400) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.value(450) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(lipschitz_quotient(p) == doctest::Approx(100.0).epsilon(1e-6));
    const auto disc = p.as_discrete();
    CHECK(w1_1d(d, disc) == doctest::Approx(0.1 / 3).epsilon(1e-4));

    std::vector<double> tp(g.points().data(), g.points().data() + g.size());
    std::vector<double> tw(g.weights().data(), g.weights().data() + g.size());
    const auto ref = oracle::convolve({0.5}, {1.0}, 0.1, tp, tw);
    for (Index i = 0; i < g.size(); ++i) CHECK(p.value(i) == doctest::Approx(ref[std::size_t(i)]).epsilon(1e-12));

    CHECK_THROWS_AS(convolve_prior(Measure::dirac(g, 5), 0.1, g), DomainError);
  }

  TEST_CASE("perturbation system") {
    PerturbationSystem<double> sys{PerturbationKind::Trivial, 0.1};
    const auto g = Grid::uniform(0, 1, 11);
    const auto u = Measure::uniform(g);
    auto same = perturb_prior(u, sys, g);
    REQUIRE(std::holds_alternative<Measure>(same));
    CHECK(std::get<Measure>(same).mass() == u.mass());
    CHECK(sys.wasserstein_constant() == 1.0);
    CHECK(sys.sup_norm_constant() == doctest::Approx(100.0));
    PerturbationSystem<double> bad{PerturbationKind::Convolution, 0.0};
    CHECK_THROWS_AS(bad.validate(), ParameterViolation);
  }

  TEST_CASE("convolution contracts on random priors") {
    std::mt19937_64 rng(21);
    const auto base = Grid::uniform(0, 1, 201);
    const auto ext = extend_grid(base, 1.0);
    for (double gamma : {0.1, 0.01}) {
      for (int k = 0; k < 10; ++k) {
        auto wa = oracle::random_weights(rng, 201), wb = oracle::random_weights(rng, 201);
        const auto a = Measure::normalized(base, Eigen::Map<Vector<double>>(wa.data(), 201));
        const auto b = Measure::normalized(base, Eigen::Map<Vector<double>>(wb.data(), 201));
        const auto pa = convolve_prior(a, gamma, ext.grid), pb = convolve_prior(b, gamma, ext.grid);
        const auto ea = embed(a, ext.grid), eb = embed(b, ext.grid);
        CHECK(w1_1d(ea, pa) <= gamma);
        CHECK(w1_1d(pa, pb) <= w1_1d(a, b) + 1e-6);
        PerturbationSystem<double> sys{PerturbationKind::Convolution, gamma};
        CHECK(lipschitz_quotient(pa) <= sys.sup_norm_constant() * (1 + 1e-6));
        const double sup = (pa.values() - pb.values()).cwiseAbs().maxCoeff();
        CHECK(sup <= sys.sup_norm_constant() * w1_1d(a, b) * (1 + 1e-9));
      }
    }
  }
}
