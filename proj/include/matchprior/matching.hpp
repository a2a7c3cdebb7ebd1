#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "matchprior/coverage.hpp"
#include "matchprior/errors.hpp"
#include "matchprior/family.hpp"
#include "matchprior/measure.hpp"
#include "matchprior/model.hpp"

namespace matchprior {

/// Which positive part enters the mass update: max{0, z} rewards points with
/// deficient coverage; min{0, z} is the literal variant kept for study.
enum class PlusConvention { Max, PaperLiteralMin };

inline PlusConvention parse_plus_convention(const std::string& s) {
  if (s == "max") return PlusConvention::Max;
  if (s == "paper-literal-min") return PlusConvention::PaperLiteralMin;
  throw ConfigError("unknown plus convention '" + s + "'");
}

inline std::string to_string(PlusConvention c) { return c == PlusConvention::Max ? "max" : "paper-literal-min"; }

template <typename Scalar>
Scalar plus_part(Scalar z, PlusConvention c) {
  return c == PlusConvention::Max ? std::max(Scalar(0), z) : std::min(Scalar(0), z);
}

/// (pi(s) + z+_s) / sum_t (pi(t) + z+_t) given the z map at pi.
template <typename Scalar>
DiscreteMeasure<Scalar> q_map_from_report(const DiscreteMeasure<Scalar>& prior, const CoverageReport<Scalar>& report,
                                          PlusConvention convention) {
  Vector<Scalar> num(prior.size());
  bool moved = false;
  for (Index i = 0; i < prior.size(); ++i) {
    const Scalar p = plus_part(report.z[i], convention);
    moved = moved || p != 0;
    num[i] = prior.mass(i) + p;
  }
  // z+ = 0 everywhere: the update is the identity, returned bit for bit.
  if (!moved) return prior;
  const Scalar den = num.sum();
  if (!(den > Scalar(1e-12))) throw DegenerateUpdate("mass update has nonpositive denominator");
  if (num.minCoeff() < 0) throw DegenerateUpdate("mass update produced negative masses");
  num /= den;
  // Renormalize in place to keep the unit-mass invariant tight.
  return DiscreteMeasure<Scalar>::normalized(prior.grid(), std::move(num));
}

template <typename Scalar>
DiscreteMeasure<Scalar> q_map(const Model<Scalar>& m, const RegionFamily<Scalar>& family,
                              const DiscreteMeasure<Scalar>& prior, PlusConvention convention = PlusConvention::Max) {
  return q_map_from_report(prior, z_map(m, family, prior), convention);
}

// ---------------------------------------------------------------------------
// Parameter schedule

template <typename Scalar>
struct Schedule {
  Scalar eta;
  Scalar delta;
  Scalar gamma;
  Scalar beta;
};

/// eta = a, delta = a, gamma = a^4, beta = 1/a, validated against
/// max(1/beta, eta, delta, gamma) < eps < alpha and F' > 0 for the posterior
/// map constant C.
template <typename Scalar>
Schedule<Scalar> param_schedule(Scalar a, Scalar alpha, Scalar eps, Scalar C = 1) {
  if (!(a > 0)) throw ParameterViolation("schedule parameter a must be positive");
  Schedule<Scalar> s{a, a, a * a * a * a, Scalar(1) / a};
  if (!(eps < alpha)) throw ParameterViolation("eps < alpha fails");
  if (!(eps > 0)) throw ParameterViolation("eps > 0 fails");
  const Scalar largest = std::max({Scalar(1) / s.beta, s.eta, s.delta, s.gamma});
  if (!(largest < eps)) throw ParameterViolation("max(1/beta, eta, delta, gamma) < eps fails");
  if (!(s.delta < alpha)) throw ParameterViolation("delta < alpha fails");
  if (!(s.eta < 1)) throw ParameterViolation("eta < 1 fails");
  const Scalar margin = s.delta * s.eta - s.beta * C * s.gamma;
  if (!(margin > 0)) throw ParameterViolation("F' = delta*eta - beta*C*gamma > 0 fails");
  return s;
}

/// Supremum of admissible a: min(eps, 1/C) when eps < alpha (the bound is
/// not attained), 0 otherwise.
template <typename Scalar>
Scalar admissible_a_bound(Scalar alpha, Scalar eps, Scalar C) {
  if (!(eps < alpha) || !(eps > 0)) return 0;
  Scalar bound = std::min(eps, Scalar(1));
  if (C > 0) bound = std::min(bound, Scalar(1) / C);
  return bound;
}

template <typename Scalar>
void apply_schedule(RegionConfig<Scalar>& cfg, const Schedule<Scalar>& s) {
  cfg.eta = s.eta;
  cfg.delta = s.delta;
  cfg.gamma = s.gamma;
  cfg.beta = s.beta;
}

// ---------------------------------------------------------------------------
// Bernoulli class checks

namespace detail {

template <typename Scalar>
void require_unit_interval(const ParameterGrid<Scalar>& grid) {
  if (grid.point(0) < 0 || grid.point(grid.size() - 1) > 1) throw DomainError("grid must lie in [0, 1]");
}

}  // namespace detail

/// pi([0, a] U [1 - a, 1]) <= 1 - b.
template <typename Scalar>
bool agd_membership(const DiscreteMeasure<Scalar>& prior, Scalar a, Scalar b) {
  detail::require_unit_interval(prior.grid());
  Scalar tail = 0;
  for (Index i = 0; i < prior.size(); ++i) {
    const Scalar t = prior.grid().point(i);
    if (t <= a || t >= 1 - a) tail += prior.mass(i);
  }
  return tail <= 1 - b;
}

/// |S| > 1000 and (|S cap I| / |S|) / length(I) in (0.99, 1.01) for every
/// closed interval I of length > 0.01 whose endpoints are grid points, cell
/// midpoints, 0 or 1.
template <typename Scalar>
bool ffin_check(const ParameterGrid<Scalar>& grid) {
  detail::require_unit_interval(grid);
  const Index n = grid.size();
  if (n <= 1000) return false;
  const auto& p = grid.points();
  std::vector<Scalar> cand;
  cand.reserve(std::size_t(2 * n + 2));
  cand.push_back(0);
  cand.push_back(1);
  for (Index i = 0; i < n; ++i) {
    cand.push_back(p[i]);
    if (i + 1 < n) cand.push_back((p[i] + p[i + 1]) / 2);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  const Scalar N = Scalar(n);
  const Scalar* begin = p.data();
  const Scalar* end = p.data() + n;
  const std::size_t K = cand.size();
  // upto[k] = #points <= cand[k]; below[k] = #points < cand[k].
  std::vector<Scalar> upto(K), below(K);
  for (std::size_t k = 0; k < K; ++k) {
    upto[k] = Scalar(std::upper_bound(begin, end, cand[k]) - begin);
    below[k] = Scalar(std::lower_bound(begin, end, cand[k]) - begin);
  }
  // Suffix extrema of U(r) - c N r over right endpoints.
  std::vector<Scalar> low_min(K + 1, std::numeric_limits<Scalar>::infinity());
  std::vector<Scalar> high_max(K + 1, -std::numeric_limits<Scalar>::infinity());
  for (std::size_t k = K; k-- > 0;) {
    low_min[k] = std::min(low_min[k + 1], upto[k] - Scalar(0.99) * N * cand[k]);
    high_max[k] = std::max(high_max[k + 1], upto[k] - Scalar(1.01) * N * cand[k]);
  }
  for (std::size_t a = 0; a < K; ++a) {
    const Scalar l = cand[a];
    // first right endpoint with r - l > 0.01
    std::size_t b = std::size_t(std::upper_bound(cand.begin(), cand.end(), l + Scalar(0.01)) - cand.begin());
    while (b < K && !(cand[b] - l > Scalar(0.01))) ++b;
    if (b >= K) break;
    if (!(low_min[b] > below[a] - Scalar(0.99) * N * l)) return false;
    if (!(high_max[b] < below[a] - Scalar(1.01) * N * l)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Damped fixed-point iteration

template <typename Scalar>
struct SolverConfig {
  Scalar damping = Scalar(0.5);
  Index max_iters = 5000;
  Scalar tol = Scalar(5e-3);
  std::optional<DiscreteMeasure<Scalar>> init;
  PlusConvention convention = PlusConvention::Max;
  int restarts = 3;
  std::uint64_t seed = 0;
  bool keep_iterates = false;

  void validate() const {
    if (!(damping > 0 && damping <= 1)) throw ParameterViolation("damping must lie in (0, 1]");
    if (!(tol > 0)) throw ParameterViolation("tolerance must be positive");
    if (max_iters < 0) throw ParameterViolation("max_iters must be nonnegative");
    if (restarts < 0) throw ParameterViolation("restarts must be nonnegative");
  }
};

template <typename Scalar>
struct TraceEntry {
  Index iter;
  int attempt;
  Scalar max_z;
  Scalar w1_step;
};

template <typename Scalar>
struct SolveResult {
  DiscreteMeasure<Scalar> prior;
  CoverageReport<Scalar> report;
  std::vector<TraceEntry<Scalar>> trace;
  /// Prior evaluated at each trace entry, when requested.
  std::vector<DiscreteMeasure<Scalar>> iterates;
  bool converged = false;
  Index iterations = 0;
  int attempts = 1;
};

/// Half uniform, half exponential-weight random prior; keeps at least half
/// the mass spread evenly, so it sits well inside AGD(a, b) for small a, b.
template <typename Scalar, typename Rng>
DiscreteMeasure<Scalar> random_interior_prior(const ParameterGrid<Scalar>& grid, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  Vector<Scalar> w(grid.size());
  for (Index i = 0; i < w.size(); ++i) w[i] = Scalar(expo(rng));
  w /= w.sum();
  w = (w.array() + Scalar(1) / Scalar(grid.size())).matrix() / Scalar(2);
  return DiscreteMeasure<Scalar>::normalized(grid, std::move(w));
}

/// pi <- (1 - lambda) pi + lambda Q(pi) until max_theta z_theta <= tol.
/// Nonconvergence is reported through `converged`, not thrown. After a failed
/// attempt the iteration restarts from a seeded random interior prior.
template <typename Scalar>
SolveResult<Scalar> solve_matching(const Model<Scalar>& m, const RegionFamily<Scalar>& family,
                                   const SolverConfig<Scalar>& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::optional<SolveResult<Scalar>> result;
  for (int attempt = 0; attempt <= cfg.restarts; ++attempt) {
    DiscreteMeasure<Scalar> prior = attempt == 0
                                        ? (cfg.init ? *cfg.init : DiscreteMeasure<Scalar>::uniform(m.grid()))
                                        : random_interior_prior(m.grid(), rng);
    detail::require_same_grid(prior.grid(), m.grid());
    std::vector<TraceEntry<Scalar>> trace = result ? std::move(result->trace) : std::vector<TraceEntry<Scalar>>{};
    std::vector<DiscreteMeasure<Scalar>> iterates =
        result ? std::move(result->iterates) : std::vector<DiscreteMeasure<Scalar>>{};
    const Index total_before = result ? result->iterations : 0;

    Index it = 0;
    auto report = z_map(m, family, prior);
    bool converged = false;
    for (;;) {
      if (cfg.keep_iterates) iterates.push_back(prior);
      if (report.max_z <= cfg.tol) {
        trace.push_back({it, attempt, report.max_z, Scalar(0)});
        converged = true;
        break;
      }
      if (it >= cfg.max_iters) {
        trace.push_back({it, attempt, report.max_z, Scalar(0)});
        break;
      }
      const auto mapped = q_map_from_report(prior, report, cfg.convention);
      auto next = DiscreteMeasure<Scalar>::normalized(
          m.grid(), (Scalar(1) - cfg.damping) * prior.mass() + cfg.damping * mapped.mass());
      trace.push_back({it, attempt, report.max_z, w1_1d(prior, next)});
      prior = std::move(next);
      report = z_map(m, family, prior);
      ++it;
    }
    result = SolveResult<Scalar>{std::move(prior), std::move(report), std::move(trace), std::move(iterates),
                                 converged,        total_before + it, attempt + 1};
    if (converged) break;
  }
  return std::move(*result);
}

}  // namespace matchprior
