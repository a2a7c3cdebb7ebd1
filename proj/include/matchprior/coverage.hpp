#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <vector>

#include "matchprior/credible.hpp"
#include "matchprior/errors.hpp"
#include "matchprior/family.hpp"
#include "matchprior/measure.hpp"
#include "matchprior/model.hpp"

namespace matchprior {

/// Per-theta coverage and z_theta = (1 - alpha) - coverage.
template <typename Scalar>
struct CoverageReport {
  Vector<Scalar> coverage;
  Vector<Scalar> z;
  Scalar max_z = 0;
  Index argmax_theta = 0;
  Scalar min_z = 0;
  Scalar alpha = 0;
};

/// One acceptance field per datum; empty where the posterior is undefined.
template <typename Scalar>
using FieldsByDatum = std::vector<std::optional<AcceptanceField<Scalar>>>;

template <typename Scalar>
FieldsByDatum<Scalar> fields_by_datum(const Model<Scalar>& m, const RegionFamily<Scalar>& family,
                                      const DiscreteMeasure<Scalar>& prior) {
  FieldsByDatum<Scalar> out(std::size_t(m.num_x()));
  for (Index x = 0; x < m.num_x(); ++x) {
    try {
      out[std::size_t(x)] = family(prior, x);
    } catch (const PosteriorUndefined&) {
    }
  }
  return out;
}

namespace detail {

template <typename Scalar>
Scalar coverage_from_fields(const Model<Scalar>& m, const FieldsByDatum<Scalar>& fields, Index theta) {
  Scalar total = 0;
  for (Index x = 0; x < m.num_x(); ++x) {
    const Scalar p = m.prob(theta, x);
    if (p == 0) continue;
    const auto& f = fields[std::size_t(x)];
    if (!f)
      throw PosteriorUndefined("region needed at x = " + std::to_string(x) + " but its posterior is undefined");
    total += f->psi(theta) * p;
  }
  return total;
}

/// sum_x ((1 - alpha) - psi_x(theta)) P_theta(x), the integral of phi - alpha.
/// Summing the integrand keeps z exactly 0 when psi is the constant 1 - alpha.
template <typename Scalar>
Scalar z_from_fields(const Model<Scalar>& m, const FieldsByDatum<Scalar>& fields, Index theta, Scalar alpha) {
  Scalar total = 0;
  for (Index x = 0; x < m.num_x(); ++x) {
    const Scalar p = m.prob(theta, x);
    if (p == 0) continue;
    total += ((Scalar(1) - alpha) - fields[std::size_t(x)]->psi(theta)) * p;
  }
  return total;
}

template <typename Scalar>
Scalar alpha_of(const FieldsByDatum<Scalar>& fields) {
  for (const auto& f : fields)
    if (f) return f->alpha();
  throw PosteriorUndefined("no datum has a defined posterior");
}

}  // namespace detail

/// Coverage at grid point `theta`: sum_x psi_{pi,x}(theta) q(theta, x) nu(x).
template <typename Scalar>
Scalar coverage_at(const Model<Scalar>& m, const RegionFamily<Scalar>& family, const DiscreteMeasure<Scalar>& prior,
                   Index theta) {
  return detail::coverage_from_fields(m, fields_by_datum(m, family, prior), theta);
}

template <typename Scalar>
CoverageReport<Scalar> z_map_from_fields(const Model<Scalar>& m, const FieldsByDatum<Scalar>& fields) {
  const Index n = m.num_theta();
  CoverageReport<Scalar> r;
  r.alpha = detail::alpha_of(fields);
  r.coverage.resize(n);
  r.z.resize(n);
  for (Index i = 0; i < n; ++i) {
    r.coverage[i] = detail::coverage_from_fields(m, fields, i);
    r.z[i] = detail::z_from_fields(m, fields, i, r.alpha);
  }
  r.max_z = r.z.maxCoeff(&r.argmax_theta);
  r.min_z = r.z.minCoeff();
  return r;
}

/// z_theta(pi) = integral of (phi - alpha) dP_theta for every grid theta.
/// Fields are built once per datum and shared by all theta.
template <typename Scalar>
CoverageReport<Scalar> z_map(const Model<Scalar>& m, const RegionFamily<Scalar>& family,
                             const DiscreteMeasure<Scalar>& prior) {
  return z_map_from_fields(m, fields_by_datum(m, family, prior));
}

template <typename Scalar>
bool is_matching(const CoverageReport<Scalar>& report, Scalar tol) {
  return report.max_z <= tol;
}

/// Prior average sum_theta pi(theta) z_theta. Vanishes for exactly credible
/// families.
template <typename Scalar>
Scalar prior_average_z(const CoverageReport<Scalar>& report, const DiscreteMeasure<Scalar>& prior) {
  return report.z.dot(prior.mass());
}

/// One row of the coverage-continuity diagnostic.
template <typename Scalar>
struct ContinuityRow {
  Scalar tv_gap;
  Scalar w1_gap;
  Scalar max_abs_dz;
};

/// Moves mass `step` from the prior toward a seeded random prior for each
/// step and records how far the z map moves. Expected to shrink with the
/// gap for continuous families; reported, not asserted.
template <typename Scalar>
std::vector<ContinuityRow<Scalar>> continuity_diagnostic(const Model<Scalar>& m, const RegionFamily<Scalar>& family,
                                                         const DiscreteMeasure<Scalar>& prior,
                                                         const std::vector<Scalar>& steps, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  Vector<Scalar> w(prior.size());
  for (Index i = 0; i < w.size(); ++i) w[i] = Scalar(expo(rng));
  const auto other = DiscreteMeasure<Scalar>::normalized(prior.grid(), w);
  const auto base = z_map(m, family, prior);
  std::vector<ContinuityRow<Scalar>> rows;
  for (Scalar t : steps) {
    const auto moved = DiscreteMeasure<Scalar>::normalized(prior.grid(), (1 - t) * prior.mass() + t * other.mass());
    const auto r = z_map(m, family, moved);
    rows.push_back({total_variation(prior, moved), w1_1d(prior, moved), (r.z - base.z).cwiseAbs().maxCoeff()});
  }
  return rows;
}

}  // namespace matchprior
