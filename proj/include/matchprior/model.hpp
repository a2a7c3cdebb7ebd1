#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "matchprior/errors.hpp"
#include "matchprior/measure.hpp"

namespace matchprior {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Finite sample space X with numeric labels (metric |x - y|) and the mass
/// of the dominating measure nu at each point.
template <typename Scalar>
struct SampleSpace {
  Vector<Scalar> points;
  Vector<Scalar> nu;

  Index size() const { return points.size(); }

  void validate() const {
    if (points.size() == 0) throw DomainError("sample space is empty");
    if (nu.size() != points.size()) throw DomainError("nu weight count differs from sample count");
    for (Index j = 0; j < nu.size(); ++j) {
      if (!(nu[j] > 0)) throw DomainError("nu weights must be positive");
      for (Index k = 0; k < j; ++k)
        if (points[k] == points[j]) throw DomainError("sample points must be distinct");
    }
  }

  static SampleSpace counting(Vector<Scalar> labels) {
    SampleSpace s{std::move(labels), {}};
    s.nu = Vector<Scalar>::Ones(s.points.size());
    return s;
  }
};

/// Dominated model: density table q(theta_i, x_j) with respect to nu.
template <typename Scalar>
class Model {
 public:
  static constexpr double kRowTolerance = 1e-9;

  Model(ParameterGrid<Scalar> grid, SampleSpace<Scalar> space, Matrix<Scalar> q)
      : grid_(std::move(grid)), space_(std::move(space)), q_(std::move(q)) {
    space_.validate();
    if (q_.rows() != grid_.size() || q_.cols() != space_.size())
      throw InvalidDensity("density table shape does not match grid and sample space");
    for (Index i = 0; i < q_.rows(); ++i) {
      for (Index j = 0; j < q_.cols(); ++j)
        if (!(q_(i, j) >= 0)) throw InvalidDensity("densities must be nonnegative");
      using std::abs;
      if (abs(q_.row(i).dot(space_.nu.transpose()) - Scalar(1)) > Scalar(kRowTolerance))
        throw InvalidDensity("density row " + std::to_string(i) + " does not integrate to one");
    }
  }

  const ParameterGrid<Scalar>& grid() const { return grid_; }
  const SampleSpace<Scalar>& sample_space() const { return space_; }
  const Matrix<Scalar>& q() const { return q_; }
  Scalar q(Index theta, Index x) const { return q_(theta, x); }
  Scalar nu(Index x) const { return space_.nu[x]; }
  Index num_theta() const { return q_.rows(); }
  Index num_x() const { return q_.cols(); }

  /// P_theta({x}) = q(theta, x) nu(x).
  Scalar prob(Index theta, Index x) const { return q_(theta, x) * space_.nu[x]; }

 private:
  ParameterGrid<Scalar> grid_;
  SampleSpace<Scalar> space_;
  Matrix<Scalar> q_;
};

/// Bernoulli model: X = {0, 1}, counting measure, q(theta, x) = theta^x (1 - theta)^(1 - x).
template <typename Scalar>
Model<Scalar> bernoulli_model(const ParameterGrid<Scalar>& grid) {
  if (grid.lo() < 0 || grid.hi() > 1) throw DomainError("Bernoulli grid must lie in [0, 1]");
  Vector<Scalar> labels(2);
  labels << 0, 1;
  Matrix<Scalar> q(grid.size(), 2);
  for (Index i = 0; i < grid.size(); ++i) {
    q(i, 1) = grid.point(i);
    q(i, 0) = Scalar(1) - grid.point(i);
  }
  return Model<Scalar>(grid, SampleSpace<Scalar>::counting(labels), std::move(q));
}

/// Validates a raw table. Rows whose nu-integral is within 1e-6 of one are
/// renormalized; anything further off is rejected.
template <typename Scalar>
Model<Scalar> model_from_table(const ParameterGrid<Scalar>& grid, SampleSpace<Scalar> space,
                               Matrix<Scalar> q) {
  space.validate();
  if (q.rows() != grid.size() || q.cols() != space.size())
    throw InvalidDensity("density table shape does not match grid and sample space");
  for (Index i = 0; i < q.rows(); ++i) {
    const Scalar total = q.row(i).dot(space.nu.transpose());
    using std::abs;
    if (!(abs(total - Scalar(1)) <= Scalar(1e-6)))
      throw InvalidDensity("density row " + std::to_string(i) + " integrates to " +
                           std::to_string(double(total)));
    q.row(i) /= total;
  }
  return Model<Scalar>(grid, std::move(space), std::move(q));
}

/// McShane extension f_hat(t) = min_e (f(e) + M |t - e|) of values given at
/// the points `base` onto every point of `target`. Values at target points
/// that coincide with base points are copied exactly.
template <typename Scalar>
Vector<Scalar> mcshane_extend(std::span<const Scalar> base, std::span<const Scalar> values, Scalar lipschitz,
                              const ParameterGrid<Scalar>& target) {
  if (base.empty()) throw EmptyExtensionBase("extension base set is empty");
  if (base.size() != values.size()) throw DomainError("base points and values differ in length");
  if (lipschitz < 0) throw DomainError("Lipschitz constant must be nonnegative");
  Vector<Scalar> out(target.size());
  for (Index t = 0; t < target.size(); ++t) {
    const Scalar x = target.point(t);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (std::size_t e = 0; e < base.size(); ++e) {
      using std::abs;
      const Scalar cand = values[e] + lipschitz * abs(x - base[e]);
      if (cand < best) best = cand;
    }
    out[t] = best;
  }
  for (std::size_t e = 0; e < base.size(); ++e)
    if (auto t = target.index_of(base[e])) out[*t] = values[e];
  return out;
}

/// Largest slope of theta -> q(theta, x) over all x.
template <typename Scalar>
Scalar model_lipschitz_constant(const Model<Scalar>& m) {
  if (m.grid().size() < 2) return 0;
  Scalar best = 0;
  for (Index j = 0; j < m.num_x(); ++j) best = std::max(best, lipschitz_quotient(m.grid(), m.q().col(j)));
  return best;
}

/// Supermodel on a larger grid: each x-slice is McShane-extended with the
/// model's Lipschitz constant and rows are renormalized by
/// Z(theta) = sum_x q_hat(theta, x) nu(x). Rows at original grid points are
/// copied bitwise.
template <typename Scalar>
Model<Scalar> supermodel_extend(const Model<Scalar>& m, const ParameterGrid<Scalar>& target) {
  const auto& grid = m.grid();
  for (Index i = 0; i < m.num_theta(); ++i)
    for (Index j = 0; j < m.num_x(); ++j)
      if (!(m.q(i, j) > 0))
        throw UnboundedLogDensity("zero density at theta = " + std::to_string(double(grid.point(i))));

  std::vector<Index> where(grid.size());
  for (Index i = 0; i < grid.size(); ++i) {
    auto t = target.index_of(grid.point(i));
    if (!t) throw DomainError("target grid does not contain the model grid");
    where[i] = *t;
  }

  const Scalar lip = model_lipschitz_constant(m);
  std::span<const Scalar> base(grid.points().data(), std::size_t(grid.size()));
  Matrix<Scalar> qhat(target.size(), m.num_x());
  for (Index j = 0; j < m.num_x(); ++j) {
    Vector<Scalar> col = m.q().col(j);
    std::span<const Scalar> vals(col.data(), std::size_t(col.size()));
    qhat.col(j) = mcshane_extend<Scalar>(base, vals, lip, target);
  }
  const Vector<Scalar> z = qhat * m.sample_space().nu;
  for (Index t = 0; t < target.size(); ++t) qhat.row(t) /= z[t];
  for (Index i = 0; i < grid.size(); ++i) qhat.row(where[i]) = m.q().row(i);
  return Model<Scalar>(target, m.sample_space(), std::move(qhat));
}

}  // namespace matchprior
