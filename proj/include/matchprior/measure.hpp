#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "matchprior/errors.hpp"

namespace matchprior {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Sorted, duplicate-free list of grid indices.
using IndexSet = std::vector<Index>;

/// Ordered quadrature grid over a compact interval [lo, hi].
///
/// Cell weights are the lengths of the Voronoi cells of the points, clipped
/// to [lo, hi], so they always sum to hi - lo. The grid is an immutable
/// handle: copies share the same storage and compare equal cheaply.
template <typename Scalar>
class ParameterGrid {
 public:
  ParameterGrid(Vector<Scalar> points, Vector<Scalar> cell_weights, Scalar lo, Scalar hi) {
    auto data = std::make_shared<Data>();
    data->points = std::move(points);
    data->weights = std::move(cell_weights);
    data->lo = lo;
    data->hi = hi;
    validate(*data);
    data_ = std::move(data);
  }

  /// Voronoi cell weights for the given ascending points inside [lo, hi].
  static ParameterGrid from_points(Vector<Scalar> points, Scalar lo, Scalar hi) {
    const Index n = points.size();
    if (n < 1) throw DomainError("grid needs at least one point");
    Vector<Scalar> w(n);
    for (Index i = 0; i < n; ++i) {
      const Scalar left = i == 0 ? lo : (points[i - 1] + points[i]) / 2;
      const Scalar right = i + 1 == n ? hi : (points[i] + points[i + 1]) / 2;
      w[i] = right - left;
    }
    return ParameterGrid(std::move(points), std::move(w), lo, hi);
  }

  /// n equally spaced points including both endpoints.
  static ParameterGrid uniform(Scalar lo, Scalar hi, Index n) {
    if (n < 2 || !(hi > lo)) throw DomainError("uniform grid needs n >= 2 and hi > lo");
    Vector<Scalar> p(n);
    const Scalar h = (hi - lo) / Scalar(n - 1);
    for (Index i = 0; i < n; ++i) p[i] = lo + h * Scalar(i);
    p[n - 1] = hi;
    return from_points(std::move(p), lo, hi);
  }

  /// Midpoints of n equal cells; all cell weights equal (hi - lo) / n.
  static ParameterGrid cell_centered(Scalar lo, Scalar hi, Index n) {
    if (n < 1 || !(hi > lo)) throw DomainError("cell-centered grid needs n >= 1 and hi > lo");
    Vector<Scalar> p(n);
    const Scalar h = (hi - lo) / Scalar(n);
    for (Index i = 0; i < n; ++i) p[i] = lo + h * (Scalar(i) + Scalar(0.5));
    return from_points(std::move(p), lo, hi);
  }

  Index size() const { return data_->points.size(); }
  Scalar lo() const { return data_->lo; }
  Scalar hi() const { return data_->hi; }
  const Vector<Scalar>& points() const { return data_->points; }
  const Vector<Scalar>& weights() const { return data_->weights; }
  Scalar point(Index i) const { return data_->points[i]; }
  Scalar weight(Index i) const { return data_->weights[i]; }

  /// Index of a point equal to `value`, if any.
  std::optional<Index> index_of(Scalar value) const {
    const auto& p = data_->points;
    auto it = std::lower_bound(p.data(), p.data() + p.size(), value);
    if (it != p.data() + p.size() && *it == value) return Index(it - p.data());
    return std::nullopt;
  }

  bool same_as(const ParameterGrid& other) const {
    if (data_ == other.data_) return true;
    return data_->lo == other.data_->lo && data_->hi == other.data_->hi &&
           data_->points.size() == other.data_->points.size() &&
           data_->points == other.data_->points;
  }

  friend bool operator==(const ParameterGrid& a, const ParameterGrid& b) { return a.same_as(b); }

 private:
  struct Data {
    Vector<Scalar> points;
    Vector<Scalar> weights;
    Scalar lo{};
    Scalar hi{};
  };

  static void validate(const Data& d) {
    const Index n = d.points.size();
    if (n < 1) throw DomainError("grid needs at least one point");
    if (d.weights.size() != n) throw DomainError("cell weight count differs from point count");
    if (!(d.hi > d.lo)) throw DomainError("grid interval must satisfy hi > lo");
    for (Index i = 0; i < n; ++i) {
      if (!(d.points[i] >= d.lo && d.points[i] <= d.hi))
        throw DomainError("grid point outside [lo, hi]");
      if (i > 0 && !(d.points[i] > d.points[i - 1]))
        throw DomainError("grid points must be strictly increasing");
      if (!(d.weights[i] > 0)) throw DomainError("cell weights must be positive");
    }
    const Scalar span = d.hi - d.lo;
    using std::abs;
    using std::max;
    if (abs(d.weights.sum() - span) > Scalar(1e-12) * max(Scalar(1), span))
      throw DomainError("cell weights must sum to hi - lo");
  }

  std::shared_ptr<const Data> data_;
};

namespace detail {

template <typename Scalar>
void require_same_grid(const ParameterGrid<Scalar>& a, const ParameterGrid<Scalar>& b) {
  if (!a.same_as(b)) throw GridMismatch("measures live on different grids");
}

}  // namespace detail

/// Probability masses on the points of a grid.
template <typename Scalar>
class DiscreteMeasure {
 public:
  DiscreteMeasure(ParameterGrid<Scalar> grid, Vector<Scalar> mass)
      : grid_(std::move(grid)), mass_(std::move(mass)) {
    if (mass_.size() != grid_.size()) throw InvalidMeasure("mass count differs from grid size");
    for (Index i = 0; i < mass_.size(); ++i)
      if (!(mass_[i] >= 0)) throw InvalidMeasure("masses must be nonnegative");
    using std::abs;
    if (abs(mass_.sum() - Scalar(1)) > Scalar(1e-12))
      throw InvalidMeasure("masses must sum to one");
  }

  /// Rescales nonnegative weights to unit total mass.
  static DiscreteMeasure normalized(ParameterGrid<Scalar> grid, Vector<Scalar> weights) {
    const Scalar total = weights.sum();
    if (!(total > 0)) throw InvalidMeasure("weights have no positive mass");
    weights /= total;
    return DiscreteMeasure(std::move(grid), std::move(weights));
  }

  static DiscreteMeasure dirac(ParameterGrid<Scalar> grid, Index at) {
    Vector<Scalar> m = Vector<Scalar>::Zero(grid.size());
    m[at] = 1;
    return DiscreteMeasure(std::move(grid), std::move(m));
  }

  /// Equal mass on every grid point.
  static DiscreteMeasure uniform(ParameterGrid<Scalar> grid) {
    const Index n = grid.size();
    return DiscreteMeasure(std::move(grid), Vector<Scalar>::Constant(n, Scalar(1) / Scalar(n)));
  }

  const ParameterGrid<Scalar>& grid() const { return grid_; }
  const Vector<Scalar>& mass() const { return mass_; }
  Scalar mass(Index i) const { return mass_[i]; }
  Index size() const { return mass_.size(); }

  /// Indices carrying positive mass.
  IndexSet support() const {
    IndexSet s;
    for (Index i = 0; i < mass_.size(); ++i)
      if (mass_[i] > 0) s.push_back(i);
    return s;
  }

 private:
  ParameterGrid<Scalar> grid_;
  Vector<Scalar> mass_;
};

/// Density of an absolutely continuous measure sampled on a grid.
template <typename Scalar>
class DensityField {
 public:
  static constexpr double kQuadratureTolerance = 1e-9;

  DensityField(ParameterGrid<Scalar> grid, Vector<Scalar> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw InvalidDensity("value count differs from grid size");
    for (Index i = 0; i < values_.size(); ++i)
      if (!(values_[i] >= 0)) throw InvalidDensity("density values must be nonnegative");
    using std::abs;
    if (abs(values_.dot(grid_.weights()) - Scalar(1)) > Scalar(kQuadratureTolerance))
      throw InvalidDensity("density does not integrate to one");
  }

  /// Rescales a nonnegative function so that its quadrature integral is one.
  static DensityField normalized(ParameterGrid<Scalar> grid, Vector<Scalar> values) {
    if (values.size() != grid.size()) throw InvalidDensity("value count differs from grid size");
    const Scalar total = values.dot(grid.weights());
    if (!(total > 0)) throw InvalidDensity("density has zero integral");
    values /= total;
    return DensityField(std::move(grid), std::move(values));
  }

  static DensityField uniform(ParameterGrid<Scalar> grid) {
    const Index n = grid.size();
    return normalized(std::move(grid), Vector<Scalar>::Ones(n));
  }

  const ParameterGrid<Scalar>& grid() const { return grid_; }
  const Vector<Scalar>& values() const { return values_; }
  Scalar value(Index i) const { return values_[i]; }
  Index size() const { return values_.size(); }

  /// Quadrature masses rho_i * w_i.
  Vector<Scalar> masses() const { return values_.cwiseProduct(grid_.weights()); }

  /// The quadrature measure as point masses on the same grid.
  DiscreteMeasure<Scalar> as_discrete() const {
    return DiscreteMeasure<Scalar>::normalized(grid_, masses());
  }

 private:
  ParameterGrid<Scalar> grid_;
  Vector<Scalar> values_;
};

// ---------------------------------------------------------------------------
// Wasserstein-1 and friends

/// W1 distance between two measures on the same grid, as the integral of
/// |F_a - F_b| between consecutive grid points.
template <typename Scalar>
Scalar w1_1d(const DiscreteMeasure<Scalar>& a, const DiscreteMeasure<Scalar>& b) {
  detail::require_same_grid(a.grid(), b.grid());
  const auto& p = a.grid().points();
  Scalar fa = 0, fb = 0, total = 0;
  for (Index i = 0; i + 1 < p.size(); ++i) {
    fa += a.mass(i);
    fb += b.mass(i);
    using std::abs;
    total += abs(fa - fb) * (p[i + 1] - p[i]);
  }
  return total;
}

template <typename Scalar>
Scalar w1_1d(const DensityField<Scalar>& a, const DensityField<Scalar>& b) {
  return w1_1d(a.as_discrete(), b.as_discrete());
}

template <typename Scalar>
Scalar w1_1d(const DiscreteMeasure<Scalar>& a, const DensityField<Scalar>& b) {
  return w1_1d(a, b.as_discrete());
}

template <typename Scalar>
Scalar w1_1d(const DensityField<Scalar>& a, const DiscreteMeasure<Scalar>& b) {
  return w1_1d(a.as_discrete(), b);
}

/// Total-variation distance sum |a_i - b_i| / 2.
template <typename Scalar>
Scalar total_variation(const DiscreteMeasure<Scalar>& a, const DiscreteMeasure<Scalar>& b) {
  detail::require_same_grid(a.grid(), b.grid());
  return (a.mass() - b.mass()).cwiseAbs().sum() / 2;
}

/// Indices j whose distance to some subset point is < eps, together with the
/// subset itself.
template <typename Scalar>
IndexSet fatten_indices(const ParameterGrid<Scalar>& grid, const IndexSet& subset, Scalar eps) {
  if (subset.empty()) return {};
  if (eps < 0) throw DomainError("fattening radius must be nonnegative");
  std::vector<Scalar> anchors;
  anchors.reserve(subset.size());
  for (Index i : subset) anchors.push_back(grid.point(i));
  std::sort(anchors.begin(), anchors.end());

  IndexSet out;
  std::size_t next = 0;
  IndexSet sorted_subset = subset;
  std::sort(sorted_subset.begin(), sorted_subset.end());
  for (Index j = 0; j < grid.size(); ++j) {
    while (next < sorted_subset.size() && sorted_subset[next] < j) ++next;
    if (next < sorted_subset.size() && sorted_subset[next] == j) {
      out.push_back(j);
      continue;
    }
    const Scalar t = grid.point(j);
    auto it = std::lower_bound(anchors.begin(), anchors.end(), t);
    Scalar best = std::numeric_limits<Scalar>::infinity();
    using std::abs;
    using std::min;
    if (it != anchors.end()) best = min(best, abs(*it - t));
    if (it != anchors.begin()) best = min(best, abs(*std::prev(it) - t));
    if (best < eps) out.push_back(j);
  }
  return out;
}

/// Largest slope between adjacent grid points. On a 1-D grid this equals the
/// Lipschitz constant of the sampled function over all point pairs.
template <typename Scalar, typename Derived>
Scalar lipschitz_quotient(const ParameterGrid<Scalar>& grid, const Eigen::MatrixBase<Derived>& f) {
  if (grid.size() < 2) throw DomainError("Lipschitz quotient needs at least two grid points");
  if (f.size() != grid.size()) throw GridMismatch("field size differs from grid size");
  Scalar best = 0;
  using std::abs;
  using std::max;
  for (Index i = 0; i + 1 < grid.size(); ++i)
    best = max(best, abs(Scalar(f[i + 1]) - Scalar(f[i])) / (grid.point(i + 1) - grid.point(i)));
  return best;
}

template <typename Scalar>
Scalar lipschitz_quotient(const DensityField<Scalar>& f) {
  return lipschitz_quotient(f.grid(), f.values());
}

template <typename Scalar>
Scalar mean_of(const DiscreteMeasure<Scalar>& m) {
  return m.mass().dot(m.grid().points());
}

template <typename Scalar>
Scalar mean_of(const DensityField<Scalar>& m) {
  return m.masses().dot(m.grid().points()) / m.masses().sum();
}

/// Copies a measure onto a grid that contains all of its support points.
template <typename Scalar>
DiscreteMeasure<Scalar> embed(const DiscreteMeasure<Scalar>& m, const ParameterGrid<Scalar>& target) {
  Vector<Scalar> out = Vector<Scalar>::Zero(target.size());
  for (Index i = 0; i < m.size(); ++i) {
    if (m.mass(i) == 0) continue;
    auto j = target.index_of(m.grid().point(i));
    if (!j) throw GridMismatch("target grid misses a support point");
    out[*j] += m.mass(i);
  }
  return DiscreteMeasure<Scalar>(target, std::move(out));
}

/// Grid extended on both sides by whole copies of the boundary spacing, so
/// that it covers the `margin`-fattening of the original interval. The
/// original points are copied bitwise and start at `offset`.
template <typename Scalar>
struct GridExtension {
  ParameterGrid<Scalar> grid;
  Index offset = 0;
};

template <typename Scalar>
GridExtension<Scalar> extend_grid(const ParameterGrid<Scalar>& grid, Scalar margin) {
  if (margin < 0) throw DomainError("extension margin must be nonnegative");
  if (margin == 0) return {grid, 0};
  if (grid.size() < 2) throw DomainError("extension needs at least two grid points");
  const Index n = grid.size();
  const Scalar h_left = grid.point(1) - grid.point(0);
  const Scalar h_right = grid.point(n - 1) - grid.point(n - 2);
  using std::ceil;
  const Scalar left_gap = grid.point(0) - (grid.lo() - margin);
  const Scalar right_gap = (grid.hi() + margin) - grid.point(n - 1);
  const Index k_left = std::max<Index>(0, Index(ceil(left_gap / h_left)));
  const Index k_right = std::max<Index>(0, Index(ceil(right_gap / h_right)));

  Vector<Scalar> pts(n + k_left + k_right);
  for (Index j = 0; j < k_left; ++j) pts[j] = grid.point(0) - h_left * Scalar(k_left - j);
  pts.segment(k_left, n) = grid.points();
  for (Index j = 0; j < k_right; ++j) pts[k_left + n + j] = grid.point(n - 1) + h_right * Scalar(j + 1);
  using std::min;
  using std::max;
  const Scalar lo = min(pts[0], grid.lo() - margin);
  const Scalar hi = max(pts[pts.size() - 1], grid.hi() + margin);
  return {ParameterGrid<Scalar>::from_points(std::move(pts), lo, hi), k_left};
}

using Grid = ParameterGrid<double>;
using Measure = DiscreteMeasure<double>;
using Density = DensityField<double>;

}  // namespace matchprior
