#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "matchprior/errors.hpp"
#include "matchprior/measure.hpp"

namespace matchprior {

/// Acceptance probability function psi: grid -> [0, 1] of a randomized
/// region at level 1 - alpha. A realization with uniform u contains theta iff
/// u < psi(theta).
template <typename Scalar>
class AcceptanceField {
 public:
  AcceptanceField(ParameterGrid<Scalar> grid, Vector<Scalar> psi, Scalar alpha)
      : grid_(std::move(grid)), psi_(std::move(psi)), alpha_(alpha) {
    if (psi_.size() != grid_.size()) throw GridMismatch("field size differs from grid size");
    for (Index i = 0; i < psi_.size(); ++i)
      if (!(psi_[i] >= 0 && psi_[i] <= 1)) throw DomainError("acceptance values must lie in [0, 1]");
  }

  const ParameterGrid<Scalar>& grid() const { return grid_; }
  const Vector<Scalar>& psi() const { return psi_; }
  Scalar psi(Index i) const { return psi_[i]; }
  Scalar alpha() const { return alpha_; }
  Index size() const { return psi_.size(); }

 private:
  ParameterGrid<Scalar> grid_;
  Vector<Scalar> psi_;
  Scalar alpha_;
};

template <typename Scalar>
Scalar lipschitz_quotient(const AcceptanceField<Scalar>& f) {
  return lipschitz_quotient(f.grid(), f.psi());
}

/// Posterior probability of the randomized region, integral of psi d(mu).
template <typename Scalar>
Scalar credibility(const AcceptanceField<Scalar>& f, const DiscreteMeasure<Scalar>& mu) {
  detail::require_same_grid(f.grid(), mu.grid());
  return f.psi().dot(mu.mass());
}

template <typename Scalar>
Scalar credibility(const AcceptanceField<Scalar>& f, const DensityField<Scalar>& mu) {
  detail::require_same_grid(f.grid(), mu.grid());
  return f.psi().dot(mu.masses());
}

/// Grid indices where psi exceeds `threshold`.
template <typename Scalar>
IndexSet support_of(const AcceptanceField<Scalar>& f, Scalar threshold = 0) {
  if (threshold < 0) throw DomainError("support threshold must be nonnegative");
  IndexSet s;
  for (Index i = 0; i < f.size(); ++i)
    if (f.psi(i) > threshold) s.push_back(i);
  return s;
}

/// psi identically 1 - alpha: the region is Theta with probability 1 - alpha
/// and empty otherwise.
template <typename Scalar>
AcceptanceField<Scalar> trivial_region(Scalar alpha, const ParameterGrid<Scalar>& grid) {
  if (!(alpha > 0 && alpha < 1)) throw ParameterViolation("alpha must lie in (0, 1)");
  return AcceptanceField<Scalar>(grid, Vector<Scalar>::Constant(grid.size(), Scalar(1) - alpha), alpha);
}

// ---------------------------------------------------------------------------
// Ordinary regions

namespace detail {

/// Smallest prefix of `order` whose cumulative mass reaches `target`; returns
/// the position of its last element.
template <typename Scalar>
std::size_t mass_cutoff(const std::vector<Index>& order, const Vector<Scalar>& mass, Scalar target) {
  Scalar acc = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    acc += mass[order[k]];
    if (acc >= target - Scalar(1e-12)) return k;
  }
  return order.size() - 1;
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ParameterViolation("alpha must lie in (0, 1)");
}

}  // namespace detail

template <typename Scalar>
struct BallRegion {
  Scalar center;
  Scalar radius;
  AcceptanceField<Scalar> indicator;
};

/// Closed ball around the mean with the least radius holding mass 1 - alpha.
template <typename Scalar>
BallRegion<Scalar> credible_ball(const ParameterGrid<Scalar>& grid, const Vector<Scalar>& mass, Scalar alpha) {
  detail::check_alpha(double(alpha));
  const Scalar center = mass.dot(grid.points()) / mass.sum();
  Vector<Scalar> dist = (grid.points().array() - center).abs().matrix();
  std::vector<Index> order(static_cast<std::size_t>(grid.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });
  const Scalar radius = dist[order[detail::mass_cutoff(order, mass, (Scalar(1) - alpha) * mass.sum())]];
  Vector<Scalar> psi = (dist.array() <= radius).template cast<Scalar>().matrix();
  return {center, radius, AcceptanceField<Scalar>(grid, std::move(psi), alpha)};
}

template <typename Scalar>
BallRegion<Scalar> credible_ball(const DiscreteMeasure<Scalar>& mu, Scalar alpha) {
  return credible_ball(mu.grid(), mu.mass(), alpha);
}

template <typename Scalar>
BallRegion<Scalar> credible_ball(const DensityField<Scalar>& mu, Scalar alpha) {
  return credible_ball(mu.grid(), Vector<Scalar>(mu.masses()), alpha);
}

template <typename Scalar>
struct HpdRegion {
  Scalar level;
  AcceptanceField<Scalar> indicator;
};

/// {rho >= d*} with d* the largest density level whose superlevel set holds
/// mass 1 - alpha. Points tied at d* are all included.
template <typename Scalar>
HpdRegion<Scalar> hpd_region(const DensityField<Scalar>& mu, Scalar alpha) {
  detail::check_alpha(double(alpha));
  const auto& rho = mu.values();
  const Vector<Scalar> mass = mu.masses();
  std::vector<Index> order(static_cast<std::size_t>(mu.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return rho[a] > rho[b]; });
  const Scalar level = rho[order[detail::mass_cutoff(order, mass, (Scalar(1) - alpha) * mass.sum())]];
  Vector<Scalar> psi = (rho.array() >= level).template cast<Scalar>().matrix();
  return {level, AcceptanceField<Scalar>(mu.grid(), std::move(psi), alpha)};
}

// ---------------------------------------------------------------------------
// Relaxed regions

/// Monotone credibility curve H(r) = sum_i m_i clamp(r - s_i, 0, 1).
///
/// Both relaxed families are instances: the relaxed ball uses
/// s_i = beta |theta_i - mean|, the relaxed HPD region s_i = -beta_hat rho_i
/// with r = 1 - beta_hat d. H is nondecreasing and 1-Lipschitz in r, and
/// evaluates in O(log n) from prefix sums over the sorted offsets.
template <typename Scalar>
class LevelSolver {
 public:
  LevelSolver(const Vector<Scalar>& offsets, const Vector<Scalar>& mass) {
    if (offsets.size() != mass.size() || offsets.size() == 0)
      throw DomainError("level solver needs matching, nonempty offsets and masses");
    const Index n = offsets.size();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::sort(order.begin(), order.end(), [&](Index a, Index b) { return offsets[a] < offsets[b]; });
    sorted_.resize(std::size_t(n));
    cum_mass_.assign(std::size_t(n) + 1, Scalar(0));
    cum_moment_.assign(std::size_t(n) + 1, Scalar(0));
    for (std::size_t k = 0; k < order.size(); ++k) {
      sorted_[k] = offsets[order[k]];
      cum_mass_[k + 1] = cum_mass_[k] + mass[order[k]];
      cum_moment_[k + 1] = cum_moment_[k] + mass[order[k]] * offsets[order[k]];
    }
  }

  Scalar total_mass() const { return cum_mass_.back(); }

  Scalar credibility(Scalar r) const {
    const auto full = std::size_t(std::upper_bound(sorted_.begin(), sorted_.end(), r - 1) - sorted_.begin());
    const auto part = std::size_t(std::lower_bound(sorted_.begin(), sorted_.end(), r) - sorted_.begin());
    if (part <= full) return cum_mass_[full];
    return cum_mass_[full] + r * (cum_mass_[part] - cum_mass_[full]) - (cum_moment_[part] - cum_moment_[full]);
  }

  /// Least r with H(r) >= target, by bisection to `tol` followed by one
  /// interpolation step on the final bracket.
  Scalar solve(Scalar target, Scalar tol) const {
    Scalar lo = sorted_.front();
    Scalar hi = sorted_.back() + 1;
    if (target <= 0) return lo;
    for (int it = 0; it < 300 && hi - lo > tol; ++it) {
      const Scalar mid = lo + (hi - lo) / 2;
      if (mid <= lo || mid >= hi) break;
      if (credibility(mid) >= target)
        hi = mid;
      else
        lo = mid;
    }
    const Scalar h_lo = credibility(lo), h_hi = credibility(hi);
    if (h_hi > h_lo) {
      const Scalar r = lo + (target - h_lo) * (hi - lo) / (h_hi - h_lo);
      if (r > lo && r < hi && credibility(r) >= target) return r;
    }
    return hi;
  }

 private:
  std::vector<Scalar> sorted_;
  std::vector<Scalar> cum_mass_;
  std::vector<Scalar> cum_moment_;
};

/// A one-parameter family of Lipschitz acceptance fields
/// psi^a(theta) = clamp(r(a) - s(theta), 0, 1), where r(a) is fixed by the
/// credibility 1 - a under the base posterior and s is evaluated on a
/// (possibly different) evaluation grid.
template <typename Scalar>
struct LevelFamily {
  LevelSolver<Scalar> solver;
  Vector<Scalar> eval_offsets;
  ParameterGrid<Scalar> eval_grid;

  Scalar level(Scalar alpha, Scalar tol) const {
    return solver.solve((Scalar(1) - alpha) * solver.total_mass(), tol);
  }

  Vector<Scalar> field_at_level(Scalar r) const {
    return (Scalar(r) - eval_offsets.array()).max(Scalar(0)).min(Scalar(1)).matrix();
  }

  AcceptanceField<Scalar> field(Scalar alpha, Scalar tol) const {
    return AcceptanceField<Scalar>(eval_grid, field_at_level(level(alpha, tol)), alpha);
  }
};

/// Relaxed-ball family for base posterior masses on `grid`, evaluated at the
/// points of `eval_grid`.
template <typename Scalar>
LevelFamily<Scalar> relaxed_ball_family(const ParameterGrid<Scalar>& grid, const Vector<Scalar>& mass, Scalar beta,
                                        const ParameterGrid<Scalar>& eval_grid) {
  if (!(beta > 0)) throw ParameterViolation("slope beta must be positive");
  const Scalar center = mass.dot(grid.points()) / mass.sum();
  Vector<Scalar> s = (beta * (grid.points().array() - center).abs()).matrix();
  Vector<Scalar> s_eval = (beta * (eval_grid.points().array() - center).abs()).matrix();
  return {LevelSolver<Scalar>(s, mass), std::move(s_eval), eval_grid};
}

/// Relaxed-HPD family of a density. `eval_index[k]` is the density-grid
/// index of evaluation point k.
template <typename Scalar>
LevelFamily<Scalar> relaxed_hpd_family(const DensityField<Scalar>& rho, Scalar beta,
                                       const ParameterGrid<Scalar>& eval_grid, const std::vector<Index>& eval_index) {
  if (!(beta > 0)) throw ParameterViolation("slope beta must be positive");
  const Scalar lip = rho.grid().size() > 1 ? lipschitz_quotient(rho) : Scalar(0);
  const Scalar beta_hat = beta / std::max(Scalar(1), lip);
  Vector<Scalar> s = (-beta_hat * rho.values().array()).matrix();
  Vector<Scalar> s_eval(eval_grid.size());
  for (Index k = 0; k < eval_grid.size(); ++k) s_eval[k] = s[eval_index[std::size_t(k)]];
  return {LevelSolver<Scalar>(s, rho.masses()), std::move(s_eval), eval_grid};
}

template <typename Scalar>
std::vector<Index> identity_index(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index(0));
  return idx;
}

/// psi = min(1, max(0, r* - beta |theta - M(mu)|)) with r* the least level of
/// credibility 1 - alpha.
template <typename Scalar>
AcceptanceField<Scalar> relaxed_ball(const DiscreteMeasure<Scalar>& mu, Scalar alpha, Scalar beta,
                                     Scalar tol = Scalar(1e-10)) {
  detail::check_alpha(double(alpha));
  return relaxed_ball_family(mu.grid(), mu.mass(), beta, mu.grid()).field(alpha, tol);
}

template <typename Scalar>
AcceptanceField<Scalar> relaxed_ball(const DensityField<Scalar>& mu, Scalar alpha, Scalar beta,
                                     Scalar tol = Scalar(1e-10)) {
  detail::check_alpha(double(alpha));
  return relaxed_ball_family(mu.grid(), Vector<Scalar>(mu.masses()), beta, mu.grid()).field(alpha, tol);
}

/// The level r* of the relaxed ball.
template <typename Scalar>
Scalar relaxed_ball_level(const DiscreteMeasure<Scalar>& mu, Scalar alpha, Scalar beta, Scalar tol = Scalar(1e-10)) {
  detail::check_alpha(double(alpha));
  return relaxed_ball_family(mu.grid(), mu.mass(), beta, mu.grid()).level(alpha, tol);
}

template <typename Scalar>
Scalar relaxed_ball_level(const DensityField<Scalar>& mu, Scalar alpha, Scalar beta, Scalar tol = Scalar(1e-10)) {
  detail::check_alpha(double(alpha));
  return relaxed_ball_family(mu.grid(), Vector<Scalar>(mu.masses()), beta, mu.grid()).level(alpha, tol);
}

/// Relaxed HPD region: 1 where rho >= d*, 0 where rho <= d* - 1/beta_hat,
/// linear in rho between, with beta_hat = beta / max(1, Lip(rho)).
template <typename Scalar>
AcceptanceField<Scalar> relaxed_hpd(const DensityField<Scalar>& mu, Scalar alpha, Scalar beta,
                                    Scalar tol = Scalar(1e-10)) {
  detail::check_alpha(double(alpha));
  return relaxed_hpd_family(mu, beta, mu.grid(), identity_index<Scalar>(mu.size())).field(alpha, tol);
}

/// The density level d* of the relaxed HPD region.
template <typename Scalar>
Scalar relaxed_hpd_level(const DensityField<Scalar>& mu, Scalar alpha, Scalar beta, Scalar tol = Scalar(1e-10)) {
  detail::check_alpha(double(alpha));
  const Scalar lip = mu.grid().size() > 1 ? lipschitz_quotient(mu) : Scalar(0);
  const Scalar beta_hat = beta / std::max(Scalar(1), lip);
  const auto fam = relaxed_hpd_family(mu, beta, mu.grid(), identity_index<Scalar>(mu.size()));
  return (Scalar(1) - fam.level(alpha, tol)) / beta_hat;
}

// ---------------------------------------------------------------------------
// Perturbed regions

/// Nodes and normalized weights of the composite trapezoid rule for the
/// level-shift density on [delta eta, delta]: the triangular density on
/// [eta, 1] peaked at (1 + eta) / 2, rescaled by delta.
template <typename Scalar>
struct LevelQuadrature {
  Vector<Scalar> shifts;
  Vector<Scalar> weights;

  static LevelQuadrature make(Scalar delta, Scalar eta, Index n_z) {
    if (n_z < 3) throw ParameterViolation("level quadrature needs n_z >= 3");
    if (!(eta > 0 && eta < 1)) throw ParameterViolation("eta must lie in (0, 1)");
    if (!(delta > 0)) throw ParameterViolation("delta must be positive");
    LevelQuadrature q{Vector<Scalar>(n_z), Vector<Scalar>(n_z)};
    const Scalar a = delta * eta, b = delta;
    const Scalar h = (b - a) / Scalar(n_z - 1);
    const Scalar peak = (Scalar(1) + eta) / 2;
    const Scalar height = Scalar(2) / (Scalar(1) - eta);
    for (Index k = 0; k < n_z; ++k) {
      const Scalar z = k + 1 == n_z ? b : a + h * Scalar(k);
      const Scalar u = z / delta;
      using std::abs;
      const Scalar p = std::max(Scalar(0), height * (Scalar(1) - abs(u - peak) / (peak - eta))) / delta;
      q.shifts[k] = z;
      q.weights[k] = p * h * ((k == 0 || k + 1 == n_z) ? Scalar(0.5) : Scalar(1));
    }
    const Scalar total = q.weights.sum();
    if (!(total > 0)) throw ParameterViolation("level quadrature has no interior nodes");
    q.weights /= total;
    return q;
  }
};

/// psi_tilde = sum_k w_k psi^{alpha - z_k}: the base family averaged over
/// shifted levels 1 - (alpha - z).
template <typename Scalar>
AcceptanceField<Scalar> level_averaged(const LevelFamily<Scalar>& family, Scalar alpha,
                                       const LevelQuadrature<Scalar>& quad, Scalar tol) {
  detail::check_alpha(double(alpha));
  Vector<Scalar> psi = Vector<Scalar>::Zero(family.eval_grid.size());
  for (Index k = 0; k < quad.shifts.size(); ++k) {
    const Scalar shifted = alpha - quad.shifts[k];
    if (!(shifted > 0)) throw ParameterViolation("level shift exceeds alpha (need delta < alpha)");
    if (quad.weights[k] == 0) continue;
    psi += quad.weights[k] * family.field_at_level(family.level(shifted, tol));
  }
  psi = psi.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
  return AcceptanceField<Scalar>(family.eval_grid, std::move(psi), alpha);
}

/// R = sup{r in [0, 1] : L(r) >= 1 - alpha} with
/// L(r) = sum_i mass_i max(0, psi_i - r), by bisection to `tol`.
template <typename Scalar>
Scalar correction_R(const AcceptanceField<Scalar>& psi_tilde, const Vector<Scalar>& mass, Scalar alpha,
                    Scalar tol = Scalar(1e-10)) {
  detail::check_alpha(double(alpha));
  if (mass.size() != psi_tilde.size()) throw GridMismatch("field and measure sizes differ");
  const Scalar target = Scalar(1) - alpha;
  auto shifted = [&](Scalar r) { return (psi_tilde.psi().array() - r).max(Scalar(0)).matrix().dot(mass); };
  const Scalar start = shifted(0);
  if (start < target - Scalar(1e-12))
    throw CredibilityDeficit("averaged field has credibility " + std::to_string(double(start)) + " < " +
                             std::to_string(double(target)));
  if (start <= target) return 0;
  Scalar lo = 0, hi = 1;
  for (int it = 0; it < 300 && hi - lo > tol; ++it) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (shifted(mid) >= target)
      lo = mid;
    else
      hi = mid;
  }
  // L is linear between breakpoints; one interpolation step tightens the level.
  const Scalar l_lo = shifted(lo), l_hi = shifted(hi);
  if (l_lo > l_hi) {
    const Scalar r = lo + (l_lo - target) * (hi - lo) / (l_lo - l_hi);
    if (r > lo && r < hi && shifted(r) >= target) return r;
  }
  return lo;
}

template <typename Scalar>
Scalar correction_R(const AcceptanceField<Scalar>& psi_tilde, const DiscreteMeasure<Scalar>& post, Scalar alpha,
                    Scalar tol = Scalar(1e-10)) {
  detail::require_same_grid(psi_tilde.grid(), post.grid());
  return correction_R(psi_tilde, post.mass(), alpha, tol);
}

template <typename Scalar>
Scalar correction_R(const AcceptanceField<Scalar>& psi_tilde, const DensityField<Scalar>& post, Scalar alpha,
                    Scalar tol = Scalar(1e-10)) {
  detail::require_same_grid(psi_tilde.grid(), post.grid());
  return correction_R(psi_tilde, Vector<Scalar>(post.masses()), alpha, tol);
}

/// max(0, psi_tilde - R).
template <typename Scalar>
AcceptanceField<Scalar> corrected(const AcceptanceField<Scalar>& psi_tilde, Scalar r) {
  Vector<Scalar> psi = (psi_tilde.psi().array() - r).max(Scalar(0)).matrix();
  return AcceptanceField<Scalar>(psi_tilde.grid(), std::move(psi), psi_tilde.alpha());
}

}  // namespace matchprior
