#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "matchprior/errors.hpp"
#include "matchprior/measure.hpp"
#include "matchprior/model.hpp"

namespace matchprior {

/// Marginal law of the datum: mass(x) = sum_theta q(theta, x) nu(x) pi(theta).
template <typename Scalar>
Vector<Scalar> marginal(const Model<Scalar>& m, const DiscreteMeasure<Scalar>& prior) {
  detail::require_same_grid(m.grid(), prior.grid());
  Vector<Scalar> out = m.q().transpose() * prior.mass();
  return out.cwiseProduct(m.sample_space().nu);
}

/// Posterior masses proportional to q(theta, x) pi(theta).
template <typename Scalar>
DiscreteMeasure<Scalar> posterior(const Model<Scalar>& m, const DiscreteMeasure<Scalar>& prior, Index x) {
  detail::require_same_grid(m.grid(), prior.grid());
  if (x < 0 || x >= m.num_x()) throw DomainError("sample index out of range");
  Vector<Scalar> w = m.q().col(x).cwiseProduct(prior.mass());
  const Scalar total = w.sum();
  if (!(total > 0))
    throw PosteriorUndefined("marginal mass of x = " + std::to_string(x) + " is zero");
  w /= total;
  return DiscreteMeasure<Scalar>(m.grid(), std::move(w));
}

template <typename Scalar>
DensityField<Scalar> posterior_density(const Model<Scalar>& m, const DensityField<Scalar>& prior, Index x) {
  detail::require_same_grid(m.grid(), prior.grid());
  if (x < 0 || x >= m.num_x()) throw DomainError("sample index out of range");
  Vector<Scalar> v = prior.values().cwiseProduct(m.q().col(x));
  if (!(v.dot(m.grid().weights()) > 0))
    throw PosteriorUndefined("posterior normalizer of x = " + std::to_string(x) + " is zero");
  return DensityField<Scalar>::normalized(m.grid(), std::move(v));
}

/// Symmetric triangular kernel g(t) = max(0, 1 - |t|) on [-1, 1].
struct TriangularKernel {
  static constexpr double kLipschitz = 1.0;
  static constexpr double kSup = 1.0;

  template <typename Scalar>
  static Scalar eval(Scalar t) {
    using std::abs;
    const Scalar a = abs(t);
    return a < 1 ? Scalar(1) - a : Scalar(0);
  }
};

enum class PerturbationKind { Trivial, Convolution };

/// Map pi -> pi_gamma with W1(pi, pi_gamma) <= gamma. The convolution system
/// smooths with the triangular kernel scaled to [-gamma, gamma].
template <typename Scalar>
struct PerturbationSystem {
  PerturbationKind kind = PerturbationKind::Trivial;
  Scalar gamma = Scalar(1e-4);

  /// Wasserstein stability constant: W1(mu_g, nu_g) <= D W1(mu, nu).
  Scalar wasserstein_constant() const { return 1; }

  /// Sup-norm stability constant of the perturbed densities. The scaled
  /// kernel gamma^-1 g(t / gamma) has Lipschitz constant gamma^-2 Lip(g) and
  /// sup gamma^-1 sup(g).
  Scalar sup_norm_constant() const {
    return std::max(Scalar(TriangularKernel::kLipschitz) / gamma, Scalar(TriangularKernel::kSup)) / gamma;
  }

  void validate() const {
    if (!(gamma > 0)) throw ParameterViolation("perturbation gamma must be positive");
  }
};

/// Triangular-kernel convolution of a discrete prior, evaluated on `target`
/// and normalized by quadrature.
template <typename Scalar>
DensityField<Scalar> convolve_prior(const DiscreteMeasure<Scalar>& prior, Scalar gamma,
                                    const ParameterGrid<Scalar>& target) {
  if (!(gamma > 0)) throw ParameterViolation("perturbation gamma must be positive");
  const auto support = prior.support();
  const Scalar lo = prior.grid().point(support.front());
  const Scalar hi = prior.grid().point(support.back());
  if (target.lo() > lo - gamma || target.hi() < hi + gamma)
    throw DomainError("target grid does not cover the gamma-fattening of the prior support");

  const auto& tp = target.points();
  const Scalar* begin = tp.data();
  const Scalar* end = tp.data() + tp.size();
  Vector<Scalar> v = Vector<Scalar>::Zero(target.size());
  for (Index j : support) {
    const Scalar c = prior.grid().point(j);
    const Index first = Index(std::upper_bound(begin, end, c - gamma) - begin);
    const Index last = Index(std::lower_bound(begin, end, c + gamma) - begin);
    for (Index t = first; t < last; ++t)
      v[t] += prior.mass(j) * TriangularKernel::eval((tp[t] - c) / gamma) / gamma;
  }
  if (!(v.dot(target.weights()) > 0))
    throw DomainError("perturbation kernel misses every target grid point");
  return DensityField<Scalar>::normalized(target, std::move(v));
}

template <typename Scalar>
using PerturbedPrior = std::variant<DiscreteMeasure<Scalar>, DensityField<Scalar>>;

/// Trivial systems pass the prior through unchanged; convolution systems
/// return a density on `target`.
template <typename Scalar>
PerturbedPrior<Scalar> perturb_prior(const DiscreteMeasure<Scalar>& prior, const PerturbationSystem<Scalar>& sys,
                                     const ParameterGrid<Scalar>& target) {
  sys.validate();
  if (sys.kind == PerturbationKind::Trivial) return prior;
  return convolve_prior(prior, sys.gamma, target);
}

}  // namespace matchprior
