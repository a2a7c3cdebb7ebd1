#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "matchprior/credible.hpp"
#include "matchprior/errors.hpp"
#include "matchprior/measure.hpp"
#include "matchprior/model.hpp"
#include "matchprior/posterior.hpp"

namespace matchprior {

enum class RegionKind { Trivial, Ball, Hpd, RelaxedBall, RelaxedHpd, PerturbedBall, PerturbedHpd };

inline RegionKind parse_region_kind(const std::string& s) {
  if (s == "trivial") return RegionKind::Trivial;
  if (s == "ball") return RegionKind::Ball;
  if (s == "hpd") return RegionKind::Hpd;
  if (s == "relaxed-ball") return RegionKind::RelaxedBall;
  if (s == "relaxed-hpd") return RegionKind::RelaxedHpd;
  if (s == "perturbed-ball") return RegionKind::PerturbedBall;
  if (s == "perturbed-hpd") return RegionKind::PerturbedHpd;
  throw ConfigError("unknown region kind '" + s + "'");
}

inline std::string to_string(RegionKind k) {
  switch (k) {
    case RegionKind::Trivial: return "trivial";
    case RegionKind::Ball: return "ball";
    case RegionKind::Hpd: return "hpd";
    case RegionKind::RelaxedBall: return "relaxed-ball";
    case RegionKind::RelaxedHpd: return "relaxed-hpd";
    case RegionKind::PerturbedBall: return "perturbed-ball";
    case RegionKind::PerturbedHpd: return "perturbed-hpd";
  }
  return "unknown";
}

inline bool is_perturbed(RegionKind k) { return k == RegionKind::PerturbedBall || k == RegionKind::PerturbedHpd; }
inline bool is_hpd(RegionKind k) {
  return k == RegionKind::Hpd || k == RegionKind::RelaxedHpd || k == RegionKind::PerturbedHpd;
}

template <typename Scalar>
struct RegionConfig {
  RegionKind kind = RegionKind::PerturbedBall;
  Scalar alpha = Scalar(0.1);
  Scalar beta = Scalar(40);
  Scalar delta = Scalar(0.025);
  Scalar eta = Scalar(0.025);
  Scalar gamma = Scalar(0.025) * Scalar(0.025) * Scalar(0.025) * Scalar(0.025);
  Index n_z = 33;
  Scalar bisect_tol = Scalar(1e-10);
  /// Lipschitz constant of the posterior map; NaN means "estimate it".
  Scalar posterior_map_C = std::numeric_limits<Scalar>::quiet_NaN();
  /// Half-width added on each side of Theta for the supermodel grid.
  Scalar extension_margin = 1;

  /// F' = delta eta - beta C gamma.
  Scalar credibility_margin(Scalar C) const { return delta * eta - beta * C * gamma; }

  void validate() const {
    if (!(alpha > 0 && alpha < 1)) throw ParameterViolation("alpha must lie in (0, 1)");
    if (kind == RegionKind::Trivial || kind == RegionKind::Ball || kind == RegionKind::Hpd) return;
    if (!(beta > 0)) throw ParameterViolation("beta must be positive");
    if (!(bisect_tol > 0)) throw ParameterViolation("bisect_tol must be positive");
    if (!is_perturbed(kind)) return;
    if (!(delta > 0 && delta < alpha)) throw ParameterViolation("delta must lie in (0, alpha)");
    if (!(eta > 0 && eta < 1)) throw ParameterViolation("eta must lie in (0, 1)");
    if (!(gamma > 0)) throw ParameterViolation("gamma must be positive");
    if (n_z < 3) throw ParameterViolation("n_z must be at least 3");
  }
};

/// Empirical Lipschitz constant of pi -> Post^x_pi in W1, the largest ratio
/// W1(Post^x_mu, Post^x_nu) / W1(mu, nu) over seeded random prior pairs
/// (independent pairs and nearby pairs) and all x.
template <typename Scalar>
Scalar estimate_posterior_lipschitz(const Model<Scalar>& m, int pairs = 32, std::uint64_t seed = 0) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  const Index n = m.grid().size();
  auto random_prior = [&]() {
    Vector<Scalar> w(n);
    for (Index i = 0; i < n; ++i) w[i] = Scalar(expo(rng));
    return DiscreteMeasure<Scalar>::normalized(m.grid(), std::move(w));
  };
  Scalar best = 0;
  for (int p = 0; p < pairs; ++p) {
    const auto mu = random_prior();
    const auto other = random_prior();
    const Scalar mix = p % 2 == 0 ? Scalar(1) : Scalar(0.1);
    const auto nu = DiscreteMeasure<Scalar>::normalized(m.grid(), (1 - mix) * mu.mass() + mix * other.mass());
    const Scalar d = w1_1d(mu, nu);
    if (!(d > 0)) continue;
    for (Index x = 0; x < m.num_x(); ++x) {
      try {
        best = std::max(best, w1_1d(posterior(m, mu, x), posterior(m, nu, x)) / d);
      } catch (const PosteriorUndefined&) {
      }
    }
  }
  return best;
}

/// Pieces of a perturbed region at one (prior, datum) pair.
template <typename Scalar>
struct PerturbedParts {
  AcceptanceField<Scalar> averaged;
  Scalar correction;
  AcceptanceField<Scalar> region;
  DiscreteMeasure<Scalar> posterior;
};

/// Builds acceptance fields of one region kind for a fixed model.
///
/// With a convolution perturbation system the model is embedded in a
/// McShane supermodel on a grid extended by `extension_margin`; the base
/// posterior is that of the perturbed prior, while credibility is always
/// measured against the unperturbed posterior on the model grid.
template <typename Scalar>
class RegionBuilder {
 public:
  RegionBuilder(Model<Scalar> model, RegionConfig<Scalar> cfg, PerturbationSystem<Scalar> sys)
      : model_(std::move(model)), cfg_(cfg), sys_(sys) {
    cfg_.validate();
    sys_.validate();
    if (is_hpd(cfg_.kind) && sys_.kind != PerturbationKind::Convolution)
      throw ParameterViolation("HPD regions need a convolution perturbation system");
    if (sys_.kind == PerturbationKind::Convolution && cfg_.kind != RegionKind::Trivial) {
      ext_ = extend_grid(model_.grid(), std::max(cfg_.extension_margin, sys_.gamma));
      super_ = supermodel_extend(model_, ext_->grid);
    }
    if (is_perturbed(cfg_.kind)) {
      C_ = std::isnan(double(cfg_.posterior_map_C)) ? estimate_posterior_lipschitz(model_) : cfg_.posterior_map_C;
      const Scalar margin = cfg_.credibility_margin(C_);
      if (!(margin > 0))
        throw ParameterViolation("F' = delta*eta - beta*C*gamma = " + std::to_string(double(margin)) +
                                 " is not positive (C = " + std::to_string(double(C_)) + ")");
      quad_ = LevelQuadrature<Scalar>::make(cfg_.delta, cfg_.eta, cfg_.n_z);
    }
  }

  const Model<Scalar>& model() const { return model_; }
  const RegionConfig<Scalar>& config() const { return cfg_; }
  const PerturbationSystem<Scalar>& perturbation() const { return sys_; }
  Scalar posterior_map_C() const { return C_; }
  const std::optional<Model<Scalar>>& supermodel() const { return super_; }

  /// Acceptance field on the model grid for prior `prior` and datum `x`.
  AcceptanceField<Scalar> region(const DiscreteMeasure<Scalar>& prior, Index x) const {
    const Scalar alpha = cfg_.alpha;
    switch (cfg_.kind) {
      case RegionKind::Trivial:
        return trivial_region(alpha, model_.grid());
      case RegionKind::Ball:
        return ball(prior, x);
      case RegionKind::Hpd:
        return hpd(prior, x);
      case RegionKind::RelaxedBall:
      case RegionKind::RelaxedHpd:
        return base_family(prior, x).field(alpha, cfg_.bisect_tol);
      case RegionKind::PerturbedBall:
      case RegionKind::PerturbedHpd:
        return perturbed(prior, x).region;
    }
    throw ConfigError("unhandled region kind");
  }

  /// psi_tilde, R and the corrected field for the perturbed kinds.
  PerturbedParts<Scalar> perturbed(const DiscreteMeasure<Scalar>& prior, Index x) const {
    if (!is_perturbed(cfg_.kind)) throw ConfigError("region kind is not a perturbed family");
    auto post = posterior(model_, prior, x);
    auto averaged = level_averaged(base_family(prior, x), cfg_.alpha, quad_, cfg_.bisect_tol);
    const Scalar r = correction_R(averaged, post, cfg_.alpha, cfg_.bisect_tol);
    auto final_field = corrected(averaged, r);
    return {std::move(averaged), r, std::move(final_field), std::move(post)};
  }

  /// The relaxed base family (ball or HPD) at (prior, x), evaluated on the
  /// model grid.
  LevelFamily<Scalar> base_family(const DiscreteMeasure<Scalar>& prior, Index x) const {
    const bool hpd_kind = is_hpd(cfg_.kind);
    if (!ext_) {
      auto post = posterior(model_, prior, x);
      return relaxed_ball_family(model_.grid(), post.mass(), cfg_.beta, model_.grid());
    }
    const auto rho = perturbed_posterior(prior, x);
    if (hpd_kind) return relaxed_hpd_family(rho, cfg_.beta, model_.grid(), eval_index());
    return relaxed_ball_family(rho.grid(), Vector<Scalar>(rho.masses()), cfg_.beta, model_.grid());
  }

  /// Posterior density of the perturbed prior on the extended grid.
  DensityField<Scalar> perturbed_posterior(const DiscreteMeasure<Scalar>& prior, Index x) const {
    if (!ext_) throw ConfigError("no convolution perturbation system configured");
    const auto prior_density = convolve_prior(prior, sys_.gamma, ext_->grid);
    return posterior_density(*super_, prior_density, x);
  }

 private:
  std::vector<Index> eval_index() const {
    std::vector<Index> idx(static_cast<std::size_t>(model_.grid().size()));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = ext_->offset + Index(i);
    return idx;
  }

  AcceptanceField<Scalar> ball(const DiscreteMeasure<Scalar>& prior, Index x) const {
    const Scalar alpha = cfg_.alpha;
    if (!ext_) return credible_ball(posterior(model_, prior, x), alpha).indicator;
    const auto b = credible_ball(perturbed_posterior(prior, x), alpha);
    Vector<Scalar> psi =
        ((model_.grid().points().array() - b.center).abs() <= b.radius).template cast<Scalar>().matrix();
    return AcceptanceField<Scalar>(model_.grid(), std::move(psi), alpha);
  }

  AcceptanceField<Scalar> hpd(const DiscreteMeasure<Scalar>& prior, Index x) const {
    const auto h = hpd_region(perturbed_posterior(prior, x), cfg_.alpha);
    Vector<Scalar> psi = h.indicator.psi().segment(ext_->offset, model_.grid().size());
    return AcceptanceField<Scalar>(model_.grid(), std::move(psi), cfg_.alpha);
  }

  Model<Scalar> model_;
  RegionConfig<Scalar> cfg_;
  PerturbationSystem<Scalar> sys_;
  std::optional<GridExtension<Scalar>> ext_;
  std::optional<Model<Scalar>> super_;
  Scalar C_ = 0;
  LevelQuadrature<Scalar> quad_;
};

/// A family of regions: (prior, datum index) -> acceptance field on the
/// model grid.
template <typename Scalar>
using RegionFamily = std::function<AcceptanceField<Scalar>(const DiscreteMeasure<Scalar>&, Index)>;

template <typename Scalar>
RegionFamily<Scalar> make_family(std::shared_ptr<const RegionBuilder<Scalar>> builder) {
  return [builder](const DiscreteMeasure<Scalar>& prior, Index x) { return builder->region(prior, x); };
}

template <typename Scalar>
RegionFamily<Scalar> make_family(const Model<Scalar>& model, const RegionConfig<Scalar>& cfg,
                                 const PerturbationSystem<Scalar>& sys = {}) {
  return make_family(std::make_shared<const RegionBuilder<Scalar>>(model, cfg, sys));
}

/// psi identically 1 - alpha regardless of prior and datum.
template <typename Scalar>
RegionFamily<Scalar> trivial_family(const ParameterGrid<Scalar>& grid, Scalar alpha) {
  return [grid, alpha](const DiscreteMeasure<Scalar>&, Index) { return trivial_region(alpha, grid); };
}

/// psi identically 1: the region is always Theta.
template <typename Scalar>
RegionFamily<Scalar> full_family(const ParameterGrid<Scalar>& grid, Scalar alpha) {
  return [grid, alpha](const DiscreteMeasure<Scalar>&, Index) {
    return AcceptanceField<Scalar>(grid, Vector<Scalar>::Ones(grid.size()), alpha);
  };
}

/// Perturbed acceptance psi_tilde for one (prior, datum) pair.
template <typename Scalar>
AcceptanceField<Scalar> perturbed_acceptance(const Model<Scalar>& m, const DiscreteMeasure<Scalar>& prior, Index x,
                                             const RegionConfig<Scalar>& cfg, const PerturbationSystem<Scalar>& sys) {
  return RegionBuilder<Scalar>(m, cfg, sys).perturbed(prior, x).averaged;
}

/// Perturbed region max(0, psi_tilde - R) for one (prior, datum) pair.
template <typename Scalar>
AcceptanceField<Scalar> perturbed_region(const Model<Scalar>& m, const DiscreteMeasure<Scalar>& prior, Index x,
                                         const RegionConfig<Scalar>& cfg, const PerturbationSystem<Scalar>& sys) {
  return RegionBuilder<Scalar>(m, cfg, sys).perturbed(prior, x).region;
}

}  // namespace matchprior
