// Command-line front end: solve, coverage, region and demo runs.
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "matchprior/run.hpp"

namespace mr = matchprior::run;

int main(int argc, char** argv) {
  CLI::App app{"Matching-prior synthesis and credible-region diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out = ".";
  mr::Overrides o;
  std::optional<double> alpha, a, tol, damping;
  std::optional<long long> max_iters;
  std::optional<unsigned long long> seed;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", config_path, "JSON configuration file");
    if (need_config) c->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--alpha", alpha, "level alpha");
    sub->add_option("--a", a, "schedule parameter a");
    sub->add_option("--tol", tol, "matching tolerance on max z");
    sub->add_option("--max-iters", max_iters, "iteration budget");
    sub->add_option("--damping", damping, "damping in (0, 1]");
    sub->add_option("--seed", seed, "seed for random restarts");
  };

  auto* solve = app.add_subcommand("solve", "run the damped matching iteration");
  auto* coverage = app.add_subcommand("coverage", "coverage and z map at the initial prior");
  auto* region = app.add_subcommand("region", "acceptance fields at the initial prior");
  auto* demo = app.add_subcommand("demo", "discontinuity demos");
  add_common(solve, true);
  add_common(coverage, true);
  add_common(region, true);
  add_common(demo, false);
  std::string demo_kind;
  demo->add_option("kind", demo_kind, "ball-jump | hpd-flip | figure1")
      ->required()
      ->check(CLI::IsMember({"ball-jump", "hpd-flip", "figure1"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    mr::RunConfig cfg = config_path.empty() ? mr::RunConfig{} : mr::load_config(config_path);
    cfg.out = out;
    o.alpha = alpha;
    o.a = a;
    o.tol = tol;
    o.damping = damping;
    if (max_iters) o.max_iters = matchprior::Index(*max_iters);
    if (seed) o.seed = std::uint64_t(*seed);
    if (*demo) return mr::run_demo(demo_kind, cfg);
    mr::finalize(cfg, o);
    if (*solve) return mr::run_solve(cfg);
    if (*coverage) return mr::run_coverage(cfg);
    return mr::run_region(cfg);
  } catch (const matchprior::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const matchprior::ParameterViolation& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const matchprior::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
