#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "doctest.h"
#include "matchprior/run.hpp"

using namespace matchprior;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("matchprior_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(MATCHPRIOR_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTrivial = R"({"grid": {"n": 33}, "region": {"kind": "trivial", "alpha": 0.1}})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("configuration parsing") {
    auto cfg = run::parse_config(R"({
      "grid": {"lo": 0, "hi": 1, "n": 65, "layout": "cell-centered"},
      "region": {"kind": "perturbed-ball", "alpha": 0.1},
      "schedule": {"a": 0.025, "eps": 0.03},
      "solver": {"damping": 0.05, "max_iters": 10, "plus_convention": "paper-literal-min"},
      "seed": 7})");
    CHECK(cfg.model.grid.n == 65);
    CHECK(cfg.solver.seed == 7);
    CHECK(cfg.solver.convention == PlusConvention::PaperLiteralMin);
    run::finalize(cfg, {});
    CHECK(cfg.region.beta == doctest::Approx(40));
    CHECK(cfg.perturbation.gamma == cfg.region.gamma);

    CHECK_THROWS_AS(run::parse_config("{\"grid\": "), ConfigError);
    CHECK_THROWS_AS(run::parse_config("[1, 2]"), ConfigError);
    CHECK_THROWS_AS(run::parse_config(R"({"region": {"kind": "cube"}})"), ConfigError);
    CHECK_THROWS_AS(run::parse_config(R"({"grid": {"n": "many"}})"), ConfigError);

    auto bad = run::parse_config(R"({"schedule": {"a": 0.2, "eps": 0.03}})");
    CHECK_THROWS_AS(run::finalize(bad, {}), ParameterViolation);
    run::Overrides o;
    o.a = 0.025;
    CHECK_NOTHROW(run::finalize(bad, o));
  }

  TEST_CASE("table models from configuration") {
    auto cfg = run::parse_config(R"({"grid": {"n": 2}, "model": "table",
      "sample_space": {"labels": [0, 1]}, "q": [[0.5, 0.5], [0.2, 0.8]]})");
    const auto m = run::build_model(cfg.model);
    CHECK(m.q(1, 1) == doctest::Approx(0.8));
    cfg.model.q[1][1] = 0.9;
    CHECK_THROWS_AS(run::build_model(cfg.model), InvalidDensity);
  }

  TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    write_file(dir / "bad.json", "{ not json");
    write_file(dir / "trivial.json", kTrivial);
    write_file(dir / "violation.json", R"({"grid": {"n": 33}, "schedule": {"a": 0.2, "eps": 0.03}})");
    CHECK(cli("solve --config " + (dir / "bad.json").string() + " --out " + dir.string()) == 2);
    CHECK(cli("solve --config " + (dir / "violation.json").string() + " --out " + dir.string()) == 2);
    CHECK(cli("solve --config " + (dir / "missing.json").string()) == 2);
    CHECK(cli("solve") == 2);
    CHECK(cli("demo cube") == 2);
    CHECK(cli("solve --config " + (dir / "trivial.json").string() + " --out " + dir.string()) == 0);
    const auto summary = read_file(dir / "summary.json");
    CHECK(summary.find("\"converged\": true") != std::string::npos);
    CHECK(summary.find("\"iters\": 0") != std::string::npos);
  }

  TEST_CASE("outputs are byte-stable") {
    const auto a = scratch("stable_a"), b = scratch("stable_b");
    const std::string cfg = R"({"grid": {"n": 33, "layout": "cell-centered"},
      "region": {"kind": "perturbed-ball", "alpha": 0.1, "posterior_map_C": 1.0},
      "solver": {"damping": 0.1, "max_iters": 5, "restarts": 1}, "seed": 3})";
    write_file(a / "c.json", cfg);
    const int ca = cli("solve --config " + (a / "c.json").string() + " --out " + a.string());
    const int cb = cli("solve --config " + (a / "c.json").string() + " --out " + b.string());
    CHECK(ca == cb);
    CHECK((ca == 0 || ca == 1));
    for (const char* f : {"prior.csv", "coverage.csv", "trace.csv", "summary.json"}) {
      INFO(f);
      CHECK(!read_file(a / f).empty());
      CHECK(read_file(a / f) == read_file(b / f));
    }
    CHECK(cli("coverage --config " + (a / "c.json").string() + " --out " + a.string()) == 0);
    CHECK(cli("region --config " + (a / "c.json").string() + " --out " + a.string()) == 0);
    CHECK(read_file(a / "region.csv").rfind("theta,psi_0,psi_1\n", 0) == 0);
  }

  TEST_CASE("demo outputs") {
    const auto dir = scratch("demo");
    CHECK(cli("demo ball-jump --out " + dir.string()) == 0);
    CHECK(cli("demo hpd-flip --out " + dir.string()) == 0);
    CHECK(cli("demo figure1 --out " + dir.string()) == 0);
    CHECK(read_file(dir / "ball_jump.csv").rfind("c,radius\n", 0) == 0);
    CHECK(read_file(dir / "hpd_flip.csv").rfind("theta,psi_1,psi_2\n", 0) == 0);
    CHECK(read_file(dir / "figure1.csv").rfind("theta,psi_ball,psi_relaxed,psi_perturbed\n", 0) == 0);
  }
}
