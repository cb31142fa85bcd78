#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "harness/config.hpp"
#include "harness/manifest.hpp"
#include "harness/montecarlo.hpp"
#include "heatest/error.hpp"

using namespace heatest;
using namespace heatest::harness;
namespace fs = std::filesystem;

namespace {

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("heatest-test-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(HEATEST_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config text parser") {
  const Json j = parse_config_text(R"(
# comment
theta = 0.02   # trailing comment
name = "run \"a\""
flag = true
nt = 1_000
list = [0.05, 0.02,
        0.01]
point = { kind = "logistic", a = 0.04 }
[estimator]
x0 = 0.5
kernel.delta_order = 1
[study]
modes = ["parametric", "lipschitz"]
)");
  CHECK(get_number(j, "theta") == 0.02);
  CHECK(get_string(j, "name", "") == "run \"a\"");
  CHECK(get_bool(j, "flag", false));
  CHECK(get_integer(j, "nt") == 1000);
  CHECK(get_numbers(j, "list", {}) == std::vector<double>{0.05, 0.02, 0.01});
  CHECK(get_string(j, "point.kind", "") == "logistic");
  CHECK(get_number(j, "estimator.x0") == 0.5);
  CHECK(get_integer(j, "estimator.kernel.delta_order") == 1);
  CHECK((*find(j, "study.modes"))[1] == "lipschitz");
  CHECK(find(j, "estimator.h") == nullptr);
  CHECK(get_number(j, "estimator.gamma", 1.5) == 1.5);

  const std::string m = error_message([] { parse_config_text("a = 1\nb = [1, 2\n", "x.toml"); });
  CHECK(m.find("x.toml") != std::string::npos);
  CHECK_THROWS_AS(parse_config_text("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("= 3\n"), ConfigError);
  CHECK_THROWS_AS(get_integer(j, "theta"), ConfigError);
  CHECK_THROWS_AS(get_number(j, "name"), ConfigError);
}

TEST_CASE("overrides") {
  Json j = parse_config_text("nx = 512\n[estimator]\nh = \"auto\"\n");
  apply_override(j, "nx=128");
  apply_override(j, "estimator.h=0.5");
  apply_override(j, "study.modes=[\"parametric\"]");
  apply_override(j, "label=plain text");
  CHECK(get_integer(j, "nx") == 128);
  CHECK(get_number(j, "estimator.h") == 0.5);
  CHECK((*find(j, "study.modes"))[0] == "parametric");
  CHECK(get_string(j, "label", "") == "plain text");
  CHECK_THROWS_AS(apply_override(j, "novalue"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "a..b=1"), ConfigError);
}

TEST_CASE("model and estimator blocks") {
  const Json ok = parse_config_text(
      "theta = { kind = \"test_profile\" }\nsigma = 10\nT = 1\nnt = 100\nnx = 64\nepsilon = 0.01\nseed = 3\n"
      "[estimator]\nh = \"cube_root\"\nweights = \"loclin\"\n");
  const ModelConfig m = model_from_config(ok);
  CHECK(m.spec.grid.nx() == 64);
  CHECK(m.spec.theta(0.5) == DiffusivityField::logistic_profile()(0.5));
  CHECK(m.epsilon == 0.01);
  CHECK(m.seed == 3);
  CHECK_FALSE(m.diagnostic);
  const EstimatorConfig e = estimator_from_config(ok, 8e-3, 10.0);
  CHECK(*e.h == doctest::Approx(0.2));
  CHECK(e.weights == WeightScheme::LocallyLinear);

  const Json missing = parse_config_text("sigma = 10\nT = 1\nnt = 100\nnx = 64\n");
  const std::string msg = error_message([&] { model_from_config(missing); });
  CHECK(msg.find("'theta'") != std::string::npos);
  const Json bad_kind = parse_config_text("theta = { kind = \"wavy\" }\nsigma = 1\nT = 1\nnt = 10\nnx = 10\n");
  CHECK_THROWS_AS(model_from_config(bad_kind), ConfigError);
  const Json bad_h = parse_config_text("[estimator]\nh = \"wide\"\n");
  CHECK_THROWS_AS(estimator_from_config(bad_h, 1e-3, 1.0), ConfigError);
  CHECK(thread_count(3) == 3);
}

TEST_CASE("digests and manifests") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const fs::path dir = scratch("manifest");
  std::ofstream(dir / "out.txt") << "abc";
  RunManifest m;
  m.command = "simulate";
  m.config = parse_config_text("theta = 0.02\n");
  m.version = version_tag();
  m.seed = 99;
  m.started = utc_timestamp();
  m.finished = m.started;
  m.record(dir, "out.txt");
  REQUIRE(m.outputs.size() == 1);
  CHECK(m.outputs[0].second == sha256_hex("abc"));
  CHECK(sha256_file(dir / "out.txt") == sha256_hex("abc"));
  const RunManifest back = RunManifest::from_json(m.to_json());
  CHECK(back.command == m.command);
  CHECK(back.seed == 99);
  CHECK(back.config == m.config);
  CHECK(back.outputs == m.outputs);
  write_manifest(dir, m);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK_THROWS_AS(sha256_file(dir / "missing"), IoError);
}

TEST_CASE("monte carlo results do not depend on the thread count") {
  const SpaceTimeGrid g(1.0, 3200, 160);
  const StatPlan* plan_ptr = nullptr;
  StatPlan plan(bump_kernel(), 0.05, g);
  plan.add_site(0.5, 0.0);
  plan.add_site(0.5, 2.0);
  plan_ptr = &plan;
  MonteCarloJob job{.spec = SimulationSpec{g, DiffusivityField::constant(0.02), 10.0, 1.0}};
  job.seed = 5;
  job.replications = 11;
  job.stats = {StatRequest{plan_ptr, 0.3, false}};
  std::map<std::size_t, double> one;
  std::map<std::size_t, double> three;
  for (std::size_t threads : {1u, 3u}) {
    job.threads = threads;
    auto& out = threads == 1 ? one : three;
    run_monte_carlo(job, [&](Replication&& r) {
      CHECK(r.trajectory == r.index);
      out[r.index] = r.tables[0].xdelta(100, 1) + r.tables[0].xprime(7, 0);
    });
  }
  CHECK(one.size() == 11);
  CHECK(one == three);
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  std::ofstream(dir / "bad.toml") << "sigma = 10\nT = 1\nnt = 100\nnx = 64\n";
  std::ofstream(dir / "sim.toml") << "theta = 0.02\nsigma = 10\nT = 0.01\nnt = 50\nnx = 32\nepsilon = 0.001\nseed = 1\n";
  const std::string out = " --quiet --out " + (dir / "out").string();
  CHECK(run("simulate --config " + (dir / "bad.toml").string() + out) == 2);
  CHECK(run("simulate --config " + (dir / "nope.toml").string() + out) == 2);
  CHECK(run("simulate --bogus") == 2);
  CHECK(run("simulate --config " + (dir / "sim.toml").string() + " --check" + out) == 0);
  CHECK(run("simulate --config " + (dir / "sim.toml").string() + out) == 0);
  CHECK(fs::exists(dir / "out" / "manifest.json"));
  CHECK(fs::exists(dir / "out" / "observation.hest"));
  const std::string first = sha256_file(dir / "out" / "observation.hest");
  CHECK(run("simulate --config " + (dir / "out" / "manifest.json").string() + " --quiet --out " +
            (dir / "replay").string()) == 0);
  CHECK(sha256_file(dir / "replay" / "observation.hest") == first);
  // budget guard: a grid too large to store is a runtime failure
  CHECK(run("simulate --config " + (dir / "sim.toml").string() +
            " --override nt=2000000 --override nx=1000" + out) == 1);
}
