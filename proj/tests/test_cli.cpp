// End-to-end smoke tests driving the installed CLI binary.

#include "z2sync/instance_io.hpp"
#include "z2sync/sweep.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#ifndef Z2SYNC_CLI_PATH
#error "Z2SYNC_CLI_PATH must point at the CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string command = std::string(Z2SYNC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "z2sync_cli_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli gen/solve/certify/oracle/conditions pipeline") {
  TempDir dir;
  const auto instance = dir.file("g.z2");
  REQUIRE(run_cli("gen --model gaussian --n 14 --sigma 0.3 --seed 5 --out " + instance) == 0);
  REQUIRE(fs::exists(instance));

  const auto report = dir.file("solve.json");
  const auto factor = dir.file("y.z2f");
  REQUIRE(run_cli("solve --in " + instance + " --r 5 --starts 2 --seed 9 --report " + report +
                  " --save-y " + factor) == 0);
  REQUIRE(fs::exists(report));
  REQUIRE(fs::exists(factor));

  REQUIRE(run_cli("certify --in " + instance + " --y " + factor + " --report " +
                  dir.file("cert.json")) == 0);
  REQUIRE(run_cli("oracle --in " + instance) == 0);
  REQUIRE(run_cli("conditions --in " + instance + " --r 5 --report " +
                  dir.file("cond.json")) == 0);

  const auto bumped = dir.file("g_adv.z2");
  REQUIRE(run_cli("adversary --in " + instance + " --strength 1 --density 0.3 --seed 2 --out " +
                  bumped) == 0);
  const auto base = z2sync::load_instance(instance);
  const auto perturbed = z2sync::load_instance(bumped);
  REQUIRE((perturbed.cost.entries() - base.cost.entries()).norm() > 0.0);
}

TEST_CASE("cli sweep and verify work end to end") {
  TempDir dir;
  const auto spec = dir.file("spec.sweep");
  z2sync::detail::write_file(
      spec,
      "model gaussian\nn 24\nr 4\ntrials 2\nmaster_seed 11\nsolver.max_iters 1200\n"
      "grid sigma 0.3 3.0\n");
  const auto out = (dir.path / "out").string();
  REQUIRE(run_cli("sweep --spec " + spec + " --out " + out) == 0);
  REQUIRE(fs::exists(fs::path(out) / "results.csv"));
  REQUIRE(fs::exists(fs::path(out) / "summary.csv"));
  REQUIRE(fs::exists(fs::path(out) / "spec.sweep"));
  REQUIRE(run_cli("verify --dir " + out) == 0);
  REQUIRE(run_cli("sweep --spec " + spec + " --out " + out + " --resume") == 0);
}

TEST_CASE("cli exit codes distinguish usage, invariant, and io errors") {
  TempDir dir;
  // Unknown flag: usage error.
  REQUIRE(run_cli("gen --bogus 3") == 1);
  // Oracle bound: usage error.
  const auto big = dir.file("big.z2");
  REQUIRE(run_cli("gen --model gaussian --n 30 --sigma 0.1 --seed 1 --out " + big) == 0);
  REQUIRE(run_cli("oracle --in " + big) == 1);
  // Missing file: io error.
  REQUIRE(run_cli("solve --in " + dir.file("missing.z2")) == 3);
  // Corrupted file: invariant error.
  const auto corrupt = dir.file("corrupt.z2");
  z2sync::detail::write_file(corrupt, "z2sync-instance v1\nmodel raw\n");
  REQUIRE(run_cli("solve --in " + corrupt) == 2);
}
