#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(DGC_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string data(const std::string& name) { return dgc::test::data_path(name).string(); }

}  // namespace

TEST_CASE("validate accepts bundled inputs and rejects broken ones") {
  CHECK(run("validate --system " + data("wscc9.json")) == 0);
  CHECK(run("validate --scenario " + data("ne39_deoc.json")) == 0);
  CHECK(run("validate --scenario " + data("dfec.json")) == 0);

  const fs::path dir = dgc::test::scratch("cli_validate");
  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK(run("validate --system " + (dir / "bad.json").string()) == 2);
  std::ofstream(dir / "loop.json") << R"({"schema_version": 1, "base_mva": 100, "units": "pu",
    "buses": [{"id": 1, "type": "generator"}, {"id": 2, "type": "generator"}],
    "branches": [{"from": 1, "to": 1, "x": 0.1}],
    "generators": [{"bus": 1, "H": 3, "Pm": 0}, {"bus": 2, "H": 9, "Pm": 0, "infinite_bus": true}]})";
  CHECK(run("validate --system " + (dir / "loop.json").string()) == 2);
  CHECK(run("deoc --no-such-flag") == 2);
  CHECK(run("modes --system " + (dir / "missing.json").string()) == 2);
}

TEST_CASE("deoc writes its outputs and is repeatable") {
  const fs::path a = dgc::test::scratch("cli_deoc_a");
  const fs::path b = dgc::test::scratch("cli_deoc_b");
  const std::string args = "deoc --scenario " + data("wscc9_deoc.json") + " --dt-out 0.01";
  REQUIRE(run(args + " --out " + a.string()) == 0);
  REQUIRE(run(args + " --out " + b.string()) == 0);
  for (const char* f : {"deoc_schedule.json", "deoc_controlled.json", "deoc_uncontrolled.json",
                        "deoc_controlled.csv", "deoc_uncontrolled.csv"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const std::string csv = slurp(a / "deoc_controlled.csv");
  CHECK(csv.rfind("t,delta_2,delta_3,omega_2,omega_3,f_hz_2,f_hz_3,E_k,orbit_value,h,stage\n", 0) ==
        0);
}

TEST_CASE("zero dP reproduces the uncontrolled run") {
  const fs::path out = dgc::test::scratch("cli_zero");
  REQUIRE(run("deoc --scenario " + data("wscc9_deoc.json") + " --zero-dp --dt-out 0.01 --out " +
              out.string()) == 0);
  CHECK(slurp(out / "deoc_controlled.csv") == slurp(out / "deoc_uncontrolled.csv"));
}

TEST_CASE("dfec sweep output does not depend on the worker count") {
  const fs::path a = dgc::test::scratch("cli_sweep_1");
  const fs::path b = dgc::test::scratch("cli_sweep_3");
  const std::string args = "dfec sweep --scenario " + data("dfec.json") + " --grid 6";
  REQUIRE(run(args + " --workers 1 --out " + a.string()) == 0);
  REQUIRE(run(args + " --workers 3 --out " + b.string()) == 0);
  CHECK(slurp(a / "dfec_contour.csv") == slurp(b / "dfec_contour.csv"));
}

TEST_CASE("dfec simulate and calibrate run from the bundled scenario") {
  const fs::path out = dgc::test::scratch("cli_dfec");
  CHECK(run("dfec simulate --scenario " + data("dfec.json") + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "dfec_simulation.json"));
  CHECK(run("dfec calibrate --scenario " + data("dfec.json") + " --target 0.9 --out " +
            out.string()) == 1);
}
