#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(HEATGAUGE_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("heatgauge-cli-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string config(const std::string& name) { return std::string(HEATGAUGE_CONFIGS) + "/" + name; }

}  // namespace

TEST_CASE("list names every suite", "[cli]") {
  const auto r = run("list");
  CHECK(r.code == 0);
  for (const char* s : {"finite-sweep", "hypercontractivity", "cd-check", "simulator-fidelity", "locality"})
    CHECK(r.out.find(s) != std::string::npos);
}

TEST_CASE("finite sweep is deterministic", "[cli]") {
  const auto a = scratch("fs-a"), b = scratch("fs-b");
  REQUIRE(run("run --suite finite-sweep --seed 7 --out " + a.string()).code == 0);
  REQUIRE(run("run --suite finite-sweep --seed 7 --out " + b.string()).code == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
  const auto j = nlohmann::json::parse(slurp(a / "report.json"));
  CHECK(j["schema"] == 1);
  for (const auto& row : j["rows"]) {
    CHECK(row.contains("provenance"));
    CHECK(row["provenance"].contains("seed"));
  }
}

TEST_CASE("hypercontractivity config on the line reports the equality case", "[cli]") {
  const auto dir = scratch("hc");
  const auto r = run("run --config " + config("hypercontractivity.json") + " --geometry euclidean:1 --out " +
                     dir.string());
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  bool equality = false;
  for (const auto& row : j["rows"])
    if (row["relation"] == "=" && !row["control"].get<bool>() && row["verdict"] == "PASS-exact") equality = true;
  CHECK(equality);
}

TEST_CASE("cd-check prints the witness table", "[cli]") {
  const auto r = run("cd-check");
  CHECK(r.code == 0);
  CHECK(r.out.find("z ") != std::string::npos);
  CHECK(r.out.find("(0,0,0)") != std::string::npos);
  // the constants are stated for L = Y1^2 + Y2^2; halving L breaks them at z
  const auto half = run("cd-check --convention 0.5");
  CHECK(half.code == 1);
  CHECK(half.out.find("-0.25") != std::string::npos);
  CHECK(run("cd-check --convention 2").code == 2);
}

TEST_CASE("plot-data emits columns", "[cli]") {
  const auto r = run("plot-data --suite norm-monotonicity --geometry euclidean:1");
  CHECK(r.code == 0);
  CHECK(r.out.rfind("claim,geometry,function,control,x,lhs,rhs", 0) == 0);
}

TEST_CASE("configuration errors exit 2 with a line number", "[cli]") {
  const auto dir = scratch("bad");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.json") << "{\n  \"suite\": \"finite-sweep\",\n  \"seeds\": 3\n}\n";
  }
  const auto r = run("run --config " + (dir / "bad.json").string() + " --out " + dir.string());
  CHECK(r.code == 2);
  CHECK(r.out.find("line 3") != std::string::npos);
  CHECK(r.out.find("seeds") != std::string::npos);

  CHECK(run("run --suite no-such-suite --out " + dir.string()).code == 2);
  CHECK(run("run --config " + (dir / "missing.json").string()).code == 2);
  CHECK(run("run --suite finite-sweep --geometry sphere").code == 2);
  CHECK(run("frobnicate").code == 2);
}

TEST_CASE("shipped configs parse", "[cli]") {
  for (const auto& e : fs::directory_iterator(HEATGAUGE_CONFIGS)) {
    CAPTURE(e.path().string());
    CHECK_NOTHROW(nlohmann::json::parse(slurp(e.path())));
  }
}
