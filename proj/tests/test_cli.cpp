#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::path(RKLAB_TEST_TMP) / "cli";

int run(const std::string& args, const std::string& capture = "/dev/null") {
  const std::string cmd = std::string(RKLAB_CLI) + " " + args + " > " + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string write(const std::string& name, const std::string& text) {
  fs::create_directories(kTmp);
  const fs::path p = kTmp / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kFeller = std::string(RKLAB_SOURCE_DIR) + "/configs/feller.json";

}  // namespace

TEST_CASE("mechanism info reports Grey's condition") {
  const std::string out = (kTmp / "info.txt").string();
  fs::create_directories(kTmp);
  CHECK(run("mechanism info --config " + kFeller, out) == 0);
  CHECK(slurp(out).find("\"grey\": true") != std::string::npos);
  const auto linear = write("linear.json", R"({"mechanism": {"alpha": 0.5, "beta": 0.0}})");
  CHECK(run("mechanism info --config " + linear, out) == 0);
  CHECK(slurp(out).find("\"grey\": false") != std::string::npos);
}

TEST_CASE("config errors exit with 2") {
  CHECK(run("mechanism info --config " + write("bad.json", "{\"mechanism\": {")) == 2);
  CHECK(run("mechanism info --config " + write("neg.json", R"({"mechanism": {"alpha": -1, "beta": 1}})")) == 2);
  CHECK(run("verify nonsense --config " + kFeller) == 2);
  CHECK(run("simulate levy") == 2);
  CHECK(run("simulate levy --config " + kFeller + " --dt -1") == 2);
}

TEST_CASE("height without a Gaussian part exits with 3") {
  const auto cfg = write("nobeta.json", R"({"mechanism": {"alpha": 0.5, "beta": 0.0,
      "jumps": {"atoms": [{"z": 1.0, "w": 1.0}]}}, "sim": {"dt": 0.01, "horizon": 1}})");
  const std::string out = (kTmp / "nobeta.txt").string();
  CHECK(run("simulate height --config " + cfg + " --out " + (kTmp / "nobeta").string(), out) == 3);
  CHECK(slurp(out).find("unsupported") != std::string::npos);
  CHECK(run("verify noise --config " + cfg + " --out " + (kTmp / "nobeta").string()) == 3);
}

TEST_CASE("simulate writes CSVs and a sidecar") {
  const auto cfg = write("sim.json", R"({"mechanism": {"alpha": 0.5, "beta": 0.5,
      "jumps": {"atoms": [{"z": 1.0, "w": 1.0}]}}, "sim": {"dt": 0.01, "horizon": 1, "seed": 5}})");
  const fs::path dir = kTmp / "sim";
  for (const std::string kind : {"levy", "cb", "height"}) {
    CHECK(run("simulate " + kind + " --config " + cfg + " --paths 2 --seed 9 --out " + dir.string()) == 0);
    const auto side = slurp(dir / ("simulate_" + kind + ".json"));
    CHECK(side.find("\"seed\": 9") != std::string::npos);
  }
  CHECK(slurp(dir / "path_1.csv").rfind("time,value\n", 0) == 0);
  CHECK(slurp(dir / "jumps_0.csv").rfind("time,size,pre_value\n", 0) == 0);
  CHECK(slurp(dir / "cb_0.csv").rfind("time,value\n", 0) == 0);
  CHECK(slurp(dir / "height_1.csv").rfind("time,height\n", 0) == 0);
  // same seed, same files
  const auto first = slurp(dir / "height_1.csv");
  CHECK(run("simulate height --config " + cfg + " --paths 2 --seed 9 --out " + dir.string()) == 0);
  CHECK(slurp(dir / "height_1.csv") == first);
}
