#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "csi/config.hpp"
#include "csi/container.hpp"
#include "support.hpp"

using namespace csi;
using namespace csi::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(CSI_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.out += buf;
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("csi_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string config(const std::string& name) {
  return (fs::path(data_dir()) / "configs" / name).string();
}

}  // namespace

TEST_CASE("usage errors exit with status 2") {
  CHECK(run("--bogus").status == 2);
  CHECK(run("model-info").status == 2);
  CHECK(run("model-info -c /nonexistent/acq.json").status == 2);
  const auto dir = scratch_dir("usage");
  write(dir / "bad.json", R"({"echo_times_ms": [2, 1], "species": ["water"]})");
  CHECK(run("model-info -c " + (dir / "bad.json").string()).status == 2);
  CHECK(run("--help").status == 0);
}

TEST_CASE("model-info and analyze") {
  const auto info = run("model-info -c " + config("acquisition_water_fat.json"));
  REQUIRE(info.status == 0);
  const Json j = Json::parse(info.out);
  CHECK(j.dump().find("20000") != std::string::npos);

  const auto dir = scratch_dir("analyze");
  const auto an = run("analyze -c " + config("acquisition_water_fat.json") +
                      " --lo -2000 --hi 2000 --step 50 -o " + (dir / "a.json").string() + " --csv " +
                      (dir / "a.csv").string());
  REQUIRE(an.status == 0);
  CHECK(fs::exists(dir / "a.json"));
  std::ifstream csv(dir / "a.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 82);
}

TEST_CASE("single-voxel solve") {
  const auto model = water_fat(family_echoes(4));
  CVector c(2);
  c << Complex{0.7, 0.1}, Complex{0.3, -0.2};
  const Complex xi0{42.0, 8.0};
  const CVector s0 = signal(xi0, c, model);
  Json sig = Json::array();
  for (int k = 0; k < s0.size(); ++k) sig.push_back({s0(k).real(), s0(k).imag()});
  const Json in = {{"acquisition", load_json_file(config("acquisition_water_fat.json"))},
                   {"signal", sig},
                   {"init", {42.5, 8.3}},
                   {"flow", {{"grad_tol", 1e-14}}}};
  const auto dir = scratch_dir("solve");
  write(dir / "in.json", in.dump());
  const auto r = run("solve -i " + (dir / "in.json").string() + " --trajectory " +
                     (dir / "traj.csv").string());
  REQUIRE(r.status == 0);
  const Json out = Json::parse(r.out);
  CHECK(out["fieldmap_hz"].get<double>() == doctest::Approx(42.0).epsilon(1e-8));
  CHECK(out["r2star_hz"].get<double>() == doctest::Approx(8.0).epsilon(1e-8));
  CHECK(out["c_hat"][0][0].get<double>() == doctest::Approx(0.7).epsilon(1e-7));
  CHECK(fs::exists(dir / "traj.csv"));

  write(dir / "short.json", R"({"acquisition": {"echo_times_ms": [1, 2], "species": ["water"]},
                                "signal": [[1, 0]]})");
  CHECK(run("solve -i " + (dir / "short.json").string()).status == 2);
}

TEST_CASE("phantom, corrupt, reconstruct and metrics pipeline") {
  const auto dir = scratch_dir("pipeline");
  write(dir / "phantom.json", R"({"width": 12, "height": 10,
    "shapes": [{"kind": "disk", "center": [3, 4], "size": 2.5, "species_index": 0},
               {"kind": "disk", "center": [8, 5], "size": 2.5, "species_index": 1, "r2star_hz": 20},
               {"kind": "disk", "center": [8, 5], "size": 1.5, "species_index": 0, "concentration": 0.5}],
    "fieldmap": {"kind": "linear", "offset": 10, "slope_x": 1.5, "slope_y": -0.5},
    "r2star": {"kind": "constant", "offset": 5}})");
  const std::string acq = config("acquisition_phantom.json");
  const auto ph = run("phantom -c " + acq + " -p " + (dir / "phantom.json").string() + " -o " +
                      (dir / "ph").string());
  REQUIRE(ph.status == 0);
  for (const char* f : {"signal", "truth_xi", "truth_c", "mask"}) {
    CHECK(fs::exists(dir / "ph" / (std::string(f) + ".json")));
  }

  const auto re = run("reconstruct -i " + (dir / "ph" / "signal.json").string() + " -c " + acq +
                      " --init-xi " + (dir / "ph" / "truth_xi.json").string() + " --truth-c " +
                      (dir / "ph" / "truth_c.json").string() + " -o " + (dir / "rec").string());
  REQUIRE(re.status == 0);
  const auto c_map = vectors_from_csir(read_csir((dir / "rec" / "c_map.json").string()));
  const auto truth = vectors_from_csir(read_csir((dir / "ph" / "truth_c.json").string()));
  REQUIRE(c_map.size() == truth.size());
  double worst = 0.0;
  for (std::size_t v = 0; v < truth.size(); ++v) {
    if (truth[v].norm() > 0.0) worst = std::max(worst, (c_map[v] - truth[v]).norm() / truth[v].norm());
  }
  CHECK(worst < 1e-6);
  CHECK(fs::exists(dir / "rec" / "pdff.json"));
  CHECK(fs::exists(dir / "rec" / "metrics.json"));

  const auto co = run("corrupt -i " + (dir / "ph" / "signal.json").string() + " -c " + acq +
                      " --sigma 0.01 --seed 5 -o " + (dir / "noisy.json").string());
  REQUIRE(co.status == 0);
  const auto co2 = run("corrupt -i " + (dir / "ph" / "signal.json").string() + " -c " + acq +
                       " --sigma 0.01 --seed 5 -o " + (dir / "noisy2.json").string());
  REQUIRE(co2.status == 0);
  CHECK(read_csir((dir / "noisy.json").string()).values ==
        read_csir((dir / "noisy2.json").string()).values);

  const auto me = run("metrics --truth " + (dir / "ph" / "signal.json").string() + " --estimate " +
                      (dir / "noisy.json").string());
  REQUIRE(me.status == 0);
  const Json m = Json::parse(me.out);
  CHECK(m.dump().find("mse") != std::string::npos);

  CHECK(run("metrics --truth " + (dir / "ph" / "signal.json").string() + " --estimate " +
            (dir / "ph" / "truth_xi.json").string())
            .status == 2);
}
