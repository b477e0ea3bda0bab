#include "dspec/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "dspec_cli_test";

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  fs::create_directories(kDir);
  const fs::path out = kDir / "stdout.txt";
  const std::string cmd = std::string(DSPEC_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::ostringstream text;
  text << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text.str()};
}

fs::path write(const std::string& name, const std::string& text) {
  fs::create_directories(kDir);
  std::ofstream(kDir / name) << text;
  return kDir / name;
}

const char* kTwoState = R"({
  "mdp": {"n_states": 2, "n_actions": 2, "initial_state": 0,
          "transition": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]]},
  "reward": {"kind": "state", "values": [0, 1]},
  "distribution": {"variant": "point-mass", "reward": [0, 1]},
  "policy": {"kind": "deterministic", "actions": [0, 0]},
  "gamma": 0.5,
  "correct_at": 1
})";

}  // namespace

TEST_CASE("verify passes and is deterministic") {
  const Run a = run("verify --cases 100 --seed 7");
  CHECK(a.code == 0);
  CHECK(a.out.find("all identities hold") != std::string::npos);
  CHECK(run("verify --cases 100 --seed 7").out == a.out);
}

TEST_CASE("score and solve on a two-state game") {
  const fs::path cfg = write("two_state.json", kTwoState);
  // Stay at 0 for one step (reward 0), then reveal: V*(0) = 0.5 * 2 = 1, discounted once.
  const Run score = run("score --config " + cfg.string());
  CHECK(score.code == 0);
  CHECK(score.out == "sample_id,score,prefix_return_term,post_correction_term\n0,0.5,0,0.5\n");

  const Run solve = run("solve --config " + cfg.string());
  REQUIRE(solve.code == 0);
  const auto doc = dspec::Json::parse(solve.out);
  CHECK(doc["values"][0].get<double>() == doctest::Approx(1.0));
  CHECK(doc["values"][1].get<double>() == doctest::Approx(2.0));
  CHECK(doc["policy"] == dspec::Json::array({1, 0}));

  const Run power = run("power --config " + cfg.string());
  REQUIRE(power.code == 0);
  const auto p = dspec::Json::parse(power.out);
  CHECK(p["states"][1]["power"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("experiment writes its outputs") {
  const fs::path out = kDir / "exp";
  fs::remove_all(out);
  const fs::path cfg = write("exp.json", R"({"env": "options", "n_rand_samples": 4,
                                             "agent_modes": ["vanilla", "aup"]})");
  const Run r = run("experiment --config " + cfg.string() + " --seed 2 --out " + out.string());
  CHECK(r.code == 0);
  CHECK(fs::exists(out / "residuals.csv"));
  CHECK(fs::exists(out / "policies.json"));
  const auto summary = dspec::Json::parse(std::ifstream(out / "summary.json"));
  CHECK(summary["seed"] == 2);
  CHECK(summary["n_samples"] == 4);
}

TEST_CASE("error exit codes") {
  CHECK(run("frobnicate").code == 1);
  CHECK(run("").code == 1);
  CHECK(run("solve").code == 1);
  const fs::path bad = write("bad.json", R"({"env": "options", "gamma": 1.5})");
  CHECK(run("experiment --config " + bad.string()).code == 1);
  const fs::path bad_mdp = write("bad_mdp.json", R"({"mdp": {"n_states": 1, "n_actions": 1, "transition": [[[0.5]]]},
                                                     "reward": {"kind": "state", "values": [1]}})");
  const Run r = run("solve --config " + bad_mdp.string());
  CHECK(r.code == 1);
  CHECK(r.out.find("validation error") != std::string::npos);
  CHECK(run("verify --cases -1").code == 1);
}
