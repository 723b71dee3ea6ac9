#include "support.hpp"

#include "tdpauc/cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

using namespace tdpauc;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "tdpauc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// Scratch directory with a censored cohort, a complete one and a two-group file.
struct Fixture {
  fs::path dir;
  fs::path censored;
  fs::path complete;
  fs::path grouped;
  fs::path pair;

  Fixture() {
    dir = fs::temp_directory_path() / ("tdpauc_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::mt19937_64 rng(61);
    censored = dir / "censored.csv";
    complete = dir / "complete.csv";
    grouped = dir / "grouped.csv";
    pair = dir / "pair.csv";
    write(censored, testing::random_cohort(rng, 150, 0.3));
    write(complete, testing::random_cohort(rng, 120, 0.0));
    {
      const Cohort a = testing::random_cohort(rng, 100, 0.3);
      const Cohort b = testing::random_cohort(rng, 110, 0.3);
      std::vector<SurvivalRecord> rec;
      for (auto r : a.records()) { r.group = 1; rec.push_back(r); }
      for (auto r : b.records()) { r.group = 2; rec.push_back(r); }
      write(grouped, Cohort(rec));
    }
    std::ofstream(pair) << "time,status,marker\n0.5,1,1\n2,1,0\n";
  }
  ~Fixture() { fs::remove_all(dir); }

  static void write(const fs::path& p, const Cohort& c) {
    std::ofstream f(p);
    write_cohort_csv(c, f);
  }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("estimate prints one JSON object per time") {
  Fixture fx;
  const Run r = run({"--input", fx.censored.string(), "estimate", "--time", "1.0", "--alpha", "0.2",
                     "--bandwidth", "0.1"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"t", "alpha", "theta", "quantile", "se", "bandwidth", "kind", "level", "lower", "upper"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["bandwidth"].get<double>() == 0.1);
  CHECK(j["kind"] == "censored");
  CHECK(j["lower"].get<double>() < j["theta"].get<double>());

  const Run two = run({"--input", fx.censored.string(), "estimate", "--time", "0.8", "--time", "1.2",
                       "--bandwidth", "0.1", "--alpha", "1"});
  REQUIRE(two.code == 0);
  const auto arr = nlohmann::json::parse(two.out);
  REQUIRE(arr.is_array());
  CHECK(arr.size() == 2);
  CHECK(arr[0]["quantile"] == "-inf");

  const Run automatic = run({"--input", fx.censored.string(), "estimate", "--time", "1.0"});
  CHECK(automatic.code == 0);
  CHECK(automatic.err.find("selected bandwidth") != std::string::npos);

  const Run comp = run({"--input", fx.complete.string(), "estimate", "--time", "1.0", "--complete-data"});
  REQUIRE(comp.code == 0);
  CHECK(nlohmann::json::parse(comp.out)["bandwidth"].is_null());

  const Run csv = run({"--input", fx.censored.string(), "--format", "csv", "estimate", "--time", "1.0",
                       "--bandwidth", "0.1"});
  CHECK(csv.out.rfind("t,alpha,theta,quantile,se,bandwidth\n", 0) == 0);
}

TEST_CASE("band output is reproducible byte for byte") {
  Fixture fx;
  const std::vector<std::string> args{"--input", fx.censored.string(), "band", "--alpha", "0.2",
                                      "--bandwidth", "0.12", "--resamples", "300", "--seed", "11"};
  const Run a = run(args);
  const Run b = run(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("t,theta,se,lower_pw,upper_pw,lower_sim,upper_sim", 0) == 0);
  std::vector<std::string> threads = args;
  threads.insert(threads.begin(), {"--threads", "1"});
  CHECK(run(threads).out == a.out);
}

TEST_CASE("compare and bandwidth subcommands") {
  Fixture fx;
  const Run cmp = run({"--input", fx.grouped.string(), "--group-col", "group", "compare", "--groups",
                       "1", "2", "--bandwidth", "0.1", "--resamples", "200"});
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.rfind("t,gamma,theta1,theta2,se,lower_pw", 0) == 0);

  const Run bw = run({"--input", fx.censored.string(), "--format", "json", "bandwidth", "--grid-min",
                      "0.05", "--grid-max", "0.1", "--grid-step", "0.05"});
  REQUIRE(bw.code == 0);
  const auto j = nlohmann::json::parse(bw.out);
  CHECK(j["scores"].size() == 2);
  CHECK((j["chosen"] == 0.05 || j["chosen"] == 0.1));
}

TEST_CASE("exit codes follow the error class") {
  Fixture fx;
  // missing column
  Run r = run({"--input", fx.censored.string(), "--marker-col", "score", "estimate", "--time", "1"});
  CHECK(r.code == kExitInput);
  CHECK(r.err.find("score") != std::string::npos);
  // parameter out of range
  r = run({"--input", fx.censored.string(), "estimate", "--time", "1", "--alpha", "1.5"});
  CHECK(r.code == kExitInput);
  r = run({"--input", fx.censored.string(), "estimate", "--time", "1", "--bandwidth", "0.1",
           "--auto-bandwidth"});
  CHECK(r.code == kExitInput);
  r = run({"estimate", "--time", "1"});
  CHECK(r.code == kExitInput);
  r = run({"--input", fx.censored.string(), "frobnicate"});
  CHECK(r.code == kExitInput);
  // beyond the last follow-up time
  r = run({"--input", fx.censored.string(), "estimate", "--time", "1e6", "--bandwidth", "0.1"});
  CHECK(r.code == kExitDegenerate);
  // censored data into the complete-data estimator
  r = run({"--input", fx.censored.string(), "estimate", "--time", "1", "--complete-data"});
  CHECK(r.code == kExitInput);
  // zero variance: no simultaneous band
  r = run({"--input", fx.pair.string(), "band", "--complete-data", "--tau1", "0.4", "--tau2", "0.6",
           "--alpha", "1"});
  CHECK(r.code == kExitNumeric);
  CHECK(r.err.find("variance") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
  const Run r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("estimate") != std::string::npos);
  const Run sub = run({"band", "--help"});
  CHECK(sub.code == 0);
  CHECK(sub.out.find("--resamples") != std::string::npos);
}

TEST_CASE("output files are replaced atomically") {
  Fixture fx;
  const fs::path target = fx.dir / "out.json";
  std::ofstream(target) << "old";
  const Run r = run({"--input", fx.censored.string(), "--out", target.string(), "estimate", "--time",
                     "1", "--bandwidth", "0.1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());
  CHECK(nlohmann::json::parse(read_file(target))["kind"] == "censored");
  for (const auto& e : fs::directory_iterator(fx.dir)) {
    CHECK(e.path().filename().string().find(".tmp.") == std::string::npos);
  }
  // a failed run leaves the previous file untouched
  const std::string before = read_file(target);
  const Run bad = run({"--input", fx.censored.string(), "--out", target.string(), "estimate", "--time",
                       "1e6", "--bandwidth", "0.1"});
  CHECK(bad.code == kExitDegenerate);
  CHECK(read_file(target) == before);
}

TEST_CASE("simulate subcommand writes a table") {
  const Run r = run({"simulate", "--n", "100", "--replicates", "50", "--bandwidth", "complete",
                     "--alphas", "0.2", "--no-bands"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 4);
  const Run bad = run({"simulate", "--replicates", "10"});
  CHECK(bad.code == kExitInput);
}

}
