#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "gmy/cli.hpp"

using namespace gmy::cli;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / ("gmy_test_" + name);
  std::ofstream(path) << content;
  return path;
}

// drops comment lines, which carry the header
std::string body(const std::string& s) {
  std::string out;
  for (const auto& l : lines(s)) {
    if (!l.starts_with("#")) out += l + "\n";
  }
  return out;
}

struct EnvGuard {
  explicit EnvGuard(const char* value) { ::setenv("GMY_SEED", value, 1); }
  ~EnvGuard() { ::unsetenv("GMY_SEED"); }
};

}  // namespace

TEST_CASE("config parsing") {
  const auto recs = parse_config("# comment\nalpha = 1\nburn_in=20  # trailing\nlabel = \"a # b\"\n");
  REQUIRE(recs.size() == 1);
  REQUIRE(recs[0].size() == 3);
  CHECK(recs[0][0].key == "alpha");
  CHECK(recs[0][0].value == "1");
  CHECK(recs[0][1].key == "burn-in");
  CHECK(recs[0][1].line == 3);
  CHECK(recs[0][2].value == "a # b");
  CHECK(parse_config("").size() == 1);
  CHECK(parse_config("").front().empty());
}

TEST_CASE("config records") {
  std::string text;
  for (int i = 0; i < 5; ++i) text += "lambda = " + std::to_string(i) + "\n---\n";
  const auto recs = parse_config(text);
  REQUIRE(recs.size() == 5);
  CHECK(recs[4][0].value == "4");
}

TEST_CASE("config errors carry a position") {
  try {
    parse_config("alpha = 1\n  = 3\n", "f.cfg");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
    CHECK(std::string(e.what()).find("f.cfg:2:3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("alpha\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("label = \"open\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/gmy.cfg"), ConfigError);
}

TEST_CASE("map eval") {
  const auto r = run_cli({"map", "eval", "--alpha", "1", "--beta", "2", "--x", "1", "--y", "1"});
  CHECK(r.code == kPass);
  const auto l = lines(r.out);
  REQUIRE(l.size() == 2);
  CHECK(l[0].starts_with("# gmy 0.1.0 map eval seed=1 "));
  CHECK(l[1] == "1.5,0.6666666666666666");

  const auto j = run_cli({"map", "eval", "--alpha", "1", "--beta", "2", "--x", "1", "--y", "1", "--format", "json"});
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["first"] == 1.5);
  CHECK(doc["header"]["command"] == "map eval");
}

TEST_CASE("usage and domain errors exit 2") {
  CHECK(run_cli({}).code == kUsageError);
  CHECK(run_cli({"map"}).code == kUsageError);
  CHECK(run_cli({"map", "eval", "--alpha", "1", "--beta", "2", "--x", "1"}).code == kUsageError);
  CHECK(run_cli({"map", "eval", "--alpha", "1", "--beta", "1", "--x", "1", "--y", "1"}).code == kUsageError);
  CHECK(run_cli({"map", "eval", "--alpha", "1", "--beta", "2", "--x", "-1", "--y", "1"}).code == kUsageError);
  CHECK(run_cli({"map", "check", "--bogus"}).code == kUsageError);
  CHECK(run_cli({"map", "check", "--format", "xml"}).code == kUsageError);
  CHECK(run_cli({"balance", "verify", "--alpha", "1", "--beta", "2", "--lambda", "0.5", "--variant", "nope"}).code ==
        kUsageError);
  const auto bad = temp_file("bad.cfg", "alpha = 1\nbeta\n");
  const auto r = run_cli({"map", "check", "--config", bad.string()});
  CHECK(r.code == kUsageError);
  CHECK(r.err.find(":2:") != std::string::npos);
  CHECK(run_cli({"--version"}).code == kPass);
}

TEST_CASE("seed precedence: flag, then environment, then config") {
  const auto cfg = temp_file("seed.cfg", "seed = 7\nlambda = 0.5\nn = 3\n");
  const std::vector<std::string> base{"dist", "sample", "--config", cfg.string()};
  const auto from_config = run_cli(base);
  CHECK(from_config.out.find("seed=7") != std::string::npos);
  auto with_flag = base;
  with_flag.insert(with_flag.end(), {"--seed", "9"});
  CHECK(run_cli(with_flag).out.find("seed=9") != std::string::npos);
  {
    EnvGuard env("5");
    CHECK(run_cli(base).out.find("seed=5") != std::string::npos);
    CHECK(run_cli(with_flag).out.find("seed=9") != std::string::npos);
  }
  {
    EnvGuard env("five");
    CHECK(run_cli(base).code == kUsageError);
  }
  // a flag beats a config value for ordinary parameters too
  auto n_flag = base;
  n_flag.insert(n_flag.end(), {"--n", "2"});
  CHECK(body(run_cli(n_flag).out).size() < body(from_config.out).size());
  CHECK(lines(body(run_cli(n_flag).out)).size() == 2);
}

TEST_CASE("outputs are reproducible") {
  const std::vector<std::string> args{"dist", "sample", "--lambda", "-1.5", "--a", "0.5", "--b", "2", "--n", "50", "--seed", "3"};
  CHECK(run_cli(args).out == run_cli(args).out);
  const std::vector<std::string> verify{"balance", "verify", "--alpha", "1", "--beta", "2", "--lambda", "0.5",
                                        "--n", "2000", "--permutations", "49"};
  const auto a = nlohmann::json::parse(run_cli(verify).out);
  const auto b = nlohmann::json::parse(run_cli(verify).out);
  CHECK(a == b);
}

TEST_CASE("a five-record battery yields five reports") {
  std::string text;
  const double lambdas[] = {-2, -0.5, 0, 0.5, 2};
  for (const double l : lambdas) {
    text += "variant = fdk\nalpha = 1\nbeta = 2\nc2 = 3\nn = 1000\npermutations = 19\nlambda = " + std::to_string(l) +
            "\n---\n";
  }
  const auto cfg = temp_file("battery.cfg", text);
  const auto r = run_cli({"balance", "verify", "--config", cfg.string()});
  const auto l = lines(r.out);
  REQUIRE(l.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto doc = nlohmann::json::parse(l[i]);
    CHECK(doc["schema"] == "gmy.balance/1");
    CHECK(doc["params"]["lambda"] == doctest::Approx(lambdas[i]));
    CHECK(doc["header"]["params"]["config"] == cfg.string());
  }
}

TEST_CASE("negative control fails verification") {
  const auto r = run_cli({"balance", "verify", "--alpha", "1", "--beta", "2", "--lambda", "0.5", "--c2", "3", "--n",
                          "5000", "--permutations", "49", "--negative-control"});
  CHECK(r.code == kVerificationFailed);
  CHECK(nlohmann::json::parse(r.out)["pass"]["all"] == false);
}

TEST_CASE("check batteries pass through the CLI") {
  const auto r = run_cli({"map", "check"});
  CHECK(r.code == kPass);
  const auto l = lines(r.out);
  CHECK(l[1] == "test,statistic,threshold,pass");
  CHECK(run_cli({"matrix", "check", "--r", "1,2", "--pairs", "20"}).code == kPass);
}

TEST_CASE("lattice run writes boundary rows and replays them") {
  const auto out = std::filesystem::temp_directory_path() / "gmy_test_lattice.csv";
  CHECK(run_cli({"lattice", "run", "--n", "30", "--t", "6", "--seed", "2", "--out", out.string()}).code == kPass);
  std::ifstream in(out);
  std::stringstream first;
  first << in.rdbuf();
  const auto out2 = std::filesystem::temp_directory_path() / "gmy_test_lattice2.csv";
  CHECK(run_cli({"lattice", "run", "--n", "30", "--t", "6", "--replay", out.string(), "--out", out2.string()}).code ==
        kPass);
  std::ifstream in2(out2);
  std::stringstream second;
  second << in2.rdbuf();
  CHECK(!body(first.str()).empty());
  CHECK(body(first.str()) == body(second.str()));
}

TEST_CASE("the binary reports exit codes") {
  const std::string tool = GMY_TOOL_PATH;
  auto status = [&](const std::string& args) {
    const int s = std::system((tool + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status("--version") == 0);
  CHECK(status("map eval --alpha 1 --beta 2 --x 1 --y 1") == 0);
  CHECK(status("map eval --alpha 1 --beta 2 --x 1") == 2);
  CHECK(status("lattice stationarity --n 20000 --t 10 --probes 5,10 --x-scale 2") == 1);
}
