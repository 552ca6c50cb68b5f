// End-to-end checks of the command-line tool: exit codes, envelope shape
// and reproducibility. The binary path comes from the build system.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

using nlohmann::json;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args, bool merge_stderr = false) {
  std::string cmd = std::string(RHO_PERFECT_CLI_PATH) + " " + args;
  cmd += merge_stderr ? " 2>&1" : " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
    result.out.append(buf, n);
  }
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

class TempDir {
 public:
  TempDir() {
    char pattern[] = "/tmp/rhoperfect-cli-XXXXXX";
    path_ = mkdtemp(pattern);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string write(const std::string& name, const std::string& content) const {
    const std::string path = path_ + "/" + name;
    std::ofstream out(path);
    out << content;
    return path;
  }

 private:
  std::string path_;
};

const char* kHandFixture =
    "item,rater,value\n"
    "a,r1,1\na,r2,2\na,r3,3\n"
    "b,r1,3\nb,r2,4\nb,r3,5\n"
    "c,r1,5\nc,r2,6\nc,r3,7\n";

}  // namespace

TEST_CASE("compute reports the hand fixture estimate") {
  TempDir dir;
  const std::string input = dir.write("hand.csv", kHandFixture);
  const CliResult result = run_cli("compute --input " + input);
  REQUIRE(result.exit_code == 0);

  const json envelope = json::parse(result.out);
  CHECK(envelope.at("command") == "compute");
  CHECK(envelope.at("tool_version").is_string());
  const json& body = envelope.at("body");
  CHECK(std::abs(body.at("rho").get<double>() - std::sqrt(11.0 / 12.0)) <
        1e-12);
  CHECK(body.at("var_y").get<double>() == 4.0);
  // Three items only: the few-items warning must be surfaced.
  bool few_items = false;
  for (const auto& w : body.at("warnings")) {
    if (w.at("code") == "few_items") few_items = true;
  }
  CHECK(few_items);
}

TEST_CASE("compute exit code distinguishes degenerate statistics") {
  TempDir dir;
  const std::string input = dir.write("flat.csv",
                                      "item,rater,value\n"
                                      "a,r1,1\na,r2,3\n"
                                      "b,r1,2\nb,r2,2\n"
                                      "c,r1,0\nc,r2,4\n");
  const CliResult result = run_cli("compute --input " + input, true);
  CHECK(result.exit_code == 3);
  CHECK(result.out.find("degenerate-variance") != std::string::npos);
}

TEST_CASE("compute exit code distinguishes unreadable input") {
  const CliResult missing = run_cli("compute --input /nonexistent.csv");
  CHECK(missing.exit_code == 2);

  TempDir dir;
  const std::string input = dir.write("bad.csv", "only,one\n1,2\n");
  const CliResult unmapped = run_cli("compute --input " + input);
  CHECK(unmapped.exit_code == 2);
}

TEST_CASE("strict policy refuses single-rating items") {
  TempDir dir;
  const std::string input = dir.write("single.csv",
                                      "item,rater,value\n"
                                      "a,r1,1\na,r2,2\n"
                                      "b,r1,2\nb,r2,4\n"
                                      "c,r1,9\n");
  const CliResult drop =
      run_cli("compute --input " + input + " --min-ratings 1");
  CHECK(drop.exit_code == 0);
  const CliResult strict = run_cli("compute --input " + input +
                                   " --min-ratings 1 --policy strict");
  CHECK(strict.exit_code == 3);
}

TEST_CASE("validate refuses unsplittable items with the cannot-split code") {
  TempDir dir;
  const std::string input = dir.write("lonely.csv",
                                      "item,rater,value\n"
                                      "a,r1,1\na,r2,2\n"
                                      "b,r1,2\nb,r2,4\n"
                                      "lonely,r1,9\n");
  const CliResult result = run_cli(
      "validate --input " + input + " --method ratings --min-ratings 1", true);
  CHECK(result.exit_code == 4);
  CHECK(result.out.find("lonely") != std::string::npos);
}

TEST_CASE("synth rejects malformed specs with the spec exit code") {
  TempDir dir;
  const std::string spec = dir.write("bad.json", "{\"num_items\": 1}");
  const CliResult result = run_cli("synth --spec " + spec, true);
  CHECK(result.exit_code == 5);
  CHECK(result.out.find("error (spec)") != std::string::npos);
}

TEST_CASE("seeded commands are byte-identical across runs and threads") {
  TempDir dir;
  std::string rows = "item,rater,value\n";
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 6; ++j) {
      rows += "it" + std::to_string(i) + ",u" + std::to_string(j) + "," +
              std::to_string((i * 37 + j * 11) % 50) + "\n";
    }
  }
  const std::string input = dir.write("table.csv", rows);
  const std::string args =
      "validate --input " + input + " --method raters --seed 5 --num-seeds 6";
  const CliResult once = run_cli(args + " --threads 1");
  const CliResult twice = run_cli(args + " --threads 1");
  const CliResult parallel = run_cli(args + " --threads 4");
  REQUIRE(once.exit_code == 0);
  CHECK(once.out == twice.out);
  CHECK(once.out == parallel.out);
}

TEST_CASE("table format prints a human summary") {
  TempDir dir;
  const std::string input = dir.write("hand.csv", kHandFixture);
  const CliResult result =
      run_cli("--format table compute --input " + input);
  REQUIRE(result.exit_code == 0);
  CHECK(result.out.find("rho-perfect") != std::string::npos);
  CHECK(result.out.find("0.957427") != std::string::npos);
}

TEST_CASE("subset-report end to end with per-condition rows") {
  TempDir dir;
  const std::string input = dir.write("tagged.csv",
                                      "item,rater,value,cond\n"
                                      "a,r1,1,x\na,r2,2,x\n"
                                      "b,r1,3,x\nb,r2,4,x\n"
                                      "c,r1,5,y\nc,r2,6,y\n"
                                      "d,r1,7,y\nd,r2,9,y\n");
  const std::string preds = dir.write("preds.csv",
                                      "item,value\n"
                                      "a,1.5\nb,3.5\nc,5.5\nd,8\n");
  const CliResult result =
      run_cli("subset-report --input " + input + " --predictions " + preds +
              " --condition-col cond --by-condition");
  REQUIRE(result.exit_code == 0);
  const json envelope = json::parse(result.out);
  const json& rows = envelope.at("body").at("rows");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].at("condition") == "all");
  CHECK(rows[0].at("model_pcc").get<double>() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rows[1].at("condition") == "x");
  CHECK(rows[2].at("condition") == "y");
}

TEST_CASE("help exits cleanly") {
  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("compute --help").exit_code == 0);
}
