#include <gtest/gtest.h>
#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string output;  // stdout and stderr
};

RunResult run(const std::string& args, const fs::path& dir) {
  const std::string cmd = "cd '" + dir.string() + "' && TS_LOG=quiet '" TENSENS_CLI "' " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> data_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::stringstream ss(csv);
  std::string line;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("tensens_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, InvalidBenchmarkNameIsAConfigError) {
  const auto r = run("build-lra --benchmark nope", dir_);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("model.benchmark"), std::string::npos) << r.output;
}

TEST_F(Cli, TooFewPointsSurfaceUnderDetermined) {
  const auto r = run("build-lra --benchmark beam --n 3 --degree 5", dir_);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("UnderDetermined"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("lra.correction_step"), std::string::npos) << r.output;
}

TEST_F(Cli, BuildLraWritesModelAndReport) {
  const auto r = run("build-lra --benchmark beam --n 50", dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  ASSERT_TRUE(fs::exists(dir_ / "beam_lra.json"));
  const auto model = read_file(dir_ / "beam_lra.json");
  EXPECT_NE(model.find("\"cv_k_rel\""), std::string::npos);
  const auto csv = read_file(dir_ / "beam_lra.csv");
  EXPECT_EQ(csv.rfind("# tensens ", 0), 0u);
  EXPECT_NE(csv.find("# config_hash "), std::string::npos);
  EXPECT_NE(csv.find("# seeds "), std::string::npos);
  const auto rows = data_rows(csv);
  ASSERT_EQ(rows.size(), 5u);
  double prev = 2.0;
  for (const auto& row : rows) {
    std::stringstream ss(row);
    std::string name, first, total;
    std::getline(ss, name, ',');
    std::getline(ss, first, ',');
    std::getline(ss, total, ',');
    EXPECT_LE(std::stod(total), prev);
    prev = std::stod(total);
  }
}

TEST_F(Cli, SobolSubcommandAddsSubsetRows) {
  ASSERT_EQ(run("build-pce --benchmark beam --n 60", dir_).code, 0);
  const auto plain = run("sobol --model beam_pce.json", dir_);
  ASSERT_EQ(plain.code, 0) << plain.output;
  EXPECT_EQ(data_rows(plain.output).size(), 5u);
  const auto sub = run("sobol --model beam_pce.json --subsets \"1,2;4,5\" --out sub.csv", dir_);
  ASSERT_EQ(sub.code, 0) << sub.output;
  const auto rows = data_rows(read_file(dir_ / "sub.csv"));
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[5].rfind("\"u=1,2\",", 0), 0u);
  EXPECT_NE(read_file(dir_ / "sub.csv").find("# interaction u=4,5 "), std::string::npos);
}

TEST_F(Cli, UnreadableModelFile) {
  std::ofstream(dir_ / "junk.json") << "[1,2";
  EXPECT_EQ(run("sobol --model junk.json", dir_).code, 2);
  EXPECT_EQ(run("sobol --model missing.json", dir_).code, 2);
}

TEST_F(Cli, OutputsAreDeterministic) {
  ASSERT_EQ(run("build-lra --benchmark beam --n 40 --design lhs --seed 9 --out a", dir_).code, 0);
  ASSERT_EQ(run("build-lra --benchmark beam --n 40 --design lhs --seed 9 --out b", dir_).code, 0);
  EXPECT_EQ(read_file(dir_ / "a" / "beam_lra.csv"), read_file(dir_ / "b" / "beam_lra.csv"));
  EXPECT_EQ(read_file(dir_ / "a" / "beam_lra.json"), read_file(dir_ / "b" / "beam_lra.json"));
}

TEST_F(Cli, ConvergenceRowsPerCell) {
  auto r = run("convergence --benchmark beam --n-list 30 --method lra --csv one.csv", dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(data_rows(read_file(dir_ / "one.csv")).size(), 5u);

  r = run("convergence --benchmark beam --n-list 20,40 --replications 3 --design lhs --method both --jobs 2 --csv "
          "grid.csv",
          dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = data_rows(read_file(dir_ / "grid.csv"));
  EXPECT_EQ(rows.size(), 2u * 3u * 2u * 5u);
  EXPECT_EQ(rows.front().rfind("20,0,lra,ok,", 0), 0u) << rows.front();
  EXPECT_EQ(rows.back().rfind("40,2,pce,", 0), 0u) << rows.back();

  ASSERT_EQ(run("convergence --benchmark beam --n-list 20,40 --replications 3 --design lhs --method both --jobs 1 "
                "--csv serial.csv",
                dir_)
                .code,
            0);
  EXPECT_EQ(read_file(dir_ / "grid.csv"), read_file(dir_ / "serial.csv"));
}

TEST_F(Cli, ConvergenceMarksFailedCells) {
  std::ofstream(dir_ / "cfg.json") << R"({"model": {"benchmark": "beam"}, "lra": {"p_grid": [5], "r_max": 2}})";
  const auto r = run("convergence --config cfg.json --n-list 3,30 --method lra --csv f.csv", dir_);
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = data_rows(read_file(dir_ / "f.csv"));
  ASSERT_FALSE(rows.empty());
  EXPECT_NE(rows.front().find("failed:"), std::string::npos) << rows.front();
  EXPECT_EQ(rows.back().rfind("30,0,lra,ok,", 0), 0u);
}

TEST_F(Cli, BenchmarkListingAndReference) {
  const auto list = run("benchmark", dir_);
  ASSERT_EQ(list.code, 0);
  EXPECT_EQ(data_rows(list.output).size(), 20u + 5u + 10u + 53u);
  const auto ref = run("reference --benchmark beam --mc-n 2000 --csv ref.csv", dir_);
  ASSERT_EQ(ref.code, 0) << ref.output;
  const auto rows = data_rows(read_file(dir_ / "ref.csv"));
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_NE(rows[0].find(",mc,2000"), std::string::npos);
}

TEST_F(Cli, ExternalModelFailureExitCode) {
  std::ofstream(dir_ / "cfg.json")
      << R"({"model": {"command": "exit 7", "inputs": [{"name": "a", "family": "uniform", "lower": 0, "upper": 1}]}})";
  const auto r = run("build-pce --config cfg.json", dir_);
  EXPECT_EQ(r.code, 4);
  EXPECT_NE(r.output.find("ModelFailure"), std::string::npos);
  std::ofstream(dir_ / "ok.json")
      << R"({"model": {"command": "awk -F, 'NR>1 { print $1 + 2 * $2 }'", "inputs": [)"
      << R"({"name": "a", "family": "uniform", "lower": 0, "upper": 1},)"
      << R"({"name": "b", "family": "uniform", "lower": 0, "upper": 1}]}, "design": {"n": 30}})";
  ASSERT_EQ(run("build-pce --config ok.json", dir_).code, 0);
  const auto rows = data_rows(read_file(dir_ / "external_pce.csv"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].rfind("b,0.8", 0), 0u) << rows[0];
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("", dir_).code, 2);
  EXPECT_EQ(run("convergence --benchmark beam", dir_).code, 2);
  EXPECT_EQ(run("build-lra --benchmark beam --design grid", dir_).code, 2);
  EXPECT_EQ(run("--version", dir_).code, 0);
}
