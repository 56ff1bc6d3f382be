// Drives the built spectral_forge executable.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = SF_CLI_PATH;
const fs::path kConfigs = SF_CONFIG_DIR;

fs::path workdir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sf_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::size_t lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string s;
  while (std::getline(in, s)) ++n;
  return n;
}

const std::string kHalfline = (kConfigs / "halfline_single.json").string();

// one shared full run
const fs::path& reference_run() {
  static const fs::path dir = [] {
    const fs::path d = workdir("reference");
    EXPECT_EQ(run("run --config " + kHalfline + " --out " + d.string()), 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST(Cli, SmokeRunWritesAllArtifacts) {
  const fs::path& d = reference_run();
  for (const char* f : {"plan.json", "potential.json", "ledger.json", "report.json", "potential.csv", "metric.csv",
                        "eigenfunctions/lambda_1.csv", "plots/potential.svg", "plots/ledger.svg",
                        "plots/eigenfunctions.svg"}) {
    EXPECT_TRUE(fs::exists(d / f)) << f;
  }
  const json report = json::parse(slurp(d / "report.json"));
  EXPECT_TRUE(report.at("pass").get<bool>());
  EXPECT_EQ(lines(d / "potential.csv"), 1001u);
}

TEST(Cli, CountableWithoutBudgetIsInputError) {
  const fs::path d = workdir("nobudget");
  std::ofstream(d / "cfg.json") << R"({"eigenvalues": [1, 2, 3], "mode": "manifold_countable"})";
  EXPECT_EQ(run("run --config " + (d / "cfg.json").string() + " --out " + (d / "out").string()), 3);
  EXPECT_FALSE(fs::exists(d / "out" / "report.json"));
}

TEST(Cli, MalformedConfigIsInputError) {
  const fs::path d = workdir("malformed");
  std::ofstream(d / "cfg.json") << "{ eigenvalues: ";
  EXPECT_EQ(run("plan --config " + (d / "cfg.json").string() + " --out " + d.string()), 3);
  EXPECT_EQ(run("frobnicate --out " + d.string()), 3);
}

TEST(Cli, RerunIsByteIdentical) {
  const fs::path d = workdir("rerun");
  ASSERT_EQ(run("run --config " + kHalfline + " --out " + d.string()), 0);
  for (const char* f : {"report.json", "ledger.json", "potential.json", "plan.json", "metric.csv",
                        "eigenfunctions/lambda_1.csv"}) {
    EXPECT_EQ(slurp(d / f), slurp(reference_run() / f)) << f;
  }
}

TEST(Cli, StagesComposeToRun) {
  const fs::path d = workdir("stages");
  ASSERT_EQ(run("plan --config " + kHalfline + " --out " + d.string()), 0);
  ASSERT_TRUE(fs::exists(d / "plan.json"));
  ASSERT_EQ(run("build --out " + d.string()), 0);
  for (const char* f : {"plan.json", "potential.json", "ledger.json"}) {
    EXPECT_EQ(slurp(d / f), slurp(reference_run() / f)) << f;
  }
  ASSERT_EQ(run("verify --out " + d.string()), 0);
  EXPECT_EQ(slurp(d / "report.json"), slurp(reference_run() / "report.json"));
  ASSERT_EQ(run("--stage probe --out " + d.string()), 0);
  EXPECT_TRUE(fs::exists(d / "probe.json"));
  EXPECT_TRUE(fs::exists(d / "probe.csv"));
}

TEST(Cli, CorruptedLedgerFailsVerify) {
  const fs::path d = workdir("corrupt");
  fs::copy(reference_run(), d, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  json ledger = json::parse(slurp(d / "ledger.json"));
  auto& norms = ledger["records"][0]["junction_norms"];
  norms[1] = norms[1].get<double>() * 1.01;
  std::ofstream(d / "ledger.json") << ledger.dump(2);
  EXPECT_EQ(run("verify --out " + d.string()), 2);
  const json report = json::parse(slurp(d / "report.json"));
  EXPECT_FALSE(report.at("pass").get<bool>());
}

TEST(Cli, MissingArtifactsAreInputErrors) {
  const fs::path d = workdir("empty");
  EXPECT_EQ(run("verify --out " + d.string()), 3);
  EXPECT_EQ(run("build --out " + d.string()), 3);
}

TEST(Cli, ExportResolution) {
  const fs::path d = workdir("export");
  fs::copy(reference_run(), d, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
  ASSERT_EQ(run("export --resolution 10000 --plots off --out " + d.string()), 0);
  for (const char* f : {"potential.csv", "metric.csv", "eigenfunctions/lambda_1.csv"}) {
    EXPECT_EQ(lines(d / f), 10001u) << f;
  }
}
