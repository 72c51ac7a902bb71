#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kData = DNNSTAB_DATA_DIR;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dnnstab_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "stdout.txt";
  const std::string cmd = std::string("\"") + DNNSTAB_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream os;
  os << in.rdbuf();
  r.out = os.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json load_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST(Cli, CountVariables) {
  const auto dir = scratch_dir("count");
  const auto r = run("count-vars --n 4 --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "512\n");
  const auto s = run("count-vars --system " + kData + "/example2.json --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(s.out, "512\n");
  EXPECT_EQ(run("count-vars --out \"" + dir.string() + "\"", dir).code, 3);
}

TEST(Cli, CheckWritesCertificateAndManifest) {
  const auto dir = scratch_dir("check");
  const auto r = run("check --system " + kData + "/example1.json --k 1.0 --out \"" + dir.string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto cert = load_json(dir / "certificate.json");
  EXPECT_TRUE(cert["certified"].get<bool>());
  EXPECT_EQ(cert["k"], 1.0);
  EXPECT_GT(cert["certificate"]["min_margin"].get<double>(), 0.0);
  const auto man = load_json(dir / "manifest.json");
  EXPECT_EQ(man["command"], "check");
  EXPECT_EQ(man["exit_code"], 0);
  EXPECT_EQ(man["input"]["fnv1a64"].get<std::string>().size(), 16u);
}

TEST(Cli, CheckAtPublishedRateReportsNotCertified) {
  // The file default k = 1.25 lies beyond what this implementation certifies.
  const auto dir = scratch_dir("check125");
  const auto r = run("check --system " + kData + "/example1.json --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_FALSE(load_json(dir / "certificate.json")["certified"].get<bool>());
  EXPECT_EQ(load_json(dir / "manifest.json")["exit_code"], 2);
}

TEST(Cli, InvalidInputExitCode) {
  const auto dir = scratch_dir("invalid");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << R"({"K0": [1, 2], "K1": [[0, 0], [0]], "K2": [[0, 0], [0, 0]], "L": [1, 1]})";
  const auto r = run("check --system \"" + bad.string() + "\" --k 0.5 --mu 0.1 --h 1 --xi 0.5 --out \"" +
                         dir.string() + "\"",
                     dir);
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.out.find("K1[1]"), std::string::npos) << r.out;
  EXPECT_EQ(run("check --system " + kData + "/missing.json", dir).code, 3);
  EXPECT_EQ(run("check --system " + kData + "/example1.json --k 5 --out \"" + dir.string() + "\"", dir).code, 3);
  EXPECT_EQ(run("no-such-command", dir).code, 3);
}

TEST(Cli, BisectionCsvIsByteIdentical) {
  const auto a = scratch_dir("bisect_a"), b = scratch_dir("bisect_b");
  const std::string args = "bisect-k --system " + kData + "/example1.json --lo 0.9 --hi 1.2 --tol 0.01 --xi 0.25";
  ASSERT_EQ(run(args + " --out \"" + a.string() + "\"", a).code, 0);
  ASSERT_EQ(run(args + " --out \"" + b.string() + "\"", b).code, 0);
  const std::string ca = slurp(a / "search.csv");
  EXPECT_EQ(ca, slurp(b / "search.csv"));
  EXPECT_EQ(ca.rfind("mu,h,k,certified_value,xi,margin,solver_iterations\n0.8,1,*,", 0), 0u) << ca;
}

TEST(Cli, SimulateWritesSvg) {
  const auto dir = scratch_dir("simulate");
  const auto r = run("simulate --system " + kData + "/example2.json --horizon 10 --format svg --out \"" + dir.string() + "\"",
                     dir);
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string svg = slurp(dir / "trajectory.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  const auto man = load_json(dir / "manifest.json");
  EXPECT_EQ(man["outputs"].size(), 1u);
}

TEST(Cli, VerifyInequalitiesAndExport) {
  const auto dir = scratch_dir("verify");
  const auto r = run("verify-inequalities --cases 5 --seed 3 --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(slurp(dir / "inequalities.csv").rfind("lemma,seed,", 0), 0u);
  EXPECT_EQ(load_json(dir / "manifest.json")["seed"], 3);
  const auto e = run("export-lmi --system " + kData + "/example1.json --k 1.0 --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(e.code, 0) << e.out;
  EXPECT_TRUE(fs::exists(dir / "lmi.txt"));
}
