// Drives the installed command-line tool as a subprocess.

#include "oracle/reference.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <span>
#include <sys/wait.h>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
  int status;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + BOOTSHUFFLE_CLI_PATH + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  while (const std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bootshuffle_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

std::vector<std::uint8_t> unhex(const std::string& s) {
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) out.push_back(static_cast<std::uint8_t>(std::stoi(s.substr(i, 2), nullptr, 16)));
  return out;
}

std::string hex(std::span<const std::uint8_t> b) {
  static const char* d = "0123456789abcdef";
  std::string s;
  for (auto x : b) {
    s += d[x >> 4];
    s += d[x & 15];
  }
  return s;
}

}  // namespace

TEST_F(Cli, HonestBootTraceEndsWithLoaderStep14) {
  ASSERT_EQ(run("gen-console --out " + path("c.nand") + " --seed 5").status, 0);
  const Result r = run("boot --nand " + path("c.nand") + " --trace");
  EXPECT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("STEP loader 14 Jump to the ARM9 firmware entrypoint\nReachedFirmEntry(11.0.0)\n"), std::string::npos)
      << r.out;
  EXPECT_EQ(r.out.find("STEP bootrom 1 "), 0u);
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("boot --nand x --bogus").status, 2);
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("frobnicate").status, 2);
  EXPECT_EQ(run("gen-console --out " + path("c.nand") + " --seed notanumber").status, 2);
  ASSERT_EQ(run("gen-console --out " + path("c.nand") + " --seed 1").status, 0);
  EXPECT_EQ(run("install-firm --nand " + path("c.nand") + " --slot firm2 --firm " + path("x")).status, 2);
  EXPECT_EQ(run("boot --nand " + path("missing.nand")).status, 2);
}

TEST_F(Cli, SeedFallsBackToEnvironment) {
  ASSERT_EQ(run("gen-console --out " + path("a.nand") + " --seed 42").status, 0);
  ASSERT_EQ(run("gen-console --out " + path("b.nand"), "BOOTSHUFFLE_SEED=42").status, 0);
  EXPECT_EQ(slurp(path("a.nand")), slurp(path("b.nand")));
  EXPECT_EQ(run("gen-console --out " + path("c.nand"), "env -u BOOTSHUFFLE_SEED").status, 2);
}

TEST_F(Cli, Stage1HashMatchesProvisioningRecord) {
  ASSERT_EQ(run("gen-console --out " + path("c.nand") + " --seed 9").status, 0);
  const json hw = json::parse(slurp(path("c.nand.hw.json")));
  const auto otp = unhex(hw.at("otp").get<std::string>());
  const Result r = run("attack stage1 --nand " + path("c.nand") + " --report " + path("s1.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  const json rep = json::parse(slurp(path("s1.json")));
  EXPECT_EQ(rep.at("otp_hash").get<std::string>(), hex(oracle::ref_sha256(otp)));
  EXPECT_EQ(rep.at("fixture").at("branch_target").get<std::string>(), "0x080FD0F8");
  EXPECT_TRUE(rep.at("secrets").is_null());
  EXPECT_EQ(slurp(path("s1.json")).find(hw.at("otp").get<std::string>()), std::string::npos);
}

TEST_F(Cli, RevealSecretsIsOptIn) {
  ASSERT_EQ(run("gen-console --out " + path("c.nand") + " --seed 9").status, 0);
  const std::string otp = json::parse(slurp(path("c.nand.hw.json"))).at("otp").get<std::string>();
  ASSERT_EQ(run("attack stage1 --nand " + path("c.nand") + " --report " + path("s1.json") + " --reveal-secrets").status, 0);
  const json rep = json::parse(slurp(path("s1.json")));
  EXPECT_EQ(rep.at("secrets").at("otp").get<std::string>(), otp);
  EXPECT_EQ(rep.at("secrets").at("keysector_plaintext").size(), 32u);
}

TEST_F(Cli, Stage1ColdFailsWithExitOne) {
  ASSERT_EQ(run("gen-console --out " + path("c.nand") + " --seed 3").status, 0);
  const Result r = run("attack stage1 --cold --nand " + path("c.nand"));
  EXPECT_EQ(r.status, 1) << r.out;
  EXPECT_NE(r.out.find("Crash"), std::string::npos);
}

TEST_F(Cli, PersistIsWorkerIndependentAndSurvivesReboots) {
  { std::ofstream(path("payload.bin"), std::ios::binary) << "hello from FIRM0"; }
  for (const char* n : {"one", "eight"}) {
    ASSERT_EQ(run(std::string("gen-console --out ") + path(std::string(n) + ".nand") + " --seed 11").status, 0);
  }
  const Result a = run("attack persist --nand " + path("one.nand") + " --gap 0x190 --payload " + path("payload.bin") +
                    " --report " + path("one.json") + " --workers 1");
  const Result b = run("attack persist --nand " + path("eight.nand") + " --gap 0x190 --payload " + path("payload.bin") +
                    " --report " + path("eight.json") + " --workers 8");
  ASSERT_EQ(a.status, 0) << a.out;
  ASSERT_EQ(b.status, 0) << b.out;
  EXPECT_EQ(slurp(path("one.json")), slurp(path("eight.json")));
  EXPECT_EQ(slurp(path("one.nand")), slurp(path("eight.nand")));

  for (int i = 0; i < 3; ++i) {
    const Result boot = run("boot --nand " + path("one.nand"));
    EXPECT_EQ(boot.status, 0);
    EXPECT_EQ(boot.out.rfind("PayloadExecuted", 0), 0u) << boot.out;
  }
  const Result cold = run("boot --cold --nand " + path("one.nand"));
  EXPECT_EQ(cold.out.rfind("PayloadExecuted", 0), 0u) << cold.out;
}

TEST_F(Cli, PersistRejectsOversizedPayload) {
  ASSERT_EQ(run("gen-console --out " + path("c.nand") + " --seed 4").status, 0);
  { std::ofstream(path("big.bin"), std::ios::binary) << std::string(0x30000, 'x'); }
  EXPECT_EQ(run("attack persist --nand " + path("c.nand") + " --payload " + path("big.bin")).status, 1);
}

TEST_F(Cli, BuildInstallAndScan) {
  ASSERT_EQ(run("gen-console --out " + path("c.nand") + " --seed 2").status, 0);
  fs::create_directories(path("builds"));
  ASSERT_EQ(run("build-firm --version 10.0.0 --vulnerable --out " + path("builds/a.firm")).status, 0);
  ASSERT_EQ(run("build-firm --version 10.2.0 --loader v2 --size 0x40000 --out " + path("builds/b.firm")).status, 0);
  ASSERT_EQ(run("build-firm --version 9.9.9 --loader v2 --size 0x1000 --out " + path("builds/c.firm")).status, 0);
  EXPECT_EQ(run("build-firm --version 9.9.9 --out " + path("x.firm")).status, 2);

  const Result harness = run("scan --nand " + path("c.nand") + " --builds " + path("builds") + " --report " + path("h.json"));
  ASSERT_EQ(harness.status, 0) << harness.out;
  const Result blackbox =
      run("scan --black-box --nand " + path("c.nand") + " --builds " + path("builds") + " --report " + path("b.json"));
  ASSERT_EQ(blackbox.status, 0) << blackbox.out;
  const json h = json::parse(slurp(path("h.json"))), b = json::parse(slurp(path("b.json")));
  EXPECT_EQ(h.at("entries_examined").get<int>(), 93);
  EXPECT_EQ(h.at("entries"), b.at("entries"));
  EXPECT_EQ(h.at("hits"), b.at("hits"));
  bool found = false;
  for (const auto& hit : h.at("hits"))
    found |= hit.at("version") == "10.0.0" && hit.at("key") == 1 && hit.at("decoded").at("target") == "0x080FD0F8" &&
             hit.at("target_usability") == "InRam";
  EXPECT_TRUE(found);

  ASSERT_EQ(run("install-firm --nand " + path("c.nand") + " --slot firm1 --firm " + path("builds/b.firm")).status, 0);
  ASSERT_EQ(run("install-firm --nand " + path("c.nand") + " --slot firm0 --firm " + path("builds/c.firm")).status, 0);
  const Result boot = run("boot --nand " + path("c.nand"));
  EXPECT_EQ(boot.status, 0);
  EXPECT_NE(boot.out.find("ReachedFirmEntry(9.9.9)"), std::string::npos) << boot.out;
}
