// bootshuffle: generate synthetic consoles, build and install FIRM images,
// boot them, and run the keysector shuffle and persistence attacks.
//
// Exit status: 0 success, 1 boot or attack failure, 2 usage or input error.

#include "bootshuffle/attacks.hpp"
#include "bootshuffle/console_store.hpp"
#include "bootshuffle/report.hpp"
#include "bootshuffle/vendor.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using namespace bootshuffle;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_number(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(text, &used, 0);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("invalid ") + what + ": '" + text + "'");
  }
}

std::uint64_t seed_or_env(const std::optional<std::string>& flag, std::uint64_t fallback) {
  if (flag) return parse_number(*flag, "seed");
  if (const char* env = std::getenv("BOOTSHUFFLE_SEED")) return parse_number(env, "BOOTSHUFFLE_SEED");
  return fallback;
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
}

void emit_report(const std::optional<std::string>& path, const std::string& text) {
  if (path) write_text(*path, text);
  else std::cout << text;
}

FirmSlot parse_slot(const std::string& s) {
  if (s == "firm0") return FirmSlot::Firm0;
  if (s == "firm1") return FirmSlot::Firm1;
  throw UsageError("slot must be firm0 or firm1");
}

std::optional<report::Secrets> secrets_for(bool reveal, const Console& console, const VendorWorld& world) {
  if (!reveal) return std::nullopt;
  return report::Secrets{console.otp().raw_for_hardware(), world.keysector_plaintext()};
}

bool boot_succeeded(const boot::BootOutcome& o) {
  return std::holds_alternative<boot::ReachedFirmEntry>(o) || std::holds_alternative<boot::PayloadExecuted>(o);
}

// --- subcommands ------------------------------------------------------------

struct GenConsoleArgs {
  std::string out;
  std::optional<std::string> seed;
  std::optional<std::string> vendor_seed;
  std::string firmware = std::string(kFactoryRelease);
  std::string clobber_len = "0";
};

int run_gen_console(const GenConsoleArgs& a) {
  const std::uint64_t console_seed = seed_or_env(a.seed, 0);
  if (!a.seed && !std::getenv("BOOTSHUFFLE_SEED")) throw UsageError("gen-console needs --seed or BOOTSHUFFLE_SEED");
  const std::uint64_t vendor_seed = a.vendor_seed ? parse_number(*a.vendor_seed, "vendor seed") : kDefaultVendorSeed;
  const VendorWorld world = VendorWorld::generate(vendor_seed);
  ProvisionOptions p;
  p.firmware = a.firmware;
  p.boot.clobber_len = static_cast<std::uint32_t>(parse_number(a.clobber_len, "clobber length"));
  const Console console = provision_console(world, console_seed, p);
  save_console(a.out, console, vendor_seed, console_seed);
  std::cout << "console written to " << a.out << " (firmware " << a.firmware << ")\n";
  return kExitOk;
}

struct BuildFirmArgs {
  std::string version;
  std::optional<std::string> loader;
  std::optional<std::string> size;
  std::string out;
  std::optional<std::string> vendor_seed;
  std::string entry_offset = "0";
  bool vulnerable = false;
  std::optional<std::string> seed;
};

int run_build_firm(const BuildFirmArgs& a) {
  const std::uint64_t vendor_seed = a.vendor_seed ? parse_number(*a.vendor_seed, "vendor seed") : kDefaultVendorSeed;
  const VendorWorld world = VendorWorld::generate(vendor_seed);
  FirmImage image;
  if (a.vulnerable) {
    if (a.size || a.loader) throw UsageError("--vulnerable uses the release table size and loader v2");
    attacks::SearchOptions o;
    o.seed = seed_or_env(a.seed, 0);
    const attacks::VulnerableBuild vb = attacks::craft_vulnerable_build(world, a.version, attacks::kStage1SledAddr, o);
    image = vb.image;
    std::cout << "nonce " << to_hex(vb.search.nonce) << " after " << vb.search.trials << " trials, Key #1 entry word "
              << report::hex32(vb.search.entry_word) << " -> " << report::hex32(vb.search.target) << "\n";
  } else {
    ReleaseOptions o;
    o.version_label = a.version;
    if (a.size) o.section_size = static_cast<std::uint32_t>(parse_number(*a.size, "size"));
    else if (const auto s = release_section_size(a.version)) o.section_size = *s;
    else throw UsageError("--size is required for versions outside the release table");
    if (a.loader) {
      if (*a.loader == "v1") o.loader_variant = LoaderVariant::V1;
      else if (*a.loader == "v2") o.loader_variant = LoaderVariant::V2;
      else throw UsageError("loader must be v1 or v2");
    }
    o.entry_offset = static_cast<std::uint32_t>(parse_number(a.entry_offset, "entry offset"));
    image = world.build_release(o);
  }
  const Bytes bytes = serialize_firm(image);
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "cannot write " + a.out);
  std::cout << "FIRM " << image.header.version_label << " (" << loader_variant_name(image.header.loader_variant)
            << ", " << bytes.size() << " bytes) written to " << a.out << "\n";
  return kExitOk;
}

struct InstallFirmArgs {
  std::string nand;
  std::string slot;
  std::string firm;
};

int run_install_firm(const InstallFirmArgs& a) {
  StoredConsole s = load_console(a.nand);
  const FirmSlot slot = parse_slot(a.slot);
  s.console.install_firm(slot, read_file(a.firm));
  save_console(a.nand, s.console, s.vendor_seed, s.console_seed);
  std::cout << "installed " << a.firm << " into " << firm_slot_name(slot) << "\n";
  return kExitOk;
}

struct BootArgs {
  std::string nand;
  bool cold = false;
  bool trace = false;
  std::optional<std::string> report;
};

int run_boot(const BootArgs& a) {
  StoredConsole s = load_console(a.nand);
  s.console.reboot(a.cold ? RebootMode::Cold : RebootMode::Warm);
  const boot::BootReport r = boot::boot_rom_run(s.console);
  save_console(a.nand, s.console, s.vendor_seed, s.console_seed);
  if (a.trace)
    for (const std::string& line : r.trace_lines()) std::cout << line << "\n";
  std::cout << boot::describe(r.outcome) << "\n";
  if (a.report) write_text(*a.report, report::boot_json(r));
  return boot_succeeded(r.outcome) ? kExitOk : kExitFailure;
}

struct Stage1Args {
  std::string nand;
  std::optional<std::string> report;
  bool cold = false;
  std::optional<std::string> seed;
};

struct Stage1Run {
  attacks::Stage1Result result;
  attacks::NonceSearchResult fixture;
};

Stage1Run stage1(StoredConsole& s, const VendorWorld& world, bool cold, std::uint64_t seed) {
  attacks::SearchOptions o;
  o.seed = seed;
  const attacks::VulnerableBuild vb = attacks::craft_vulnerable_build(world, attacks::kStage1Release, attacks::kStage1SledAddr, o);
  attacks::CaptureOptions c;
  c.reboot = cold ? RebootMode::Cold : RebootMode::Warm;
  return {attacks::capture_otp_hash(s.console, vb.image, c), vb.search};
}

int run_stage1(const Stage1Args& a, bool reveal) {
  StoredConsole s = load_console(a.nand);
  const VendorWorld world = VendorWorld::generate(s.vendor_seed);
  const Stage1Run run = stage1(s, world, a.cold, seed_or_env(a.seed, 0));
  save_console(a.nand, s.console, s.vendor_seed, s.console_seed);
  emit_report(a.report, report::stage1_json(run.result, run.fixture, secrets_for(reveal, s.console, world)));
  std::cout << "SHA_HASH captured: " << to_hex(run.result.otp_hash) << "\n";
  return kExitOk;
}

struct PersistArgs {
  std::string nand;
  std::string gap = "0x190";
  std::string payload;
  std::optional<std::string> report;
  unsigned workers = 1;
  std::optional<std::string> otp_hash;
  std::optional<std::string> seed;
  std::string big = "8.1.0";
  std::string small = "10.2.0";
  unsigned verify_boots = 1;
};

int run_persist(const PersistArgs& a, bool reveal) {
  if (a.workers == 0) throw UsageError("--workers must be at least 1");
  StoredConsole s = load_console(a.nand);
  const VendorWorld world = VendorWorld::generate(s.vendor_seed);
  const std::uint64_t seed = seed_or_env(a.seed, 0);

  Digest otp_hash{};
  if (a.otp_hash) {
    try {
      otp_hash = digest_from_hex(*a.otp_hash);
    } catch (const Error&) {
      throw UsageError("--otp-hash must be 64 hex digits");
    }
  } else {
    otp_hash = stage1(s, world, false, seed).result.otp_hash;
  }

  const Bytes payload = read_file(a.payload);
  attacks::SearchOptions o;
  o.seed = seed;
  o.workers = a.workers;
  const attacks::PersistPlan plan =
      attacks::install_persistence(s.console, otp_hash, world.build_release(a.big), world.build_release(a.small), payload,
                                   static_cast<std::uint32_t>(parse_number(a.gap, "gap")), o);

  std::vector<boot::BootReport> boots;
  for (unsigned i = 0; i < a.verify_boots; ++i) {
    s.console.reboot(RebootMode::Warm);
    boots.push_back(boot::boot_rom_run(s.console));
  }
  save_console(a.nand, s.console, s.vendor_seed, s.console_seed);
  emit_report(a.report, report::persist_json(plan, boots, secrets_for(reveal, s.console, world)));
  std::cout << "Key #2 " << to_hex(plan.search.key) << " after " << plan.search.trials << " trials, branch to "
            << report::hex32(plan.search.target) << "\n";
  const bool ok = std::ranges::all_of(
      boots, [](const boot::BootReport& b) { return std::holds_alternative<boot::PayloadExecuted>(b.outcome); });
  return ok ? kExitOk : kExitFailure;
}

struct ScanArgs {
  std::string nand;
  std::string builds;
  bool black_box = false;
  std::optional<std::string> report;
};

int run_scan(const ScanArgs& a) {
  StoredConsole s = load_console(a.nand);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(a.builds))
    if (entry.is_regular_file() && entry.path().extension() == ".firm") files.push_back(entry.path());
  std::ranges::sort(files);
  if (files.empty()) throw UsageError("no .firm files in " + a.builds);
  std::vector<FirmImage> builds;
  for (const fs::path& f : files) builds.push_back(parse_firm(read_file(f)));

  attacks::ScanReport scan;
  if (a.black_box) {
    scan = attacks::scan_shuffled_keys_blackbox(s.console, builds);
    save_console(a.nand, s.console, s.vendor_seed, s.console_seed);
  } else {
    const VendorWorld world = VendorWorld::generate(s.vendor_seed);
    scan = attacks::scan_shuffled_keys(world.keysector_plaintext(), builds,
                                       {s.console.memory().base(), s.console.memory().size()});
  }
  emit_report(a.report, report::scan_json(scan, a.black_box ? "black-box" : "harness"));
  if (a.report)
    std::cout << scan.entries.size() << " entries examined, " << scan.hits.size() << " branch hits\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keysector shuffling and boot-chain persistence simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  bool reveal = false;
  app.add_flag("--reveal-secrets", reveal, "Include OTP bytes and keysector plaintext in reports");

  GenConsoleArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-console", "Provision a new synthetic console");
  gen_cmd->add_option("--out", gen.out, "NAND image path (sidecars are written next to it)")->required();
  gen_cmd->add_option("--seed", gen.seed, "Console seed (falls back to BOOTSHUFFLE_SEED)");
  gen_cmd->add_option("--vendor-seed", gen.vendor_seed, "Vendor world seed");
  gen_cmd->add_option("--firmware", gen.firmware, "Factory firmware release");
  gen_cmd->add_option("--clobber-len", gen.clobber_len, "Bytes past the FIRM the loader scribbles before jumping");

  BuildFirmArgs build;
  auto* build_cmd = app.add_subcommand("build-firm", "Build a signed FIRM image");
  build_cmd->add_option("--version", build.version, "Version label")->required();
  build_cmd->add_option("--loader", build.loader, "v1 or v2 (default from the version)");
  build_cmd->add_option("--size", build.size, "Code section size in bytes");
  build_cmd->add_option("--out", build.out, "Output path")->required();
  build_cmd->add_option("--vendor-seed", build.vendor_seed, "Vendor world seed");
  build_cmd->add_option("--entry-offset", build.entry_offset, "Entrypoint offset within the section");
  build_cmd->add_flag("--vulnerable", build.vulnerable, "Pick a nonce so Key #1 turns the entry into a sled branch");
  build_cmd->add_option("--seed", build.seed, "Nonce search seed (falls back to BOOTSHUFFLE_SEED)");

  InstallFirmArgs install;
  auto* install_cmd = app.add_subcommand("install-firm", "Write a FIRM image into a NAND partition");
  install_cmd->add_option("--nand", install.nand, "Console NAND image")->required();
  install_cmd->add_option("--slot", install.slot, "firm0 or firm1")->required();
  install_cmd->add_option("--firm", install.firm, "FIRM image")->required();

  BootArgs boot_args;
  auto* boot_cmd = app.add_subcommand("boot", "Reboot the console and run the boot chain");
  boot_cmd->add_option("--nand", boot_args.nand, "Console NAND image")->required();
  boot_cmd->add_flag("--cold", boot_args.cold, "Cold reboot (RAM cleared)");
  boot_cmd->add_flag("--trace", boot_args.trace, "Print the step trace");
  boot_cmd->add_option("--report", boot_args.report, "Write a JSON boot report");

  auto* attack_cmd = app.add_subcommand("attack", "Run an attack scenario");
  attack_cmd->require_subcommand(1);
  attack_cmd->fallthrough();

  Stage1Args s1;
  auto* s1_cmd = attack_cmd->add_subcommand("stage1", "Capture SHA_HASH through a shuffled Key #2");
  s1_cmd->add_option("--nand", s1.nand, "Console NAND image")->required();
  s1_cmd->add_option("--report", s1.report, "JSON report path (default stdout)");
  s1_cmd->add_flag("--cold", s1.cold, "Cold reboot before the exploit boot");
  s1_cmd->add_option("--seed", s1.seed, "Search seed (falls back to BOOTSHUFFLE_SEED)");

  PersistArgs persist;
  auto* persist_cmd = attack_cmd->add_subcommand("persist", "Install the FIRM0/FIRM1 residue payload");
  persist_cmd->add_option("--nand", persist.nand, "Console NAND image")->required();
  persist_cmd->add_option("--gap", persist.gap, "Sled start past the end of FIRM1");
  persist_cmd->add_option("--payload", persist.payload, "Payload file")->required();
  persist_cmd->add_option("--report", persist.report, "JSON report path (default stdout)");
  persist_cmd->add_option("--workers", persist.workers, "Brute-force worker threads");
  persist_cmd->add_option("--otp-hash", persist.otp_hash, "Captured SHA_HASH (default: run stage1 first)");
  persist_cmd->add_option("--seed", persist.seed, "Search seed (falls back to BOOTSHUFFLE_SEED)");
  persist_cmd->add_option("--big", persist.big, "FIRM0 release");
  persist_cmd->add_option("--small", persist.small, "FIRM1 release");
  persist_cmd->add_option("--verify-boots", persist.verify_boots, "Warm boots to run after installing");

  ScanArgs scan;
  auto* scan_cmd = app.add_subcommand("scan", "Decode the entry word under each of the other 31 keys");
  scan_cmd->add_option("--nand", scan.nand, "Console NAND image")->required();
  scan_cmd->add_option("--builds", scan.builds, "Directory of .firm files")->required();
  scan_cmd->add_flag("--black-box", scan.black_box, "Boot each candidate instead of using fixture keys");
  scan_cmd->add_option("--report", scan.report, "JSON report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return run_gen_console(gen);
    if (*build_cmd) return run_build_firm(build);
    if (*install_cmd) return run_install_firm(install);
    if (*boot_cmd) return run_boot(boot_args);
    if (*s1_cmd) return run_stage1(s1, reveal);
    if (*persist_cmd) return run_persist(persist, reveal);
    if (*scan_cmd) return run_scan(scan);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  } catch (const attacks::AttackFailed& e) {
    std::cerr << "attack failed: " << e.what() << "\n";
    return kExitFailure;
  } catch (const Error& e) {
    std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
    const bool attack_side = e.code() == Errc::SearchExhausted || e.code() == Errc::PreconditionFailed;
    return attack_side ? kExitFailure : kExitUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
