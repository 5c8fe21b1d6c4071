#include "bootshuffle/console_store.hpp"

#include "bootshuffle/error.hpp"

#include <fstream>
#include <iterator>

#include "json.hpp"

namespace bootshuffle {

namespace {

using json = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const Byte> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
}

std::uint64_t parse_u64(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  return std::stoull(j.get<std::string>(), nullptr, 0);
}

}  // namespace

std::filesystem::path hw_sidecar_path(const std::filesystem::path& nand_path) {
  return nand_path.string() + ".hw.json";
}

std::filesystem::path ram_snapshot_path(const std::filesystem::path& nand_path) { return nand_path.string() + ".ram"; }

void save_console(const std::filesystem::path& nand_path, const Console& console, std::uint64_t vendor_seed,
                  std::uint64_t console_seed) {
  console.nand().save(nand_path);

  json hw;
  hw["format"] = kFormatVersion;
  hw["vendor_seed"] = std::to_string(vendor_seed);
  hw["console_seed"] = std::to_string(console_seed);
  hw["otp"] = to_hex(console.otp().raw_for_hardware());
  hw["vendor_key"] = to_hex(console.boot_config().vendor_key.to_der());
  hw["clobber_len"] = console.boot_config().clobber_len;
  hw["step_limit"] = console.boot_config().step_limit;
  const auto& latch = console.sha().latch();
  hw["sha_latch"] = latch ? json(to_hex(*latch)) : json(nullptr);
  hw["ram_base"] = console.memory().base();
  hw["ram_size"] = console.memory().size();
  json hooks = json::array();
  for (const MemoryHook& h : console.memory().hooks())
    hooks.push_back({{"begin", h.begin}, {"end", h.end}, {"callback", h.callback}});
  hw["hooks"] = hooks;

  const std::string text = hw.dump(2) + "\n";
  write_file(hw_sidecar_path(nand_path), std::span(reinterpret_cast<const Byte*>(text.data()), text.size()));
  write_file(ram_snapshot_path(nand_path), console.memory().contents());
}

StoredConsole load_console(const std::filesystem::path& nand_path) {
  NandImage nand = NandImage::load(nand_path);
  const Bytes hw_text = read_file(hw_sidecar_path(nand_path));
  json hw;
  try {
    hw = json::parse(hw_text.begin(), hw_text.end());
    if (hw.at("format").get<int>() != kFormatVersion) throw Error(Errc::CorruptImage, "unsupported sidecar format");

    const Bytes otp_bytes = from_hex(hw.at("otp").get<std::string>());
    if (otp_bytes.size() != kOtpSize) throw Error(Errc::CorruptImage, "OTP must be 256 bytes");
    OtpBytes otp{};
    std::ranges::copy(otp_bytes, otp.begin());

    BootRomConfig config;
    config.vendor_key = crypto::RsaPublicKey::from_der(from_hex(hw.at("vendor_key").get<std::string>()));
    config.clobber_len = hw.at("clobber_len").get<std::uint32_t>();
    config.step_limit = hw.at("step_limit").get<std::uint64_t>();

    MemoryMap memory(hw.at("ram_base").get<Address>(), hw.at("ram_size").get<std::uint32_t>());
    const Bytes ram = read_file(ram_snapshot_path(nand_path));
    if (ram.size() != memory.size()) throw Error(Errc::CorruptImage, "RAM snapshot size mismatch");
    memory.write(memory.base(), ram);
    for (const json& h : hw.at("hooks"))
      memory.add_hook({h.at("begin").get<Address>(), h.at("end").get<Address>(), h.at("callback").get<HostCallId>()});

    StoredConsole stored{Console(otp, std::move(nand), std::move(config), std::move(memory)),
                         parse_u64(hw.at("vendor_seed")), parse_u64(hw.at("console_seed"))};
    if (!hw.at("sha_latch").is_null())
      stored.console.sha().restore_latch(digest_from_hex(hw.at("sha_latch").get<std::string>()));
    return stored;
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptImage, std::string("malformed console sidecar: ") + e.what());
  }
}

}  // namespace bootshuffle
