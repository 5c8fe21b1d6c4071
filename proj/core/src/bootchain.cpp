#include "bootshuffle/bootchain.hpp"

#include "bootshuffle/error.hpp"

#include <algorithm>
#include <cstdio>

namespace bootshuffle::boot {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", v);
  return buf;
}

constexpr Block kTestVector{};  // Key #1 check: all-zero block

}  // namespace

std::string outcome_name(const BootOutcome& outcome) {
  return std::visit(Overloaded{
                        [](const ReachedFirmEntry&) { return std::string("ReachedFirmEntry"); },
                        [](const PayloadExecuted&) { return std::string("PayloadExecuted"); },
                        [](const Crash&) { return std::string("Crash"); },
                        [](const Hang&) { return std::string("Hang"); },
                        [](const Panic&) { return std::string("Panic"); },
                    },
                    outcome);
}

std::string describe(const BootOutcome& outcome) {
  return std::visit(Overloaded{
                        [](const ReachedFirmEntry& o) { return "ReachedFirmEntry(" + o.version_label + ")"; },
                        [](const PayloadExecuted& o) {
                          return "PayloadExecuted(hook=" + hex32(o.hook_id) + ", pc=" + hex32(o.pc) +
                                 ", captured=" + std::to_string(o.captured.size()) + " bytes)";
                        },
                        [](const Crash& o) {
                          return "Crash(pc=" + hex32(o.pc) + ", word=" + hex32(o.word) +
                                 (o.fetch_fault ? ", fetch fault)" : ")");
                        },
                        [](const Hang& o) { return "Hang(" + std::to_string(o.steps) + " steps)"; },
                        [](const Panic& o) { return "Panic(" + o.reason + ")"; },
                    },
                    outcome);
}

ExecResult micro_exec(Console& console, Address start_pc, std::uint64_t step_limit) {
  MemoryMap& mem = console.memory();
  ExecResult result{Hang{step_limit}, std::nullopt, 0};
  Address pc = start_pc;
  for (std::uint64_t step = 0; step < step_limit; ++step) {
    result.steps = step;
    if (const auto hook = mem.hook_at(pc)) {
      if (auto r = console.invoke_host_call(hook->callback, pc)) {
        result.outcome = PayloadExecuted{hook->callback, std::move(r->captured), pc};
      } else {
        result.outcome = Crash{pc, 0, false};
      }
      return result;
    }
    if (!mem.contains(pc, 4)) {
      result.outcome = Crash{pc, 0, true};
      return result;
    }
    const std::uint32_t word = mem.read_word(pc);
    if (!result.entry_word) result.entry_word = word;

    if (word == host_call::kTrapWord) {
      if (!mem.contains(pc + 4, 4)) {
        result.outcome = Crash{pc, word, false};
        return result;
      }
      const HostCallId id = mem.read_word(pc + 4);
      if (id == host_call::kFirmwareEntry) {
        result.outcome = FirmwareEntered{};
      } else if (auto r = console.invoke_host_call(id, pc)) {
        result.outcome = PayloadExecuted{id, std::move(r->captured), pc};
      } else {
        result.outcome = Crash{pc, word, false};
      }
      return result;
    }

    const arm::Instruction insn = arm::decode_instruction(word, pc);
    if (const auto* b = std::get_if<arm::Branch>(&insn)) {
      pc = b->target;
    } else if (std::holds_alternative<arm::Nop>(insn)) {
      pc += 4;
    } else {
      result.outcome = Crash{pc, word, false};
      return result;
    }
  }
  result.steps = step_limit;
  result.outcome = Hang{step_limit};
  return result;
}

std::string format_trace_line(const TraceStep& step) {
  return std::string("STEP ") + (step.stage == Stage::BootRom ? "bootrom " : "loader ") + step.step + " " +
         step.description;
}

std::vector<std::string> BootReport::trace_lines() const {
  std::vector<std::string> lines;
  lines.reserve(trace.size());
  for (const TraceStep& s : trace) lines.push_back(format_trace_line(s));
  return lines;
}

SubkeyProbes probe_subkeys(const AesEngine& aes) {
  SubkeyProbes probes;
  for (unsigned i = 0; i < kSubkeyProbeCount; ++i)
    probes[i] = aes.ecb_block(keyslot::kSubkeyFirst + i, crypto::Direction::Encrypt, kSubkeyProbe);
  return probes;
}

// --- LoaderState ------------------------------------------------------------

LoaderState::LoaderState(Console& console, BootReport& report)
    : console_(console), report_(report), header_(parse_header(console.memory().view(kFirmLoadBase, kFirmHeaderSize))) {}

LoaderState::~LoaderState() { zeroize_keysector(); }

void LoaderState::zeroize_keysector() noexcept {
  for (Block& b : keysector_) crypto::secure_zero(b);
}

bool LoaderState::keysector_is_zero() const noexcept {
  return std::ranges::all_of(keysector_, [](const Block& b) { return b == Block{}; });
}

void LoaderState::mark(std::string step, std::string description) {
  report_.otp_readable_after_step.emplace_back(step, !console_.otp().locked());
  report_.trace.push_back({Stage::Loader, std::move(step), std::move(description)});
}

// --- ARM9Loader -------------------------------------------------------------

namespace {

// Steps 1-6 are common to both loader versions.
void unlock_keysector(LoaderState& st) {
  Console& c = st.console();
  AesEngine& aes = c.aes();

  OtpBytes otp = c.otp_read();
  const Digest otp_hash = c.sha().compute_and_latch(otp);
  crypto::secure_zero(otp);
  st.mark("1", "Calculate SHA-256 hash of the OTP region and output it to SHA_HASH");

  Key loader_key = derive_loader_key(otp_hash);
  aes.set_keyslot(keyslot::kLoader, loader_key);
  crypto::secure_zero(loader_key);
  st.mark("2", "Calculate keyslot 0x11 from the OTP hash");

  const Sector raw = c.nand().read_sector(kKeysectorIndex);
  st.mark("3", "Read the keysector from NAND sector 0x96");

  Bytes plain = aes.ecb(keyslot::kLoader, crypto::Direction::Decrypt, raw);
  for (unsigned i = 0; i < kKeysectorKeyCount; ++i)
    std::copy_n(plain.begin() + static_cast<std::ptrdiff_t>(i * kBlockSize), kBlockSize, st.keysector_plaintext()[i].begin());
  crypto::secure_zero(plain);
  st.mark("4", "Decrypt the keysector using keyslot 0x11");

  aes.clear_keyslot(keyslot::kLoader);
  st.mark("5", "Clear keyslot 0x11");

  c.set_sysprot9();
  st.mark("6", "Disable OTP access via CFG_SYSPROT9");
}

bool verify_key1(LoaderState& st) {
  return st.console().aes().verify_keyslot(keyslot::kLoader, kTestVector, st.header().key1_check);
}

// Decrypts the code section into its load address. Returns false when the
// header points the section outside RAM.
bool decrypt_section(LoaderState& st) {
  const FirmHeader& h = st.header();
  MemoryMap& mem = st.console().memory();
  const Address stored = kFirmLoadBase + static_cast<Address>(kFirmHeaderSize);
  if (!mem.contains(stored, h.section_size) || !mem.contains(h.section_load_addr, h.section_size)) return false;
  if (h.section_load_addr != stored) {
    const Bytes ct = mem.read(stored, h.section_size);
    mem.write(h.section_load_addr, ct);
  }
  st.console().aes().ctr_inplace(keyslot::kLoader, h.ctr_nonce, mem.view(h.section_load_addr, h.section_size));
  return true;
}

BootOutcome jump_to_entry(LoaderState& st) {
  Console& c = st.console();
  st.zeroize_keysector();
  st.report().keysector_zeroized_before_jump = st.keysector_is_zero();

  // Whatever the loader leaves behind right after the image (stack, bss).
  const FirmHeader& h = st.header();
  const std::uint32_t clobber = c.boot_config().clobber_len;
  if (clobber > 0) {
    const Address from = kFirmLoadBase + static_cast<Address>(h.container_size());
    MemoryMap& mem = c.memory();
    if (mem.contains(from)) mem.fill(from, std::min<std::uint64_t>(clobber, mem.end() - from), 0);
  }

  ExecResult r = micro_exec(c, h.entrypoint, c.boot_config().step_limit);
  st.report().entry_word = r.entry_word;
  return std::visit(Overloaded{
                        [&](FirmwareEntered) -> BootOutcome { return ReachedFirmEntry{h.version_label}; },
                        [](PayloadExecuted& p) -> BootOutcome { return std::move(p); },
                        [](Crash& x) -> BootOutcome { return x; },
                        [](Hang& x) -> BootOutcome { return x; },
                    },
                    r.outcome);
}

const Block& keysector_key(LoaderState& st, unsigned key_number) {
  if (key_number < 1 || key_number > kKeysectorKeyCount)
    throw Error(Errc::KeyIndexOutOfRange, "key #" + std::to_string(key_number));
  return st.keysector_plaintext()[key_number - 1];
}

}  // namespace

BootOutcome a9l_v1_run(LoaderState& st) {
  AesEngine& aes = st.console().aes();
  unlock_keysector(st);

  aes.set_keyslot(keyslot::kLoader, keysector_key(st, 1));
  st.mark("7", "Write Key #1 from the keysector to keyslot 0x11");

  aes.derive_subkeys(keyslot::kLoader, keyslot::kSubkeyFirst, keyslot::kSubkeyLast);
  st.report().subkey_probes = probe_subkeys(aes);
  st.mark("8", "Calculate sub-keys 0x18 through 0x1F from keyslot 0x11");

  const bool ok = verify_key1(st);
  st.mark("9", "Verify keyslot 0x11 against the fixed test vector");
  if (!ok) return Panic{"KeyVerifyFailed"};

  const bool in_ram = decrypt_section(st);
  if (st.header().clear_after_decrypt) aes.clear_keyslot(keyslot::kLoader);
  st.mark("10", "Decrypt the ARM9 firmware binary");
  if (!in_ram) return Panic{"SectionOutOfRange"};

  st.mark("11", "Jump to the ARM9 firmware entrypoint");
  return jump_to_entry(st);
}

BootOutcome a9l_v2_run(LoaderState& st) {
  AesEngine& aes = st.console().aes();
  unlock_keysector(st);

  Key rodata = xor_blocks(st.header().rodata_key_masked, kLoaderRodataMask);
  aes.set_keyslot(keyslot::kSubkeyFirst, rodata);
  crypto::secure_zero(rodata);
  st.mark("7", "Decrypt the read-only-data key and set it to keyslot 0x18");

  aes.set_keyslot(keyslot::kLoader, keysector_key(st, 1));
  st.mark("8", "Write Key #1 from the keysector to keyslot 0x11");

  aes.derive_subkeys(keyslot::kLoader, keyslot::kSubkeyFirst + 1, keyslot::kSubkeyLast);
  st.report().subkey_probes = probe_subkeys(aes);
  st.mark("9", "Calculate sub-keys 0x19 through 0x1F from keyslot 0x11");

  const bool ok = verify_key1(st);
  st.mark("10", "Verify keyslot 0x11 against the fixed test vector");
  if (!ok) return Panic{"KeyVerifyFailed"};

  aes.set_keyslot(keyslot::kLoader, keysector_key(st, st.header().firmware_key_index));
  st.mark("11", "Write Key #" + std::to_string(st.header().firmware_key_index) + " from the keysector to keyslot 0x11");

  const bool in_ram = decrypt_section(st);
  st.mark("12", "Decrypt the ARM9 firmware binary");

  aes.clear_keyslot(keyslot::kLoader);
  st.mark("13", "Clear keyslot 0x11");
  if (!in_ram) return Panic{"SectionOutOfRange"};

  st.mark("14", "Jump to the ARM9 firmware entrypoint");
  return jump_to_entry(st);
}

// --- Boot ROM ---------------------------------------------------------------

namespace {

void rom_mark(BootReport& r, std::string step, std::string description) {
  r.trace.push_back({Stage::BootRom, std::move(step), std::move(description)});
}

// The boot ROM learns the container length from the header sector, then
// copies exactly that many bytes over the load region. Anything beyond it in
// RAM is left as it was.
std::size_t load_partition(Console& c, FirmSlot slot) {
  const NandImage& nand = c.nand();
  const std::size_t span = nand.partition(slot).byte_size();
  const std::uint64_t ctr_offset = nand.partition_byte_offset(slot) / kBlockSize;

  Bytes head = nand.read_partition(slot, 0, kSectorSize);
  c.aes().ctr_inplace(keyslot::kNand, kNandCtrBase, head, ctr_offset);
  std::size_t len = kSectorSize;
  try {
    const FirmHeader h = parse_header(head);
    if (h.container_size() <= span) len = h.container_size();
  } catch (const Error&) {
  }
  MemoryMap& mem = c.memory();
  len = std::min<std::size_t>(len, mem.end() - kFirmLoadBase);
  mem.write(kFirmLoadBase, nand.read_partition(slot, 0, len));
  return len;
}

bool check_loaded(const Console& c, std::size_t len) {
  return verify_signature(c.memory().view(kFirmLoadBase, len), c.boot_config().vendor_key);
}

BootOutcome run_loader(Console& c, BootReport& report) {
  LoaderState st(c, report);
  report.loader_version = st.header().version_label;
  report.loader_variant = st.header().loader_variant;
  return st.header().loader_variant == LoaderVariant::V1 ? a9l_v1_run(st) : a9l_v2_run(st);
}

}  // namespace

BootReport boot_rom_run(Console& c) {
  BootReport report;
  report.outcome = Panic{"unfinished"};
  MemoryMap& mem = c.memory();

  const auto& otp = c.otp().raw_for_hardware();
  std::copy_n(otp.begin(), kItcmOtpSize, mem.itcm().begin());
  rom_mark(report, "1", "Decrypt the OTP region and store the first 0x90 bytes in ITCM");

  Key nand_key = derive_nand_key(mem.itcm());
  c.aes().set_keyslot(keyslot::kNand, nand_key);
  crypto::secure_zero(nand_key);
  rom_mark(report, "2", "Calculate keyslot 0x06 from the ITCM OTP copy");

  struct Attempt {
    FirmSlot slot;
    const char* read_step;
    const char* decrypt_step;
    const char* check_step;
  };
  constexpr Attempt attempts[] = {{FirmSlot::Firm0, "3", "4", "5"}, {FirmSlot::Firm1, "6", "7", "8"}};

  for (const Attempt& a : attempts) {
    const std::string name(firm_slot_name(a.slot));
    const std::size_t len = load_partition(c, a.slot);
    report.partitions_read.push_back(a.slot);
    rom_mark(report, a.read_step,
             a.slot == FirmSlot::Firm0 ? "Read " + name + " NAND partition to memory"
                                       : "Read " + name + " NAND partition to memory on top of FIRM0");

    c.aes().ctr_inplace(keyslot::kNand, kNandCtrBase, mem.view(kFirmLoadBase, len),
                        c.nand().partition_byte_offset(a.slot) / kBlockSize);
    rom_mark(report, a.decrypt_step, "Decrypt " + name + " partition in memory using keyslot 0x06");

    const bool valid = check_loaded(c, len);
    rom_mark(report, a.check_step, "Check the RSA signature of decrypted " + name);
    if (valid) {
      rom_mark(report, std::string(a.check_step) + "a", "Signature valid, jump to " + name + " ARM9Loader");
      report.booted_slot = a.slot;
      report.outcome = run_loader(c, report);
      return report;
    }
    if (a.slot == FirmSlot::Firm0) {
      rom_mark(report, std::string(a.check_step) + "b", "Signature invalid, continue");
    } else {
      rom_mark(report, std::string(a.check_step) + "b", "Signature invalid, panic");
      report.outcome = Panic{"NoValidFirm"};
    }
  }
  return report;
}

}  // namespace bootshuffle::boot
