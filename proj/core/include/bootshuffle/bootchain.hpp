#pragma once

// Secure-boot state machines: the ARM9 boot ROM with its FIRM0 -> FIRM1
// fallback, ARM9Loader v1.0 and v2.0, and the micro-executor that follows
// control flow from the firmware entrypoint.

#include "bootshuffle/arm.hpp"
#include "bootshuffle/console.hpp"
#include "bootshuffle/firm.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace bootshuffle::boot {

struct ReachedFirmEntry {
  std::string version_label;
  bool operator==(const ReachedFirmEntry&) const = default;
};
struct PayloadExecuted {
  HostCallId hook_id = 0;
  Bytes captured;
  Address pc = 0;
  bool operator==(const PayloadExecuted&) const = default;
};
struct Crash {
  Address pc = 0;
  std::uint32_t word = 0;
  /// pc was outside RAM, so there was no word to fetch.
  bool fetch_fault = false;
  bool operator==(const Crash&) const = default;
};
struct Hang {
  std::uint64_t steps = 0;
  bool operator==(const Hang&) const = default;
};
struct Panic {
  std::string reason;
  bool operator==(const Panic&) const = default;
};

using BootOutcome = std::variant<ReachedFirmEntry, PayloadExecuted, Crash, Hang, Panic>;

std::string outcome_name(const BootOutcome& outcome);
std::string describe(const BootOutcome& outcome);

inline constexpr std::uint64_t kDefaultStepLimit = 1'000'000;

struct FirmwareEntered {
  bool operator==(const FirmwareEntered&) const = default;
};
using ExecOutcome = std::variant<FirmwareEntered, PayloadExecuted, Crash, Hang>;

struct ExecResult {
  ExecOutcome outcome;
  /// First word fetched, if any (hooks can fire before a fetch).
  std::optional<std::uint32_t> entry_word;
  std::uint64_t steps = 0;
};

/// Steps from `start_pc`: hook hit -> PayloadExecuted; host-call trap ->
/// FirmwareEntered or PayloadExecuted; B -> jump; NOP -> pc += 4; anything
/// else -> Crash. Exceeding `step_limit` -> Hang.
ExecResult micro_exec(Console& console, Address start_pc, std::uint64_t step_limit = kDefaultStepLimit);

enum class Stage { BootRom, Loader };

struct TraceStep {
  Stage stage = Stage::BootRom;
  std::string step;  // "1".."14", or "5a"/"5b"/"8a"/"8b"
  std::string description;
  bool operator==(const TraceStep&) const = default;
};

/// `STEP <loader|bootrom> <n> <description>`
std::string format_trace_line(const TraceStep& step);

inline constexpr unsigned kSubkeyProbeCount = keyslot::kSubkeyLast - keyslot::kSubkeyFirst + 1;
/// Fixed block encrypted under each sub-key slot to compare sub-keys
/// without ever reading them.
inline constexpr Block kSubkeyProbe = {0x70, 0x72, 0x6F, 0x62, 0x65, 0x2D, 0x62, 0x6C,
                                       0x6F, 0x63, 0x6B, 0x2D, 0x30, 0x30, 0x30, 0x31};
using SubkeyProbes = std::array<Block, kSubkeyProbeCount>;

/// Encrypts kSubkeyProbe under slots 0x18..0x1F.
SubkeyProbes probe_subkeys(const AesEngine& aes);

struct BootReport {
  BootOutcome outcome;
  std::vector<TraceStep> trace;
  std::vector<FirmSlot> partitions_read;
  std::optional<FirmSlot> booted_slot;
  std::optional<std::string> loader_version;
  std::optional<LoaderVariant> loader_variant;
  std::optional<std::uint32_t> entry_word;
  /// Sub-key probe ciphertexts right after the loader derived them.
  std::optional<SubkeyProbes> subkey_probes;
  /// Loader step number -> whether otp_read succeeded right after it.
  std::vector<std::pair<std::string, bool>> otp_readable_after_step;
  bool keysector_zeroized_before_jump = false;

  std::vector<std::string> trace_lines() const;
};

/// Loader-side working state. The decrypted keysector lives here and is
/// wiped when the state is destroyed or the loader jumps.
class LoaderState {
 public:
  /// Parses the FIRM header from RAM at kFirmLoadBase.
  LoaderState(Console& console, BootReport& report);
  LoaderState(const LoaderState&) = delete;
  LoaderState& operator=(const LoaderState&) = delete;
  ~LoaderState();

  Console& console() noexcept { return console_; }
  const FirmHeader& header() const noexcept { return header_; }
  BootReport& report() noexcept { return report_; }

  KeysectorBlocks& keysector_plaintext() noexcept { return keysector_; }
  void zeroize_keysector() noexcept;
  bool keysector_is_zero() const noexcept;

  void mark(std::string step, std::string description);

 private:
  Console& console_;
  BootReport& report_;
  FirmHeader header_;
  KeysectorBlocks keysector_{};
};

/// ARM9Loader v1.0 (11 steps). Leaves Key #1 in keyslot 0x11 unless the
/// header asks for the 9.5.0 clear-after-decrypt behaviour.
BootOutcome a9l_v1_run(LoaderState& state);
/// ARM9Loader v2.0 (14 steps). Verifies Key #1 only; Key #2 is used as found.
BootOutcome a9l_v2_run(LoaderState& state);

/// Full power-on path. Does not reboot first; call Console::reboot.
BootReport boot_rom_run(Console& console);

}  // namespace bootshuffle::boot
