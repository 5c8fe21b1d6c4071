#pragma once

// On-disk console bundle used by the CLI between invocations:
//   <nand>           NAND image (nand_model file format)
//   <nand>.hw.json   OTP, vendor public key, boot ROM config, SHA latch, hooks
//   <nand>.ram       raw RAM snapshot, so warm reboots keep memory
// The OTP is stored because it is fused into the device; nothing in the
// attack commands reads it from here.

#include "bootshuffle/console.hpp"

#include <cstdint>
#include <filesystem>

namespace bootshuffle {

struct StoredConsole {
  Console console;
  std::uint64_t vendor_seed = 0;
  std::uint64_t console_seed = 0;
};

std::filesystem::path hw_sidecar_path(const std::filesystem::path& nand_path);
std::filesystem::path ram_snapshot_path(const std::filesystem::path& nand_path);

/// Throws Error(IoFailure).
void save_console(const std::filesystem::path& nand_path, const Console& console, std::uint64_t vendor_seed,
                  std::uint64_t console_seed);
/// Throws Error(IoFailure) or Error(CorruptImage).
StoredConsole load_console(const std::filesystem::path& nand_path);

}  // namespace bootshuffle
