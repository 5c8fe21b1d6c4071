#pragma once

// NAND flash as a flat sector store. The keysector lives at sector 0x96; the
// two FIRM partitions hold ciphertext only (the console encrypts them under
// keyslot 0x06 on the way in and the boot ROM decrypts on the way out).

#include "bootshuffle/bytes.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>

namespace bootshuffle {

inline constexpr std::size_t kSectorSize = 0x200;
inline constexpr std::uint32_t kKeysectorIndex = 0x96;
inline constexpr unsigned kKeysectorKeyCount = kSectorSize / kBlockSize;  // 32

using Sector = std::array<Byte, kSectorSize>;
/// Key #N sits at index N-1.
using KeysectorBlocks = std::array<Block, kKeysectorKeyCount>;

enum class FirmSlot { Firm0 = 0, Firm1 = 1 };

std::string_view firm_slot_name(FirmSlot slot) noexcept;

struct PartitionEntry {
  std::uint32_t start_sector = 0;
  std::uint32_t sector_count = 0;

  std::uint32_t end_sector() const noexcept { return start_sector + sector_count; }
  std::size_t byte_size() const noexcept { return std::size_t{sector_count} * kSectorSize; }
  std::size_t byte_offset() const noexcept { return std::size_t{start_sector} * kSectorSize; }
  bool operator==(const PartitionEntry&) const = default;
};

struct NandGeometry {
  std::uint32_t sector_count = 0x2000;
  PartitionEntry firm0{0x100, 0x400};
  PartitionEntry firm1{0x500, 0x400};

  bool operator==(const NandGeometry&) const = default;
};

class NandImage {
 public:
  static constexpr std::string_view kFileMagic = "BOOTSHUFFLE-NAND";
  static constexpr Byte kFileVersion = 1;

  NandImage() : NandImage(NandGeometry{}) {}
  /// Throws Error(BadPartitionLayout) if partitions overlap each other, the
  /// keysector, or run past the end of the device.
  explicit NandImage(const NandGeometry& geometry);

  const NandGeometry& geometry() const noexcept { return geometry_; }
  std::uint32_t sector_count() const noexcept { return geometry_.sector_count; }
  const PartitionEntry& partition(FirmSlot slot) const noexcept;

  Sector read_sector(std::uint32_t index) const;
  void write_sector(std::uint32_t index, std::span<const Byte> data);

  /// key_number in 1..32.
  Block keysector_block(unsigned key_number) const;
  void set_keysector_block(unsigned key_number, const Block& block);
  KeysectorBlocks keysector() const;
  void set_keysector(const KeysectorBlocks& blocks);

  /// Whole partition span, including zero padding.
  Bytes read_partition(FirmSlot slot) const;
  /// Partial read at a byte offset inside the partition.
  Bytes read_partition(FirmSlot slot, std::size_t offset, std::size_t len) const;
  /// Replaces the whole span; `data` is zero-padded to the end of the span.
  void write_partition(FirmSlot slot, std::span<const Byte> data);

  /// Absolute byte offset of the partition on the device (for CTR counters).
  std::size_t partition_byte_offset(FirmSlot slot) const noexcept { return partition(slot).byte_offset(); }

  Bytes serialize() const;
  static NandImage deserialize(std::span<const Byte> bytes);
  void save(const std::filesystem::path& path) const;
  static NandImage load(const std::filesystem::path& path);

  bool operator==(const NandImage&) const = default;

 private:
  std::span<Byte> sector_span(std::uint32_t index);
  std::span<const Byte> sector_span(std::uint32_t index) const;

  NandGeometry geometry_;
  Bytes data_;
};

}  // namespace bootshuffle
