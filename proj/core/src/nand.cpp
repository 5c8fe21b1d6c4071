#include "bootshuffle/nand.hpp"

#include "bootshuffle/error.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

namespace bootshuffle {

namespace {

// magic[16] | version u8 | sector_count u32 | firm0 start,count | firm1 start,count
constexpr std::size_t kFileHeaderSize = 16 + 1 + 4 + 16;

bool overlaps(std::uint32_t a0, std::uint32_t a1, std::uint32_t b0, std::uint32_t b1) { return a0 < b1 && b0 < a1; }

void validate(const NandGeometry& g) {
  const auto bad = [](const std::string& why) { throw Error(Errc::BadPartitionLayout, why); };
  if (g.sector_count <= kKeysectorIndex) bad("device too small for the keysector");
  for (const PartitionEntry* p : {&g.firm0, &g.firm1}) {
    if (p->sector_count == 0) bad("empty FIRM partition");
    if (static_cast<std::uint64_t>(p->start_sector) + p->sector_count > g.sector_count) bad("partition past end of device");
    if (overlaps(p->start_sector, p->end_sector(), kKeysectorIndex, kKeysectorIndex + 1)) bad("partition covers the keysector");
  }
  if (overlaps(g.firm0.start_sector, g.firm0.end_sector(), g.firm1.start_sector, g.firm1.end_sector()))
    bad("FIRM0 and FIRM1 overlap");
}

void check_key_number(unsigned key_number) {
  if (key_number < 1 || key_number > kKeysectorKeyCount)
    throw Error(Errc::KeyIndexOutOfRange, "key #" + std::to_string(key_number));
}

}  // namespace

std::string_view firm_slot_name(FirmSlot slot) noexcept { return slot == FirmSlot::Firm0 ? "FIRM0" : "FIRM1"; }

NandImage::NandImage(const NandGeometry& geometry) : geometry_(geometry) {
  validate(geometry_);
  data_.assign(std::size_t{geometry_.sector_count} * kSectorSize, 0);
}

const PartitionEntry& NandImage::partition(FirmSlot slot) const noexcept {
  return slot == FirmSlot::Firm0 ? geometry_.firm0 : geometry_.firm1;
}

std::span<Byte> NandImage::sector_span(std::uint32_t index) {
  if (index >= geometry_.sector_count) throw Error(Errc::SectorOutOfRange, "sector " + std::to_string(index));
  return std::span<Byte>(data_).subspan(std::size_t{index} * kSectorSize, kSectorSize);
}

std::span<const Byte> NandImage::sector_span(std::uint32_t index) const {
  if (index >= geometry_.sector_count) throw Error(Errc::SectorOutOfRange, "sector " + std::to_string(index));
  return std::span<const Byte>(data_).subspan(std::size_t{index} * kSectorSize, kSectorSize);
}

Sector NandImage::read_sector(std::uint32_t index) const { return to_array<kSectorSize>(sector_span(index)); }

void NandImage::write_sector(std::uint32_t index, std::span<const Byte> data) {
  auto dst = sector_span(index);
  if (data.size() != kSectorSize) throw Error(Errc::BadSectorLength, std::to_string(data.size()) + " bytes");
  std::ranges::copy(data, dst.begin());
}

Block NandImage::keysector_block(unsigned key_number) const {
  check_key_number(key_number);
  return to_array<kBlockSize>(sector_span(kKeysectorIndex).subspan((key_number - 1) * kBlockSize, kBlockSize));
}

void NandImage::set_keysector_block(unsigned key_number, const Block& block) {
  check_key_number(key_number);
  std::ranges::copy(block, sector_span(kKeysectorIndex).subspan((key_number - 1) * kBlockSize).begin());
}

KeysectorBlocks NandImage::keysector() const {
  KeysectorBlocks blocks;
  for (unsigned n = 1; n <= kKeysectorKeyCount; ++n) blocks[n - 1] = keysector_block(n);
  return blocks;
}

void NandImage::set_keysector(const KeysectorBlocks& blocks) {
  for (unsigned n = 1; n <= kKeysectorKeyCount; ++n) set_keysector_block(n, blocks[n - 1]);
}

Bytes NandImage::read_partition(FirmSlot slot) const {
  return read_partition(slot, 0, partition(slot).byte_size());
}

Bytes NandImage::read_partition(FirmSlot slot, std::size_t offset, std::size_t len) const {
  const PartitionEntry& p = partition(slot);
  if (offset > p.byte_size() || len > p.byte_size() - offset)
    throw Error(Errc::PartitionOverflow, "read past end of " + std::string(firm_slot_name(slot)));
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(p.byte_offset() + offset);
  return Bytes(first, first + static_cast<std::ptrdiff_t>(len));
}

void NandImage::write_partition(FirmSlot slot, std::span<const Byte> data) {
  const PartitionEntry& p = partition(slot);
  if (data.size() > p.byte_size())
    throw Error(Errc::PartitionOverflow, std::to_string(data.size()) + " bytes into " + std::string(firm_slot_name(slot)));
  const auto first = data_.begin() + static_cast<std::ptrdiff_t>(p.byte_offset());
  std::ranges::copy(data, first);
  std::fill(first + static_cast<std::ptrdiff_t>(data.size()), first + static_cast<std::ptrdiff_t>(p.byte_size()), Byte{0});
}

Bytes NandImage::serialize() const {
  Bytes out;
  out.reserve(kFileHeaderSize + data_.size());
  out.insert(out.end(), kFileMagic.begin(), kFileMagic.end());
  out.push_back(kFileVersion);
  append_le32(out, geometry_.sector_count);
  append_le32(out, geometry_.firm0.start_sector);
  append_le32(out, geometry_.firm0.sector_count);
  append_le32(out, geometry_.firm1.start_sector);
  append_le32(out, geometry_.firm1.sector_count);
  out.insert(out.end(), data_.begin(), data_.end());
  return out;
}

NandImage NandImage::deserialize(std::span<const Byte> bytes) {
  const auto corrupt = [](const std::string& why) { return Error(Errc::CorruptImage, why); };
  if (bytes.size() < kFileHeaderSize) throw corrupt("file shorter than header");
  if (!std::equal(kFileMagic.begin(), kFileMagic.end(), bytes.begin())) throw corrupt("bad magic");
  if (bytes[16] != kFileVersion) throw corrupt("unsupported version " + std::to_string(bytes[16]));
  NandGeometry g;
  g.sector_count = load_le32(bytes.subspan(17));
  g.firm0 = {load_le32(bytes.subspan(21)), load_le32(bytes.subspan(25))};
  g.firm1 = {load_le32(bytes.subspan(29)), load_le32(bytes.subspan(33))};
  if (bytes.size() - kFileHeaderSize != std::uint64_t{g.sector_count} * kSectorSize)
    throw corrupt("sector data length does not match sector count");
  NandImage img = [&] {
    try {
      return NandImage(g);
    } catch (const Error& e) {
      throw corrupt(e.what());
    }
  }();
  std::copy(bytes.begin() + kFileHeaderSize, bytes.end(), img.data_.begin());
  return img;
}

void NandImage::save(const std::filesystem::path& path) const {
  const Bytes raw = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(Errc::IoFailure, "short write to " + path.string());
}

NandImage NandImage::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  const Bytes raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(raw);
}

}  // namespace bootshuffle
