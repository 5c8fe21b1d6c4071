#include "bootshuffle/bytes.hpp"

#include "bootshuffle/error.hpp"

#include <algorithm>

namespace bootshuffle {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::OtpLocked: return "OtpLocked";
    case Errc::SlotOutOfRange: return "SlotOutOfRange";
    case Errc::EmptySourceSlot: return "EmptySourceSlot";
    case Errc::BadLength: return "BadLength";
    case Errc::EmptyLatch: return "EmptyLatch";
    case Errc::OutOfRangeAccess: return "OutOfRangeAccess";
    case Errc::SectorOutOfRange: return "SectorOutOfRange";
    case Errc::BadSectorLength: return "BadSectorLength";
    case Errc::KeyIndexOutOfRange: return "KeyIndexOutOfRange";
    case Errc::PartitionOverflow: return "PartitionOverflow";
    case Errc::BadPartitionLayout: return "BadPartitionLayout";
    case Errc::CorruptImage: return "CorruptImage";
    case Errc::IoFailure: return "IoFailure";
    case Errc::BadEntrypoint: return "BadEntrypoint";
    case Errc::BadAlignment: return "BadAlignment";
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedImage: return "TruncatedImage";
    case Errc::DisplacementOutOfRange: return "DisplacementOutOfRange";
    case Errc::SearchExhausted: return "SearchExhausted";
    case Errc::AttackFailed: return "AttackFailed";
    case Errc::PreconditionFailed: return "PreconditionFailed";
    case Errc::CryptoFailure: return "CryptoFailure";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string to_hex(std::span<const Byte> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (Byte b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

namespace {

int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Bytes from_hex(std::string_view text) {
  if (text.starts_with("0x") || text.starts_with("0X")) text.remove_prefix(2);
  if (text.size() % 2 != 0) throw Error(Errc::InvalidArgument, "odd-length hex string");
  Bytes out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = nibble(text[2 * i]);
    const int lo = nibble(text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::InvalidArgument, "non-hex character");
    out[i] = static_cast<Byte>(hi << 4 | lo);
  }
  return out;
}

Block block_from_hex(std::string_view text) {
  const Bytes raw = from_hex(text);
  if (raw.size() != kBlockSize) throw Error(Errc::InvalidArgument, "expected 16 hex bytes");
  return to_array<kBlockSize>(raw);
}

Digest digest_from_hex(std::string_view text) {
  const Bytes raw = from_hex(text);
  if (raw.size() != 32) throw Error(Errc::InvalidArgument, "expected 32 hex bytes");
  return to_array<32>(raw);
}

}  // namespace bootshuffle
