#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bootshuffle {

enum class Errc {
  // hardware
  OtpLocked,
  SlotOutOfRange,
  EmptySourceSlot,
  BadLength,
  EmptyLatch,
  OutOfRangeAccess,
  // nand
  SectorOutOfRange,
  BadSectorLength,
  KeyIndexOutOfRange,
  PartitionOverflow,
  BadPartitionLayout,
  CorruptImage,
  IoFailure,
  // firm
  BadEntrypoint,
  BadAlignment,
  BadMagic,
  TruncatedImage,
  // bootchain
  DisplacementOutOfRange,
  // attacks
  SearchExhausted,
  AttackFailed,
  PreconditionFailed,
  // general
  CryptoFailure,
  InvalidArgument,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace bootshuffle
