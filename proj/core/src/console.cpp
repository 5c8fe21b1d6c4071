#include "bootshuffle/console.hpp"

#include "bootshuffle/error.hpp"

#include <algorithm>

namespace bootshuffle {

Key derive_loader_key(const Digest& otp_hash) { return to_array<kBlockSize>(otp_hash); }

Key derive_nand_key(std::span<const Byte> itcm_otp) {
  Bytes input;
  input.reserve(1 + itcm_otp.size());
  input.push_back(static_cast<Byte>(keyslot::kNand));
  input.insert(input.end(), itcm_otp.begin(), itcm_otp.end());
  Digest d = crypto::sha256(input);
  const Key key = to_array<kBlockSize>(d);
  crypto::secure_zero(d);
  crypto::secure_zero(input);
  return key;
}

Console::Console(const OtpBytes& otp, NandImage nand, BootRomConfig config, MemoryMap memory)
    : otp_(otp), memory_(std::move(memory)), nand_(std::move(nand)), config_(std::move(config)) {
  register_host_call(host_call::kDumpShaLatch, [](Console& c, Address) {
    const auto& latch = c.sha().latch();
    return HostCallResult{latch ? Bytes(latch->begin(), latch->end()) : Bytes{}};
  });
  register_host_call(host_call::kInlinePayload, [](Console& c, Address pc) {
    const MemoryMap& mem = c.memory();
    if (!mem.contains(pc + 8, 4)) return HostCallResult{};
    const std::uint32_t len = mem.read_word(pc + 8);
    if (!mem.contains(pc + 12, len)) return HostCallResult{};
    return HostCallResult{mem.read(pc + 12, len)};
  });
}

void Console::reboot(RebootMode mode) {
  otp_.reset();
  aes_.reset();
  if (mode == RebootMode::Cold) memory_.zero();
}

void Console::load_nand_key() {
  const auto& raw = otp_.raw_for_hardware();
  Key key = derive_nand_key(std::span<const Byte>(raw).first(kItcmOtpSize));
  aes_.set_keyslot(keyslot::kNand, key);
  crypto::secure_zero(key);
}

void Console::install_firm(FirmSlot slot, std::span<const Byte> container) {
  if (container.size() > nand_.partition(slot).byte_size())
    throw Error(Errc::PartitionOverflow, "FIRM container larger than " + std::string(firm_slot_name(slot)));
  load_nand_key();
  Bytes ct(container.begin(), container.end());
  aes_.ctr_inplace(keyslot::kNand, kNandCtrBase, ct, nand_.partition_byte_offset(slot) / kBlockSize);
  nand_.write_partition(slot, ct);
}

Bytes Console::read_firm(FirmSlot slot, std::size_t len) {
  load_nand_key();
  Bytes data = nand_.read_partition(slot, 0, len);
  aes_.ctr_inplace(keyslot::kNand, kNandCtrBase, data, nand_.partition_byte_offset(slot) / kBlockSize);
  return data;
}

void Console::register_host_call(HostCallId id, HostCallback callback) { host_calls_[id] = std::move(callback); }

std::optional<HostCallResult> Console::invoke_host_call(HostCallId id, Address pc) {
  const auto it = host_calls_.find(id);
  if (it == host_calls_.end()) return std::nullopt;
  return it->second(*this, pc);
}

}  // namespace bootshuffle
