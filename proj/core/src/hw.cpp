#include "bootshuffle/hw.hpp"

#include "bootshuffle/error.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

namespace bootshuffle {

OtpBytes OtpRegion::read() const {
  if (locked_) throw Error(Errc::OtpLocked, "CFG_SYSPROT9 is set");
  return data_;
}

// --- AesEngine --------------------------------------------------------------

void AesEngine::check_slot(unsigned slot) {
  if (slot >= kSlotCount) throw Error(Errc::SlotOutOfRange, "keyslot " + std::to_string(slot));
}

void AesEngine::set_keyslot(unsigned slot, const Key& key) {
  check_slot(slot);
  if (slots_[slot])
    slots_[slot]->rekey(key);
  else
    slots_[slot].emplace(key);
}

void AesEngine::clear_keyslot(unsigned slot) { set_keyslot(slot, Key{}); }

void AesEngine::reset() noexcept {
  for (auto& s : slots_) s.reset();
}

bool AesEngine::slot_loaded(unsigned slot) const {
  check_slot(slot);
  return slots_[slot].has_value();
}

const crypto::Aes128& AesEngine::cipher(unsigned slot) const {
  check_slot(slot);
  if (!slots_[slot]) throw Error(Errc::EmptySourceSlot, "keyslot " + std::to_string(slot) + " is empty");
  return *slots_[slot];
}

void AesEngine::derive_subkeys(unsigned src_slot, unsigned first, unsigned last) {
  const crypto::Aes128& src = cipher(src_slot);
  check_slot(first);
  check_slot(last);
  // Compute everything first: src may be inside [first, last].
  std::vector<Key> derived;
  for (unsigned n = first; n <= last; ++n) derived.push_back(src.encrypt_block(filled_block(static_cast<Byte>(n))));
  for (unsigned n = first; n <= last; ++n) {
    set_keyslot(n, derived[n - first]);
    crypto::secure_zero(derived[n - first]);
  }
}

bool AesEngine::verify_keyslot(unsigned slot, const Block& test_vector, const Block& expected) const {
  return cipher(slot).encrypt_block(test_vector) == expected;
}

Bytes AesEngine::ecb(unsigned slot, crypto::Direction dir, std::span<const Byte> data) const {
  const crypto::Aes128& aes = cipher(slot);
  if (data.size() % kBlockSize != 0) throw Error(Errc::BadLength, "ECB data must be a multiple of 16 bytes");
  Bytes out(data.size());
  if (dir == crypto::Direction::Encrypt)
    aes.encrypt(data, out);
  else
    aes.decrypt(data, out);
  return out;
}

Block AesEngine::ecb_block(unsigned slot, crypto::Direction dir, const Block& block) const {
  const crypto::Aes128& aes = cipher(slot);
  return dir == crypto::Direction::Encrypt ? aes.encrypt_block(block) : aes.decrypt_block(block);
}

Bytes AesEngine::ctr(unsigned slot, const Block& nonce, std::span<const Byte> data, std::uint64_t first_block) const {
  Bytes out(data.begin(), data.end());
  ctr_inplace(slot, nonce, out, first_block);
  return out;
}

void AesEngine::ctr_inplace(unsigned slot, const Block& nonce, std::span<Byte> data, std::uint64_t first_block) const {
  crypto::ctr_xor(cipher(slot), nonce, data, first_block);
}

// --- ShaEngine --------------------------------------------------------------

Digest ShaEngine::compute_and_latch(std::span<const Byte> data) {
  const Digest d = crypto::sha256(data);
  latch_ = d;
  return d;
}

Digest ShaEngine::read_latch() const {
  if (!latch_) throw Error(Errc::EmptyLatch, "SHA_HASH register is empty");
  return *latch_;
}

// --- MemoryMap --------------------------------------------------------------

MemoryMap::MemoryMap(Address base, std::uint32_t size) : base_(base), contents_(size, 0) {
  if (static_cast<std::uint64_t>(base) + size > 0x1'0000'0000ULL)
    throw Error(Errc::InvalidArgument, "memory map wraps the 32-bit address space");
}

bool MemoryMap::contains(Address addr, std::uint64_t len) const noexcept {
  return addr >= base_ && static_cast<std::uint64_t>(addr) + len <= static_cast<std::uint64_t>(base_) + size();
}

void MemoryMap::check(Address addr, std::uint64_t len) const {
  if (!contains(addr, len)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "[0x%08X, +0x%llX) outside RAM", addr, static_cast<unsigned long long>(len));
    throw Error(Errc::OutOfRangeAccess, buf);
  }
}

Bytes MemoryMap::read(Address addr, std::size_t len) const {
  const auto v = view(addr, len);
  return Bytes(v.begin(), v.end());
}

void MemoryMap::write(Address addr, std::span<const Byte> data) {
  std::ranges::copy(data, view(addr, data.size()).begin());
}

std::uint32_t MemoryMap::read_word(Address addr) const { return load_le32(view(addr, 4)); }

void MemoryMap::write_word(Address addr, std::uint32_t value) { store_le32(view(addr, 4), value); }

void MemoryMap::fill(Address addr, std::size_t len, Byte value) { std::ranges::fill(view(addr, len), value); }

std::span<Byte> MemoryMap::view(Address addr, std::size_t len) {
  check(addr, len);
  return std::span<Byte>(contents_).subspan(addr - base_, len);
}

std::span<const Byte> MemoryMap::view(Address addr, std::size_t len) const {
  check(addr, len);
  return std::span<const Byte>(contents_).subspan(addr - base_, len);
}

void MemoryMap::add_hook(const MemoryHook& hook) {
  if (hook.end <= hook.begin) throw Error(Errc::InvalidArgument, "empty hook range");
  check(hook.begin, hook.end - hook.begin);
  hooks_.push_back(hook);
}

std::optional<MemoryHook> MemoryMap::hook_at(Address addr) const {
  for (const MemoryHook& h : hooks_)
    if (h.contains(addr)) return h;
  return std::nullopt;
}

void MemoryMap::zero() noexcept {
  std::ranges::fill(contents_, Byte{0});
  itcm_.fill(0);
  hooks_.clear();
}

}  // namespace bootshuffle
