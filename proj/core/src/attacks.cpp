#include "bootshuffle/attacks.hpp"

#include "bootshuffle/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>

namespace bootshuffle::attacks {

// --- Shuffling --------------------------------------------------------------

namespace {

void check_block_index(unsigned index) {
  if (index >= kKeysectorKeyCount) throw Error(Errc::KeyIndexOutOfRange, "block index " + std::to_string(index));
}

void check_key_number(unsigned key_number) {
  if (key_number < 1 || key_number > kKeysectorKeyCount)
    throw Error(Errc::KeyIndexOutOfRange, "key #" + std::to_string(key_number));
}

}  // namespace

ShufflePlan ShufflePlan::copy_key(unsigned src_key, unsigned dst_key) {
  check_key_number(src_key);
  check_key_number(dst_key);
  return ShufflePlan{{{src_key - 1, dst_key - 1}}};
}

ShufflePlan ShufflePlan::swap_keys(unsigned a_key, unsigned b_key) {
  check_key_number(a_key);
  check_key_number(b_key);
  return ShufflePlan{{{a_key - 1, b_key - 1}, {b_key - 1, a_key - 1}}};
}

KeysectorBlocks apply_shuffle(const KeysectorBlocks& blocks, const ShufflePlan& plan) {
  KeysectorBlocks out = blocks;
  for (const auto& [src, dst] : plan.moves) {
    check_block_index(src);
    check_block_index(dst);
    out[dst] = blocks[src];
  }
  return out;
}

void shuffle_keysector(NandImage& nand, const ShufflePlan& plan) {
  nand.set_keysector(apply_shuffle(nand.keysector(), plan));
}

KeysectorBlocks keysector_recrypt(const Digest& otp_hash, crypto::Direction dir, const KeysectorBlocks& blocks) {
  crypto::Aes128 aes(derive_loader_key(otp_hash));
  KeysectorBlocks out;
  for (unsigned i = 0; i < kKeysectorKeyCount; ++i)
    out[i] = dir == crypto::Direction::Encrypt ? aes.encrypt_block(blocks[i]) : aes.decrypt_block(blocks[i]);
  return out;
}

// --- Candidate streams and the parallel search driver -----------------------

double expected_trials(const Window& window) {
  const std::uint64_t words = window.words();
  if (words == 0) return std::numeric_limits<double>::infinity();
  return 256.0 * static_cast<double>(std::uint64_t{1} << 24) / static_cast<double>(words);
}

namespace {

Key stream_key(std::uint64_t seed) {
  Bytes input{'c', 'a', 'n', 'd', 'i', 'd', 'a', 't', 'e', 's'};
  for (int i = 0; i < 8; ++i) input.push_back(static_cast<Byte>(seed >> (8 * i)));
  return to_array<kBlockSize>(crypto::sha256(input));
}

Block index_block(std::uint64_t index) {
  Block b{};
  for (int i = 0; i < 8; ++i) b[15 - i] = static_cast<Byte>(index >> (8 * i));
  return b;
}

std::uint32_t word_of(const Block& b, unsigned word_index) {
  return load_le32(std::span<const Byte>(b).subspan(word_index * 4, 4));
}

// Runs `make_scanner()` on each worker; a scanner maps (first, count) to the
// global index of the first hit in that range, if any. Chunks are handed out
// in increasing order and a chunk is skipped only when it starts past the
// best hit so far, so every index below the final answer gets examined and
// the answer does not depend on scheduling.
template <class MakeScanner>
std::optional<std::uint64_t> first_hit(const SearchOptions& o, MakeScanner make_scanner) {
  const std::uint64_t chunk = std::max<std::uint64_t>(o.chunk, 1);
  std::atomic<std::uint64_t> next_chunk{0};
  std::atomic<std::uint64_t> best{std::numeric_limits<std::uint64_t>::max()};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto work = [&] {
    try {
      auto scan = make_scanner();
      for (;;) {
        const std::uint64_t c = next_chunk.fetch_add(1);
        if (c > o.max_trials / chunk) return;
        const std::uint64_t start = c * chunk;
        if (start >= o.max_trials || start >= best.load()) return;
        const std::uint64_t count = std::min(chunk, o.max_trials - start);
        if (const std::optional<std::uint64_t> hit = scan(start, count)) {
          std::uint64_t cur = best.load();
          while (*hit < cur && !best.compare_exchange_weak(cur, *hit)) {
          }
        }
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      best.store(0);
    }
  };

  const unsigned workers = std::max(1u, o.workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
    work();
  }
  if (failure) std::rethrow_exception(failure);
  if (best.load() == std::numeric_limits<std::uint64_t>::max()) return std::nullopt;
  return best.load();
}

struct EntryLocation {
  std::uint64_t block = 0;
  unsigned word_index = 0;
  Block ciphertext{};
};

EntryLocation locate_entry(const FirmImage& image) {
  const FirmHeader& h = image.header;
  if (h.entrypoint < h.section_load_addr || h.entrypoint - h.section_load_addr + 4 > image.section_ciphertext.size())
    throw Error(Errc::BadEntrypoint, "entrypoint outside the code section");
  const std::uint32_t off = h.entry_offset();
  EntryLocation loc;
  loc.block = off / kBlockSize;
  loc.word_index = (off % kBlockSize) / 4;
  // The final block may be short; pad it.
  const std::size_t first = static_cast<std::size_t>(loc.block) * kBlockSize;
  const std::size_t n = std::min(kBlockSize, image.section_ciphertext.size() - first);
  std::copy_n(image.section_ciphertext.begin() + static_cast<std::ptrdiff_t>(first), n, loc.ciphertext.begin());
  return loc;
}

}  // namespace

CandidateStream::CandidateStream(std::uint64_t seed) : aes_(stream_key(seed)) {}

Block CandidateStream::at(std::uint64_t index) const { return aes_.encrypt_block(index_block(index)); }

void CandidateStream::fill(std::uint64_t first, std::span<Block> out) const {
  Bytes buf(out.size() * kBlockSize);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Block b = index_block(first + i);
    std::copy(b.begin(), b.end(), buf.begin() + static_cast<std::ptrdiff_t>(i * kBlockSize));
  }
  aes_.encrypt(buf, buf);
  for (std::size_t i = 0; i < out.size(); ++i)
    std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(i * kBlockSize), kBlockSize, out[i].begin());
}

// --- Scanning ---------------------------------------------------------------

std::uint32_t entry_word_under_key(const FirmImage& image, const Key& key) {
  const EntryLocation loc = locate_entry(image);
  const Block ks = crypto::Aes128(key).encrypt_block(crypto::counter_add(image.header.ctr_nonce, loc.block));
  return word_of(xor_blocks(loc.ciphertext, ks), loc.word_index);
}

namespace {

void record(ScanReport& report, const FirmImage& build, unsigned key_number, std::uint32_t word, RamRange ram) {
  report.entries.push_back({build.header.version_label, key_number, word});
  const arm::Instruction insn = arm::decode_instruction(word, build.header.entrypoint);
  if (const auto* b = std::get_if<arm::Branch>(&insn)) {
    const bool in_ram = b->target >= ram.base && std::uint64_t{b->target} + 4 <= std::uint64_t{ram.base} + ram.size;
    report.hits.push_back({build.header.version_label, key_number, word, insn,
                           in_ram ? TargetUsability::InRam : TargetUsability::OutOfRange});
  }
}

}  // namespace

ScanReport scan_shuffled_keys(const KeysectorBlocks& keysector_plaintext, std::span<const FirmImage> builds, RamRange ram) {
  ScanReport report;
  for (const FirmImage& build : builds) {
    for (unsigned k = 1; k <= kKeysectorKeyCount; ++k) {
      if (k == build.header.firmware_key_index) continue;
      record(report, build, k, entry_word_under_key(build, keysector_plaintext[k - 1]), ram);
    }
  }
  return report;
}

ScanReport scan_shuffled_keys_blackbox(Console& console, std::span<const FirmImage> builds) {
  const NandImage saved_nand = console.nand();
  const MemoryMap saved_memory = console.memory();
  const std::optional<Digest> saved_latch = console.sha().latch();
  const KeysectorBlocks original = saved_nand.keysector();
  const RamRange ram{console.memory().base(), console.memory().size()};

  ScanReport report;
  for (const FirmImage& build : builds) {
    const Bytes container = serialize_firm(build);
    console.install_firm(FirmSlot::Firm0, container);
    console.install_firm(FirmSlot::Firm1, container);
    const unsigned target_key = build.header.firmware_key_index;
    for (unsigned k = 1; k <= kKeysectorKeyCount; ++k) {
      if (k == target_key) continue;
      console.nand().set_keysector(original);
      shuffle_keysector(console.nand(), ShufflePlan::copy_key(k, target_key));
      console.reboot(RebootMode::Warm);
      const boot::BootReport boot = boot::boot_rom_run(console);
      if (boot.entry_word) record(report, build, k, *boot.entry_word, ram);
    }
  }

  console.nand() = saved_nand;
  console.memory() = saved_memory;
  console.sha().restore_latch(saved_latch);
  console.reboot(RebootMode::Warm);
  return report;
}

// --- Nonce search -----------------------------------------------------------

namespace {

// Smallest stream index whose nonce makes pred(ks_a ^ ks_b) true, where ks_x
// is the keystream word at (block, word_index) under key x.
template <class Pred>
std::optional<std::uint64_t> search_nonce(const Key& key_a, const Key& key_b, std::uint64_t block,
                                          unsigned word_index, const SearchOptions& options, Pred pred) {
  const auto make_scanner = [&] {
    return [&, stream = CandidateStream(options.seed), a = crypto::Aes128(key_a),
            b = crypto::Aes128(key_b)](std::uint64_t first, std::uint64_t count) mutable -> std::optional<std::uint64_t> {
      std::vector<Block> nonces(count);
      stream.fill(first, nonces);
      Bytes counters(count * kBlockSize);
      for (std::size_t i = 0; i < count; ++i) {
        const Block c = crypto::counter_add(nonces[i], block);
        std::copy(c.begin(), c.end(), counters.begin() + static_cast<std::ptrdiff_t>(i * kBlockSize));
      }
      Bytes ks_a(counters.size()), ks_b(counters.size());
      a.encrypt(counters, ks_a);
      b.encrypt(counters, ks_b);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = i * kBlockSize + word_index * 4;
        const std::uint32_t diff = load_le32(std::span<const Byte>(ks_a).subspan(at, 4)) ^
                                   load_le32(std::span<const Byte>(ks_b).subspan(at, 4));
        if (pred(diff)) return first + i;
      }
      return std::nullopt;
    };
  };
  return first_hit(options, make_scanner);
}

std::uint32_t keystream_diff(const Key& key_a, const Key& key_b, const Block& nonce, std::uint64_t block,
                             unsigned word_index) {
  const Block ctr = crypto::counter_add(nonce, block);
  return word_of(crypto::Aes128(key_a).encrypt_block(ctr), word_index) ^
         word_of(crypto::Aes128(key_b).encrypt_block(ctr), word_index);
}

}  // namespace

NonceSearchResult find_vulnerable_nonce(std::span<const Byte> code_plaintext, const Key& shuffled_key,
                                        const Key& genuine_key, std::uint32_t entry_offset, Address entry_pc,
                                        const Window& window, const SearchOptions& options) {
  if (entry_offset % 4 != 0 || std::uint64_t{entry_offset} + 4 > code_plaintext.size())
    throw Error(Errc::BadEntrypoint, "entry offset outside the code");
  if (window.words() == 0) throw Error(Errc::SearchExhausted, "empty window");

  const std::uint64_t block = entry_offset / kBlockSize;
  const unsigned word_index = (entry_offset % kBlockSize) / 4;
  const std::uint32_t pt_word = load_le32(code_plaintext.subspan(entry_offset, 4));

  const auto hit = search_nonce(genuine_key, shuffled_key, block, word_index, options, [&](std::uint32_t diff) {
    const std::uint32_t word = pt_word ^ diff;
    return arm::is_branch(word) && window.contains(arm::branch_target(word, entry_pc));
  });
  if (!hit) throw Error(Errc::SearchExhausted, "no nonce within " + std::to_string(options.max_trials) + " trials");

  NonceSearchResult r;
  r.nonce = CandidateStream(options.seed).at(*hit);
  r.trials = *hit + 1;
  r.entry_word = pt_word ^ keystream_diff(genuine_key, shuffled_key, r.nonce, block, word_index);
  r.target = arm::branch_target(r.entry_word, entry_pc);
  r.expected_trials = expected_trials(window);
  return r;
}

VulnerableBuild craft_vulnerable_build(const VendorWorld& world, std::string_view version_label, Address target,
                                       const SearchOptions& options) {
  const auto size = release_section_size(version_label);
  if (!size) throw Error(Errc::InvalidArgument, "unknown fixture release '" + std::string(version_label) + "'");
  if (loader_for_version(version_label) != LoaderVariant::V2)
    throw Error(Errc::PreconditionFailed, "the stage-1 build must use loader v2");

  const Address entry_pc = kDefaultSectionLoadAddr;
  const std::uint32_t wanted = arm::encode_branch(entry_pc, target);
  // Where the genuine entry branch may put the 8-byte firmware-entry stub.
  const Window stub_window{entry_pc + 4, entry_pc + *size - 4};

  // Genuine entry word P decrypts under Key #1 to P ^ ks2 ^ ks1, so fixing
  // that to `wanted` fixes P; keep nonces for which P is a usable branch.
  const auto genuine_word = [&](std::uint32_t diff) { return wanted ^ diff; };
  const auto hit = search_nonce(world.key(2), world.key(1), 0, 0, options, [&](std::uint32_t diff) {
    const std::uint32_t p = genuine_word(diff);
    return arm::is_branch(p) && stub_window.contains(arm::branch_target(p, entry_pc));
  });
  if (!hit) throw Error(Errc::SearchExhausted, "no nonce within " + std::to_string(options.max_trials) + " trials");

  VulnerableBuild out;
  out.search.nonce = CandidateStream(options.seed).at(*hit);
  out.search.trials = *hit + 1;
  out.search.entry_word = wanted;
  out.search.target = target;
  out.search.expected_trials = expected_trials(stub_window);

  const std::uint32_t p = genuine_word(keystream_diff(world.key(2), world.key(1), out.search.nonce, 0, 0));
  Bytes code = synthetic_code(version_label, *size, arm::branch_target(p, entry_pc) - entry_pc);
  store_le32(std::span<Byte>(code).first(4), p);

  ReleaseOptions o;
  o.version_label = std::string(version_label);
  o.section_size = *size;
  o.ctr_nonce = out.search.nonce;
  o.code = std::move(code);
  out.image = world.build_release(o);
  return out;
}

// --- Brute force ------------------------------------------------------------

BruteforceResult bruteforce_branch_key(const FirmImage& image, const Window& window, const SearchOptions& options) {
  if (window.words() == 0) throw Error(Errc::SearchExhausted, "empty window");
  const EntryLocation loc = locate_entry(image);
  const Block counter = crypto::counter_add(image.header.ctr_nonce, loc.block);
  const std::uint32_t ct_word = word_of(loc.ciphertext, loc.word_index);
  const Address pc = image.header.entrypoint;

  const auto make_scanner = [&] {
    return [&, stream = CandidateStream(options.seed), aes = crypto::Aes128(Key{}),
            keys = std::vector<Block>()](std::uint64_t first, std::uint64_t count) mutable -> std::optional<std::uint64_t> {
      keys.resize(count);
      stream.fill(first, keys);
      for (std::size_t i = 0; i < count; ++i) {
        aes.rekey(keys[i]);
        const std::uint32_t word = ct_word ^ word_of(aes.encrypt_block(counter), loc.word_index);
        if (arm::is_branch(word) && window.contains(arm::branch_target(word, pc))) return first + i;
      }
      return std::nullopt;
    };
  };

  const auto hit = first_hit(options, make_scanner);
  if (!hit) throw Error(Errc::SearchExhausted, "no key within " + std::to_string(options.max_trials) + " trials");

  BruteforceResult r;
  r.key = CandidateStream(options.seed).at(*hit);
  r.trials = *hit + 1;
  r.entry_word = entry_word_under_key(image, r.key);
  r.target = arm::branch_target(r.entry_word, pc);
  return r;
}

// --- Stage 1 ----------------------------------------------------------------

Stage1Result capture_otp_hash(Console& console, const FirmImage& vulnerable_build, const CaptureOptions& options) {
  const Bytes container = serialize_firm(vulnerable_build);
  console.install_firm(FirmSlot::Firm0, container);
  console.install_firm(FirmSlot::Firm1, container);
  shuffle_keysector(console.nand(), ShufflePlan::copy_key(1, 2));

  if (options.plant_sled) {
    MemoryMap& mem = console.memory();
    for (std::uint32_t i = 0; i < options.sled_words; ++i) mem.write_word(options.sled_addr + 4 * i, arm::kNopWord);
    const Address hook = options.sled_addr + 4 * options.sled_words;
    mem.add_hook({hook, hook + 4, host_call::kDumpShaLatch});
  }

  console.reboot(options.reboot);
  Stage1Result result;
  result.boot = boot::boot_rom_run(console);
  const auto* payload = std::get_if<boot::PayloadExecuted>(&result.boot.outcome);
  if (!payload || payload->hook_id != host_call::kDumpShaLatch || payload->captured.size() != result.otp_hash.size())
    throw AttackFailed("stage 1 boot ended in " + boot::describe(result.boot.outcome), result.boot.outcome);
  std::ranges::copy(payload->captured, result.otp_hash.begin());
  return result;
}

// --- Stage 2 ----------------------------------------------------------------

Bytes wrap_payload(std::span<const Byte> payload) {
  Bytes out;
  append_le32(out, host_call::kTrapWord);
  append_le32(out, host_call::kInlinePayload);
  append_le32(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  out.resize((out.size() + 3) & ~std::size_t{3}, 0);
  return out;
}

PersistPlan install_persistence(Console& console, const Digest& otp_hash, const FirmImage& big_firm,
                                const FirmImage& small_firm, std::span<const Byte> payload, std::uint32_t gap_offset,
                                const SearchOptions& options) {
  const auto precondition = [](const std::string& why) { return Error(Errc::PreconditionFailed, why); };
  const crypto::RsaPublicKey& vendor = console.boot_config().vendor_key;
  if (!verify_signature(big_firm, vendor) || !verify_signature(small_firm, vendor))
    throw precondition("both firmware images must carry valid vendor signatures");
  if (small_firm.header.loader_variant != LoaderVariant::V2)
    throw precondition("FIRM1 image must use loader v2 so Key #2 decrypts it");

  PersistPlan plan;
  plan.gap_offset = gap_offset;
  plan.big_len = big_firm.header.container_size();
  plan.small_len = small_firm.header.container_size();
  plan.big_version = big_firm.header.version_label;
  plan.small_version = small_firm.header.version_label;

  const Bytes wrapped = wrap_payload(payload);
  const std::uint64_t sled_off = (std::uint64_t{plan.small_len} + gap_offset + 3) & ~std::uint64_t{3};
  if (plan.big_len <= plan.small_len + std::uint64_t{gap_offset} + wrapped.size() || wrapped.size() > plan.big_len)
    throw precondition("payload does not fit between the small image end + gap and the big image end");
  const std::uint64_t payload_off = (plan.big_len - wrapped.size()) & ~std::uint64_t{3};
  if (sled_off >= payload_off) throw precondition("no room for a sled");

  plan.sled_begin = kFirmLoadBase + static_cast<Address>(sled_off);
  plan.payload_addr = kFirmLoadBase + static_cast<Address>(payload_off);
  plan.window = {plan.sled_begin, plan.payload_addr};
  if (!console.memory().contains(kFirmLoadBase, plan.big_len))
    throw precondition("big image does not fit in RAM at the load base");

  plan.search = bruteforce_branch_key(small_firm, plan.window, options);

  Bytes firm0 = serialize_firm(big_firm);
  for (std::uint64_t off = sled_off; off < payload_off; off += 4)
    store_le32(std::span<Byte>(firm0).subspan(off, 4), arm::kNopWord);
  std::ranges::copy(wrapped, firm0.begin() + static_cast<std::ptrdiff_t>(payload_off));

  console.install_firm(FirmSlot::Firm0, firm0);
  console.install_firm(FirmSlot::Firm1, serialize_firm(small_firm));

  crypto::Aes128 aes(derive_loader_key(otp_hash));
  console.nand().set_keysector_block(small_firm.header.firmware_key_index, aes.encrypt_block(plan.search.key));
  return plan;
}

}  // namespace bootshuffle::attacks
